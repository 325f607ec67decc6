// Learnable vector fields for the coefficient ODE: the correction network
// F_theta (an MLP in 1D, a stack of dimensionwise layers in 2D) and the
// composite field M (.) u + eps * F_theta(u), wired per problem system.

#pragma once

#include "neusa/basis.hpp"
#include "neusa/tensor.hpp"

#include <random>

namespace neusa {

// Uniform Glorot sample on +-sqrt(6/(fan_in+fan_out)); variance 2/(fan_in+fan_out).
inline Tensor init_glorot(const Shape& shape, std::mt19937_64& rng) {
    if (shape.size() != 2) throw std::invalid_argument("init_glorot: weights must be rank 2");
    const double bound = std::sqrt(6.0 / (shape[0] + shape[1]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = dist(rng);
    return Tensor::from(shape, std::move(v));
}

// O = exp(S - S^T) by scaling-and-squaring on tape ops, so gradients flow to
// the skew parameters and O stays in SO(c) structurally.
inline Tensor make_orthogonal(const Tensor& skew_params) {
    if (skew_params.shape.size() != 2 || skew_params.shape[0] != skew_params.shape[1])
        throw std::invalid_argument("make_orthogonal: parameters must be square");
    const int c = skew_params.shape[0];
    Tensor A = sub(skew_params, transpose_last2(skew_params));
    double norm1 = 0.0; // max column abs sum
    for (int j = 0; j < c; ++j) {
        double s = 0.0;
        for (int i = 0; i < c; ++i) s += std::abs(A[static_cast<std::int64_t>(i) * c + j]);
        norm1 = std::max(norm1, s);
    }
    int squarings = 0;
    while (norm1 > 0.5) {
        norm1 *= 0.5;
        ++squarings;
    }
    Tensor B = scale(A, std::ldexp(1.0, -squarings));
    Tensor I = Tensor::zeros({c, c});
    for (int i = 0; i < c; ++i) (*I.data)[static_cast<std::int64_t>(i) * c + i] = 1.0;
    Tensor acc = I;
    Tensor term = I;
    for (int k = 1; k <= 12; ++k) {
        term = scale(matmul_rowwise(term, B), 1.0 / k);
        acc = add(acc, term);
    }
    for (int s = 0; s < squarings; ++s) acc = matmul_rowwise(acc, acc);
    return acc;
}

// ---------------------------------------------------------------------------
// MLP (2 hidden layers, ReLU, Glorot init)
// ---------------------------------------------------------------------------

struct Mlp {
    std::vector<Tensor> weights; // [in,h], [h,h], [h,out]
    std::vector<Tensor> biases;  // [h], [h], [out]
    Activation act = Activation::Relu;

    static Mlp create(int in, int hidden, int out, std::mt19937_64& rng,
                      Activation act = Activation::Relu) {
        Mlp m;
        m.act = act;
        m.weights = {init_glorot({in, hidden}, rng), init_glorot({hidden, hidden}, rng),
                     init_glorot({hidden, out}, rng)};
        m.biases = {Tensor::zeros({hidden}), Tensor::zeros({hidden}), Tensor::zeros({out})};
        return m;
    }

    int input_width() const { return weights.front().shape[0]; }
    int output_width() const { return weights.back().shape[1]; }

    // x is a [1, in] row; hidden layers use the configured activation, the
    // output layer is linear.
    Tensor forward(const Tensor& x) const {
        if (x.shape.size() != 2 || x.shape[1] != input_width())
            throw std::invalid_argument("Mlp::forward: width mismatch, got " + shape_str(x.shape) +
                                        " need [*," + std::to_string(input_width()) + "]");
        Tensor h = x;
        for (size_t l = 0; l < weights.size(); ++l) {
            h = add(matmul_rowwise(h, weights[l]), biases[l]);
            if (l + 1 < weights.size()) h = activation(h, act);
        }
        return h;
    }

    void collect_named(const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out) {
        for (size_t i = 0; i < weights.size(); ++i) out.emplace_back(prefix + "w" + std::to_string(i), &weights[i]);
        for (size_t i = 0; i < biases.size(); ++i) out.emplace_back(prefix + "b" + std::to_string(i), &biases[i]);
    }
    void collect_params(std::vector<Tensor*>& out) {
        std::vector<std::pair<std::string, Tensor*>> named;
        collect_named("", named);
        for (auto& [n, p] : named) out.push_back(p);
    }
};

// ---------------------------------------------------------------------------
// Dimensionwise layers (2D): Hadamard mask, then row-wise and column-wise
// dense maps via transposes; O(mn) parameters instead of O(m^2 n^2)
// ---------------------------------------------------------------------------

struct DimwiseLayer {
    // one (A, B, C) triple per input channel; outputs are summed
    std::vector<Tensor> A; // [m, n]
    std::vector<Tensor> B; // [n, n]
    std::vector<Tensor> C; // [m, m]
    Activation act = Activation::Identity;

    static DimwiseLayer create(int in_channels, int m, int n, Activation act,
                               std::mt19937_64& rng) {
        DimwiseLayer l;
        l.act = act;
        for (int c = 0; c < in_channels; ++c) {
            l.A.push_back(Tensor::ones({m, n}));
            l.B.push_back(init_glorot({n, n}, rng));
            l.C.push_back(init_glorot({m, m}, rng));
        }
        return l;
    }

    static std::int64_t parameter_count(int m, int n) {
        return static_cast<std::int64_t>(m) * n + static_cast<std::int64_t>(n) * n +
               static_cast<std::int64_t>(m) * m;
    }

    // Per channel: u (.) A, row-wise B, transpose, row-wise C, transpose;
    // channel results are summed before the activation.
    Tensor forward(const std::vector<Tensor>& ins) const {
        if (ins.size() != A.size())
            throw std::invalid_argument("DimwiseLayer::forward: channel count mismatch");
        std::optional<Tensor> acc;
        for (size_t c = 0; c < ins.size(); ++c) {
            Tensor h = hadamard(ins[c], A[c]);
            h = matmul_rowwise(h, B[c]);
            h = transpose_last2(h);
            h = matmul_rowwise(h, C[c]);
            h = transpose_last2(h);
            acc = acc ? add(*acc, h) : h;
        }
        return activation(*acc, act);
    }

    void collect_named(const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out) {
        for (size_t c = 0; c < A.size(); ++c) out.emplace_back(prefix + "A" + std::to_string(c), &A[c]);
        for (size_t c = 0; c < B.size(); ++c) out.emplace_back(prefix + "B" + std::to_string(c), &B[c]);
        for (size_t c = 0; c < C.size(); ++c) out.emplace_back(prefix + "C" + std::to_string(c), &C[c]);
    }
    void collect_params(std::vector<Tensor*>& out) {
        std::vector<std::pair<std::string, Tensor*>> named;
        collect_named("", named);
        for (auto& [n, p] : named) out.push_back(p);
    }
};

struct DimwiseStack {
    std::vector<DimwiseLayer> layers;

    // First layer consumes all input channels, later layers are single-channel.
    // Hidden activations are tanh, the last layer is linear.
    static DimwiseStack create(int in_channels, int m, int n, int depth, std::mt19937_64& rng) {
        if (depth < 1) throw std::invalid_argument("DimwiseStack: depth must be >= 1");
        DimwiseStack s;
        for (int l = 0; l < depth; ++l) {
            const Activation act = (l + 1 < depth) ? Activation::Tanh : Activation::Identity;
            s.layers.push_back(DimwiseLayer::create(l == 0 ? in_channels : 1, m, n, act, rng));
        }
        return s;
    }

    Tensor forward(std::vector<Tensor> ins) const {
        Tensor h = layers.front().forward(ins);
        for (size_t l = 1; l < layers.size(); ++l) h = layers[l].forward({h});
        return h;
    }

    void collect_named(const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out) {
        for (size_t l = 0; l < layers.size(); ++l)
            layers[l].collect_named(prefix + "layer" + std::to_string(l) + ".", out);
    }
    void collect_params(std::vector<Tensor*>& out) {
        for (auto& l : layers) l.collect_params(out);
    }
};

// ---------------------------------------------------------------------------
// Correction network wrapper and the composite vector field
// ---------------------------------------------------------------------------

struct CorrectionNet {
    enum class Kind { None, MlpNet, Dimwise } kind = Kind::None;
    Mlp mlp;
    DimwiseStack dimwise;
    // fixed architectural gains, calibrated at construction: inputs are
    // brought to unit variance before the layers and the freshly initialized
    // network output is rescaled to variance one on the initial state
    double input_gain = 1.0;
    double output_gain = 1.0;
    // optional fixed per-mode envelope on the output (a spectral
    // preconditioner: corrections that act like differential operators grow
    // with frequency, so the raw network can stay O(1) per mode)
    Tensor output_envelope;

    bool empty() const { return kind == Kind::None; }

    // ins: one tensor per input channel, each mode-shaped. Output is mode-shaped.
    Tensor forward(const std::vector<Tensor>& ins_raw, const Shape& mode_shape) const {
        std::vector<Tensor> ins = ins_raw;
        if (input_gain != 1.0)
            for (auto& t : ins) t = scale(t, input_gain);
        Tensor y;
        switch (kind) {
            case Kind::MlpNet: {
                Tensor flat = ins.size() == 1 ? ins[0] : stack_axis0(ins);
                const int width = static_cast<int>(flat.numel());
                y = reshape(mlp.forward(reshape(flat, {1, width})), mode_shape);
                break;
            }
            case Kind::Dimwise:
                y = dimwise.forward(ins);
                break;
            case Kind::None:
                throw std::invalid_argument("CorrectionNet::forward: no network configured");
        }
        if (output_envelope.defined()) y = hadamard(y, output_envelope);
        return output_gain == 1.0 ? y : scale(y, output_gain);
    }

    // Sets output_gain so eps * F(u0) starts at a small fraction of the given
    // reference term (the correction the exact dynamics ask for at t = 0):
    // the composite field begins close to the linear model regardless of eps.
    void calibrate_to_linear_scale(const std::vector<Tensor>& ins, const Shape& mode_shape,
                                   const Tensor& reference_term, double eps, double fraction) {
        NoTape guard;
        input_gain = 1.0;
        output_gain = 1.0;
        if (eps <= 0.0) return;
        auto stddev_of = [](const Tensor& t) {
            double mean = 0.0, var = 0.0;
            const std::int64_t n = t.numel();
            for (std::int64_t i = 0; i < n; ++i) mean += t[i];
            mean /= static_cast<double>(n);
            for (std::int64_t i = 0; i < n; ++i) var += (t[i] - mean) * (t[i] - mean);
            return std::sqrt(var / static_cast<double>(n));
        };
        const double target = fraction * stddev_of(reference_term) / eps;
        Tensor y = forward(ins, mode_shape);
        const double raw = stddev_of(y);
        if (raw > 1e-12 && target > 0.0) output_gain = target / raw;
    }

    // Sets the gains so the given inputs reach the layers with unit standard
    // deviation and forward() leaves with unit standard deviation.
    void calibrate_unit_variance(const std::vector<Tensor>& ins, const Shape& mode_shape,
                                 bool use_input_gain = false) {
        NoTape guard;
        input_gain = 1.0;
        output_gain = 1.0;
        auto stddev = [](const std::vector<const Tensor*>& ts) {
            double mean = 0.0, var = 0.0;
            std::int64_t n = 0;
            for (const Tensor* t : ts)
                for (std::int64_t i = 0; i < t->numel(); ++i) mean += (*t)[i], ++n;
            mean /= static_cast<double>(n);
            for (const Tensor* t : ts)
                for (std::int64_t i = 0; i < t->numel(); ++i)
                    var += ((*t)[i] - mean) * ((*t)[i] - mean);
            return std::sqrt(var / static_cast<double>(n));
        };
        std::vector<const Tensor*> in_ptrs;
        for (const auto& t : ins) in_ptrs.push_back(&t);
        if (use_input_gain) {
            const double in_std = stddev(in_ptrs);
            if (in_std > 1e-12) input_gain = 1.0 / in_std;
        }
        Tensor y = forward(ins, mode_shape);
        const double out_std = stddev({&y});
        if (out_std > 1e-12) output_gain = 1.0 / out_std;
    }

    void collect_named(const std::string& prefix, std::vector<std::pair<std::string, Tensor*>>& out) {
        if (kind == Kind::MlpNet) mlp.collect_named(prefix, out);
        if (kind == Kind::Dimwise) dimwise.collect_named(prefix, out);
    }
    void collect_params(std::vector<Tensor*>& out) {
        if (kind == Kind::MlpNet) mlp.collect_params(out);
        if (kind == Kind::Dimwise) dimwise.collect_params(out);
    }
};

// How state channels feed the multiplier and the correction networks.
//   Generic:     du/dt = M (.) u + eps F(u)                  (single channel)
//   SecondOrder: d(u,v)/dt = (v, M (.) u + eps F(u))         (wave, sine-Gordon)
//   BurgersPair: d(u,v)/dt = (M(.)u + eps Fu(u,v), M(.)v + eps Fv(u,v))
enum class SystemKind { Generic, SecondOrder, BurgersPair };

struct VectorField {
    SystemKind kind = SystemKind::Generic;
    Shape mode_shape;
    Tensor multiplier; // diagonal M over modes (nu-scaled for Burgers)
    double epsilon = 0.0;
    CorrectionNet net_u;
    CorrectionNet net_v; // BurgersPair only

    int state_channels() const { return kind == SystemKind::Generic ? 1 : 2; }

    Shape state_shape() const {
        if (kind == SystemKind::Generic) return mode_shape;
        Shape s{2};
        s.insert(s.end(), mode_shape.begin(), mode_shape.end());
        return s;
    }

    Tensor eval(const Tensor& state) const {
        if (state.shape != state_shape())
            throw std::invalid_argument("VectorField::eval: state shape " + shape_str(state.shape) +
                                        " does not match wiring " + shape_str(state_shape()));
        switch (kind) {
            case SystemKind::Generic: {
                Tensor out = hadamard(state, multiplier);
                if (epsilon != 0.0)
                    out = add_scaled(out, net_u.forward({state}, mode_shape), epsilon);
                return out;
            }
            case SystemKind::SecondOrder: {
                Tensor u = slice_axis0(state, 0);
                Tensor v = slice_axis0(state, 1);
                Tensor dv = hadamard(u, multiplier);
                if (epsilon != 0.0) dv = add_scaled(dv, net_u.forward({u}, mode_shape), epsilon);
                return stack_axis0({v, dv});
            }
            case SystemKind::BurgersPair: {
                Tensor u = slice_axis0(state, 0);
                Tensor v = slice_axis0(state, 1);
                Tensor du = hadamard(u, multiplier);
                Tensor dv = hadamard(v, multiplier);
                if (epsilon != 0.0) {
                    du = add_scaled(du, net_u.forward({u, v}, mode_shape), epsilon);
                    dv = add_scaled(dv, net_v.forward({u, v}, mode_shape), epsilon);
                }
                return stack_axis0({du, dv});
            }
        }
        throw std::logic_error("VectorField::eval: bad kind");
    }

    std::vector<Tensor*> parameters() {
        std::vector<Tensor*> out;
        net_u.collect_params(out);
        net_v.collect_params(out);
        return out;
    }

    std::vector<std::pair<std::string, Tensor*>> named_parameters() {
        std::vector<std::pair<std::string, Tensor*>> out;
        net_u.collect_named("net_u.", out);
        net_v.collect_named("net_v.", out);
        return out;
    }

    // Copy with every parameter registered on the tape, for one forward pass.
    VectorField watched(Tape& tape) const {
        VectorField f = *this;
        std::vector<Tensor*> ps = f.parameters();
        for (Tensor* p : ps) *p = tape.watch(*p);
        return f;
    }

    // Linear part as a channel-block multiplier, for stability analysis.
    SystemMultiplier linear_system() const {
        SystemMultiplier sys;
        sys.mode_shape = mode_shape;
        switch (kind) {
            case SystemKind::Generic:
                sys.channels = 1;
                sys.entries.resize(1);
                sys.entries[0] = multiplier;
                break;
            case SystemKind::SecondOrder:
                sys.channels = 2;
                sys.entries.resize(4);
                sys.entries[1] = Tensor::ones({1});
                sys.entries[2] = multiplier;
                break;
            case SystemKind::BurgersPair:
                sys.channels = 2;
                sys.entries.resize(4);
                sys.entries[0] = multiplier;
                sys.entries[3] = multiplier;
                break;
        }
        return sys;
    }
};

} // namespace neusa
