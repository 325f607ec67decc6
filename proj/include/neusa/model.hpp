// Assembles a NeuSA model for a problem: spectral basis, multiplier-initialized
// vector field with its correction network, initial coefficients, and the
// integration grid. One forward() produces the trajectory for a pass,
// optionally watching every parameter on a tape.

#pragma once

#include "neusa/integrator.hpp"
#include "neusa/problems.hpp"
#include "neusa/reference.hpp"

namespace neusa {

struct ModelConfig {
    std::vector<int> modes;
    int time_samples = 64;
    double T = 0.0;           // 0 = take the problem's horizon
    double epsilon = -1.0;    // <0 = take the problem's value
    int hidden_width = 256;   // MLP correction (1D problems)
    int dimwise_layers = 2;   // dimensionwise stack depth (2D problems)
    bool learn_basis = false; // train per-axis orthogonal maps
    std::uint64_t seed = 0;
};

struct NeusaModel {
    ProblemSpec spec;
    SpectralBasis basis; // plain trig basis; learned maps are applied per pass
    VectorField field;
    TimeGrid grid;
    Tensor u0;                       // [channels, modes...] trig-side coefficients
    std::vector<Tensor> skew_params; // per axis, only when learning the basis

    struct Forward {
        Trajectory traj;
        SpectralBasis basis;          // carries the pass's orthogonal maps
        std::vector<Tensor> watched;  // aligned with parameters() when taped
    };

    std::vector<Tensor*> parameters() {
        std::vector<Tensor*> ps = field.parameters();
        for (auto& s : skew_params) ps.push_back(&s);
        return ps;
    }

    // Same traversal order as parameters(); checkpoints rely on it.
    std::vector<std::pair<std::string, Tensor*>> named_parameters() {
        auto ps = field.named_parameters();
        for (size_t i = 0; i < skew_params.size(); ++i)
            ps.emplace_back("basis.skew" + std::to_string(i), &skew_params[i]);
        return ps;
    }

    Forward forward(Tape* tape) const {
        Forward out;
        VectorField vf = field;
        for (Tensor* p : vf.parameters()) {
            if (tape) *p = tape->watch(*p);
            if (tape) out.watched.push_back(*p);
        }
        SpectralBasis b = basis;
        Tensor u0_run = u0;
        if (!skew_params.empty()) {
            b.ortho_maps.clear();
            for (const Tensor& s : skew_params) {
                Tensor sp = tape ? tape->watch(s) : s;
                if (tape) out.watched.push_back(sp);
                b.ortho_maps.push_back(make_orthogonal(sp));
            }
            // rotate the fixed trig-side projection into the learned coordinates
            u0_run = apply_orthogonal(b, u0, OrthoDirection::Forward);
        }
        out.traj = integrate(vf, u0_run, grid);
        out.basis = b;
        return out;
    }

    // Detached field values on the quadrature grid at every node.
    std::vector<Tensor> predicted_fields(const Forward& fwd) const {
        NoTape guard;
        std::vector<Tensor> out;
        out.reserve(fwd.traj.states.size());
        for (const auto& s : fwd.traj.states)
            out.push_back(reconstruct_on_grid(detach(s), fwd.basis));
        return out;
    }
};

inline NeusaModel make_model(const ProblemSpec& spec, const ModelConfig& cfg) {
    NeusaModel m;
    m.spec = spec;
    m.basis = build_problem_basis(spec, cfg.modes);
    m.u0 = initial_coefficients(spec, m.basis);
    const double T = cfg.T > 0.0 ? cfg.T : spec.T;
    m.grid = TimeGrid(0.0, T, cfg.time_samples);

    SpectralOperator mult = multiplier_from_linear_pde(spec.a0, spec.a1, spec.a2, m.basis);
    if (!mult.is_diagonal())
        throw std::invalid_argument("make_model: linearization must be diagonal for these systems");

    std::mt19937_64 rng(cfg.seed);
    VectorField& f = m.field;
    f.mode_shape = m.basis.mode_shape();
    f.multiplier = mult.diag;
    f.epsilon = cfg.epsilon >= 0.0 ? cfg.epsilon : spec.epsilon;
    switch (spec.kind) {
        case ProblemKind::Wave: {
            f.kind = SystemKind::SecondOrder;
            f.net_u.kind = CorrectionNet::Kind::Dimwise;
            f.net_u.dimwise = DimwiseStack::create(1, cfg.modes[0], cfg.modes[1],
                                                   cfg.dimwise_layers, rng);
            // the learned term corrects a second-order operator, so its modes
            // scale like the Laplacian multiplier
            std::vector<double> env(mult.diag.numel());
            for (std::int64_t i = 0; i < mult.diag.numel(); ++i)
                env[i] = 1.0 + std::abs(mult.diag[i]);
            f.net_u.output_envelope = Tensor::from(f.mode_shape, std::move(env));
            break;
        }
        case ProblemKind::SineGordon: {
            f.kind = SystemKind::SecondOrder;
            f.net_u.kind = CorrectionNet::Kind::MlpNet;
            f.net_u.mlp = Mlp::create(cfg.modes[0], cfg.hidden_width, cfg.modes[0], rng);
            break;
        }
        case ProblemKind::Burgers:
            f.kind = SystemKind::BurgersPair;
            f.net_u.kind = CorrectionNet::Kind::Dimwise;
            f.net_u.dimwise = DimwiseStack::create(2, cfg.modes[0], cfg.modes[1],
                                                   cfg.dimwise_layers, rng);
            f.net_v.kind = CorrectionNet::Kind::Dimwise;
            f.net_v.dimwise = DimwiseStack::create(2, cfg.modes[0], cfg.modes[1],
                                                   cfg.dimwise_layers, rng);
            break;
    }
    if (cfg.learn_basis)
        for (int i = 0; i < spec.dim; ++i)
            m.skew_params.push_back(Tensor::zeros({cfg.modes[i], cfg.modes[i]}));

    // Start close to the linear model: the random correction is rescaled to a
    // fraction of the correction the exact discretized dynamics ask for at
    // t = 0, i.e. (rhs(u0) - M (.) u0) / eps per wired channel.
    if (f.epsilon > 0.0) {
        NoTape guard;
        const double fraction = 0.25;
        Tensor rhs = reference_rhs(spec, m.basis, m.u0);
        Tensor u0c = slice_axis0(m.u0, 0);
        switch (spec.kind) {
            case ProblemKind::Wave:
            case ProblemKind::SineGordon: {
                Tensor needed = sub(slice_axis0(rhs, 1), hadamard(u0c, f.multiplier));
                f.net_u.calibrate_to_linear_scale({u0c}, f.mode_shape, needed,
                                                  f.epsilon, fraction);
                break;
            }
            case ProblemKind::Burgers: {
                Tensor v0c = slice_axis0(m.u0, 1);
                Tensor needed_u = sub(slice_axis0(rhs, 0), hadamard(u0c, f.multiplier));
                Tensor needed_v = sub(slice_axis0(rhs, 1), hadamard(v0c, f.multiplier));
                f.net_u.calibrate_to_linear_scale({u0c, v0c}, f.mode_shape, needed_u,
                                                  f.epsilon, fraction);
                f.net_v.calibrate_to_linear_scale({u0c, v0c}, f.mode_shape, needed_v,
                                                  f.epsilon, fraction);
                break;
            }
        }
    }
    return m;
}

} // namespace neusa
