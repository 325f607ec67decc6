// Dense real tensors with a tape-based reverse-mode gradient engine.
//
// Tensors are value types holding shared immutable storage. When a Tape is
// active (RAII scope), differentiable ops record nodes on it; backward()
// sweeps the node list in reverse and accumulates gradients for watched
// leaves. All arithmetic is IEEE double; a fixed operation order makes
// repeated forward/backward passes bitwise reproducible.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace neusa {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string r = "[";
    for (size_t i = 0; i < s.size(); ++i) r += (i ? "," : "") + std::to_string(s[i]);
    return r + "]";
}

struct Tensor {
    Shape shape;
    std::shared_ptr<std::vector<double>> data;
    int node = -1;             // node index on the tape identified by tape_id
    std::uint64_t tape_id = 0; // 0 = not attached

    Tensor() = default;

    std::int64_t numel() const { return data ? static_cast<std::int64_t>(data->size()) : 0; }
    bool defined() const { return static_cast<bool>(data); }

    const std::vector<double>& vals() const { return *data; }
    double operator[](std::int64_t i) const { return (*data)[i]; }

    double scalar() const {
        if (numel() != 1) throw std::invalid_argument("Tensor::scalar: numel " + std::to_string(numel()));
        return (*data)[0];
    }

    static Tensor from(Shape s, std::vector<double> v) {
        if (shape_numel(s) != static_cast<std::int64_t>(v.size()))
            throw std::invalid_argument("Tensor::from: shape " + shape_str(s) + " numel mismatch");
        Tensor t;
        t.shape = std::move(s);
        t.data = std::make_shared<std::vector<double>>(std::move(v));
        return t;
    }
    static Tensor full(Shape s, double v) {
        Tensor t;
        t.data = std::make_shared<std::vector<double>>(shape_numel(s), v);
        t.shape = std::move(s);
        return t;
    }
    static Tensor zeros(Shape s) { return full(std::move(s), 0.0); }
    static Tensor ones(Shape s) { return full(std::move(s), 1.0); }
    static Tensor scalar_of(double v) { return from(Shape{}, {v}); }

    bool all_finite() const {
        for (double x : *data)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

using GradMap = std::unordered_map<int, Tensor>;

// Reverse-mode tape. Nodes are appended in execution order; each node's
// inputs precede it, so a single reverse sweep propagates all adjoints and
// visits each node exactly once.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const std::vector<double>&)>;

    Tape() : id_(next_id_++) {
        parent_ = current_;
        current_ = this;
    }
    ~Tape() { current_ = parent_; }

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active() { return current_; }
    std::uint64_t id() const { return id_; }
    size_t size() const { return nodes_.size(); }

    // Registers a leaf (parameter) tensor and returns a tape-attached copy.
    Tensor watch(const Tensor& t) {
        Tensor out = t;
        out.node = add_node(t.numel(), nullptr);
        out.tape_id = id_;
        watched_.push_back(out.node);
        watched_shapes_.push_back(t.shape);
        return out;
    }

    int add_node(std::int64_t out_numel, BackwardFn backward) {
        nodes_.push_back(Node{out_numel, std::move(backward)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    bool tracks(const Tensor& t) const { return t.node >= 0 && t.tape_id == id_; }

    std::vector<double>& grad_buffer(int node) {
        auto& g = grads_[node];
        if (g.empty()) g.assign(nodes_[node].out_numel, 0.0);
        return g;
    }
    void accumulate(int node, const double* g, std::int64_t n) {
        auto& buf = grad_buffer(node);
        for (std::int64_t i = 0; i < n; ++i) buf[i] += g[i];
    }

    // Gradients of a scalar loss w.r.t. every watched leaf (zero tensors for
    // leaves the loss does not depend on; a constant loss yields all zeros).
    // The forward graph stays intact; call reset() to reuse the tape.
    GradMap backward(const Tensor& loss) {
        if (loss.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
        if (loss.node >= 0 && loss.tape_id != id_)
            throw std::invalid_argument("backward: loss is not on this tape");
        grads_.assign(nodes_.size(), {});
        if (tracks(loss)) {
            grad_buffer(loss.node)[0] = 1.0;
            for (int i = loss.node; i >= 0; --i)
                if (!grads_[i].empty() && nodes_[i].backward) nodes_[i].backward(*this, grads_[i]);
        }
        GradMap out;
        for (size_t w = 0; w < watched_.size(); ++w) {
            int n = watched_[w];
            Tensor g = grads_[n].empty() ? Tensor::zeros(watched_shapes_[w])
                                         : Tensor::from(watched_shapes_[w], grads_[n]);
            out.emplace(n, std::move(g));
        }
        grads_.clear();
        return out;
    }

    void reset() {
        nodes_.clear();
        grads_.clear();
        watched_.clear();
        watched_shapes_.clear();
    }

private:
    struct Node {
        std::int64_t out_numel;
        BackwardFn backward; // null for leaves
    };
    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    std::vector<int> watched_;
    std::vector<Shape> watched_shapes_;
    std::uint64_t id_;
    Tape* parent_;
    inline static thread_local Tape* current_ = nullptr;
    inline static thread_local std::uint64_t next_id_ = 1;
};

// Suspends recording within a scope (pure value evaluation).
class NoTape {
public:
    NoTape() { ++depth(); }
    ~NoTape() { --depth(); }
    NoTape(const NoTape&) = delete;
    NoTape& operator=(const NoTape&) = delete;

    static bool engaged() { return depth() > 0; }

private:
    static int& depth() {
        static thread_local int d = 0;
        return d;
    }
};

inline Tape* active_tape() { return NoTape::engaged() ? nullptr : Tape::active(); }

// Strips tape attachment; shares the same storage.
inline Tensor detach(const Tensor& t) {
    Tensor out = t;
    out.node = -1;
    out.tape_id = 0;
    return out;
}

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// b must equal a trailing suffix of a's shape (the only broadcast rule).
inline void check_trailing(const Shape& a, const Shape& b, const char* op) {
    require(b.size() <= a.size(), std::string(op) + ": rank of b exceeds a");
    for (size_t i = 0; i < b.size(); ++i)
        require(b[b.size() - 1 - i] == a[a.size() - 1 - i],
                std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

inline Tensor make_op(Shape s, std::vector<double> v, Tape::BackwardFn bw) {
    Tensor out = Tensor::from(std::move(s), std::move(v));
    if (Tape* t = active_tape(); t && bw) {
        out.node = t->add_node(out.numel(), std::move(bw));
        out.tape_id = t->id();
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic (b broadcastable along trailing axes where noted)
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::check_trailing(a.shape, b.shape, "add");
    const std::int64_t n = a.numel(), m = b.numel();
    const auto& av = a.vals();
    const auto& bv = b.vals();
    std::vector<double> v(n);
    for (std::int64_t i = 0; i < n; ++i) v[i] = av[i] + bv[i % m];
    Tape* t = active_tape();
    const bool ta = t && t->tracks(a), tb = t && t->tracks(b);
    Tape::BackwardFn bw;
    if (ta || tb) {
        int an = a.node, bn = b.node;
        bw = [an, bn, ta, tb, n, m](Tape& tp, const std::vector<double>& g) {
            if (ta) tp.accumulate(an, g.data(), n);
            if (tb) {
                auto& gb = tp.grad_buffer(bn);
                for (std::int64_t i = 0; i < n; ++i) gb[i % m] += g[i];
            }
        };
    }
    return detail::make_op(a.shape, std::move(v), std::move(bw));
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::check_trailing(a.shape, b.shape, "sub");
    const std::int64_t n = a.numel(), m = b.numel();
    const auto& av = a.vals();
    const auto& bv = b.vals();
    std::vector<double> v(n);
    for (std::int64_t i = 0; i < n; ++i) v[i] = av[i] - bv[i % m];
    Tape* t = active_tape();
    const bool ta = t && t->tracks(a), tb = t && t->tracks(b);
    Tape::BackwardFn bw;
    if (ta || tb) {
        int an = a.node, bn = b.node;
        bw = [an, bn, ta, tb, n, m](Tape& tp, const std::vector<double>& g) {
            if (ta) tp.accumulate(an, g.data(), n);
            if (tb) {
                auto& gb = tp.grad_buffer(bn);
                for (std::int64_t i = 0; i < n; ++i) gb[i % m] -= g[i];
            }
        };
    }
    return detail::make_op(a.shape, std::move(v), std::move(bw));
}

// Elementwise (Hadamard) product; b broadcastable along trailing axes.
inline Tensor hadamard(const Tensor& a, const Tensor& b) {
    detail::check_trailing(a.shape, b.shape, "hadamard");
    const std::int64_t n = a.numel(), m = b.numel();
    const auto& av = a.vals();
    const auto& bv = b.vals();
    std::vector<double> v(n);
    for (std::int64_t i = 0; i < n; ++i) v[i] = av[i] * bv[i % m];
    Tape* t = active_tape();
    const bool ta = t && t->tracks(a), tb = t && t->tracks(b);
    Tape::BackwardFn bw;
    if (ta || tb) {
        int an = a.node, bn = b.node;
        Tensor as = a, bs = b; // adjoints need both forward inputs
        bw = [an, bn, ta, tb, n, m, as, bs](Tape& tp, const std::vector<double>& g) {
            const auto& avx = as.vals();
            const auto& bvx = bs.vals();
            if (ta) {
                auto& ga = tp.grad_buffer(an);
                for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i] * bvx[i % m];
            }
            if (tb) {
                auto& gb = tp.grad_buffer(bn);
                for (std::int64_t i = 0; i < n; ++i) gb[i % m] += g[i] * avx[i];
            }
        };
    }
    return detail::make_op(a.shape, std::move(v), std::move(bw));
}

inline Tensor scale(const Tensor& a, double c) {
    const std::int64_t n = a.numel();
    const auto& av = a.vals();
    std::vector<double> v(n);
    for (std::int64_t i = 0; i < n; ++i) v[i] = av[i] * c;
    Tape* t = active_tape();
    Tape::BackwardFn bw;
    if (t && t->tracks(a)) {
        int an = a.node;
        bw = [an, c, n](Tape& tp, const std::vector<double>& g) {
            auto& ga = tp.grad_buffer(an);
            for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i] * c;
        };
    }
    return detail::make_op(a.shape, std::move(v), std::move(bw));
}

// a + c*b with equal shapes; the workhorse of RK4 stage assembly.
inline Tensor add_scaled(const Tensor& a, const Tensor& b, double c) {
    detail::require(a.shape == b.shape, "add_scaled: shape mismatch " + shape_str(a.shape) +
                                            " vs " + shape_str(b.shape));
    const std::int64_t n = a.numel();
    const auto& av = a.vals();
    const auto& bv = b.vals();
    std::vector<double> v(n);
    for (std::int64_t i = 0; i < n; ++i) v[i] = av[i] + c * bv[i];
    Tape* t = active_tape();
    const bool ta = t && t->tracks(a), tb = t && t->tracks(b);
    Tape::BackwardFn bw;
    if (ta || tb) {
        int an = a.node, bn = b.node;
        bw = [an, bn, ta, tb, c, n](Tape& tp, const std::vector<double>& g) {
            if (ta) tp.accumulate(an, g.data(), n);
            if (tb) {
                auto& gb = tp.grad_buffer(bn);
                for (std::int64_t i = 0; i < n; ++i) gb[i] += c * g[i];
            }
        };
    }
    return detail::make_op(a.shape, std::move(v), std::move(bw));
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

enum class Activation { Relu, Tanh, Sin, Sigmoid, Identity };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sin: return "sin";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "?";
}

inline Tensor activation(const Tensor& x, Activation kind) {
    const std::int64_t n = x.numel();
    const auto& xv = x.vals();
    std::vector<double> v(n);
    switch (kind) {
        case Activation::Relu:
            for (std::int64_t i = 0; i < n; ++i) v[i] = xv[i] > 0 ? xv[i] : 0.0;
            break;
        case Activation::Tanh:
            for (std::int64_t i = 0; i < n; ++i) v[i] = std::tanh(xv[i]);
            break;
        case Activation::Sin:
            for (std::int64_t i = 0; i < n; ++i) v[i] = std::sin(xv[i]);
            break;
        case Activation::Sigmoid:
            for (std::int64_t i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + std::exp(-xv[i]));
            break;
        case Activation::Identity:
            v = xv;
            break;
    }
    Tape* t = active_tape();
    Tape::BackwardFn bw;
    if (t && t->tracks(x) && kind != Activation::Identity) {
        int xn = x.node;
        Tensor xs = x;
        Tensor ys = Tensor::from(x.shape, v); // saved output (cheap for tanh/sigmoid adjoints)
        bw = [xn, kind, n, xs, ys](Tape& tp, const std::vector<double>& g) {
            auto& gx = tp.grad_buffer(xn);
            const auto& xi = xs.vals();
            const auto& yo = ys.vals();
            switch (kind) {
                case Activation::Relu:
                    for (std::int64_t i = 0; i < n; ++i) gx[i] += xi[i] > 0 ? g[i] : 0.0;
                    break;
                case Activation::Tanh:
                    for (std::int64_t i = 0; i < n; ++i) gx[i] += g[i] * (1.0 - yo[i] * yo[i]);
                    break;
                case Activation::Sin:
                    for (std::int64_t i = 0; i < n; ++i) gx[i] += g[i] * std::cos(xi[i]);
                    break;
                case Activation::Sigmoid:
                    for (std::int64_t i = 0; i < n; ++i) gx[i] += g[i] * yo[i] * (1.0 - yo[i]);
                    break;
                case Activation::Identity:
                    break;
            }
        };
        return detail::make_op(x.shape, std::move(v), std::move(bw));
    }
    if (t && t->tracks(x)) { // identity still forwards gradients
        int xn = x.node;
        bw = [xn, n](Tape& tp, const std::vector<double>& g) { tp.accumulate(xn, g.data(), n); };
    }
    return detail::make_op(x.shape, std::move(v), std::move(bw));
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

// Every row of x (over its last axis, length n) multiplied by B (n x p);
// leading axes of x are batch. Shapes: x [..., n], B [n, p] -> [..., p].
inline Tensor matmul_rowwise(const Tensor& x, const Tensor& B) {
    detail::require(B.shape.size() == 2, "matmul_rowwise: B must be a matrix");
    detail::require(!x.shape.empty(), "matmul_rowwise: x must have rank >= 1");
    const int n = B.shape[0], p = B.shape[1];
    detail::require(x.shape.back() == n, "matmul_rowwise: inner dimension mismatch " +
                                             shape_str(x.shape) + " vs " + shape_str(B.shape));
    const std::int64_t rows = x.numel() / n;
    const auto& xv = x.vals();
    const auto& bv = B.vals();
    std::vector<double> v(rows * p, 0.0);
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xr = xv.data() + r * n;
        double* vr = v.data() + r * p;
        for (int i = 0; i < n; ++i) {
            const double xi = xr[i];
            const double* bi = bv.data() + static_cast<std::int64_t>(i) * p;
            for (int k = 0; k < p; ++k) vr[k] += xi * bi[k];
        }
    }
    Shape os = x.shape;
    os.back() = p;
    Tape* t = active_tape();
    const bool tx = t && t->tracks(x), tb = t && t->tracks(B);
    Tape::BackwardFn bw;
    if (tx || tb) {
        int xn = x.node, bn = B.node;
        Tensor xs = x, bs = B;
        bw = [xn, bn, tx, tb, rows, n, p, xs, bs](Tape& tp, const std::vector<double>& g) {
            const auto& xi = xs.vals();
            const auto& bi = bs.vals();
            if (tx) {
                auto& gx = tp.grad_buffer(xn);
                for (std::int64_t r = 0; r < rows; ++r) {
                    const double* gr = g.data() + r * p;
                    double* gxr = gx.data() + r * n;
                    for (int i = 0; i < n; ++i) {
                        const double* brow = bi.data() + static_cast<std::int64_t>(i) * p;
                        double acc = 0.0;
                        for (int k = 0; k < p; ++k) acc += gr[k] * brow[k];
                        gxr[i] += acc;
                    }
                }
            }
            if (tb) {
                auto& gB = tp.grad_buffer(bn);
                for (std::int64_t r = 0; r < rows; ++r) {
                    const double* xr = xi.data() + r * n;
                    const double* gr = g.data() + r * p;
                    for (int i = 0; i < n; ++i) {
                        const double xv_ = xr[i];
                        double* gBi = gB.data() + static_cast<std::int64_t>(i) * p;
                        for (int k = 0; k < p; ++k) gBi[k] += xv_ * gr[k];
                    }
                }
            }
        };
    }
    return detail::make_op(std::move(os), std::move(v), std::move(bw));
}

// Applies matrix M (p x c) along `axis` of x: out[..,i,..] = sum_j M[i,j] x[..,j,..].
// Gradients flow to both x and M.
inline Tensor apply_matrix_axis(const Tensor& x, const Tensor& M, int axis) {
    detail::require(M.shape.size() == 2, "apply_matrix_axis: M must be a matrix");
    detail::require(axis >= 0 && axis < static_cast<int>(x.shape.size()),
                    "apply_matrix_axis: axis out of range");
    const int p = M.shape[0], c = M.shape[1];
    detail::require(x.shape[axis] == c, "apply_matrix_axis: size mismatch along axis " +
                                            std::to_string(axis) + ": " + shape_str(x.shape) +
                                            " vs " + shape_str(M.shape));
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= x.shape[i];
    for (size_t i = axis + 1; i < x.shape.size(); ++i) inner *= x.shape[i];
    const auto& xv = x.vals();
    const auto& mv = M.vals();
    std::vector<double> v(outer * p * inner, 0.0);
    for (std::int64_t o = 0; o < outer; ++o) {
        const double* xo = xv.data() + o * c * inner;
        double* vo = v.data() + o * p * inner;
        for (int i = 0; i < p; ++i) {
            const double* mi = mv.data() + static_cast<std::int64_t>(i) * c;
            double* vi = vo + static_cast<std::int64_t>(i) * inner;
            for (int j = 0; j < c; ++j) {
                const double m = mi[j];
                if (m == 0.0) continue;
                const double* xj = xo + static_cast<std::int64_t>(j) * inner;
                for (std::int64_t k = 0; k < inner; ++k) vi[k] += m * xj[k];
            }
        }
    }
    Shape os = x.shape;
    os[axis] = p;
    Tape* t = active_tape();
    const bool tx = t && t->tracks(x), tm = t && t->tracks(M);
    Tape::BackwardFn bw;
    if (tx || tm) {
        int xn = x.node, mn = M.node;
        Tensor xs = x, ms = M;
        bw = [xn, mn, tx, tm, outer, inner, p, c, xs, ms](Tape& tp, const std::vector<double>& g) {
            const auto& xi = xs.vals();
            const auto& mi = ms.vals();
            if (tx) {
                auto& gx = tp.grad_buffer(xn);
                for (std::int64_t o = 0; o < outer; ++o) {
                    const double* go = g.data() + o * p * inner;
                    double* gxo = gx.data() + o * c * inner;
                    for (int i = 0; i < p; ++i) {
                        const double* mrow = mi.data() + static_cast<std::int64_t>(i) * c;
                        const double* gi = go + static_cast<std::int64_t>(i) * inner;
                        for (int j = 0; j < c; ++j) {
                            const double m = mrow[j];
                            if (m == 0.0) continue;
                            double* gxj = gxo + static_cast<std::int64_t>(j) * inner;
                            for (std::int64_t k = 0; k < inner; ++k) gxj[k] += m * gi[k];
                        }
                    }
                }
            }
            if (tm) {
                auto& gM = tp.grad_buffer(mn);
                for (std::int64_t o = 0; o < outer; ++o) {
                    const double* go = g.data() + o * p * inner;
                    const double* xo = xi.data() + o * c * inner;
                    for (int i = 0; i < p; ++i) {
                        const double* gi = go + static_cast<std::int64_t>(i) * inner;
                        double* gMi = gM.data() + static_cast<std::int64_t>(i) * c;
                        for (int j = 0; j < c; ++j) {
                            const double* xj = xo + static_cast<std::int64_t>(j) * inner;
                            double acc = 0.0;
                            for (std::int64_t k = 0; k < inner; ++k) acc += gi[k] * xj[k];
                            gMi[j] += acc;
                        }
                    }
                }
            }
        };
    }
    return detail::make_op(std::move(os), std::move(v), std::move(bw));
}

// Swaps the last two axes.
inline Tensor transpose_last2(const Tensor& x) {
    detail::require(x.shape.size() >= 2, "transpose_last2: rank < 2");
    const int m = x.shape[x.shape.size() - 2];
    const int n = x.shape.back();
    const std::int64_t outer = x.numel() / (static_cast<std::int64_t>(m) * n);
    const auto& xv = x.vals();
    std::vector<double> v(x.numel());
    for (std::int64_t o = 0; o < outer; ++o) {
        const double* xo = xv.data() + o * m * n;
        double* vo = v.data() + o * m * n;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) vo[static_cast<std::int64_t>(j) * m + i] = xo[static_cast<std::int64_t>(i) * n + j];
    }
    Shape os = x.shape;
    std::swap(os[os.size() - 2], os.back());
    Tape* t = active_tape();
    Tape::BackwardFn bw;
    if (t && t->tracks(x)) {
        int xn = x.node;
        bw = [xn, outer, m, n](Tape& tp, const std::vector<double>& g) {
            auto& gx = tp.grad_buffer(xn);
            for (std::int64_t o = 0; o < outer; ++o) {
                const double* go = g.data() + o * m * n;
                double* gxo = gx.data() + o * m * n;
                for (int j = 0; j < n; ++j)
                    for (int i = 0; i < m; ++i) gxo[static_cast<std::int64_t>(i) * n + j] += go[static_cast<std::int64_t>(j) * m + i];
            }
        };
    }
    return detail::make_op(std::move(os), std::move(v), std::move(bw));
}

// ---------------------------------------------------------------------------
// Shape manipulation and reductions
// ---------------------------------------------------------------------------

inline Tensor reshape(const Tensor& x, Shape s) {
    detail::require(shape_numel(s) == x.numel(),
                    "reshape: numel mismatch " + shape_str(x.shape) + " -> " + shape_str(s));
    Tape* t = active_tape();
    Tape::BackwardFn bw;
    if (t && t->tracks(x)) {
        int xn = x.node;
        std::int64_t n = x.numel();
        bw = [xn, n](Tape& tp, const std::vector<double>& g) { tp.accumulate(xn, g.data(), n); };
    }
    return detail::make_op(std::move(s), x.vals(), std::move(bw));
}

// x[i, ...] for a leading-axis index; output drops axis 0.
inline Tensor slice_axis0(const Tensor& x, int i) {
    detail::require(!x.shape.empty(), "slice_axis0: rank 0");
    detail::require(i >= 0 && i < x.shape[0], "slice_axis0: index out of range");
    Shape os(x.shape.begin() + 1, x.shape.end());
    const std::int64_t block = shape_numel(os);
    std::vector<double> v(x.vals().begin() + i * block, x.vals().begin() + (i + 1) * block);
    Tape* t = active_tape();
    Tape::BackwardFn bw;
    if (t && t->tracks(x)) {
        int xn = x.node;
        bw = [xn, i, block](Tape& tp, const std::vector<double>& g) {
            auto& gx = tp.grad_buffer(xn);
            for (std::int64_t k = 0; k < block; ++k) gx[i * block + k] += g[k];
        };
    }
    return detail::make_op(std::move(os), std::move(v), std::move(bw));
}

// Stacks equally shaped tensors along a new leading axis.
inline Tensor stack_axis0(const std::vector<Tensor>& parts) {
    detail::require(!parts.empty(), "stack_axis0: empty");
    const Shape& s0 = parts[0].shape;
    const std::int64_t block = parts[0].numel();
    std::vector<double> v;
    v.reserve(block * parts.size());
    for (const Tensor& p : parts) {
        detail::require(p.shape == s0, "stack_axis0: shape mismatch");
        v.insert(v.end(), p.vals().begin(), p.vals().end());
    }
    Shape os;
    os.push_back(static_cast<int>(parts.size()));
    os.insert(os.end(), s0.begin(), s0.end());
    Tape* t = active_tape();
    bool any = false;
    if (t)
        for (const Tensor& p : parts) any = any || t->tracks(p);
    Tape::BackwardFn bw;
    if (any) {
        std::vector<int> nodes;
        for (const Tensor& p : parts) nodes.push_back(t->tracks(p) ? p.node : -1);
        bw = [nodes, block](Tape& tp, const std::vector<double>& g) {
            for (size_t i = 0; i < nodes.size(); ++i)
                if (nodes[i] >= 0) tp.accumulate(nodes[i], g.data() + i * block, block);
        };
    }
    return detail::make_op(std::move(os), std::move(v), std::move(bw));
}

// Gathers flat indices from x viewed as a flat vector.
inline Tensor gather_flat(const Tensor& x, const std::vector<std::int64_t>& idx) {
    const std::int64_t n = x.numel();
    std::vector<double> v(idx.size());
    const auto& xv = x.vals();
    for (size_t k = 0; k < idx.size(); ++k) {
        detail::require(idx[k] >= 0 && idx[k] < n, "gather_flat: index out of range");
        v[k] = xv[idx[k]];
    }
    Tape* t = active_tape();
    Tape::BackwardFn bw;
    if (t && t->tracks(x)) {
        int xn = x.node;
        auto ids = idx;
        bw = [xn, ids](Tape& tp, const std::vector<double>& g) {
            auto& gx = tp.grad_buffer(xn);
            for (size_t k = 0; k < ids.size(); ++k) gx[ids[k]] += g[k];
        };
    }
    return detail::make_op(Shape{static_cast<int>(idx.size())}, std::move(v), std::move(bw));
}

inline Tensor sum(const Tensor& x) {
    const std::int64_t n = x.numel();
    const auto& xv = x.vals();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += xv[i];
    Tape* t = active_tape();
    Tape::BackwardFn bw;
    if (t && t->tracks(x)) {
        int xn = x.node;
        bw = [xn, n](Tape& tp, const std::vector<double>& g) {
            auto& gx = tp.grad_buffer(xn);
            for (std::int64_t i = 0; i < n; ++i) gx[i] += g[0];
        };
    }
    return detail::make_op(Shape{}, {acc}, std::move(bw));
}

inline Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

// sum(x .* x); fused to keep residual reductions cheap.
inline Tensor sum_squares(const Tensor& x) {
    const std::int64_t n = x.numel();
    const auto& xv = x.vals();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += xv[i] * xv[i];
    Tape* t = active_tape();
    Tape::BackwardFn bw;
    if (t && t->tracks(x)) {
        int xn = x.node;
        Tensor xs = x;
        bw = [xn, n, xs](Tape& tp, const std::vector<double>& g) {
            auto& gx = tp.grad_buffer(xn);
            const auto& xi = xs.vals();
            for (std::int64_t i = 0; i < n; ++i) gx[i] += 2.0 * xi[i] * g[0];
        };
    }
    return detail::make_op(Shape{}, {acc}, std::move(bw));
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

// Max over coordinates of |autodiff - central difference| / (|central difference| + 1e-12)
// for a scalar-valued function of a single parameter tensor.
inline double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& params,
                         double h) {
    Tensor adgrad;
    {
        Tape tape;
        Tensor p = tape.watch(params);
        Tensor loss = f(p);
        if (loss.numel() != 1) throw std::invalid_argument("grad_check: f must return a scalar");
        GradMap g = tape.backward(loss);
        adgrad = g.at(p.node);
    }
    double worst = 0.0;
    NoTape guard;
    std::vector<double> work = params.vals();
    for (std::int64_t i = 0; i < params.numel(); ++i) {
        const double orig = work[i];
        work[i] = orig + h;
        double fp = f(Tensor::from(params.shape, work)).scalar();
        work[i] = orig - h;
        double fm = f(Tensor::from(params.shape, work)).scalar();
        work[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::runtime_error("grad_check: non-finite evaluation");
        const double fd = (fp - fm) / (2.0 * h);
        const double err = std::abs(adgrad[i] - fd) / (std::abs(fd) + 1e-12);
        worst = std::max(worst, err);
    }
    return worst;
}

} // namespace neusa
