// Trigonometric spectral bases on box domains: construction, collocation
// decomposition, reconstruction, and exact differentiation operators.
//
// Everything is kept in real form. Periodic axes use the interleaved family
// {1, cos w x, sin w x, cos 2w x, ...}; Dirichlet axes use sines, Neumann axes
// cosines. Even-order derivatives are then exactly diagonal per mode, while
// odd-order derivatives become 2x2 couplings between (cos, sin) partners or
// maps into the complementary family.

#pragma once

#include "neusa/tensor.hpp"

#include <array>
#include <complex>
#include <optional>

namespace neusa {

enum class BasisKind { Fourier, Sine, Cosine };

inline const char* basis_kind_name(BasisKind k) {
    switch (k) {
        case BasisKind::Fourier: return "fourier";
        case BasisKind::Sine: return "sine";
        case BasisKind::Cosine: return "cosine";
    }
    return "?";
}

namespace detail {

// In-place LU inversion with partial pivoting; throws on singular input.
inline std::vector<double> invert_matrix(std::vector<double> m, int n) {
    std::vector<double> inv(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i) * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::abs(m[static_cast<size_t>(col) * n + col]);
        for (int r = col + 1; r < n; ++r) {
            double v = std::abs(m[static_cast<size_t>(r) * n + col]);
            if (v > best) best = v, piv = r;
        }
        if (best < 1e-12) throw std::runtime_error("invert_matrix: singular collocation system");
        if (piv != col) {
            for (int k = 0; k < n; ++k) {
                std::swap(m[static_cast<size_t>(piv) * n + k], m[static_cast<size_t>(col) * n + k]);
                std::swap(inv[static_cast<size_t>(piv) * n + k], inv[static_cast<size_t>(col) * n + k]);
            }
        }
        const double d = m[static_cast<size_t>(col) * n + col];
        for (int k = 0; k < n; ++k) {
            m[static_cast<size_t>(col) * n + k] /= d;
            inv[static_cast<size_t>(col) * n + k] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = m[static_cast<size_t>(r) * n + col];
            if (f == 0.0) continue;
            for (int k = 0; k < n; ++k) {
                m[static_cast<size_t>(r) * n + k] -= f * m[static_cast<size_t>(col) * n + k];
                inv[static_cast<size_t>(r) * n + k] -= f * inv[static_cast<size_t>(col) * n + k];
            }
        }
    }
    return inv;
}

} // namespace detail

// One axis of a tensor-product basis. `freq` holds the scaled frequency of
// each mode (chain-rule factor from the affine map onto [-pi,pi] or [0,pi]
// already folded in), so d/dx of mode m carries +-freq[m].
struct AxisBasis {
    BasisKind kind;
    int modes = 0;
    double lo = 0, hi = 0;
    std::vector<int> harmonic;    // integer harmonic per mode
    std::vector<double> freq;     // scaled frequency per mode
    std::vector<int> partner;     // cos/sin partner index per mode, -1 if none
    std::vector<double> nodes;    // collocation nodes, size == modes
    Tensor synthesis;             // [modes x modes], S[i][j] = phi_j(node_i)
    Tensor analysis;              // S^{-1}

    double width() const { return hi - lo; }

    // phi_m(x)
    double value(int m, double x) const {
        const double W = width();
        switch (kind) {
            case BasisKind::Fourier: {
                const double chi = 2.0 * M_PI * (x - lo) / W - M_PI;
                if (m == 0) return 1.0 / std::sqrt(W);
                const int j = harmonic[m];
                const double s = std::sqrt(2.0 / W);
                return (m % 2 == 1) ? s * std::cos(j * chi) : s * std::sin(j * chi);
            }
            case BasisKind::Sine: {
                const double chi = M_PI * (x - lo) / W;
                return std::sqrt(2.0 / W) * std::sin(harmonic[m] * chi);
            }
            case BasisKind::Cosine: {
                const double chi = M_PI * (x - lo) / W;
                if (m == 0) return 1.0 / std::sqrt(W);
                return std::sqrt(2.0 / W) * std::cos(harmonic[m] * chi);
            }
        }
        return 0.0;
    }

    // Collocation nodes: periodic grid (fourier), interior grid (sine),
    // midpoint grid (cosine). Each makes the square collocation system
    // exactly invertible via discrete trigonometric orthogonality.
    static std::vector<double> make_nodes(BasisKind kind, int c, double lo, double hi) {
        std::vector<double> xs(c);
        const double W = hi - lo;
        for (int i = 0; i < c; ++i) {
            switch (kind) {
                case BasisKind::Fourier: xs[i] = lo + W * i / c; break;
                case BasisKind::Sine: xs[i] = lo + W * (i + 1) / (c + 1); break;
                case BasisKind::Cosine: xs[i] = lo + W * (i + 0.5) / c; break;
            }
        }
        return xs;
    }
};

inline AxisBasis build_axis(BasisKind kind, int c, double lo, double hi) {
    if (c < 1) throw std::invalid_argument("build_basis: modes must be >= 1");
    if (!(hi > lo)) throw std::invalid_argument("build_basis: zero-width domain");
    AxisBasis ax;
    ax.kind = kind;
    ax.modes = c;
    ax.lo = lo;
    ax.hi = hi;
    const double W = hi - lo;
    ax.harmonic.resize(c);
    ax.freq.resize(c);
    ax.partner.assign(c, -1);
    for (int m = 0; m < c; ++m) {
        switch (kind) {
            case BasisKind::Fourier: {
                const int j = (m + 1) / 2;
                ax.harmonic[m] = j;
                ax.freq[m] = j * 2.0 * M_PI / W;
                if (m >= 1) {
                    if (m % 2 == 1 && m + 1 < c) ax.partner[m] = m + 1;
                    if (m % 2 == 0) ax.partner[m] = m - 1;
                }
                break;
            }
            case BasisKind::Sine:
                ax.harmonic[m] = m + 1;
                ax.freq[m] = (m + 1) * M_PI / W;
                break;
            case BasisKind::Cosine:
                ax.harmonic[m] = m;
                ax.freq[m] = m * M_PI / W;
                break;
        }
    }
    ax.nodes = AxisBasis::make_nodes(kind, c, lo, hi);
    std::vector<double> S(static_cast<size_t>(c) * c);
    for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j) S[static_cast<size_t>(i) * c + j] = ax.value(j, ax.nodes[i]);
    ax.synthesis = Tensor::from({c, c}, S);
    ax.analysis = Tensor::from({c, c}, detail::invert_matrix(S, c));
    return ax;
}

// Tensor-product basis over a box domain, with optional learnable per-axis
// orthogonal maps O (Kronecker-structured): P = O P_trig, P^+ = P^+_trig O^T.
struct SpectralBasis {
    std::vector<AxisBasis> axes;
    std::vector<Tensor> ortho_maps; // empty, or one square map per axis

    int dim() const { return static_cast<int>(axes.size()); }
    bool has_ortho() const { return !ortho_maps.empty(); }

    Shape mode_shape() const {
        Shape s;
        for (const auto& ax : axes) s.push_back(ax.modes);
        return s;
    }
    std::int64_t total_modes() const { return shape_numel(mode_shape()); }

    bool in_domain(const double* x, double tol = 1e-9) const {
        for (int i = 0; i < dim(); ++i) {
            const double pad = tol * (axes[i].width() + 1.0);
            if (x[i] < axes[i].lo - pad || x[i] > axes[i].hi + pad) return false;
        }
        return true;
    }
};

inline SpectralBasis build_basis(const std::vector<BasisKind>& kinds, const std::vector<int>& modes,
                                 const std::vector<double>& lo, const std::vector<double>& hi) {
    if (kinds.size() != modes.size() || kinds.size() != lo.size() || kinds.size() != hi.size())
        throw std::invalid_argument("build_basis: per-axis argument sizes differ");
    SpectralBasis b;
    for (size_t i = 0; i < kinds.size(); ++i) b.axes.push_back(build_axis(kinds[i], modes[i], lo[i], hi[i]));
    return b;
}

enum class OrthoDirection { Forward, Transpose };

// Applies the per-axis orthogonal maps (or their transposes) to a coefficient
// tensor that may carry leading channel axes.
inline Tensor apply_orthogonal(const SpectralBasis& basis, const Tensor& coeffs, OrthoDirection dir) {
    if (!basis.has_ortho()) return coeffs;
    if (basis.ortho_maps.size() != basis.axes.size())
        throw std::invalid_argument("apply_orthogonal: map count != axis count");
    const int lead = static_cast<int>(coeffs.shape.size()) - basis.dim();
    if (lead < 0) throw std::invalid_argument("apply_orthogonal: coefficient rank too small");
    Tensor out = coeffs;
    for (int i = 0; i < basis.dim(); ++i) {
        const Tensor& O = basis.ortho_maps[i];
        if (O.shape != Shape{basis.axes[i].modes, basis.axes[i].modes})
            throw std::invalid_argument("apply_orthogonal: map size mismatch on axis " + std::to_string(i));
        Tensor M = (dir == OrthoDirection::Forward) ? O : transpose_last2(O);
        out = apply_matrix_axis(out, M, lead + i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Decomposition / reconstruction
// ---------------------------------------------------------------------------

// Projects grid samples to coefficients. The trailing axes of `samples` must
// match a per-axis collocation grid: either the basis's own nodes (square
// system, exact inverse) or an aligned finer grid of the same kind (least
// squares). Leading axes are treated as channels.
inline Tensor decompose(const Tensor& samples, const SpectralBasis& basis) {
    const int d = basis.dim();
    const int lead = static_cast<int>(samples.shape.size()) - d;
    if (lead < 0) throw std::invalid_argument("decompose: sample rank below basis dimension");
    Tensor out = samples;
    for (int i = 0; i < d; ++i) {
        const AxisBasis& ax = basis.axes[i];
        const int n = samples.shape[lead + i];
        if (n < ax.modes)
            throw std::invalid_argument("decompose: under-sampled grid on axis " + std::to_string(i) +
                                        " (" + std::to_string(n) + " < " + std::to_string(ax.modes) + ")");
        if (n == ax.modes) {
            out = apply_matrix_axis(out, ax.analysis, lead + i);
        } else {
            // Aligned oversampled grid: least squares through normal equations.
            const auto xs = AxisBasis::make_nodes(ax.kind, n, ax.lo, ax.hi);
            const int c = ax.modes;
            std::vector<double> S(static_cast<size_t>(n) * c);
            for (int r = 0; r < n; ++r)
                for (int j = 0; j < c; ++j) S[static_cast<size_t>(r) * c + j] = ax.value(j, xs[r]);
            std::vector<double> StS(static_cast<size_t>(c) * c, 0.0);
            for (int r = 0; r < n; ++r)
                for (int a = 0; a < c; ++a)
                    for (int b2 = 0; b2 < c; ++b2)
                        StS[static_cast<size_t>(a) * c + b2] +=
                            S[static_cast<size_t>(r) * c + a] * S[static_cast<size_t>(r) * c + b2];
            auto inv = detail::invert_matrix(StS, c);
            std::vector<double> P(static_cast<size_t>(c) * n, 0.0); // (S^T S)^{-1} S^T
            for (int a = 0; a < c; ++a)
                for (int r = 0; r < n; ++r) {
                    double acc = 0.0;
                    for (int b2 = 0; b2 < c; ++b2)
                        acc += inv[static_cast<size_t>(a) * c + b2] * S[static_cast<size_t>(r) * c + b2];
                    P[static_cast<size_t>(a) * n + r] = acc;
                }
            out = apply_matrix_axis(out, Tensor::from({c, n}, P), lead + i);
        }
    }
    if (basis.has_ortho()) out = apply_orthogonal(basis, out, OrthoDirection::Forward);
    return out;
}

// Reconstructs field values on the full collocation grid (the fast, separable
// path used by losses and the reference solver).
inline Tensor reconstruct_on_grid(const Tensor& coeffs, const SpectralBasis& basis) {
    const int d = basis.dim();
    const int lead = static_cast<int>(coeffs.shape.size()) - d;
    if (lead < 0) throw std::invalid_argument("reconstruct_on_grid: coefficient rank too small");
    Tensor out = basis.has_ortho() ? apply_orthogonal(basis, coeffs, OrthoDirection::Transpose) : coeffs;
    for (int i = 0; i < d; ++i) out = apply_matrix_axis(out, basis.axes[i].synthesis, lead + i);
    return out;
}

// Evaluates sum_k u_k b_k(x) at arbitrary points. `points` is [P, d] (or [P]
// in 1D); points outside the domain box are rejected. Coefficients may carry
// leading channel axes; output is [channels..., P].
inline Tensor reconstruct(const Tensor& coeffs, const SpectralBasis& basis, const Tensor& points) {
    const int d = basis.dim();
    Shape ps = points.shape;
    if (d == 1 && ps.size() == 1) ps = {ps[0], 1};
    if (ps.size() != 2 || ps[1] != d)
        throw std::invalid_argument("reconstruct: points must be [P," + std::to_string(d) + "]");
    const int P = ps[0];
    const std::int64_t ctot = basis.total_modes();
    const int lead = static_cast<int>(coeffs.shape.size()) - d;
    if (lead < 0) throw std::invalid_argument("reconstruct: coefficient rank too small");

    Tensor fc = basis.has_ortho() ? apply_orthogonal(basis, coeffs, OrthoDirection::Transpose) : coeffs;

    // Basis value matrix B^T [ctot x P]; rows are flattened multi-indices.
    const Shape ms = basis.mode_shape();
    std::vector<double> Bt(static_cast<size_t>(ctot) * P);
    std::vector<int> idx(d, 0);
    const auto& pv = points.vals();
    for (int p = 0; p < P; ++p)
        if (!basis.in_domain(pv.data() + static_cast<std::int64_t>(p) * d))
            throw std::invalid_argument("reconstruct: point " + std::to_string(p) + " outside domain");
    for (std::int64_t k = 0; k < ctot; ++k) {
        for (int p = 0; p < P; ++p) {
            double v = 1.0;
            for (int i = 0; i < d; ++i) v *= basis.axes[i].value(idx[i], pv[static_cast<std::int64_t>(p) * d + i]);
            Bt[static_cast<size_t>(k) * P + p] = v;
        }
        for (int i = d - 1; i >= 0; --i) {
            if (++idx[i] < ms[i]) break;
            idx[i] = 0;
        }
    }
    Shape flat_shape(fc.shape.begin(), fc.shape.begin() + lead);
    flat_shape.push_back(static_cast<int>(ctot));
    Tensor flat = reshape(fc, flat_shape);
    Tensor out = matmul_rowwise(flat, Tensor::from({static_cast<int>(ctot), P}, std::move(Bt)));
    return out;
}

// ---------------------------------------------------------------------------
// Linear spectral operators
// ---------------------------------------------------------------------------

// A linear operator on coefficient tensors: an optional diagonal multiplier
// over the full mode grid plus optional per-axis matrix terms (the paired
// 2x2 cos/sin couplings of odd-order derivatives live here). A family-changing
// term (sine<->cosine first derivative) replaces the axis basis of its output.
struct SpectralOperator {
    Shape mode_shape;
    Tensor diag; // undefined => zero diagonal part

    struct AxisTerm {
        int axis = 0;
        Tensor matrix;                        // [c_out x c_in]
        std::optional<AxisBasis> target_axis; // set when the output family differs
    };
    std::vector<AxisTerm> axis_terms;

    bool is_diagonal() const { return axis_terms.empty(); }
    bool changes_family() const {
        for (const auto& t : axis_terms)
            if (t.target_axis) return true;
        return false;
    }

    Tensor apply(const Tensor& coeffs) const {
        const int d = static_cast<int>(mode_shape.size());
        const int lead = static_cast<int>(coeffs.shape.size()) - d;
        if (lead < 0) throw std::invalid_argument("SpectralOperator::apply: rank too small");
        for (int i = 0; i < d; ++i)
            if (coeffs.shape[lead + i] != mode_shape[i])
                throw std::invalid_argument("SpectralOperator::apply: mode shape mismatch");
        std::optional<Tensor> acc;
        if (diag.defined()) acc = hadamard(coeffs, diag);
        for (const auto& t : axis_terms) {
            Tensor term = apply_matrix_axis(coeffs, t.matrix, lead + t.axis);
            if (t.target_axis && acc)
                throw std::invalid_argument("SpectralOperator::apply: family-changing term cannot mix");
            acc = acc ? add(*acc, term) : term;
        }
        if (!acc) {
            Shape os = coeffs.shape;
            return Tensor::zeros(os);
        }
        return *acc;
    }

    // Basis describing apply()'s output (differs only for family-changing ops).
    SpectralBasis result_basis(const SpectralBasis& in) const {
        SpectralBasis out = in;
        for (const auto& t : axis_terms)
            if (t.target_axis) out.axes[t.axis] = *t.target_axis;
        return out;
    }

    // Spectrum for stability analysis. Supported forms: pure diagonal, or
    // diagonal plus one same-family axis term with (cos,sin) pair coupling.
    std::vector<std::complex<double>> eigenvalues(const SpectralBasis& basis) const {
        std::vector<std::complex<double>> out;
        const std::int64_t n = shape_numel(mode_shape);
        if (is_diagonal()) {
            for (std::int64_t i = 0; i < n; ++i) out.emplace_back(diag.defined() ? diag[i] : 0.0, 0.0);
            return out;
        }
        if (axis_terms.size() != 1 || changes_family())
            throw std::invalid_argument("SpectralOperator::eigenvalues: unsupported operator form");
        const auto& term = axis_terms[0];
        const AxisBasis& ax = basis.axes[term.axis];
        const int c = ax.modes;
        std::int64_t inner = 1;
        for (size_t i = term.axis + 1; i < mode_shape.size(); ++i) inner *= mode_shape[i];
        const std::int64_t outer = n / (static_cast<std::int64_t>(c) * inner);
        const auto& D = term.matrix.vals();
        auto dval = [&](std::int64_t o, int m, std::int64_t in_) {
            if (!diag.defined()) return 0.0;
            return diag[(o * c + m) * inner + in_];
        };
        for (std::int64_t o = 0; o < outer; ++o)
            for (std::int64_t in_ = 0; in_ < inner; ++in_)
                for (int m = 0; m < c; ++m) {
                    const int p = ax.partner[m];
                    if (p >= 0 && p < m) continue; // handled with its partner
                    const double e = dval(o, m, in_) + D[static_cast<size_t>(m) * c + m];
                    if (p < 0) {
                        out.emplace_back(e, 0.0);
                    } else {
                        // 2x2 block [[e, b],[cc, e2]]
                        const double b = D[static_cast<size_t>(m) * c + p];
                        const double cc = D[static_cast<size_t>(p) * c + m];
                        const double e2 = dval(o, p, in_) + D[static_cast<size_t>(p) * c + p];
                        const std::complex<double> tr(e + e2, 0.0);
                        const std::complex<double> disc = std::sqrt(std::complex<double>((e - e2) * (e - e2) + 4.0 * b * cc, 0.0));
                        out.push_back(0.5 * (tr + disc));
                        out.push_back(0.5 * (tr - disc));
                    }
                }
        return out;
    }
};

// d^order/dx_axis^order as a spectral operator. Order 2 is diagonal with
// entries -freq^2. Order 1 on a fourier axis rotates (cos,sin) pairs; on
// sine/cosine axes it maps into the complementary family (the target basis
// travels with the operator). An unpaired fourier Nyquist mode has no sine
// partner; its first derivative is truncated to zero, the usual collocation
// convention.
inline SpectralOperator derivative_operator(const SpectralBasis& basis, int axis, int order) {
    if (axis < 0 || axis >= basis.dim()) throw std::invalid_argument("derivative_operator: bad axis");
    if (order != 1 && order != 2) throw std::invalid_argument("derivative_operator: order must be 1 or 2");
    const AxisBasis& ax = basis.axes[axis];
    SpectralOperator op;
    op.mode_shape = basis.mode_shape();

    if (order == 2) {
        const std::int64_t n = shape_numel(op.mode_shape);
        std::int64_t inner = 1;
        for (int i = axis + 1; i < basis.dim(); ++i) inner *= op.mode_shape[i];
        std::vector<double> d(n);
        for (std::int64_t i = 0; i < n; ++i) {
            const int m = static_cast<int>((i / inner) % ax.modes);
            d[i] = -ax.freq[m] * ax.freq[m];
        }
        op.diag = Tensor::from(op.mode_shape, std::move(d));
        return op;
    }

    const int c = ax.modes;
    if (ax.kind == BasisKind::Fourier) {
        std::vector<double> D(static_cast<size_t>(c) * c, 0.0);
        for (int m = 1; m < c; ++m) {
            const int p = ax.partner[m];
            if (p < 0) continue; // unpaired Nyquist cosine: derivative leaves the span
            if (m % 2 == 1) {
                // d/dx cos = -freq * sin  -> writes to the sin row
                D[static_cast<size_t>(p) * c + m] = -ax.freq[m];
            } else {
                // d/dx sin = +freq * cos
                D[static_cast<size_t>(p) * c + m] = ax.freq[m];
            }
        }
        op.axis_terms.push_back({axis, Tensor::from({c, c}, std::move(D)), std::nullopt});
        return op;
    }
    if (ax.kind == BasisKind::Sine) {
        // sin(k chi) -> +freq cos(k chi): target cosine family, c+1 modes so the
        // top harmonic stays representable.
        AxisBasis target = build_axis(BasisKind::Cosine, c + 1, ax.lo, ax.hi);
        std::vector<double> D(static_cast<size_t>(c + 1) * c, 0.0);
        for (int m = 0; m < c; ++m) D[static_cast<size_t>(m + 1) * c + m] = ax.freq[m];
        op.axis_terms.push_back({axis, Tensor::from({c + 1, c}, std::move(D)), std::move(target)});
        return op;
    }
    // Cosine: cos(k chi) -> -freq sin(k chi); the constant mode drops.
    AxisBasis target = build_axis(BasisKind::Sine, c, ax.lo, ax.hi);
    std::vector<double> D(static_cast<size_t>(c) * c, 0.0);
    for (int m = 1; m < c; ++m) D[static_cast<size_t>(m - 1) * c + m] = -ax.freq[m];
    op.axis_terms.push_back({axis, Tensor::from({c, c}, std::move(D)), std::move(target)});
    return op;
}

// Laplacian: sum of per-axis second derivatives (always diagonal).
inline SpectralOperator laplacian_operator(const SpectralBasis& basis) {
    SpectralOperator op;
    op.mode_shape = basis.mode_shape();
    const std::int64_t n = shape_numel(op.mode_shape);
    std::vector<double> d(n, 0.0);
    std::int64_t inner = 1;
    for (int axis = basis.dim() - 1; axis >= 0; --axis) {
        const AxisBasis& ax = basis.axes[axis];
        for (std::int64_t i = 0; i < n; ++i) {
            const int m = static_cast<int>((i / inner) % ax.modes);
            d[i] -= ax.freq[m] * ax.freq[m];
        }
        inner *= ax.modes;
    }
    op.diag = Tensor::from(op.mode_shape, std::move(d));
    return op;
}

// Multiplier of the linear translation-invariant PDE part
//   a0 u + sum_i a1_i d_i u + sum_i a2_ii d_i^2 u
// as a polynomial in the scaled frequencies. Diagonal whenever all odd-order
// coefficients vanish; a nonzero a1 on a fourier axis contributes a paired
// (cos,sin) rotation term. Odd-order terms on sine/cosine axes leave the
// representable space and are rejected, as are mixed second derivatives.
inline SpectralOperator multiplier_from_linear_pde(double a0, const std::vector<double>& a1,
                                                   const std::vector<std::vector<double>>& a2,
                                                   const SpectralBasis& basis) {
    const int d = basis.dim();
    if (static_cast<int>(a1.size()) != d || static_cast<int>(a2.size()) != d)
        throw std::invalid_argument("multiplier_from_linear_pde: coefficient arrays must match dimension");
    for (const auto& row : a2)
        if (static_cast<int>(row.size()) != d)
            throw std::invalid_argument("multiplier_from_linear_pde: a2 must be d x d");
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j && a2[i][j] != 0.0)
                throw std::invalid_argument("multiplier_from_linear_pde: mixed second derivatives unsupported");

    SpectralOperator op;
    op.mode_shape = basis.mode_shape();
    const std::int64_t n = shape_numel(op.mode_shape);
    std::vector<double> diag(n, a0);
    std::int64_t inner = 1;
    for (int axis = d - 1; axis >= 0; --axis) {
        const AxisBasis& ax = basis.axes[axis];
        for (std::int64_t i = 0; i < n; ++i) {
            const int m = static_cast<int>((i / inner) % ax.modes);
            diag[i] -= a2[axis][axis] * ax.freq[m] * ax.freq[m];
        }
        inner *= ax.modes;
    }
    op.diag = Tensor::from(op.mode_shape, std::move(diag));
    for (int axis = 0; axis < d; ++axis) {
        if (a1[axis] == 0.0) continue;
        if (basis.axes[axis].kind != BasisKind::Fourier)
            throw std::invalid_argument(
                "multiplier_from_linear_pde: odd-order term on a " +
                std::string(basis_kind_name(basis.axes[axis].kind)) +
                " axis is not representable within one family");
        SpectralOperator der = derivative_operator(basis, axis, 1);
        SpectralOperator::AxisTerm t = der.axis_terms[0];
        t.matrix = scale(t.matrix, a1[axis]);
        op.axis_terms.push_back(std::move(t));
    }
    return op;
}

// ---------------------------------------------------------------------------
// Channel-block multipliers for first-order systems
// ---------------------------------------------------------------------------

// Per-mode channels x channels block whose entries are diagonal multipliers
// (an undefined tensor is a zero block). The wave system is
// [[0, 1], [M, 0]]; Burgers is diag(nu M, nu M).
struct SystemMultiplier {
    int channels = 0;
    Shape mode_shape;
    std::vector<Tensor> entries; // row-major [channels x channels]

    const Tensor& entry(int r, int c) const { return entries[static_cast<size_t>(r) * channels + c]; }

    std::vector<std::complex<double>> eigenvalues() const {
        const std::int64_t n = shape_numel(mode_shape);
        std::vector<std::complex<double>> out;
        auto at = [&](int r, int c, std::int64_t k) -> double {
            const Tensor& e = entry(r, c);
            if (!e.defined()) return 0.0;
            return e.numel() == 1 ? e[0] : e[k];
        };
        if (channels == 1) {
            for (std::int64_t k = 0; k < n; ++k) out.emplace_back(at(0, 0, k), 0.0);
            return out;
        }
        if (channels == 2) {
            for (std::int64_t k = 0; k < n; ++k) {
                const double a = at(0, 0, k), b = at(0, 1, k), c = at(1, 0, k), dd = at(1, 1, k);
                const std::complex<double> tr(a + dd, 0.0);
                const std::complex<double> disc =
                    std::sqrt(std::complex<double>((a - dd) * (a - dd) + 4.0 * b * c, 0.0));
                out.push_back(0.5 * (tr + disc));
                out.push_back(0.5 * (tr - disc));
            }
            return out;
        }
        throw std::invalid_argument("SystemMultiplier::eigenvalues: channels > 2 unsupported");
    }
};

} // namespace neusa
