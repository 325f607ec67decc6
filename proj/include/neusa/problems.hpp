// Declarative definitions of the benchmark problems: residuals, initial
// conditions, basis/boundary-condition choices, linearization coefficients,
// and the stratified velocity field for the heterogeneous wave medium.

#pragma once

#include "neusa/basis.hpp"

#include <functional>
#include <optional>

namespace neusa {

// Three horizontal layers with vertically increasing speed; steep sigmoids
// make near-discontinuous interfaces at y = 0.5 and y = 1.
struct VelocityField {
    double operator()(double /*x*/, double y) const {
        auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
        return 1.0 + 0.25 * (sig(1000.0 * (y - 0.5)) + sig(1000.0 * (y - 1.0)));
    }
};

enum class ProblemKind { Wave, SineGordon, Burgers };

struct ProblemSpec {
    ProblemKind kind = ProblemKind::SineGordon;
    std::string name;
    int dim = 1;
    int channels = 2;
    std::vector<double> roi_lo, roi_hi; // metrics are restricted to this box
    std::vector<double> dom_lo, dom_hi; // computational domain (extended for wave)
    std::vector<BasisKind> basis_kinds;
    double T = 1.0;
    double epsilon = 0.1;

    // linearization feeding multiplier_from_linear_pde
    double a0 = 0.0;
    std::vector<double> a1;
    std::vector<std::vector<double>> a2;

    double sigma = 0.1;           // gaussian IC width (wave, sine-Gordon)
    double nu = 0.0;              // viscosity (Burgers)
    bool burgers_printed_ic = true; // v = cos(pi x2) cos(pi x2) exactly as printed
    double ic_scale = 1.0;        // uniform IC amplitude factor (linear-limit studies)
    std::optional<VelocityField> velocity; // absent = homogeneous c = 1
    std::function<double(const double*, int)> ic_override; // replaces the built-in IC

    bool needs_grad = false;    // residual uses first spatial derivatives
    bool needs_hessian = false; // residual uses second spatial derivatives

    double initial(const double* x, int ch) const {
        if (ch < 0 || ch >= channels) throw std::invalid_argument("initial: bad channel");
        if (ic_override) return ic_override(x, ch);
        switch (kind) {
            case ProblemKind::Wave: {
                if (ch == 1) return 0.0;
                double r2 = 0.0;
                for (int i = 0; i < dim; ++i) r2 += x[i] * x[i];
                return ic_scale * std::exp(-r2 / (2.0 * sigma * sigma));
            }
            case ProblemKind::SineGordon: {
                if (ch == 1) return 0.0;
                double r2 = 0.0;
                for (int i = 0; i < dim; ++i) r2 += x[i] * x[i];
                return ic_scale / (std::sqrt(2.0 * M_PI) * sigma) *
                       std::exp(-r2 / (2.0 * sigma * sigma));
            }
            case ProblemKind::Burgers: {
                if (ch == 0) return ic_scale * std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
                if (burgers_printed_ic) return ic_scale * std::cos(M_PI * x[1]) * std::cos(M_PI * x[1]);
                return ic_scale * std::cos(M_PI * x[0]) * std::cos(M_PI * x[1]);
            }
        }
        return 0.0;
    }
};

inline ProblemSpec make_wave(const std::vector<double>& roi_lo, const std::vector<double>& roi_hi,
                             double sigma, std::optional<VelocityField> velocity, double T,
                             double extension = 2.0) {
    if (!(sigma > 0.0)) throw std::invalid_argument("make_wave: sigma must be positive");
    if (roi_lo.size() != 2 || roi_hi.size() != 2)
        throw std::invalid_argument("make_wave: expected a 2D region of interest");
    ProblemSpec s;
    s.kind = ProblemKind::Wave;
    s.name = "wave3layer";
    s.dim = 2;
    s.channels = 2;
    s.roi_lo = roi_lo;
    s.roi_hi = roi_hi;
    for (int i = 0; i < 2; ++i) {
        const double c = 0.5 * (roi_lo[i] + roi_hi[i]);
        const double half = 0.5 * (roi_hi[i] - roi_lo[i]) * extension;
        s.dom_lo.push_back(c - half);
        s.dom_hi.push_back(c + half);
    }
    s.basis_kinds = {BasisKind::Cosine, BasisKind::Cosine};
    s.T = T;
    s.epsilon = 1.0;
    s.sigma = sigma;
    s.velocity = velocity;
    // linearized about the homogeneous c = 1 wave equation
    s.a0 = 0.0;
    s.a1 = {0.0, 0.0};
    s.a2 = {{1.0, 0.0}, {0.0, 1.0}};
    s.needs_hessian = true;
    return s;
}

inline ProblemSpec make_sine_gordon(double lo = -4.0, double hi = 4.0, double sigma = 0.1,
                                    double T = 3.0) {
    ProblemSpec s;
    s.kind = ProblemKind::SineGordon;
    s.name = "sinegordon";
    s.dim = 1;
    s.channels = 2;
    s.roi_lo = {lo};
    s.roi_hi = {hi};
    s.dom_lo = {lo};
    s.dom_hi = {hi};
    s.basis_kinds = {BasisKind::Sine}; // Dirichlet through the basis
    s.T = T;
    s.epsilon = 0.1;
    s.sigma = sigma;
    // free wave linearization: the sine term is dropped
    s.a0 = 0.0;
    s.a1 = {0.0};
    s.a2 = {{1.0}};
    s.needs_hessian = true;
    return s;
}

inline ProblemSpec make_burgers(double lo = 0.0, double hi = 4.0, double nu = 0.01, double T = 1.0,
                                bool printed_ic = true) {
    if (!(nu > 0.0)) throw std::invalid_argument("make_burgers: nu must be positive");
    ProblemSpec s;
    s.kind = ProblemKind::Burgers;
    s.name = "burgers2d";
    s.dim = 2;
    s.channels = 2;
    s.roi_lo = {lo, lo};
    s.roi_hi = {hi, hi};
    s.dom_lo = {lo, lo};
    s.dom_hi = {hi, hi};
    s.basis_kinds = {BasisKind::Fourier, BasisKind::Fourier}; // periodic
    s.T = T;
    s.epsilon = 0.1;
    s.nu = nu;
    s.burgers_printed_ic = printed_ic;
    // heat-equation linearization
    s.a0 = 0.0;
    s.a1 = {0.0, 0.0};
    s.a2 = {{nu, 0.0}, {0.0, nu}};
    s.needs_grad = true;
    s.needs_hessian = true;
    return s;
}

inline SpectralBasis build_problem_basis(const ProblemSpec& spec, const std::vector<int>& modes) {
    if (static_cast<int>(modes.size()) != spec.dim)
        throw std::invalid_argument("build_problem_basis: modes per axis must match dimension");
    return build_basis(spec.basis_kinds, modes, spec.dom_lo, spec.dom_hi);
}

// Samples the IC on the quadrature grid and projects it: u0 [channels, modes...].
inline Tensor initial_coefficients(const ProblemSpec& spec, const SpectralBasis& basis) {
    NoTape guard;
    Shape gs = basis.mode_shape();
    const std::int64_t n = shape_numel(gs);
    std::vector<Tensor> chans;
    std::vector<double> x(spec.dim);
    for (int ch = 0; ch < spec.channels; ++ch) {
        std::vector<double> samples(n);
        std::vector<int> idx(spec.dim, 0);
        for (std::int64_t k = 0; k < n; ++k) {
            for (int i = 0; i < spec.dim; ++i) x[i] = basis.axes[i].nodes[idx[i]];
            samples[k] = spec.initial(x.data(), ch);
            for (int i = spec.dim - 1; i >= 0; --i) {
                if (++idx[i] < gs[i]) break;
                idx[i] = 0;
            }
        }
        chans.push_back(decompose(Tensor::from(gs, std::move(samples)), basis));
    }
    return stack_axis0(chans);
}

// c(x)^2 sampled on the quadrature grid (heterogeneous wave only).
inline Tensor velocity_sq_on_grid(const ProblemSpec& spec, const SpectralBasis& basis) {
    if (!spec.velocity) return Tensor();
    Shape gs = basis.mode_shape();
    const std::int64_t n = shape_numel(gs);
    std::vector<double> v(n);
    std::vector<int> idx(spec.dim, 0);
    for (std::int64_t k = 0; k < n; ++k) {
        const double c = (*spec.velocity)(basis.axes[0].nodes[idx[0]],
                                          spec.dim > 1 ? basis.axes[1].nodes[idx[1]] : 0.0);
        v[k] = c * c;
        for (int i = spec.dim - 1; i >= 0; --i) {
            if (++idx[i] < gs[i]) break;
            idx[i] = 0;
        }
    }
    return Tensor::from(gs, std::move(v));
}

// Field values and derivatives at the collocation points for one time slice;
// every tensor is [channels, grid...]. grad/hessian_diag hold one entry per
// spatial axis when the problem's residual needs them.
struct FieldBundle {
    Tensor u;
    Tensor u_t;
    std::vector<Tensor> grad;
    std::vector<Tensor> hessian_diag;
};

// Pointwise PDE residual per channel; tape-recorded so the physics loss can
// backpropagate. `csq` is c(x)^2 on the same points (wave only).
inline Tensor residual_eval(const ProblemSpec& spec, const FieldBundle& b, const Tensor& csq) {
    switch (spec.kind) {
        case ProblemKind::Wave: {
            Tensor v = slice_axis0(b.u, 1);
            Tensor lap = add(b.hessian_diag[0], b.hessian_diag[1]);
            Tensor lap_u = slice_axis0(lap, 0);
            Tensor r0 = sub(slice_axis0(b.u_t, 0), v);
            Tensor r1 = sub(slice_axis0(b.u_t, 1), csq.defined() ? hadamard(lap_u, csq) : lap_u);
            return stack_axis0({r0, r1});
        }
        case ProblemKind::SineGordon: {
            Tensor u = slice_axis0(b.u, 0);
            Tensor v = slice_axis0(b.u, 1);
            Tensor uxx = slice_axis0(b.hessian_diag[0], 0);
            Tensor rhs = add_scaled(uxx, activation(u, Activation::Sin), -10.0);
            Tensor r0 = sub(slice_axis0(b.u_t, 0), v);
            Tensor r1 = sub(slice_axis0(b.u_t, 1), rhs);
            return stack_axis0({r0, r1});
        }
        case ProblemKind::Burgers: {
            Tensor u = slice_axis0(b.u, 0);
            Tensor v = slice_axis0(b.u, 1);
            std::vector<Tensor> rs;
            for (int ch = 0; ch < 2; ++ch) {
                Tensor lap = add(slice_axis0(b.hessian_diag[0], ch), slice_axis0(b.hessian_diag[1], ch));
                Tensor adv = add(hadamard(u, slice_axis0(b.grad[0], ch)),
                                 hadamard(v, slice_axis0(b.grad[1], ch)));
                Tensor rhs = sub(scale(lap, spec.nu), adv);
                rs.push_back(sub(slice_axis0(b.u_t, ch), rhs));
            }
            return stack_axis0(rs);
        }
    }
    throw std::logic_error("residual_eval: bad kind");
}

// Flat indices of quadrature grid points inside the region of interest.
inline std::vector<std::int64_t> roi_flat_indices(const ProblemSpec& spec,
                                                  const SpectralBasis& basis) {
    std::vector<std::vector<std::int64_t>> keep(spec.dim);
    for (int i = 0; i < spec.dim; ++i)
        for (size_t j = 0; j < basis.axes[i].nodes.size(); ++j) {
            const double x = basis.axes[i].nodes[j];
            if (x >= spec.roi_lo[i] - 1e-12 && x <= spec.roi_hi[i] + 1e-12)
                keep[i].push_back(static_cast<std::int64_t>(j));
        }
    std::vector<std::int64_t> out;
    if (spec.dim == 1) {
        out = keep[0];
    } else {
        const std::int64_t n1 = basis.axes[1].modes;
        for (std::int64_t i : keep[0])
            for (std::int64_t j : keep[1]) out.push_back(i * n1 + j);
    }
    return out;
}

} // namespace neusa
