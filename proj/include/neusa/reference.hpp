// Classical pseudo-spectral ground-truth solver: exact spectral right-hand
// sides with nonlinear terms evaluated at collocation points, integrated by
// fixed-step RK4. No neural components and no tape; this is the oracle the
// trained models are measured against.

#pragma once

#include "neusa/integrator.hpp"
#include "neusa/problems.hpp"

namespace neusa {

struct ReferenceSolution {
    std::string problem;
    std::vector<double> times;
    std::vector<Tensor> fields; // [channels, grid...] values per time
    double dt = 0.0;
    std::vector<double> dx;
    std::string notes;

    bool all_finite() const {
        for (const auto& f : fields)
            if (!f.all_finite()) return false;
        return true;
    }
};

namespace detail {

// Right-hand side of the spectrally discretized PDE acting on coefficient
// state [channels, modes...].
class ReferenceRhs {
public:
    ReferenceRhs(const ProblemSpec& spec, const SpectralBasis& basis)
        : spec_(spec), basis_(basis), lap_(laplacian_operator(basis)) {
        if (spec.kind == ProblemKind::Wave) csq_ = velocity_sq_on_grid(spec, basis);
        if (spec.kind == ProblemKind::Burgers) {
            dx_op_ = derivative_operator(basis, 0, 1);
            dy_op_ = derivative_operator(basis, 1, 1);
            // 2/3-rule mask over per-axis harmonics, applied to the nonlinear
            // term's spectrum each evaluation
            Shape ms = basis.mode_shape();
            const std::int64_t n = shape_numel(ms);
            std::vector<double> mask(n, 1.0);
            std::vector<int> idx(spec.dim, 0);
            for (std::int64_t k = 0; k < n; ++k) {
                for (int i = 0; i < spec.dim; ++i) {
                    const auto& ax = basis.axes[i];
                    const int hmax = *std::max_element(ax.harmonic.begin(), ax.harmonic.end());
                    if (3 * ax.harmonic[idx[i]] > 2 * hmax) mask[k] = 0.0;
                }
                for (int i = spec.dim - 1; i >= 0; --i) {
                    if (++idx[i] < ms[i]) break;
                    idx[i] = 0;
                }
            }
            dealias_ = Tensor::from(ms, std::move(mask));
        }
    }

    Tensor operator()(const Tensor& state) const {
        switch (spec_.kind) {
            case ProblemKind::Wave: {
                Tensor u = slice_axis0(state, 0);
                Tensor v = slice_axis0(state, 1);
                Tensor dv;
                if (csq_.defined()) {
                    Tensor lap_grid = reconstruct_on_grid(lap_.apply(u), basis_);
                    dv = decompose(hadamard(lap_grid, csq_), basis_);
                } else {
                    dv = lap_.apply(u); // homogeneous c = 1: stay spectral
                }
                return stack_axis0({v, dv});
            }
            case ProblemKind::SineGordon: {
                Tensor u = slice_axis0(state, 0);
                Tensor v = slice_axis0(state, 1);
                Tensor sin_u = activation(reconstruct_on_grid(u, basis_), Activation::Sin);
                Tensor dv = add_scaled(lap_.apply(u), decompose(sin_u, basis_), -10.0);
                return stack_axis0({v, dv});
            }
            case ProblemKind::Burgers: {
                Tensor uh = slice_axis0(state, 0);
                Tensor vh = slice_axis0(state, 1);
                Tensor ug = reconstruct_on_grid(uh, basis_);
                Tensor vg = reconstruct_on_grid(vh, basis_);
                std::vector<Tensor> out;
                for (const Tensor& wh : {uh, vh}) {
                    Tensor wx = reconstruct_on_grid(dx_op_.apply(wh), basis_);
                    Tensor wy = reconstruct_on_grid(dy_op_.apply(wh), basis_);
                    Tensor nl = add(hadamard(ug, wx), hadamard(vg, wy));
                    Tensor nl_hat = hadamard(decompose(nl, basis_), dealias_);
                    out.push_back(sub(scale(lap_.apply(wh), spec_.nu), nl_hat));
                }
                return stack_axis0(out);
            }
        }
        throw std::logic_error("ReferenceRhs: bad kind");
    }

private:
    const ProblemSpec& spec_;
    const SpectralBasis& basis_;
    SpectralOperator lap_;
    SpectralOperator dx_op_, dy_op_;
    Tensor csq_;
    Tensor dealias_;
};

} // namespace detail

// The exact spectrally discretized right-hand side (for residual sanity and
// trajectory-injection oracles in tests).
inline Tensor reference_rhs(const ProblemSpec& spec, const SpectralBasis& basis,
                            const Tensor& state) {
    NoTape guard;
    return detail::ReferenceRhs(spec, basis)(state);
}

namespace detail {

inline Tensor rk4_step_fn(const std::function<Tensor(const Tensor&)>& f, const Tensor& s, double h) {
    Tensor k1 = f(s);
    Tensor k2 = f(add_scaled(s, k1, 0.5 * h));
    Tensor k3 = f(add_scaled(s, k2, 0.5 * h));
    Tensor k4 = f(add_scaled(s, k3, h));
    Tensor out = add_scaled(s, k1, h / 6.0);
    out = add_scaled(out, k2, h / 3.0);
    out = add_scaled(out, k3, h / 3.0);
    return add_scaled(out, k4, h / 6.0);
}

} // namespace detail

// Evolves the spectral right-hand side with RK4 at (approximately) the given
// dt, landing exactly on each requested output time. Output fields live on
// the quadrature grid of `basis`.
inline ReferenceSolution solve_reference(const ProblemSpec& spec, const SpectralBasis& basis,
                                         double dt, std::vector<double> out_times) {
    if (!(dt > 0.0)) throw std::invalid_argument("solve_reference: dt must be positive");
    if (out_times.empty() || out_times.front() != 0.0)
        out_times.insert(out_times.begin(), 0.0);
    NoTape guard;
    detail::ReferenceRhs rhs(spec, basis);
    ReferenceSolution sol;
    sol.problem = spec.name;
    sol.dt = dt;
    for (const auto& ax : basis.axes) sol.dx.push_back(ax.width() / ax.modes);
    sol.notes = spec.kind == ProblemKind::Burgers
                    ? "pseudo-spectral + RK4; 2/3-rule dealiasing on the advection term"
                    : "pseudo-spectral + RK4";

    Tensor state = initial_coefficients(spec, basis);
    const double norm0 = std::sqrt(sum_squares(state).scalar()) + 1e-30;
    double t = 0.0;
    sol.times.push_back(0.0);
    sol.fields.push_back(reconstruct_on_grid(state, basis));
    for (size_t i = 1; i < out_times.size(); ++i) {
        const double span = out_times[i] - t;
        if (span < -1e-12) throw std::invalid_argument("solve_reference: output times must increase");
        const int steps = std::max(1, static_cast<int>(std::ceil(span / dt - 1e-9)));
        const double h = span / steps;
        for (int k = 0; k < steps; ++k) {
            state = detail::rk4_step_fn(rhs, state, h);
            if (!state.all_finite() || std::sqrt(sum_squares(state).scalar()) > 1e6 * norm0)
                throw std::runtime_error("solve_reference: instability detected at t ~ " +
                                         std::to_string(t + (k + 1) * h));
        }
        t = out_times[i];
        sol.times.push_back(t);
        sol.fields.push_back(reconstruct_on_grid(state, basis));
    }
    return sol;
}

// Richardson order estimate from solves at dt, dt/2, dt/4 (the dt/4 run is
// the proxy truth): log2(|e(dt)| / |e(dt/2)|), expected ~4 for RK4.
inline double convergence_order(const ProblemSpec& spec, const SpectralBasis& basis, double dt,
                                double T) {
    auto final_field = [&](double step) {
        return solve_reference(spec, basis, step, {T}).fields.back();
    };
    Tensor f1 = final_field(dt);
    Tensor f2 = final_field(dt / 2);
    Tensor f4 = final_field(dt / 4);
    double e1 = 0.0, e2 = 0.0;
    for (std::int64_t i = 0; i < f1.numel(); ++i) {
        e1 += (f1[i] - f4[i]) * (f1[i] - f4[i]);
        e2 += (f2[i] - f4[i]) * (f2[i] - f4[i]);
    }
    e1 = std::sqrt(e1);
    e2 = std::sqrt(e2);
    if (e2 < 1e-14 * std::sqrt(static_cast<double>(f1.numel())))
        throw std::runtime_error("convergence_order: error at the rounding floor, order indeterminate");
    return std::log2(e1 / e2);
}

} // namespace neusa
