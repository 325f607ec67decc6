// Fixed-step RK4 integration of the coefficient ODE. The whole trajectory is
// produced in one sweep together with the field evaluations at every node
// (du/dt comes for free as the first RK4 stage), so the physics loss can use
// exact time derivatives. Gradients flow through the unrolled steps.

#pragma once

#include "neusa/field.hpp"

#include <complex>

namespace neusa {

struct TimeGrid {
    double t0 = 0.0;
    double T = 1.0;
    int samples = 2; // nodes including both endpoints

    TimeGrid() = default;
    TimeGrid(double t0_, double T_, int samples_) : t0(t0_), T(T_), samples(samples_) {
        if (samples < 1) throw std::invalid_argument("TimeGrid: samples must be >= 1");
        if (samples > 1 && !(T > t0)) throw std::invalid_argument("TimeGrid: T must exceed t0");
    }

    double step() const { return samples > 1 ? (T - t0) / (samples - 1) : 0.0; }
    double time(int i) const { return t0 + i * step(); }
};

struct Trajectory {
    std::vector<Tensor> states;      // states[0] is the supplied u0, bitwise
    std::vector<Tensor> derivatives; // field.eval(states[i]) at every node
    TimeGrid grid;
};

// Raised when a state stops being finite mid-integration; usually means the
// multiplier spectrum left the RK4 stability region (stiffness).
class IntegrationError : public std::runtime_error {
public:
    int node;
    explicit IntegrationError(int node_)
        : std::runtime_error("integrate: non-finite state at node " + std::to_string(node_) +
                             "; the linear spectrum likely violates the RK4 stability bound"),
          node(node_) {}
};

namespace detail {

// One classical RK4 update given the already evaluated first stage.
inline Tensor rk4_advance(const VectorField& field, const Tensor& state, const Tensor& k1,
                          double h) {
    Tensor k2 = field.eval(add_scaled(state, k1, 0.5 * h));
    Tensor k3 = field.eval(add_scaled(state, k2, 0.5 * h));
    Tensor k4 = field.eval(add_scaled(state, k3, h));
    Tensor out = add_scaled(state, k1, h / 6.0);
    out = add_scaled(out, k2, h / 3.0);
    out = add_scaled(out, k3, h / 3.0);
    out = add_scaled(out, k4, h / 6.0);
    return out;
}

} // namespace detail

inline Tensor rk4_step(const VectorField& field, const Tensor& state, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("rk4_step: h must be positive");
    if (!state.all_finite()) throw std::invalid_argument("rk4_step: non-finite state");
    Tensor k1 = field.eval(state);
    Tensor out = detail::rk4_advance(field, state, k1, h);
    if (!out.all_finite())
        throw std::runtime_error(
            "rk4_step: non-finite update; spectrum likely outside the RK4 stability region");
    return out;
}

inline Trajectory integrate(const VectorField& field, const Tensor& u0, const TimeGrid& grid) {
    Trajectory tr;
    tr.grid = grid;
    tr.states.reserve(grid.samples);
    tr.derivatives.reserve(grid.samples);
    tr.states.push_back(u0);
    if (!u0.all_finite()) throw IntegrationError(0);
    const double h = grid.step();
    for (int i = 0; i + 1 < grid.samples; ++i) {
        Tensor k1 = field.eval(tr.states[i]);
        tr.derivatives.push_back(k1);
        Tensor next = detail::rk4_advance(field, tr.states[i], k1, h);
        if (!next.all_finite()) throw IntegrationError(i + 1);
        tr.states.push_back(std::move(next));
    }
    tr.derivatives.push_back(field.eval(tr.states.back()));
    return tr;
}

// Composes two fixed-step legs and compares against the single long run;
// identical floating-point operation sequences make this exactly zero.
inline double semigroup_check(const VectorField& field, const Tensor& u0, int t1_steps,
                              int t2_steps, double h) {
    NoTape guard;
    Tensor mid = u0;
    if (t1_steps > 0) mid = integrate(field, u0, TimeGrid(0.0, t1_steps * h, t1_steps + 1)).states.back();
    Tensor end_two = mid;
    if (t2_steps > 0)
        end_two = integrate(field, mid, TimeGrid(0.0, t2_steps * h, t2_steps + 1)).states.back();
    const int total = t1_steps + t2_steps;
    Tensor end_one = u0;
    if (total > 0) end_one = integrate(field, u0, TimeGrid(0.0, total * h, total + 1)).states.back();
    double dev = 0.0;
    for (std::int64_t i = 0; i < end_one.numel(); ++i)
        dev = std::max(dev, std::abs(end_one[i] - end_two[i]));
    return dev;
}

// ---------------------------------------------------------------------------
// RK4 absolute stability
// ---------------------------------------------------------------------------

inline std::complex<double> rk4_stability_poly(std::complex<double> z) {
    return 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
}

struct StabilityReport {
    bool stable = true;
    double max_abs_lambda_h = 0.0;      // worst |lambda h| over the spectrum
    std::complex<double> worst_lambda;  // mode with the largest |R(lambda h)|
    double worst_poly_abs = 0.0;        // |R(lambda h)| there
};

inline StabilityReport stability_bound(const std::vector<std::complex<double>>& eigenvalues,
                                       double h) {
    StabilityReport rep;
    for (const auto& lambda : eigenvalues) {
        const std::complex<double> z = lambda * h;
        const double r = std::abs(rk4_stability_poly(z));
        rep.max_abs_lambda_h = std::max(rep.max_abs_lambda_h, std::abs(z));
        if (r > rep.worst_poly_abs) {
            rep.worst_poly_abs = r;
            rep.worst_lambda = lambda;
        }
    }
    rep.stable = rep.worst_poly_abs <= 1.0 + 1e-12;
    return rep;
}

inline StabilityReport stability_bound(const SystemMultiplier& sys, double h) {
    return stability_bound(sys.eigenvalues(), h);
}

inline StabilityReport stability_bound(const SpectralOperator& op, const SpectralBasis& basis,
                                       double h) {
    return stability_bound(op.eigenvalues(basis), h);
}

} // namespace neusa
