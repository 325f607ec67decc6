#include "neusa/integrator.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace neusa;

namespace {

VectorField scalar_field(double lambda) {
    VectorField f;
    f.kind = SystemKind::Generic;
    f.mode_shape = {1};
    f.multiplier = Tensor::from({1}, {lambda});
    f.epsilon = 0.0;
    return f;
}

VectorField diag_field(Shape mode_shape, std::vector<double> mult) {
    VectorField f;
    f.kind = SystemKind::Generic;
    f.mode_shape = mode_shape;
    f.multiplier = Tensor::from(std::move(mode_shape), std::move(mult));
    f.epsilon = 0.0;
    return f;
}

} // namespace

TEST_CASE("zero field leaves the state unchanged") {
    VectorField f = diag_field({3}, {0, 0, 0});
    Tensor u0 = Tensor::from({3}, {1.5, -2.0, 0.25});
    Tensor u1 = rk4_step(f, u0, 0.1);
    CHECK(u1.vals() == u0.vals());
}

TEST_CASE("one linear step is the degree-4 Taylor polynomial") {
    const double lambda = -0.7, h = 0.3, u = 1.37;
    VectorField f = scalar_field(lambda);
    Tensor out = rk4_step(f, Tensor::from({1}, {u}), h);
    const double z = lambda * h;
    const double taylor = 1 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24;
    CHECK(out[0] == Catch::Approx(taylor * u).epsilon(1e-15));
}

TEST_CASE("u'=u one step of h=0.1 approximates e^0.1 to 1e-7") {
    VectorField f = scalar_field(1.0);
    Tensor out = rk4_step(f, Tensor::from({1}, {1.0}), 0.1);
    CHECK(std::abs(out[0] - std::exp(0.1)) < 1e-7);
    CHECK(out[0] == Catch::Approx(1.1051708333333334).epsilon(1e-15));
}

TEST_CASE("rk4_step validates inputs") {
    VectorField f = scalar_field(1.0);
    CHECK_THROWS_AS(rk4_step(f, Tensor::from({1}, {1.0}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rk4_step(f, Tensor::from({1}, {std::nan("")}), 0.1), std::invalid_argument);
}

TEST_CASE("single-node grid returns just the initial state") {
    VectorField f = scalar_field(2.0);
    Tensor u0 = Tensor::from({1}, {0.5});
    Trajectory tr = integrate(f, u0, TimeGrid(0.0, 0.0, 1));
    REQUIRE(tr.states.size() == 1);
    CHECK(tr.states[0].data == u0.data); // bitwise: same storage
    REQUIRE(tr.derivatives.size() == 1);
    CHECK(tr.derivatives[0][0] == Catch::Approx(1.0));
}

TEST_CASE("wave system with one cosine mode follows the harmonic oscillator") {
    const double omega = 3.0;
    VectorField f;
    f.kind = SystemKind::SecondOrder;
    f.mode_shape = {1};
    f.multiplier = Tensor::from({1}, {-omega * omega});
    f.epsilon = 0.0;
    const double a = 0.8;
    Tensor u0 = Tensor::from({2, 1}, {a, 0.0});
    TimeGrid grid(0.0, 1.0, 101);
    Trajectory tr = integrate(f, u0, grid);
    for (int i = 0; i <= 100; ++i) {
        const double t = grid.time(i);
        CHECK(std::abs(tr.states[i][0] - a * std::cos(omega * t)) < 1e-6);
        CHECK(std::abs(tr.states[i][1] + a * omega * std::sin(omega * t)) < 1e-6);
    }
}

TEST_CASE("heat multiplier decays each mode exponentially") {
    const double nu = 0.4;
    std::vector<double> omegas = {1.0, 2.0, 3.0};
    std::vector<double> mult;
    for (double w : omegas) mult.push_back(-nu * w * w);
    VectorField f = diag_field({3}, mult);
    Tensor u0 = Tensor::from({3}, {1.0, -0.5, 0.25});
    TimeGrid grid(0.0, 1.0, 201);
    Trajectory tr = integrate(f, u0, grid);
    for (int m = 0; m < 3; ++m) {
        const double expect = u0[m] * std::exp(-nu * omegas[m] * omegas[m]);
        CHECK(std::abs(tr.states.back()[m] - expect) < 1e-7);
    }
}

TEST_CASE("trajectory derivatives are the field evaluated at each node") {
    VectorField f = diag_field({2}, {-1.0, 0.5});
    Tensor u0 = Tensor::from({2}, {1.0, 1.0});
    Trajectory tr = integrate(f, u0, TimeGrid(0.0, 1.0, 11));
    for (size_t i = 0; i < tr.states.size(); ++i) {
        Tensor re = f.eval(tr.states[i]);
        for (int k = 0; k < 2; ++k)
            CHECK(std::abs(tr.derivatives[i][k] - re[k]) < 1e-14);
    }
}

TEST_CASE("non-finite states abort with the node index") {
    VectorField f = scalar_field(1e80); // overflows to inf within a step or two
    try {
        integrate(f, Tensor::from({1}, {1.0}), TimeGrid(0.0, 1.0, 11));
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(e.node >= 1);
    }
}

TEST_CASE("semigroup composition deviates by exactly zero") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (int seed = 0; seed < 20; ++seed) {
        std::vector<double> mult(4), u0v(4);
        for (auto& x : mult) x = dist(rng);
        for (auto& x : u0v) x = dist(rng);
        VectorField f = diag_field({4}, mult);
        Tensor u0 = Tensor::from({4}, u0v);
        CHECK(semigroup_check(f, u0, 3, 5, 0.01) == 0.0);
    }
    // t1 = 0 reduces to the identity check
    VectorField f = scalar_field(-1.0);
    CHECK(semigroup_check(f, Tensor::from({1}, {1.0}), 0, 7, 0.05) == 0.0);
}

TEST_CASE("semigroup holds bitwise for a nonlinear learned field") {
    std::mt19937_64 rng(5);
    VectorField f;
    f.kind = SystemKind::Generic;
    f.mode_shape = {4};
    f.multiplier = Tensor::from({4}, {-1.0, -0.5, 0.2, 0.0});
    f.epsilon = 0.1;
    f.net_u.kind = CorrectionNet::Kind::MlpNet;
    f.net_u.mlp = Mlp::create(4, 8, 4, rng);
    Tensor u0 = Tensor::from({4}, {0.3, -0.2, 0.5, 0.1});
    CHECK(semigroup_check(f, u0, 4, 9, 0.02) == 0.0);
}

TEST_CASE("distinct initial coefficients yield distinct trajectories at every node") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> mult(3), u0v(3);
        for (auto& x : mult) x = dist(rng);
        for (auto& x : u0v) x = dist(rng);
        VectorField f = diag_field({3}, mult);
        Tensor a = Tensor::from({3}, u0v);
        auto u1v = u0v;
        u1v[rep % 3] += 0.1 + 0.5 * std::abs(dist(rng));
        Tensor b = Tensor::from({3}, u1v);
        TimeGrid grid(0.0, 1.0, 21);
        Trajectory ta = integrate(f, a, grid);
        Trajectory tb = integrate(f, b, grid);
        for (int i = 0; i < grid.samples; ++i) {
            double diff = 0.0;
            for (int k = 0; k < 3; ++k) diff = std::max(diff, std::abs(ta.states[i][k] - tb.states[i][k]));
            REQUIRE(diff > 1e-12);
        }
    }
}

TEST_CASE("fourth-order convergence under step halving for the wave field") {
    const double omega = 2.5, a = 1.0, T = 1.0;
    VectorField f;
    f.kind = SystemKind::SecondOrder;
    f.mode_shape = {1};
    f.multiplier = Tensor::from({1}, {-omega * omega});
    f.epsilon = 0.0;
    Tensor u0 = Tensor::from({2, 1}, {a, 0.0});
    auto final_err = [&](int steps) {
        Trajectory tr = integrate(f, u0, TimeGrid(0.0, T, steps + 1));
        const double eu = tr.states.back()[0] - a * std::cos(omega * T);
        const double ev = tr.states.back()[1] + a * omega * std::sin(omega * T);
        return std::sqrt(eu * eu + ev * ev);
    };
    const double e1 = final_err(40), e2 = final_err(80);
    const double ratio = e1 / e2;
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("discrete wave energy drifts below 1e-5 over T=1 at h=0.01") {
    // two modes of the skew block system; energy = v^2 + omega^2 u^2
    std::vector<double> omegas = {1.0, 4.0};
    VectorField f;
    f.kind = SystemKind::SecondOrder;
    f.mode_shape = {2};
    f.multiplier = Tensor::from({2}, {-omegas[0] * omegas[0], -omegas[1] * omegas[1]});
    f.epsilon = 0.0;
    Tensor u0 = Tensor::from({2, 2}, {1.0, 0.5, 0.0, 0.0});
    Trajectory tr = integrate(f, u0, TimeGrid(0.0, 1.0, 101));
    auto energy = [&](const Tensor& s) {
        double e = 0.0;
        for (int m = 0; m < 2; ++m) {
            const double u = s[m], v = s[2 + m];
            e += v * v + omegas[m] * omegas[m] * u * u;
        }
        return e;
    };
    const double e0 = energy(tr.states.front());
    for (const auto& s : tr.states) CHECK(std::abs(energy(s) - e0) / e0 < 1e-5);
}

TEST_CASE("RK4 stability region checks") {
    // pure decay lambda=-1, h=0.1 is stable
    auto rep = stability_bound({std::complex<double>(-1.0, 0.0)}, 0.1);
    CHECK(rep.stable);

    // lambda h = -3 is outside the real-axis bound (~ -2.785)
    rep = stability_bound({std::complex<double>(-30.0, 0.0)}, 0.1);
    CHECK_FALSE(rep.stable);
    CHECK(rep.max_abs_lambda_h == Catch::Approx(3.0));

    // imaginary axis: boundary at |omega h| = 2 sqrt(2)
    const double bound = 2.0 * std::sqrt(2.0);
    rep = stability_bound({std::complex<double>(0.0, bound * 0.98)}, 1.0);
    CHECK(rep.stable);
    rep = stability_bound({std::complex<double>(0.0, bound * 1.02)}, 1.0);
    CHECK_FALSE(rep.stable);
}

TEST_CASE("wave preset is flagged unstable exactly past the imaginary-axis bound") {
    SpectralBasis b = build_basis({BasisKind::Cosine, BasisKind::Cosine}, {16, 16},
                                  {-4.0, -4.0}, {4.0, 4.0});
    SpectralOperator lap = laplacian_operator(b);
    SystemMultiplier sys;
    sys.channels = 2;
    sys.mode_shape = b.mode_shape();
    sys.entries.resize(4);
    sys.entries[1] = Tensor::ones({1});
    sys.entries[2] = lap.diag;
    double omega_max = 0.0;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            omega_max = std::max(omega_max, std::hypot(b.axes[0].freq[i], b.axes[1].freq[j]));
    const double h_star = 2.0 * std::sqrt(2.0) / omega_max;
    CHECK(stability_bound(sys, h_star * 0.98).stable);
    CHECK_FALSE(stability_bound(sys, h_star * 1.02).stable);
}

TEST_CASE("gradients flow through the unrolled integration") {
    std::mt19937_64 rng(8);
    VectorField f;
    f.kind = SystemKind::Generic;
    f.mode_shape = {3};
    f.multiplier = Tensor::from({3}, {-0.5, 0.1, -1.0});
    f.epsilon = 0.1;
    f.net_u.kind = CorrectionNet::Kind::MlpNet;
    f.net_u.mlp = Mlp::create(3, 6, 3, rng, Activation::Tanh);
    Tensor u0 = Tensor::from({3}, {0.4, -0.3, 0.2});
    TimeGrid grid(0.0, 0.5, 6);

    Tensor w0 = f.net_u.mlp.weights[0];
    auto loss_of = [&](const Tensor& w) {
        VectorField g = f;
        g.net_u.mlp.weights[0] = w; // tape-attached in the autodiff pass, plain in FD passes
        Trajectory tr = integrate(g, u0, grid);
        return sum_squares(tr.states.back());
    };
    CHECK(grad_check(loss_of, w0, 1e-5) < 1e-6);
}
