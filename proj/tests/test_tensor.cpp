#include "neusa/tensor.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace neusa;

TEST_CASE("hadamard elementwise values") {
    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from({2, 2}, {2, 0, 1, 1});
    Tensor c = hadamard(a, b);
    CHECK(c.vals() == std::vector<double>{2, 0, 3, 4});

    Tensor ones = Tensor::ones({2, 2});
    CHECK(hadamard(a, ones).vals() == a.vals());
}

TEST_CASE("hadamard trailing-axis broadcast") {
    Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from({3}, {10, 100, 1000});
    Tensor c = hadamard(a, b);
    CHECK(c.vals() == std::vector<double>{10, 200, 3000, 40, 500, 6000});
    CHECK_THROWS_AS(hadamard(a, Tensor::from({2}, {1, 2})), std::invalid_argument);
}

TEST_CASE("gradient of sum(a*b) wrt a equals b") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1, 1);
    std::vector<double> av(6), bv(6);
    for (auto& x : av) x = dist(rng);
    for (auto& x : bv) x = dist(rng);
    Tensor a = Tensor::from({2, 3}, av);
    Tensor b = Tensor::from({2, 3}, bv);

    // finite-difference oracle for reference (h = 1e-6)
    double fd_err = grad_check([&](const Tensor& p) { return sum(hadamard(p, b)); }, a, 1e-6);
    CHECK(fd_err < 1e-6);

    Tape tape;
    Tensor aw = tape.watch(a);
    Tensor loss = sum(hadamard(aw, b));
    auto g = tape.backward(loss);
    const Tensor& ga = g.at(aw.node);
    for (int i = 0; i < 6; ++i) CHECK(ga[i] == Catch::Approx(bv[i]).margin(1e-14));
}

TEST_CASE("matmul_rowwise identity and permutation") {
    Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor id = Tensor::from({2, 2}, {1, 0, 0, 1});
    CHECK(matmul_rowwise(x, id).vals() == x.vals());

    Tensor perm = Tensor::from({2, 2}, {0, 1, 1, 0});
    Tensor xi = Tensor::from({2, 2}, {1, 0, 0, 1});
    CHECK(matmul_rowwise(xi, perm).vals() == std::vector<double>{0, 1, 1, 0});

    CHECK_THROWS_AS(matmul_rowwise(Tensor::from({3}, {1, 2, 3}), id), std::invalid_argument);
}

TEST_CASE("matmul_rowwise gradient wrt B equals x^T ones") {
    Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor B = Tensor::from({2, 2}, {0.5, -1, 2, 0.25});
    double err = grad_check([&](const Tensor& p) { return sum(matmul_rowwise(x, p)); }, B, 1e-6);
    CHECK(err < 1e-8);

    Tape tape;
    Tensor Bw = tape.watch(B);
    auto g = tape.backward(sum(matmul_rowwise(x, Bw)));
    // d sum(xB)/dB[i][k] = sum_r x[r][i]
    const Tensor& gB = g.at(Bw.node);
    CHECK(gB[0] == Catch::Approx(4.0)); // col sums of x: 1+3
    CHECK(gB[1] == Catch::Approx(4.0));
    CHECK(gB[2] == Catch::Approx(6.0)); // 2+4
    CHECK(gB[3] == Catch::Approx(6.0));
}

TEST_CASE("activations and derivatives") {
    Tensor x = Tensor::from({3}, {-1, 0, 2});
    CHECK(activation(x, Activation::Relu).vals() == std::vector<double>{0, 0, 2});
    CHECK(activation(Tensor::scalar_of(0.0), Activation::Sigmoid).scalar() == Catch::Approx(0.5));

    // d tanh(x)/dx at 0 is 1
    Tape tape;
    Tensor p = tape.watch(Tensor::scalar_of(0.0));
    auto g = tape.backward(sum(activation(p, Activation::Tanh)));
    CHECK(g.at(p.node).scalar() == Catch::Approx(1.0));
}

TEST_CASE("backward of sum(x*x) is 2x and constants give zero grads") {
    Tensor x = Tensor::from({3}, {1, 2, 3});
    {
        Tape tape;
        Tensor xw = tape.watch(x);
        auto g = tape.backward(sum(hadamard(xw, xw)));
        CHECK(g.at(xw.node).vals() == std::vector<double>{2, 4, 6});
    }
    {
        Tape tape;
        Tensor xw = tape.watch(x);
        Tensor c = sum(Tensor::from({2}, {5, 7})); // constant: no dependence on xw
        auto g = tape.backward(c);
        CHECK(g.at(xw.node).vals() == std::vector<double>{0, 0, 0});
    }
    {
        Tensor foreign;
        {
            Tape inner;
            Tensor xw = inner.watch(x);
            foreign = sum(xw);
        }
        Tape tape;
        Tensor xw = tape.watch(x);
        CHECK_THROWS_AS(tape.backward(hadamard(xw, xw)), std::invalid_argument); // not scalar
        CHECK_THROWS_AS(tape.backward(foreign), std::invalid_argument);          // other tape
    }
}

TEST_CASE("two-hidden-layer MLP gradient matches central differences") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-1, 1);
    auto randt = [&](Shape s) {
        std::vector<double> v(shape_numel(s));
        for (auto& x : v) x = dist(rng);
        return Tensor::from(s, v);
    };
    const int in = 4, hid = 5, out = 3;
    Tensor x = randt({1, in});
    Tensor W2 = randt({hid, hid}), b2 = randt({hid});
    Tensor W3 = randt({hid, out}), b3 = randt({out});
    Tensor W1 = randt({in, hid}), b1 = randt({hid});

    auto net = [&](const Tensor& w1) {
        Tensor h1 = activation(add(matmul_rowwise(x, w1), b1), Activation::Tanh);
        Tensor h2 = activation(add(matmul_rowwise(h1, W2), b2), Activation::Tanh);
        Tensor y = add(matmul_rowwise(h2, W3), b3);
        return sum_squares(y);
    };
    CHECK(grad_check(net, W1, 1e-5) < 1e-6);

    auto net_b2 = [&](const Tensor& p) {
        Tensor h1 = activation(add(matmul_rowwise(x, W1), b1), Activation::Tanh);
        Tensor h2 = activation(add(matmul_rowwise(h1, W2), p), Activation::Tanh);
        Tensor y = add(matmul_rowwise(h2, W3), b3);
        return sum_squares(y);
    };
    CHECK(grad_check(net_b2, b2, 1e-5) < 1e-6);
}

TEST_CASE("grad_check on exact cases") {
    // f(x) = x^2 at x=3: derivative exactly 6; central differences exact to O(h^2) with tiny constant
    Tensor x = Tensor::scalar_of(3.0);
    double e = grad_check([](const Tensor& p) { return hadamard(p, p); }, x, 1e-5);
    CHECK(e < 1e-9);

    // linear f: central differences are exact
    Tensor y = Tensor::from({4}, {1, -2, 0.5, 3});
    double el = grad_check([](const Tensor& p) { return sum(scale(p, 2.5)); }, y, 1e-5);
    CHECK(el < 1e-10);
}

TEST_CASE("tape replay determinism: identical forward passes give bitwise-equal grads") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-1, 1);
    std::vector<double> pv(20);
    for (auto& v : pv) v = dist(rng);
    Tensor p0 = Tensor::from({4, 5}, pv);
    Tensor x = Tensor::from({2, 4}, {1, 2, 3, 4, -1, 0.5, 2, -2});

    auto run = [&]() {
        Tape tape;
        Tensor p = tape.watch(p0);
        Tensor y = activation(matmul_rowwise(x, p), Activation::Tanh);
        Tensor l = sum_squares(matmul_rowwise(y, transpose_last2(p)));
        auto g = tape.backward(l);
        return g.at(p.node).vals();
    };
    auto g1 = run();
    auto g2 = run();
    REQUIRE(g1.size() == g2.size());
    for (size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]); // bitwise
}

TEST_CASE("apply_matrix_axis matches manual contraction and its gradients check out") {
    Tensor x = Tensor::from({2, 3, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    Tensor M = Tensor::from({2, 3}, {1, 0, -1, 2, 1, 0});
    Tensor y = apply_matrix_axis(x, M, 1);
    REQUIRE(y.shape == Shape{2, 2, 2});
    // out[o,i,k] = sum_j M[i,j] x[o,j,k]
    CHECK(y[0] == Catch::Approx(1 * 1 + 0 * 3 + (-1) * 5)); // o=0,i=0,k=0
    CHECK(y[3] == Catch::Approx(2 * 2 + 1 * 4 + 0 * 6));    // o=0,i=1,k=1

    double ex = grad_check([&](const Tensor& p) { return sum_squares(apply_matrix_axis(p, M, 1)); }, x, 1e-6);
    CHECK(ex < 1e-7);
    double em = grad_check([&](const Tensor& p) { return sum_squares(apply_matrix_axis(x, p, 1)); }, M, 1e-6);
    CHECK(em < 1e-7);
}

TEST_CASE("stack/slice/gather round trips with gradients") {
    Tensor a = Tensor::from({2}, {1, 2});
    Tensor b = Tensor::from({2}, {3, 4});
    Tensor s = stack_axis0({a, b});
    REQUIRE(s.shape == Shape{2, 2});
    CHECK(slice_axis0(s, 1).vals() == std::vector<double>{3, 4});

    double e = grad_check(
        [&](const Tensor& p) {
            Tensor st = stack_axis0({p, hadamard(p, p)});
            Tensor picked = gather_flat(st, {0, 3});
            return sum_squares(slice_axis0(st, 1)) ;
        },
        a, 1e-6);
    CHECK(e < 1e-7);

    double eg = grad_check([&](const Tensor& p) { return sum(gather_flat(p, {1, 1, 0})); }, b, 1e-5);
    CHECK(eg < 1e-9);
}

TEST_CASE("shape algebra is total: mismatches raise") {
    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    CHECK_THROWS_AS(add(a, Tensor::from({3}, {1, 2, 3})), std::invalid_argument);
    CHECK_THROWS_AS(add_scaled(a, Tensor::from({4}, {1, 2, 3, 4}), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(reshape(a, {3, 2}), std::invalid_argument);
    CHECK_THROWS_AS(apply_matrix_axis(a, Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(Tensor::from({2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("randomized primitive gradients vs central differences") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1, 1);
    auto randt = [&](Shape s) {
        std::vector<double> v(shape_numel(s));
        for (auto& x : v) x = dist(rng);
        return Tensor::from(s, v);
    };
    for (int rep = 0; rep < 5; ++rep) {
        Tensor x = randt({3, 4});
        Tensor b = randt({4});
        CHECK(grad_check([&](const Tensor& p) { return sum_squares(add(p, b)); }, x, 1e-6) < 1e-6);
        CHECK(grad_check([&](const Tensor& p) { return sum_squares(sub(x, p)); }, b, 1e-6) < 1e-6);
        CHECK(grad_check([&](const Tensor& p) { return sum_squares(activation(p, Activation::Sigmoid)); }, x,
                         1e-5) < 1e-6);
        CHECK(grad_check([&](const Tensor& p) { return sum_squares(activation(p, Activation::Sin)); }, x,
                         1e-5) < 1e-6);
        CHECK(grad_check([&](const Tensor& p) { return mean(hadamard(p, p)); }, x, 1e-6) < 1e-6);
        CHECK(grad_check([&](const Tensor& p) { return sum(add_scaled(x, p, -0.37)); }, x, 1e-6) < 1e-6);
    }
}
