// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/autodiff.hpp"
#include "core/kernels.hpp"
#include "core/mlp.hpp"
#include "core/optimizer.hpp"
#include "fd_check.hpp"

#include <cmath>
#include <cstring>
#include <random>

using namespace radsplat;
using ad::Array;
using ad::Tape;
using ad::Var;
using radsplat::testing::check_tape_gradients;
using radsplat::testing::random_array;

TEST_CASE("sigmoid derivative at zero is 0.25") {
    Tape t;
    Var x = t.input(Array::scalar(0.0));
    Var y = t.sigmoid(x);
    t.backward(y);
    CHECK(t.grad(x).v[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("complex_mul basic identities") {
    Tape t;
    ad::CVar a{t.input(Array::scalar(1.0)), t.input(Array::scalar(0.0))};
    ad::CVar b{t.input(Array::scalar(0.0)), t.input(Array::scalar(1.0))};
    ad::CVar c = t.complex_mul(a, b);
    CHECK(t.val(c.re).v[0] == doctest::Approx(0.0));
    CHECK(t.val(c.im).v[0] == doctest::Approx(1.0));

    // |(3,4)|^2 = 25
    ad::CVar d{t.input(Array::scalar(3.0)), t.input(Array::scalar(4.0))};
    CHECK(t.val(t.complex_modulus_sq(d)).v[0] == doctest::Approx(25.0));
}

TEST_CASE("softmax rows are a probability simplex") {
    std::mt19937_64 rng(11);
    Tape t;
    Var x = t.input(random_array(17, 9, rng, -30.0, 30.0));
    Var y = t.softmax_rows(x);
    const Array& v = t.val(y);
    for (std::size_t i = 0; i < v.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < v.cols; ++j) {
            CHECK(v.at(i, j) >= 0.0);
            s += v.at(i, j);
        }
        CHECK(std::fabs(s - 1.0) <= 1e-12);
    }
}

namespace {

// Contract a possibly non-scalar op output to a scalar with a fixed probe so
// every output element receives a distinct adjoint.
Var probe_sum(Tape& t, Var y, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Array& v = t.val(y);
    Var probe = t.input(random_array(v.rows, v.cols, rng, -1.0, 1.0));
    return t.sum(t.mul(y, probe));
}

} // namespace

TEST_CASE("every primitive op matches central finite differences") {
    std::mt19937_64 rng(12345);

    auto run = [&](const char* name, std::vector<Array> params,
                   std::function<Var(Tape&, const std::vector<Var>&)> build, double tol = 1e-4) {
        INFO(name);
        auto rep = check_tape_gradients(params, build, tol);
        INFO(rep.where);
        CHECK(rep.ok);
    };

    const Array a = random_array(4, 5, rng);
    const Array b = random_array(4, 5, rng);
    const Array r = random_array(1, 5, rng);
    const Array m1 = random_array(4, 3, rng);
    const Array m2 = random_array(3, 6, rng);

    run("add", {a, b}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.add(l[0], l[1]), 1);
    });
    run("sub", {a, b}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.sub(l[0], l[1]), 2);
    });
    run("mul", {a, b}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.mul(l[0], l[1]), 3);
    });
    run("scale", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.scale(l[0], -2.5), 4);
    });
    run("add_rowvec", {a, r}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.add_rowvec(l[0], l[1]), 5);
    });
    run("mul_rowvec", {a, r}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.mul_rowvec(l[0], l[1]), 6);
    });
    run("sub_from_rowvec", {r, a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.sub_from_rowvec(l[0], l[1]), 7);
    });
    run("sin", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.sin(l[0]), 8);
    });
    run("cos", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.cos(l[0]), 9);
    });
    run("exp", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.exp(l[0]), 10);
    });
    run("sigmoid", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.sigmoid(l[0]), 11);
    });
    run("softplus", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.softplus(l[0]), 12);
    });
    run("matmul", {m1, m2}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.matmul(l[0], l[1]), 13);
    });
    run("softmax_rows", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.softmax_rows(l[0]), 14);
    });
    run("sum_rows", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.sum_rows(l[0]), 15);
    });
    run("sum", {a}, [](Tape& t, const std::vector<Var>& l) { return t.sum(l[0]); });
    run("mean", {a}, [](Tape& t, const std::vector<Var>& l) { return t.mean(l[0]); });

    // relu/abs/sqrt/max_rows away from their kinks
    const Array pos = random_array(4, 5, rng, 0.5, 2.0);
    run("sqrt", {pos}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.sqrt(l[0]), 16);
    });
    run("relu", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.relu(l[0]), 17);
    });
    run("abs", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.abs(l[0]), 18);
    });
    run("max_rows", {a}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.max_rows(l[0]), 19);
    });
    run("norm_l1", {a}, [](Tape& t, const std::vector<Var>& l) { return t.norm_l1(l[0]); });
    run("norm_l2_rows", {pos}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.norm_l2_rows(l[0]), 20);
    });

    // complex ops through real pairs
    const Array cre = random_array(3, 4, rng), cim = random_array(3, 4, rng);
    const Array dre = random_array(3, 4, rng), dim = random_array(3, 4, rng);
    run("complex_mul", {cre, cim, dre, dim}, [](Tape& t, const std::vector<Var>& l) {
        ad::CVar c = t.complex_mul({l[0], l[1]}, {l[2], l[3]});
        Var s = t.add(probe_sum(t, c.re, 21), probe_sum(t, c.im, 22));
        return s;
    });
    run("complex_modulus_sq", {cre, cim}, [](Tape& t, const std::vector<Var>& l) {
        return probe_sum(t, t.complex_modulus_sq({l[0], l[1]}), 23);
    });
}

TEST_CASE("max_rows ties resolve to the lowest index") {
    Tape t;
    Array x(2, 3);
    x.v = {2.0, 2.0, 1.0, 0.0, 3.0, 3.0};
    Var v = t.input(x);
    Var y = t.max_rows(v);
    Var root = t.sum(y);
    t.backward(root);
    const Array& g = t.grad(v);
    CHECK(g.at(0, 0) == 1.0);
    CHECK(g.at(0, 1) == 0.0);
    CHECK(g.at(1, 1) == 1.0);
    CHECK(g.at(1, 2) == 0.0);
}

TEST_CASE("backward is deterministic, bit-identical") {
    auto run_once = [](std::vector<double>& out) {
        std::mt19937_64 rng(99);
        Tape t;
        Var a = t.input(random_array(6, 6, rng));
        Var b = t.input(random_array(6, 6, rng));
        Var y = t.sum(t.mul(t.softmax_rows(t.matmul(a, b)), t.sigmoid(a)));
        t.backward(y);
        out = t.grad(a).v;
        auto gb = t.grad(b).v;
        out.insert(out.end(), gb.begin(), gb.end());
    };
    std::vector<double> g1, g2;
    run_once(g1);
    run_once(g2);
    REQUIRE(g1.size() == g2.size());
    CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("shape mismatches raise") {
    Tape t;
    Var a = t.input(Array(2, 3, 1.0));
    Var b = t.input(Array(3, 2, 1.0));
    CHECK_THROWS_AS(t.add(a, b), std::invalid_argument);
    CHECK_THROWS_AS(t.mul(a, b), std::invalid_argument);
    Var c = t.input(Array(2, 3, 1.0));
    CHECK_THROWS_AS(t.matmul(a, c), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Mlp
// ---------------------------------------------------------------------------

TEST_CASE("mlp with zero parameters and identity output maps to zero") {
    auto net = ad::Mlp::make(3, 4, 2, 5, ad::Activation::Relu, ad::Activation::None);
    Tape t;
    Var x = t.input(Array::row({0.3, -0.7, 1.1}));
    Var y = net.forward(t, x);
    for (double v : t.val(y).v)
        CHECK(v == 0.0);
}

TEST_CASE("single linear layer equals matrix multiply") {
    std::mt19937_64 rng(5);
    ad::Mlp net;
    net.widths = {3, 4};
    net.hidden_act = ad::Activation::Relu;
    net.output_act = ad::Activation::None;
    net.weights = {random_array(3, 4, rng)};
    net.biases = {Array(1, 4, 0.0)};

    const Array x = random_array(2, 3, rng);
    Tape t;
    Var y = net.forward(t, t.input(x));
    const Array ref = radsplat::kernels::matmul(x, net.weights[0]);
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(t.val(y).v[i] == doctest::Approx(ref.v[i]).epsilon(1e-15));
}

TEST_CASE("mlp gradients match finite differences") {
    std::mt19937_64 rng(31);
    auto net = ad::Mlp::make(3, 6, 2, 4, ad::Activation::Relu, ad::Activation::Sigmoid);
    net.init_params(rng);

    std::vector<Array> params;
    for (auto& w : net.weights)
        params.push_back(w);
    for (auto& b : net.biases)
        params.push_back(b);
    params.push_back(random_array(5, 3, rng)); // the input batch

    auto build = [&net](Tape& t, const std::vector<Var>& l) {
        const std::size_t L = net.weights.size();
        std::vector<Var> wl(l.begin(), l.begin() + L);
        std::vector<Var> bl(l.begin() + L, l.begin() + 2 * L);
        Var y = net.forward(t, l[2 * L], wl, bl);
        return probe_sum(t, y, 77);
    };
    auto rep = check_tape_gradients(params, build);
    INFO(rep.where);
    CHECK(rep.ok);
}

TEST_CASE("mlp value forward equals tape forward") {
    std::mt19937_64 rng(32);
    auto net = ad::Mlp::make(4, 8, 2, 3, ad::Activation::Relu, ad::Activation::Sigmoid);
    net.init_params(rng);
    const Array x = random_array(7, 4, rng);
    Tape t;
    const Array& tape_out = t.val(net.forward(t, t.input(x)));
    const Array val_out = net.forward_value(x);
    REQUIRE(tape_out.size() == val_out.size());
    for (std::size_t i = 0; i < val_out.size(); ++i)
        CHECK(tape_out.v[i] == val_out.v[i]);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Array p(2, 2, 1.5);
    Array g(2, 2, 0.0);
    ad::AdamState st;
    st.reset({&p});
    const Array before = p;
    ad::adam_step({&p}, {&g}, st);
    CHECK(st.step == 1);
    for (std::size_t i = 0; i < p.size(); ++i)
        CHECK(p.v[i] == before.v[i]);
}

TEST_CASE("adam: first step from zero moments") {
    // m_hat = g, v_hat = g^2  =>  delta = -lr * g / (|g| + eps)
    Array p(1, 3);
    p.v = {1.0, -2.0, 0.5};
    Array g(1, 3);
    g.v = {0.3, -0.9, 4.0};
    ad::AdamState st;
    st.cfg.lr = 1e-2;
    st.reset({&p});
    const Array before = p;
    ad::adam_step({&p}, {&g}, st);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double expected =
            before.v[i] - st.cfg.lr * g.v[i] / (std::fabs(g.v[i]) + st.cfg.eps);
        CHECK(p.v[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("adam: constant gradient trajectory matches replayed recurrence") {
    // Independent scalar replay of the textbook recurrence, compared exactly.
    const double lr = 3e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.7;
    double theta_ref = 2.0, m = 0.0, v = 0.0;

    Array p(1, 1, 2.0);
    Array grad(1, 1, g);
    ad::AdamState st;
    st.cfg.lr = lr;
    st.reset({&p});

    for (int k = 1; k <= 500; ++k) {
        ad::adam_step({&p}, {&grad}, st);
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, k));
        const double vh = v / (1 - std::pow(b2, k));
        theta_ref -= lr * mh / (std::sqrt(vh) + eps);
        CHECK(p.v[0] == doctest::Approx(theta_ref).epsilon(1e-12));
    }
    // long-run update magnitude approaches lr for a constant gradient
    const double before = p.v[0];
    ad::adam_step({&p}, {&grad}, st);
    CHECK(std::fabs(before - p.v[0]) == doctest::Approx(lr).epsilon(1e-3));
}

TEST_CASE("gradient clipping scales the global norm") {
    std::vector<Array> grads = {Array(1, 2), Array(1, 1)};
    grads[0].v = {3.0, 4.0};
    grads[1].v = {12.0};
    CHECK(ad::grad_global_norm(grads) == doctest::Approx(13.0));
    ad::clip_grads(grads, 6.5);
    CHECK(ad::grad_global_norm(grads) == doctest::Approx(6.5));
    CHECK(grads[0].v[0] == doctest::Approx(1.5));
    // below the cap: untouched
    ad::clip_grads(grads, 100.0);
    CHECK(ad::grad_global_norm(grads) == doctest::Approx(6.5));
}
