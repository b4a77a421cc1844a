// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/optimizer.hpp"
#include "core/selector.hpp"
#include "fd_check.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace radsplat;
using ad::Array;
using ad::Tape;
using ad::Var;
using radsplat::testing::random_array;

namespace {

SelectionModel random_model(std::size_t n, std::size_t r, std::uint64_t seed, bool zero_bias) {
    std::mt19937_64 rng(seed);
    SelectionModel m;
    m.logits = random_array(n, r, rng, -2.0, 2.0);
    m.bias = zero_bias ? Array(n, 3, 0.0) : random_array(n, 3, rng, -0.5, 0.5);
    m.points = random_array(r, 3, rng, -5.0, 5.0);
    return m;
}

double cloud_diameter(const Array& points) {
    double best = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i)
        for (std::size_t j = i + 1; j < points.rows; ++j) {
            double d2 = 0;
            for (std::size_t c = 0; c < 3; ++c) {
                const double d = points.at(i, c) - points.at(j, c);
                d2 += d * d;
            }
            best = std::max(best, std::sqrt(d2));
        }
    return best;
}

} // namespace

TEST_CASE("near one-hot logits place the mean at the selected point") {
    SelectionModel m;
    m.points = Array(3, 3);
    m.points.v = {0, 0, 0, 2, 0, 0, 0, 2, 0};
    m.logits = Array(1, 3, 0.0);
    m.logits.at(0, 1) = 1e4; // softmax saturates to exact one-hot
    m.bias = Array(1, 3, 0.0);
    const Array mu = m.means_value(false);
    CHECK(mu.at(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(mu.at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("uniform logits over two points give the midpoint") {
    SelectionModel m;
    m.points = Array(2, 3);
    m.points.v = {0, 0, 0, 2, 0, 0};
    m.logits = Array(1, 2, 0.0);
    m.bias = Array(1, 3, 0.0);
    const Array mu = m.means_value(false);
    CHECK(mu.at(0, 0) == doctest::Approx(1.0));
    CHECK(mu.at(0, 1) == doctest::Approx(0.0));
    CHECK(mu.at(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("soft means stay in the convex hull of the cloud (zero bias)") {
    // tetrahedron: hull membership decided by exact barycentric solve
    SelectionModel m;
    m.points = Array(4, 3);
    m.points.v = {0, 0, 0, 3, 0, 0, 0, 3, 0, 0, 0, 3};
    std::mt19937_64 rng(55);
    m.logits = random_array(5, 4, rng, -3.0, 3.0);
    m.bias = Array(5, 3, 0.0);

    const Array mu = m.means_value(false);
    Eigen::Matrix4d A;
    for (int c = 0; c < 4; ++c) {
        A(0, c) = m.points.at(static_cast<std::size_t>(c), 0);
        A(1, c) = m.points.at(static_cast<std::size_t>(c), 1);
        A(2, c) = m.points.at(static_cast<std::size_t>(c), 2);
        A(3, c) = 1.0;
    }
    for (std::size_t i = 0; i < mu.rows; ++i) {
        Eigen::Vector4d b(mu.at(i, 0), mu.at(i, 1), mu.at(i, 2), 1.0);
        Eigen::Vector4d bary = A.fullPivLu().solve(b);
        for (int c = 0; c < 4; ++c)
            CHECK(bary(c) >= -1e-12);
    }
}

TEST_CASE("simplex invariant holds by construction") {
    auto m = random_model(6, 9, 77, false);
    const Array t = m.selection_value();
    for (std::size_t i = 0; i < t.rows; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < t.cols; ++j) {
            CHECK(t.at(i, j) >= 0.0);
            s += t.at(i, j);
        }
        CHECK(std::fabs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("reg_loss forced terms") {
    // exact one-hot rows selecting a point placed at the BS, zero bias
    const Vec3 bs{1.0, -2.0, 0.5};
    SelectionModel m;
    m.points = Array(3, 3);
    m.points.v = {bs.x, bs.y, bs.z, 7, 7, 7, -7, 0, 7};
    m.logits = Array(4, 3, 0.0);
    for (std::size_t i = 0; i < 4; ++i)
        m.logits.at(i, 0) = 1e4;
    m.bias = Array(4, 3, 0.0);

    Tape t;
    auto vars = m.build(t);
    const double lsp = 0.25;
    Var loss = m.reg_loss(t, vars, bs, 0.7, 0.9, 1.3, lsp);
    CHECK(t.val(loss).v[0] == doctest::Approx(lsp * 4.0).epsilon(1e-12));
}

TEST_CASE("reg_loss MEC term for uniform rows") {
    const std::size_t n = 3, r = 8;
    SelectionModel m;
    m.points = Array(r, 3, 1.0);
    m.logits = Array(n, r, 0.0);
    m.bias = Array(n, 3, 0.0);
    Tape t;
    auto vars = m.build(t);
    Var loss = m.reg_loss(t, vars, Vec3{1, 1, 1}, 0.0, 0.0, 1.0, 0.0);
    const double expect = static_cast<double>(n) * (1.0 - 1.0 / static_cast<double>(r));
    CHECK(t.val(loss).v[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("reg_loss and means gradients match finite differences") {
    auto m = random_model(4, 6, 99, false);
    const Vec3 bs{0.4, -0.2, 1.0};

    std::vector<Array> params = {m.logits, m.bias};
    auto build = [&](Tape& t, const std::vector<Var>& leaves) {
        SelectionModel::TapeVars vars;
        vars.logits = leaves[0];
        vars.bias = leaves[1];
        vars.t = t.softmax_rows(vars.logits);
        vars.means = t.add(t.matmul(vars.t, t.input(m.points)), vars.bias);
        Var reg = m.reg_loss(t, vars, bs, 1e-2, 1e-1, 0.2, 0.05);
        // pull means into the scalar too so the matmul path is exercised
        std::mt19937_64 rng(1);
        Var probe = t.input(random_array(4, 3, rng));
        return t.add(reg, t.sum(t.mul(vars.means, probe)));
    };
    auto rep = radsplat::testing::check_tape_gradients(params, build, 1e-4);
    INFO(rep.where);
    CHECK(rep.ok);
}

TEST_CASE("round_selection basics") {
    Array row(1, 3);
    row.v = {0.1, 0.7, 0.2};
    const Array r1 = round_rows_to_binary(row);
    CHECK(r1.at(0, 0) == 0.0);
    CHECK(r1.at(0, 1) == 1.0);
    CHECK(r1.at(0, 2) == 0.0);

    // already binary -> unchanged; rounding is idempotent
    const Array r2 = round_rows_to_binary(r1);
    for (std::size_t i = 0; i < r1.size(); ++i)
        CHECK(r1.v[i] == r2.v[i]);

    // monotone rescaling leaves the argmax unchanged
    Array scaled = row;
    for (double& x : scaled.v)
        x *= 37.5;
    const Array r3 = round_rows_to_binary(scaled);
    for (std::size_t i = 0; i < r1.size(); ++i)
        CHECK(r1.v[i] == r3.v[i]);
}

TEST_CASE("round_selection rows sum to one and means use the binary matrix") {
    auto m = random_model(5, 7, 1234, false);
    auto rounded = m.round_selection();
    for (std::size_t i = 0; i < rounded.t_binary.rows; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < rounded.t_binary.cols; ++j)
            s += rounded.t_binary.at(i, j);
        CHECK(s == 1.0);
    }
    for (std::size_t i = 0; i < 5; ++i) {
        const std::size_t j = rounded.selected[i];
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(rounded.means.at(i, c) ==
                  doctest::Approx(m.points.at(j, c) + m.bias.at(i, c)).epsilon(1e-15));
    }
}

TEST_CASE("soft/hard means gap bound") {
    auto m = random_model(6, 8, 4321, false);
    const Array t = m.selection_value();
    const Array soft = m.means_value(false);
    const Array hard = m.means_value(true);
    const double diam = cloud_diameter(m.points);
    for (std::size_t i = 0; i < 6; ++i) {
        double mx = 0;
        for (std::size_t j = 0; j < t.cols; ++j)
            mx = std::max(mx, t.at(i, j));
        double gap = 0;
        for (std::size_t c = 0; c < 3; ++c) {
            const double d = soft.at(i, c) - hard.at(i, c);
            gap += d * d;
        }
        CHECK(std::sqrt(gap) <= (1.0 - mx) * diam + 1e-12);
    }
}

TEST_CASE("large MEC weight drives rows toward one-hot monotonically") {
    auto m = random_model(4, 10, 777, true);
    // flatten the logits so rows start far from one-hot
    for (double& x : m.logits.v)
        x *= 0.05;

    ad::AdamState st;
    st.cfg.lr = 5e-2;
    st.reset({&m.logits});

    auto mean_rowmax = [&]() {
        const Array t = m.selection_value();
        double acc = 0;
        for (std::size_t i = 0; i < t.rows; ++i) {
            double mx = 0;
            for (std::size_t j = 0; j < t.cols; ++j)
                mx = std::max(mx, t.at(i, j));
            acc += mx;
        }
        return acc / static_cast<double>(t.rows);
    };

    std::vector<double> window_means;
    double acc = 0;
    int cnt = 0;
    for (int step = 0; step < 400; ++step) {
        Tape t;
        auto vars = m.build(t);
        Var loss = m.reg_loss(t, vars, Vec3{0, 0, 0}, 0.0, 0.0, 1.0, 0.0);
        t.backward(loss);
        const Array g = t.grad(vars.logits);
        ad::adam_step({&m.logits}, {&g}, st);
        acc += mean_rowmax();
        if (++cnt == 100) {
            window_means.push_back(acc / 100.0);
            acc = 0;
            cnt = 0;
        }
    }
    REQUIRE(window_means.size() == 4);
    for (std::size_t i = 1; i < window_means.size(); ++i)
        CHECK(window_means[i] >= window_means[i - 1] - 1e-9);
    CHECK(window_means.back() > window_means.front());
}

TEST_CASE("init spreads means over the cloud and keeps simplex rows") {
    PointCloud pc;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 50; ++i)
        pc.points.push_back({u(rng), u(rng), u(rng)});
    auto m = SelectionModel::init(pc, 8);
    CHECK(m.scatterer_count() == 8);
    CHECK(m.point_count() == 50);
    const Array t = m.selection_value();
    for (std::size_t i = 0; i < t.rows; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < t.cols; ++j)
            s += t.at(i, j);
        CHECK(std::fabs(s - 1.0) <= 1e-12);
    }
    for (double b : m.bias.v)
        CHECK(b == 0.0);
    CHECK_THROWS_AS(SelectionModel::init(pc, 51), std::invalid_argument);
}
