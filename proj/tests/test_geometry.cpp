// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/errors.hpp"
#include "core/geometry.hpp"

#include <cmath>
#include <random>

using namespace radsplat;

TEST_CASE("beam_index row-major flattening") {
    BeamGrid g{8, 8};
    CHECK(beam_index(0, 0, g) == 0);
    CHECK(beam_index(1, 0, g) == 8);
    CHECK(beam_index(7, 7, g) == 63);
    CHECK_THROWS_AS(beam_index(8, 0, g), std::out_of_range);
    CHECK_THROWS_AS(beam_index(0, -1, g), std::out_of_range);
}

TEST_CASE("beam flattening is a bijection") {
    BeamGrid g{5, 7};
    for (int i = 0; i < g.m1; ++i)
        for (int j = 0; j < g.m2; ++j) {
            auto [bi, bj] = beam_unindex(beam_index(i, j, g), g);
            CHECK(bi == i);
            CHECK(bj == j);
        }
}

TEST_CASE("db/linear conversion") {
    CHECK(db_from_linear(1.0) == doctest::Approx(0.0));
    CHECK(db_from_linear(100.0) == doctest::Approx(20.0));
    CHECK(db_from_linear(0.5) == doctest::Approx(-3.0103).epsilon(1e-4));
    CHECK_THROWS_AS(db_from_linear(0.0), std::domain_error);
    CHECK_THROWS_AS(db_from_linear(-1.0), std::domain_error);

    // round-trip within 1e-12 relative over the stated range
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> expo(-12.0, 6.0);
    for (int i = 0; i < 1000; ++i) {
        const double p = std::pow(10.0, expo(rng));
        const double back = linear_from_db(db_from_linear(p));
        CHECK(std::fabs(back - p) <= 1e-12 * p);
    }
}

TEST_CASE("safe_db zero convention") {
    CHECK(safe_db(0.0) == 0.0);
    CHECK(safe_db(1.0) == 0.0);
    CHECK(safe_db(10.0) == doctest::Approx(10.0));
}

namespace {

MeasurementSet tiny_ms() {
    MeasurementSet ms;
    ms.beams = BeamGrid{1, 2};
    ms.grid_positions = {{0, 0, 1}, {10, 0, 1}, {0, 10, 1}};
    ms.rss = {{1.0, 2.0}, {0.5, 0.25}, {0.1, 0.2}};
    ms.train_ids = {0, 1};
    ms.test_ids = {2};
    return ms;
}

} // namespace

TEST_CASE("validate_split accepts a disjoint full cover") {
    auto rep = validate_split(tiny_ms());
    CHECK(rep.ok);
    CHECK(rep.violations.empty());
}

TEST_CASE("validate_split flags overlap") {
    auto ms = tiny_ms();
    ms.test_ids = {1, 2};
    auto rep = validate_split(ms);
    CHECK_FALSE(rep.ok);
    bool found = false;
    for (const auto& v : rep.violations)
        if (v.find("intersection nonempty") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("validate_split flags uncovered grid") {
    auto ms = tiny_ms();
    ms.test_ids = {};
    auto rep = validate_split(ms);
    CHECK_FALSE(rep.ok);
    bool found = false;
    for (const auto& v : rep.violations)
        if (v.find("uncovered grid") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("rss access probe counts reads") {
    auto ms = tiny_ms();
    ms.arm_access_probe();
    CHECK(ms.probe_count(2) == 0);
    (void)ms.rss_at(2);
    (void)ms.rss_at(2);
    CHECK(ms.probe_count(2) == 2);
    CHECK(ms.probe_count(0) == 0);
}

TEST_CASE("point cloud validation") {
    PointCloud pc;
    CHECK_THROWS_AS(pc.validate(), DataError);
    pc.points = {{0, 0, 0}, {1, 2, 3}};
    CHECK_NOTHROW(pc.validate());
    pc.points.push_back({std::nan(""), 0, 0});
    CHECK_THROWS_AS(pc.validate(), DataError);
}

TEST_CASE("scene config validation") {
    SceneConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    SceneConfig bad = cfg;
    bad.lambda_mec = -1.0;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = cfg;
    bad.beam_grid = BeamGrid{0, 4};
    CHECK_THROWS_AS(bad.validate(), DataError);
}
