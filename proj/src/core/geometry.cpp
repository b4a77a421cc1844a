// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#include "core/geometry.hpp"

#include "core/errors.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace radsplat {

void PointCloud::validate() const {
    if (points.empty())
        throw DataError("point cloud is empty");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i].finite())
            throw DataError("non-finite coordinate at point " + std::to_string(i));
    }
}

void BeamGrid::validate() const {
    if (m1 <= 0 || m2 <= 0)
        throw DataError("beam grid dimensions must be positive");
}

int beam_index(int m1_idx, int m2_idx, const BeamGrid& grid) {
    if (m1_idx < 0 || m1_idx >= grid.m1 || m2_idx < 0 || m2_idx >= grid.m2)
        throw std::out_of_range("beam index (" + std::to_string(m1_idx) + "," +
                                std::to_string(m2_idx) + ") outside " +
                                std::to_string(grid.m1) + "x" + std::to_string(grid.m2));
    return m1_idx * grid.m2 + m2_idx;
}

std::pair<int, int> beam_unindex(int flat, const BeamGrid& grid) {
    if (flat < 0 || flat >= grid.total())
        throw std::out_of_range("flat beam index out of range");
    return {flat / grid.m2, flat % grid.m2};
}

double db_from_linear(double p_watts) {
    if (!(p_watts > 0.0))
        throw std::domain_error("db_from_linear requires p > 0");
    return 10.0 * std::log10(p_watts);
}

double linear_from_db(double db) { return std::pow(10.0, db / 10.0); }

double safe_db(double p_watts) {
    return p_watts > 0.0 ? 10.0 * std::log10(p_watts) : 0.0;
}

const RssVector& MeasurementSet::rss_at(int grid_id) const {
    if (grid_id < 0 || static_cast<std::size_t>(grid_id) >= rss.size())
        throw std::out_of_range("grid id out of range");
    if (access_counts_)
        (*access_counts_)[static_cast<std::size_t>(grid_id)]++;
    return rss[static_cast<std::size_t>(grid_id)];
}

void MeasurementSet::arm_access_probe() const {
    access_counts_ = std::make_shared<std::vector<std::uint64_t>>(rss.size(), 0);
}

std::uint64_t MeasurementSet::probe_count(int grid_id) const {
    if (!access_counts_)
        return 0;
    return access_counts_->at(static_cast<std::size_t>(grid_id));
}

SplitReport validate_split(const MeasurementSet& ms) {
    SplitReport rep;
    auto fail = [&rep](std::string msg) {
        rep.ok = false;
        rep.violations.push_back(std::move(msg));
    };

    const std::size_t g = ms.grid_count();
    if (ms.rss.size() != g)
        fail("rss count " + std::to_string(ms.rss.size()) + " != grid count " + std::to_string(g));

    std::set<int> train(ms.train_ids.begin(), ms.train_ids.end());
    std::set<int> test(ms.test_ids.begin(), ms.test_ids.end());

    std::vector<int> inter;
    std::set_intersection(train.begin(), train.end(), test.begin(), test.end(),
                          std::back_inserter(inter));
    if (!inter.empty())
        fail("intersection nonempty: " + std::to_string(inter.size()) + " grid(s) in both sets");

    for (std::size_t i = 0; i < g; ++i) {
        const int id = static_cast<int>(i);
        if (!train.count(id) && !test.count(id))
            fail("uncovered grid " + std::to_string(id));
    }
    for (int id : train)
        if (id < 0 || static_cast<std::size_t>(id) >= g)
            fail("train id out of range: " + std::to_string(id));
    for (int id : test)
        if (id < 0 || static_cast<std::size_t>(id) >= g)
            fail("test id out of range: " + std::to_string(id));

    const std::size_t m = static_cast<std::size_t>(ms.beams.total());
    for (std::size_t i = 0; i < ms.rss.size(); ++i) {
        if (ms.rss[i].size() != m) {
            fail("grid " + std::to_string(i) + " rss length " + std::to_string(ms.rss[i].size()) +
                 " != beam count " + std::to_string(m));
            continue;
        }
        for (double v : ms.rss[i]) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                fail("grid " + std::to_string(i) + " has negative or non-finite rss");
                break;
            }
        }
    }
    return rep;
}

void SceneConfig::validate() const {
    beam_grid.validate();
    if (!(tx_power > 0.0))
        throw DataError("tx_power must be positive");
    if (sh_degree < 0)
        throw DataError("sh_degree must be nonnegative");
    if (encoding_order < 1)
        throw DataError("encoding_order must be positive");
    if (scatterer_count < 1)
        throw DataError("scatterer_count must be positive");
    if (!(splat_scale > 0.0))
        throw DataError("splat_scale must be positive");
    for (double l : {lambda1, lambda2, lambda_mec, lambda_sparsity, lambda_tv})
        if (l < 0.0)
            throw DataError("loss weights must be nonnegative");
    if (!(finetune_distance > 0.0))
        throw DataError("finetune_distance must be positive");
    if (finetune_iters < 1)
        throw DataError("finetune_iters must be positive");
    if (mlp_hidden < 1 || mlp_depth < 1)
        throw DataError("mlp dimensions must be positive");
    if (batch_size < 1)
        throw DataError("batch_size must be positive");
    if (!(learning_rate > 0.0))
        throw DataError("learning_rate must be positive");
}

} // namespace radsplat
