// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include "core/errors.hpp"
#include "core/geometry.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace radsplat::prep {

enum class FpsSeedRule { LowestIndex, NearestCentroid };

struct PrepConfig {
    int knn_for_normals = 16;
    double edge_variance_threshold = 0.1;
    std::size_t fps_target_count = 2000;
    FpsSeedRule fps_seed_rule = FpsSeedRule::LowestIndex;
    // Normal signs are disambiguated toward this point (the BS in the pipeline).
    Vec3 orient_reference{0.0, 0.0, 0.0};
};

FpsSeedRule fps_seed_rule_from_string(const std::string& s);
std::string to_string(FpsSeedRule rule);

// Uniform voxel hash grid over a fixed point set; linear-time build,
// deterministic k-NN queries (ties broken by lower point index).
class VoxelGrid {
public:
    VoxelGrid(const std::vector<Vec3>& points, double cell_size);

    // k nearest neighbors of q sorted by (distance^2, index); exclude_idx
    // omits one point (the query itself for self-queries).
    std::vector<int> knn(const Vec3& q, int k, int exclude_idx = -1) const;

    double cell_size() const { return cell_; }

private:
    const std::vector<Vec3>& pts_;
    double cell_;
    Vec3 origin_;
    int nx_ = 0, ny_ = 0, nz_ = 0;
    std::vector<int> cell_start_; // CSR layout over occupied lattice
    std::vector<int> cell_items_;
    std::unordered_map<long long, int> slot_;
    long long cell_of(const Vec3& p) const;
    long long cell_id(int ix, int iy, int iz) const;
};

// Median nearest-neighbor distance, estimated over a deterministic subsample
// of at most `sample_cap` points. Used for voxel sizing and logit scales.
double median_nn_distance(const PointCloud& pc, std::size_t sample_cap = 1024);

// Unit normals via the smallest covariance eigenvector of each point's k-NN
// neighborhood, sign-flipped toward cfg.orient_reference. Degenerate
// neighborhoods yield a false flag in `valid` and are counted in warn.
struct NormalField {
    std::vector<Vec3> normals;
    std::vector<bool> valid;
};
NormalField estimate_normals(const PointCloud& pc, const PrepConfig& cfg,
                             WarnCounter* warn = nullptr);

// Subset of points whose local normal dispersion (1 - |mean of unit normals
// over the k neighbors|) exceeds cfg.edge_variance_threshold. Requires
// pc.count() >= knn_for_normals + 1. Output order follows the input.
PointCloud extract_edges(const PointCloud& pc, const PrepConfig& cfg,
                         WarnCounter* warn = nullptr);

// Greedy max-min selection on squared distances; first point by seed rule,
// ties by lower index. Returns selected indices in selection order.
std::vector<std::size_t> farthest_point_indices(const std::vector<Vec3>& pts, std::size_t count,
                                                FpsSeedRule rule = FpsSeedRule::LowestIndex);
PointCloud farthest_point_sample(const PointCloud& pc, std::size_t count,
                                 FpsSeedRule rule = FpsSeedRule::LowestIndex);

// extract_edges then farthest_point_sample to cfg.fps_target_count.
PointCloud preprocess(const PointCloud& pc, const PrepConfig& cfg, WarnCounter* warn = nullptr);

} // namespace radsplat::prep
