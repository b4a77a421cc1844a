// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace radsplat {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double dist2(const Vec3& a, const Vec3& b) { return (a - b).norm2(); }
inline double dist(const Vec3& a, const Vec3& b) { return std::sqrt(dist2(a, b)); }

// Raw or preprocessed 3D points (meters). Immutable after construction.
struct PointCloud {
    std::vector<Vec3> points;

    std::size_t count() const { return points.size(); }
    // Throws DataError on empty cloud or non-finite coordinates.
    void validate() const;
};

// The M = m1 x m2 beamspace layout an RSS vector is indexed by.
struct BeamGrid {
    int m1 = 0;
    int m2 = 0;

    int total() const { return m1 * m2; }
    void validate() const;
};

// Row-major flattening, the one canonical beam order used everywhere.
int beam_index(int m1_idx, int m2_idx, const BeamGrid& grid);
// Inverse of beam_index.
std::pair<int, int> beam_unindex(int flat, const BeamGrid& grid);

// Per-beam received power, linear scale (watts). Length must equal BeamGrid::total().
using RssVector = std::vector<double>;

// 10*log10(p); requires p > 0.
double db_from_linear(double p_watts);
// Inverse: 10^(db/10).
double linear_from_db(double db);
// Display/metric convention used by evaluation: zero power maps to 0 dB so that
// zero-prediction errors stay finite. Not a physical unit conversion.
double safe_db(double p_watts);

// Grid positions with ground-truth RSS and the train/test extrapolation split.
// train_ids = measured grids (L_k), test_ids = held-out grids (L_o).
struct MeasurementSet {
    Vec3 bs_position;
    std::vector<Vec3> grid_positions;
    std::vector<RssVector> rss; // linear watts, one per grid
    std::vector<int> train_ids; // sorted, disjoint from test_ids
    std::vector<int> test_ids;  // sorted
    double grid_cell_size = 10.0;
    double tx_power = 1.0; // the known transmit power P baked into rss
    int grid_nx = 0;       // lattice extents when positions form one (0 = irregular)
    int grid_ny = 0;
    BeamGrid beams;

    std::size_t grid_count() const { return grid_positions.size(); }

    // Sole accessor for ground-truth RSS; counts accesses when a probe is armed
    // so tests can prove training never touches held-out labels.
    const RssVector& rss_at(int grid_id) const;
    void arm_access_probe() const;
    std::uint64_t probe_count(int grid_id) const;

private:
    mutable std::shared_ptr<std::vector<std::uint64_t>> access_counts_;
};

struct SplitReport {
    bool ok = true;
    std::vector<std::string> violations;
};

// Confirms MeasurementSet invariants (disjoint, covering, one RSS per grid,
// RSS lengths and ranges); report-valued, never throws.
SplitReport validate_split(const MeasurementSet& ms);

// Scene-level configuration: beamspace layout, model sizes, loss weights and
// the fine-tuning schedule. All fields have the shipped defaults.
struct SceneConfig {
    BeamGrid beam_grid{4, 4};
    double tx_power = 1.0;       // transmit power P (watts)
    int sh_degree = 2;           // k: (k+1)^2 basis functions
    int encoding_order = 4;      // V
    int scatterer_count = 2000;  // N
    double splat_scale = 1.0;    // t
    double lambda1 = 1e-3;       // BS-proximity weight
    double lambda2 = 1e-2;       // bias-norm weight
    double lambda_mec = 1e-1;    // max-element constraint weight
    double lambda_sparsity = 0.0;
    double lambda_tv = 1e-2;
    double finetune_distance = 20.0; // D (meters)
    int finetune_iters = 2000;       // K steps per round
    int finetune_max_rounds = 64;
    int mlp_hidden = 64;
    int mlp_depth = 2;
    double learning_rate = 5e-3;
    double lr_mult_position = 0.3;   // means source (logits, bias, direct means)
    double lr_mult_projection = 0.1; // beamspace projection nets (mlp2, mlp3)
    double lr_mult_shape = 0.1;      // covariance parameters (log scales, quats)
    int batch_size = 64;
    double grad_clip = 10.0;
    double measurement_height = 1.0;
    double pseudo_label_weight = 1.0; // absorbed-grid weight in the MSE term

    void validate() const;
};

} // namespace radsplat
