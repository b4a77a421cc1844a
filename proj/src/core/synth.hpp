// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include "core/errors.hpp"
#include "core/geometry.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace radsplat::synth {

// Desk-scale multipath ground truth. The channel is a documented closed form
// so tests can re-derive every value independently:
//
//   For scatterer n (a BS-visible box face, pushed 1e-3 m off its face along
//   the outward normal) and grid position p:
//     d1 = ||pos_n - bs||, d2 = ||p - pos_n||
//     departure direction u = (pos_n - bs)/d1,
//       az = atan2(u.y, u.x), el = asin(u.z)
//     beam (i,j) center: az_i = az_min + (i+0.5) daz, el_j = el_min + (j+0.5) del
//     gain_m = exp(-((wrap(az - az_i))^2 + (el - el_j)^2) / (2 sigma^2))
//     beta_n[m] = refl_n * wavelength / (4 pi (d1 + d2)) * gain_m
//     phi_n = 2 pi (d1 + d2) / wavelength
//   A path survives iff neither segment bs->pos_n nor pos_n->p is blocked by
//   a box (boxes inset by 1e-6 for the blocking test).
//     h[m] = sum_surviving beta_n[m] e^{j phi_n},   rss[m] = P |h[m]|^2
struct Box {
    Vec3 lo, hi;
    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
               p.z <= hi.z;
    }
};

struct Scatterer {
    Vec3 pos;    // face center pushed off the surface
    Vec3 normal; // outward face normal
    double refl; // per-face reflection factor
    int box = 0, face = 0;
};

enum class SplitMode { EdgeBand, CentralHole };
SplitMode split_mode_from_string(const std::string& s);
std::string to_string(SplitMode mode);

struct GenSpec {
    int grid_nx = 40, grid_ny = 40;
    double cell = 10.0;             // meters per grid cell
    double height = 1.0;            // measurement height
    Vec3 bs{-40.0, -40.0, 30.0};
    int obstacle_count = 7;
    double box_size_min = 25.0, box_size_max = 60.0;
    double box_height_min = 10.0, box_height_max = 35.0;
    BeamGrid beams{4, 4};
    double wavelength = 0.1;
    double az_min = -M_PI, az_max = M_PI;
    double el_min = -M_PI / 3.0, el_max = 0.0;
    double beam_sigma = 0.0; // 0 = one azimuth step
    double refl_min = 0.3, refl_max = 0.9;
    double noise_db = 3.0;
    double point_spacing = 4.0; // LiDAR stand-in lattice spacing on surfaces
    double point_jitter = 0.05;
    bool ground_points = true;
    bool autoscale_power = true; // choose P so the mean linear RSS is ~1
    SplitMode split_mode = SplitMode::CentralHole;
    double split_fraction = 0.12;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticScene {
    Vec3 bs;
    std::vector<Box> boxes;
    std::vector<Scatterer> scatterers;
    BeamGrid beams;
    double az_min = 0, az_max = 0, el_min = 0, el_max = 0, beam_sigma = 0;
    double wavelength = 0.1;
    double power = 1.0;
    int grid_nx = 0, grid_ny = 0;
    double cell = 10.0, height = 1.0;
    double noise_db = 0.0;
    std::uint64_t seed = 0;

    Vec3 grid_position(int ix, int iy) const;
    int grid_id(int ix, int iy) const { return ix * grid_ny + iy; }
};

struct GenResult {
    SyntheticScene scene;
    PointCloud cloud;
};

// Places box obstacles, samples the surface point cloud, designates the
// BS-visible faces as true scatterers. Deterministic given spec.seed.
GenResult gen_scene(const GenSpec& spec);

// True parametric segment-box intersection (slab clipping).
bool segment_intersects_box(const Vec3& a, const Vec3& b, const Box& box);
// Which scatterer paths survive occlusion for a receiver at p.
std::vector<char> path_mask(const SyntheticScene& scene, const Vec3& p);

// The documented closed form above. Deterministic, noise-free.
RssVector true_rss(const SyntheticScene& scene, const Vec3& grid_pos);

// Multiplicative log-normal power noise: rss * 10^(e/10), e ~ N(0, level^2).
RssVector add_noise(const RssVector& rss, double level_db, std::mt19937_64& rng);

// Contiguous held-out region of ~fraction of the nx*ny grids. Returns
// (train_ids, test_ids), both sorted.
std::pair<std::vector<int>, std::vector<int>> make_split(int nx, int ny, SplitMode mode,
                                                         double fraction);

// Full measurement set: noisy RSS at every grid plus the extrapolation split.
MeasurementSet make_measurements(const SyntheticScene& scene, SplitMode mode, double fraction);

} // namespace radsplat::synth
