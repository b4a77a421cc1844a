// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#include "core/prep.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace radsplat::prep {

FpsSeedRule fps_seed_rule_from_string(const std::string& s) {
    if (s == "lowest_index")
        return FpsSeedRule::LowestIndex;
    if (s == "nearest_centroid")
        return FpsSeedRule::NearestCentroid;
    throw DataError("unknown fps seed rule: " + s);
}

std::string to_string(FpsSeedRule rule) {
    return rule == FpsSeedRule::LowestIndex ? "lowest_index" : "nearest_centroid";
}

// ---------------------------------------------------------------------------
// VoxelGrid
// ---------------------------------------------------------------------------

VoxelGrid::VoxelGrid(const std::vector<Vec3>& points, double cell_size)
    : pts_(points), cell_(cell_size) {
    if (points.empty())
        throw std::invalid_argument("voxel grid: empty point set");
    if (!(cell_size > 0.0))
        throw std::invalid_argument("voxel grid: cell size must be positive");

    Vec3 lo = points[0], hi = points[0];
    for (const Vec3& p : points) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    origin_ = lo;
    nx_ = static_cast<int>((hi.x - lo.x) / cell_) + 1;
    ny_ = static_cast<int>((hi.y - lo.y) / cell_) + 1;
    nz_ = static_cast<int>((hi.z - lo.z) / cell_) + 1;

    // counting sort into CSR over occupied cells via a dense offset table kept
    // sparse with a hash map (scenes can be long and thin)
    std::unordered_map<long long, int> counts;
    std::vector<long long> point_cell(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        point_cell[i] = cell_of(points[i]);
        counts[point_cell[i]]++;
    }
    // stable ordering: cells keyed by id, items by index
    std::vector<long long> keys;
    keys.reserve(counts.size());
    for (auto& kv : counts)
        keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    cell_start_.assign(keys.size() + 1, 0);
    std::unordered_map<long long, int> slot;
    slot.reserve(keys.size());
    for (std::size_t k = 0; k < keys.size(); ++k) {
        slot[keys[k]] = static_cast<int>(k);
        cell_start_[k + 1] = cell_start_[k] + counts[keys[k]];
    }
    cell_items_.resize(points.size());
    std::vector<int> cursor(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int s = slot[point_cell[i]];
        cell_items_[static_cast<std::size_t>(cursor[s]++)] = static_cast<int>(i);
    }
    slot_ = std::move(slot);
}

long long VoxelGrid::cell_id(int ix, int iy, int iz) const {
    return (static_cast<long long>(iz) * ny_ + iy) * nx_ + ix;
}

long long VoxelGrid::cell_of(const Vec3& p) const {
    int ix = static_cast<int>((p.x - origin_.x) / cell_);
    int iy = static_cast<int>((p.y - origin_.y) / cell_);
    int iz = static_cast<int>((p.z - origin_.z) / cell_);
    ix = std::clamp(ix, 0, nx_ - 1);
    iy = std::clamp(iy, 0, ny_ - 1);
    iz = std::clamp(iz, 0, nz_ - 1);
    return cell_id(ix, iy, iz);
}

std::vector<int> VoxelGrid::knn(const Vec3& q, int k, int exclude_idx) const {
    if (k < 1)
        throw std::invalid_argument("knn: k must be positive");

    struct Cand {
        double d2;
        int idx;
        bool operator<(const Cand& o) const { return d2 < o.d2 || (d2 == o.d2 && idx < o.idx); }
    };
    std::vector<Cand> best;

    int cx = std::clamp(static_cast<int>((q.x - origin_.x) / cell_), 0, nx_ - 1);
    int cy = std::clamp(static_cast<int>((q.y - origin_.y) / cell_), 0, ny_ - 1);
    int cz = std::clamp(static_cast<int>((q.z - origin_.z) / cell_), 0, nz_ - 1);

    const int max_ring = std::max({nx_, ny_, nz_});
    for (int ring = 0; ring <= max_ring; ++ring) {
        // all cells whose Chebyshev distance from the center cell equals ring
        bool any_cell = false;
        for (int iz = std::max(0, cz - ring); iz <= std::min(nz_ - 1, cz + ring); ++iz)
            for (int iy = std::max(0, cy - ring); iy <= std::min(ny_ - 1, cy + ring); ++iy)
                for (int ix = std::max(0, cx - ring); ix <= std::min(nx_ - 1, cx + ring); ++ix) {
                    if (std::max({std::abs(ix - cx), std::abs(iy - cy), std::abs(iz - cz)}) != ring)
                        continue;
                    any_cell = true;
                    auto it = slot_.find(cell_id(ix, iy, iz));
                    if (it == slot_.end())
                        continue;
                    const int s = it->second;
                    for (int c = cell_start_[static_cast<std::size_t>(s)];
                         c < cell_start_[static_cast<std::size_t>(s) + 1]; ++c) {
                        const int idx = cell_items_[static_cast<std::size_t>(c)];
                        if (idx == exclude_idx)
                            continue;
                        best.push_back({dist2(q, pts_[static_cast<std::size_t>(idx)]), idx});
                    }
                }
        if (static_cast<int>(best.size()) >= k) {
            std::sort(best.begin(), best.end());
            // a point in ring r is guaranteed closer than anything beyond ring
            // r+1 only once kth distance <= r*cell; one extra ring suffices
            const double kth = best[static_cast<std::size_t>(k) - 1].d2;
            const double safe = static_cast<double>(ring) * cell_;
            if (kth <= safe * safe)
                break;
        }
        if (!any_cell && ring > 0 && static_cast<int>(best.size()) >= k)
            break;
    }
    std::sort(best.begin(), best.end());
    if (static_cast<int>(best.size()) < k)
        throw std::invalid_argument("knn: fewer points than k");
    std::vector<int> out(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        out[static_cast<std::size_t>(i)] = best[static_cast<std::size_t>(i)].idx;
    return out;
}

// ---------------------------------------------------------------------------

double median_nn_distance(const PointCloud& pc, std::size_t sample_cap) {
    pc.validate();
    const std::size_t n = pc.count();
    if (n < 2)
        return 1.0;

    // provisional cell from the bbox diagonal; robust to flat or linear clouds
    Vec3 lo = pc.points[0], hi = pc.points[0];
    for (const Vec3& p : pc.points) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    double cell = (hi - lo).norm() / std::cbrt(static_cast<double>(n));
    if (!(cell > 0.0) || !std::isfinite(cell))
        cell = 1.0;

    VoxelGrid grid(pc.points, cell);
    const std::size_t stride = std::max<std::size_t>(1, n / sample_cap);
    std::vector<double> dists;
    for (std::size_t i = 0; i < n; i += stride) {
        auto nb = grid.knn(pc.points[i], 1, static_cast<int>(i));
        dists.push_back(dist(pc.points[i], pc.points[static_cast<std::size_t>(nb[0])]));
    }
    std::sort(dists.begin(), dists.end());
    const double med = dists[dists.size() / 2];
    return med > 0.0 ? med : cell;
}

NormalField estimate_normals(const PointCloud& pc, const PrepConfig& cfg, WarnCounter* warn) {
    pc.validate();
    const std::size_t n = pc.count();
    const int k = cfg.knn_for_normals;
    if (n < static_cast<std::size_t>(k) + 1)
        throw std::invalid_argument("estimate_normals: cloud smaller than k+1");

    const double med = median_nn_distance(pc);
    VoxelGrid grid(pc.points, 2.0 * med);

    NormalField nf;
    nf.normals.resize(n);
    nf.valid.assign(n, false);

    for (std::size_t i = 0; i < n; ++i) {
        const auto nb = grid.knn(pc.points[i], k, static_cast<int>(i));
        // covariance over the neighborhood including the point itself
        Vec3 mean = pc.points[i];
        for (int j : nb)
            mean = mean + pc.points[static_cast<std::size_t>(j)];
        mean = mean / static_cast<double>(k + 1);

        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        auto accumulate = [&](const Vec3& p) {
            const Vec3 d = p - mean;
            const double dd[3] = {d.x, d.y, d.z};
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    cov(r, c) += dd[r] * dd[c];
        };
        accumulate(pc.points[i]);
        for (int j : nb)
            accumulate(pc.points[static_cast<std::size_t>(j)]);

        if (cov.trace() < 1e-24) { // all coincident
            if (warn)
                warn->degenerate_neighborhoods++;
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
        const Eigen::Vector3d ev = es.eigenvectors().col(0); // smallest eigenvalue
        Vec3 nrm{ev(0), ev(1), ev(2)};
        const double len = nrm.norm();
        if (!(len > 0.0) || !std::isfinite(len)) {
            if (warn)
                warn->degenerate_neighborhoods++;
            continue;
        }
        nrm = nrm / len;
        if (nrm.dot(cfg.orient_reference - pc.points[i]) < 0.0)
            nrm = nrm * -1.0;
        nf.normals[i] = nrm;
        nf.valid[i] = true;
    }
    return nf;
}

PointCloud extract_edges(const PointCloud& pc, const PrepConfig& cfg, WarnCounter* warn) {
    const std::size_t n = pc.count();
    const int k = cfg.knn_for_normals;
    if (n < static_cast<std::size_t>(k) + 1)
        throw std::invalid_argument("extract_edges: cloud smaller than knn_for_normals+1");

    const NormalField nf = estimate_normals(pc, cfg, warn);
    const double med = median_nn_distance(pc);
    VoxelGrid grid(pc.points, 2.0 * med);

    PointCloud out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!nf.valid[i]) // degenerate neighborhood: excluded, already counted
            continue;
        const auto nb = grid.knn(pc.points[i], k, static_cast<int>(i));
        Vec3 mean_normal{0, 0, 0};
        int used = 0;
        for (int j : nb) {
            if (!nf.valid[static_cast<std::size_t>(j)])
                continue;
            mean_normal = mean_normal + nf.normals[static_cast<std::size_t>(j)];
            ++used;
        }
        if (used == 0) {
            if (warn)
                warn->degenerate_neighborhoods++;
            continue;
        }
        mean_normal = mean_normal / static_cast<double>(used);
        const double dispersion = 1.0 - mean_normal.norm();
        if (dispersion > cfg.edge_variance_threshold)
            out.points.push_back(pc.points[i]);
    }
    return out;
}

std::vector<std::size_t> farthest_point_indices(const std::vector<Vec3>& pts, std::size_t count,
                                                FpsSeedRule rule) {
    const std::size_t n = pts.size();
    if (count > n)
        throw std::invalid_argument("farthest_point_sample: count exceeds point count");
    if (count == 0)
        return {};

    std::size_t seed = 0;
    if (rule == FpsSeedRule::NearestCentroid) {
        Vec3 c{0, 0, 0};
        for (const Vec3& p : pts)
            c = c + p;
        c = c / static_cast<double>(n);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 = dist2(pts[i], c);
            if (d2 < best) {
                best = d2;
                seed = i;
            }
        }
    }

    std::vector<std::size_t> selected{seed};
    std::vector<double> min_d2(n);
    for (std::size_t i = 0; i < n; ++i)
        min_d2[i] = dist2(pts[i], pts[seed]);

    while (selected.size() < count) {
        std::size_t best = 0;
        double best_d2 = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (min_d2[i] > best_d2) { // strict >, ties keep lowest index
                best_d2 = min_d2[i];
                best = i;
            }
        }
        selected.push_back(best);
        for (std::size_t i = 0; i < n; ++i)
            min_d2[i] = std::min(min_d2[i], dist2(pts[i], pts[best]));
    }
    return selected;
}

PointCloud farthest_point_sample(const PointCloud& pc, std::size_t count, FpsSeedRule rule) {
    const auto idx = farthest_point_indices(pc.points, count, rule);
    PointCloud out;
    out.points.reserve(idx.size());
    for (std::size_t i : idx)
        out.points.push_back(pc.points[i]);
    return out;
}

PointCloud preprocess(const PointCloud& pc, const PrepConfig& cfg, WarnCounter* warn) {
    PointCloud edges = extract_edges(pc, cfg, warn);
    return farthest_point_sample(edges, cfg.fps_target_count, cfg.fps_seed_rule);
}

} // namespace radsplat::prep
