// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#include "core/synth.hpp"

#include "core/rng.hpp"

#include <algorithm>
#include <cmath>

namespace radsplat::synth {

namespace {

constexpr double kFacePush = 1e-3;  // scatterer offset off its face
constexpr double kBoxInset = 1e-6;  // blocking test shrink, avoids surface grazing

double wrap_angle(double a) {
    while (a > M_PI)
        a -= 2.0 * M_PI;
    while (a < -M_PI)
        a += 2.0 * M_PI;
    return a;
}

struct Face {
    Vec3 center, normal;
    Vec3 u_axis, v_axis; // in-plane axes
    double u_half, v_half;
};

Face box_face(const Box& b, int f) {
    const Vec3 c = (b.lo + b.hi) * 0.5;
    const Vec3 h = (b.hi - b.lo) * 0.5;
    Face face;
    switch (f) {
    case 0: face = {{b.hi.x, c.y, c.z}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, h.y, h.z}; break;
    case 1: face = {{b.lo.x, c.y, c.z}, {-1, 0, 0}, {0, 1, 0}, {0, 0, 1}, h.y, h.z}; break;
    case 2: face = {{c.x, b.hi.y, c.z}, {0, 1, 0}, {1, 0, 0}, {0, 0, 1}, h.x, h.z}; break;
    case 3: face = {{c.x, b.lo.y, c.z}, {0, -1, 0}, {1, 0, 0}, {0, 0, 1}, h.x, h.z}; break;
    case 4: face = {{c.x, c.y, b.hi.z}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, h.x, h.y}; break;
    default: face = {{c.x, c.y, b.lo.z}, {0, 0, -1}, {1, 0, 0}, {0, 1, 0}, h.x, h.y}; break;
    }
    return face;
}

Box inset_box(const Box& b) {
    return Box{{b.lo.x + kBoxInset, b.lo.y + kBoxInset, b.lo.z + kBoxInset},
               {b.hi.x - kBoxInset, b.hi.y - kBoxInset, b.hi.z - kBoxInset}};
}

bool blocked(const Vec3& a, const Vec3& b, const std::vector<Box>& boxes) {
    for (const Box& box : boxes)
        if (segment_intersects_box(a, b, inset_box(box)))
            return true;
    return false;
}

} // namespace

SplitMode split_mode_from_string(const std::string& s) {
    if (s == "edge-band" || s == "edge_band")
        return SplitMode::EdgeBand;
    if (s == "central-hole" || s == "central_hole")
        return SplitMode::CentralHole;
    throw DataError("unknown split mode: " + s);
}

std::string to_string(SplitMode mode) {
    return mode == SplitMode::EdgeBand ? "edge-band" : "central-hole";
}

void GenSpec::validate() const {
    beams.validate();
    if (grid_nx < 2 || grid_ny < 2)
        throw DataError("grid must be at least 2x2");
    if (obstacle_count < 1)
        throw DataError("at least one obstacle required");
    if (!(cell > 0.0) || !(wavelength > 0.0))
        throw DataError("cell and wavelength must be positive");
    if (noise_db < 0.0)
        throw DataError("noise level must be nonnegative");
    if (!(split_fraction > 0.0) || !(split_fraction < 1.0))
        throw DataError("split fraction must be in (0,1)");
}

Vec3 SyntheticScene::grid_position(int ix, int iy) const {
    return Vec3{(static_cast<double>(ix) + 0.5) * cell, (static_cast<double>(iy) + 0.5) * cell,
                height};
}

bool segment_intersects_box(const Vec3& a, const Vec3& b, const Box& box) {
    double t0 = 0.0, t1 = 1.0;
    const double av[3] = {a.x, a.y, a.z};
    const double bv[3] = {b.x, b.y, b.z};
    const double lo[3] = {box.lo.x, box.lo.y, box.lo.z};
    const double hi[3] = {box.hi.x, box.hi.y, box.hi.z};
    for (int ax = 0; ax < 3; ++ax) {
        const double d = bv[ax] - av[ax];
        if (std::fabs(d) < 1e-15) {
            if (av[ax] < lo[ax] || av[ax] > hi[ax])
                return false;
            continue;
        }
        double ta = (lo[ax] - av[ax]) / d;
        double tb = (hi[ax] - av[ax]) / d;
        if (ta > tb)
            std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1)
            return false;
    }
    return true;
}

GenResult gen_scene(const GenSpec& spec) {
    spec.validate();
    GenResult out;
    SyntheticScene& sc = out.scene;
    sc.bs = spec.bs;
    sc.beams = spec.beams;
    sc.az_min = spec.az_min;
    sc.az_max = spec.az_max;
    sc.el_min = spec.el_min;
    sc.el_max = spec.el_max;
    sc.beam_sigma = spec.beam_sigma > 0.0
                        ? spec.beam_sigma
                        : (spec.az_max - spec.az_min) / static_cast<double>(spec.beams.m1);
    sc.wavelength = spec.wavelength;
    sc.grid_nx = spec.grid_nx;
    sc.grid_ny = spec.grid_ny;
    sc.cell = spec.cell;
    sc.height = spec.height;
    sc.noise_db = spec.noise_db;
    sc.seed = spec.seed;

    const double ax = spec.grid_nx * spec.cell;
    const double ay = spec.grid_ny * spec.cell;

    auto brng = seeded_stream(spec.seed, "gen.boxes");
    std::uniform_real_distribution<double> usize(spec.box_size_min, spec.box_size_max);
    std::uniform_real_distribution<double> uh(spec.box_height_min, spec.box_height_max);
    std::uniform_real_distribution<double> ux(0.05 * ax, 0.95 * ax);
    std::uniform_real_distribution<double> uy(0.05 * ay, 0.95 * ay);
    for (int i = 0; i < spec.obstacle_count; ++i) {
        const double sx = usize(brng), sy = usize(brng), h = uh(brng);
        const double cx = ux(brng), cy = uy(brng);
        Box b{{cx - sx / 2, cy - sy / 2, 0.0}, {cx + sx / 2, cy + sy / 2, h}};
        sc.boxes.push_back(b);
    }

    // faces visible from the BS become the true scatterers
    auto rrng = seeded_stream(spec.seed, "gen.refl");
    std::uniform_real_distribution<double> urefl(spec.refl_min, spec.refl_max);
    for (std::size_t bi = 0; bi < sc.boxes.size(); ++bi) {
        for (int f = 0; f < 6; ++f) {
            const double refl = urefl(rrng); // one draw per face, fixed order
            const Face face = box_face(sc.boxes[bi], f);
            if (face.normal.dot(sc.bs - face.center) <= 0.0)
                continue; // back-facing
            const Vec3 pos = face.center + face.normal * kFacePush;
            if (blocked(sc.bs, pos, sc.boxes))
                continue;
            sc.scatterers.push_back(
                Scatterer{pos, face.normal, refl, static_cast<int>(bi), f});
        }
    }
    if (sc.scatterers.empty())
        throw DataError("generated scene has no BS-visible faces; adjust the spec");

    // LiDAR stand-in: lattice samples on every box face plus optional ground
    auto crng = seeded_stream(spec.seed, "gen.cloud");
    std::uniform_real_distribution<double> jit(-spec.point_jitter, spec.point_jitter);
    for (const Box& b : sc.boxes) {
        for (int f = 0; f < 6; ++f) {
            if (f == 5)
                continue; // bottom face sits on the ground
            const Face face = box_face(b, f);
            const int nu = std::max(2, static_cast<int>(2.0 * face.u_half / spec.point_spacing) + 1);
            const int nv = std::max(2, static_cast<int>(2.0 * face.v_half / spec.point_spacing) + 1);
            for (int i = 0; i < nu; ++i)
                for (int j = 0; j < nv; ++j) {
                    const double du = -face.u_half + 2.0 * face.u_half * i / (nu - 1);
                    const double dv = -face.v_half + 2.0 * face.v_half * j / (nv - 1);
                    Vec3 p = face.center + face.u_axis * du + face.v_axis * dv;
                    p = p + face.u_axis * jit(crng) + face.v_axis * jit(crng) +
                        face.normal * jit(crng);
                    out.cloud.points.push_back(p);
                }
        }
    }
    if (spec.ground_points) {
        const double gs = spec.point_spacing * 4.0;
        for (double x = gs / 2; x < ax; x += gs)
            for (double y = gs / 2; y < ay; y += gs)
                out.cloud.points.push_back({x + jit(crng), y + jit(crng), std::fabs(jit(crng))});
    }

    // transmit power: optionally normalized so the mean linear RSS is ~1
    sc.power = 1.0;
    double acc = 0.0;
    std::size_t cnt = 0;
    for (int ix = 0; ix < sc.grid_nx; ++ix)
        for (int iy = 0; iy < sc.grid_ny; ++iy) {
            const RssVector r = true_rss(sc, sc.grid_position(ix, iy));
            for (double v : r)
                acc += v;
            cnt += r.size();
        }
    const double mean = acc / static_cast<double>(cnt);
    if (!(mean > 0.0))
        throw DataError("degenerate scene: every grid is fully occluded");
    if (spec.autoscale_power)
        sc.power = 1.0 / mean;
    return out;
}

std::vector<char> path_mask(const SyntheticScene& scene, const Vec3& p) {
    std::vector<char> mask(scene.scatterers.size(), 0);
    for (std::size_t n = 0; n < scene.scatterers.size(); ++n) {
        const Vec3& s = scene.scatterers[n].pos;
        if (blocked(scene.bs, s, scene.boxes))
            continue;
        if (blocked(s, p, scene.boxes))
            continue;
        mask[n] = 1;
    }
    return mask;
}

RssVector true_rss(const SyntheticScene& scene, const Vec3& grid_pos) {
    const int m1 = scene.beams.m1, m2 = scene.beams.m2;
    const std::size_t m = static_cast<std::size_t>(scene.beams.total());
    const double daz = (scene.az_max - scene.az_min) / static_cast<double>(m1);
    const double del = (scene.el_max - scene.el_min) / static_cast<double>(m2);
    const double sig2 = 2.0 * scene.beam_sigma * scene.beam_sigma;

    std::vector<double> hre(m, 0.0), him(m, 0.0);
    const std::vector<char> mask = path_mask(scene, grid_pos);
    for (std::size_t n = 0; n < scene.scatterers.size(); ++n) {
        if (!mask[n])
            continue;
        const Scatterer& s = scene.scatterers[n];
        const double d1 = dist(scene.bs, s.pos);
        const double d2 = dist(s.pos, grid_pos);
        const double base = s.refl * scene.wavelength / (4.0 * M_PI * (d1 + d2));
        const Vec3 u = (s.pos - scene.bs) / d1;
        const double az = std::atan2(u.y, u.x);
        const double el = std::asin(std::clamp(u.z, -1.0, 1.0));
        const double phi = 2.0 * M_PI * (d1 + d2) / scene.wavelength;
        const double cphi = std::cos(phi), sphi = std::sin(phi);
        for (int i = 0; i < m1; ++i) {
            const double azc = scene.az_min + (i + 0.5) * daz;
            const double dazw = wrap_angle(az - azc);
            for (int j = 0; j < m2; ++j) {
                const double elc = scene.el_min + (j + 0.5) * del;
                const double dele = el - elc;
                const double gain = std::exp(-(dazw * dazw + dele * dele) / sig2);
                const double beta = base * gain;
                const std::size_t mm = static_cast<std::size_t>(i * m2 + j);
                hre[mm] += beta * cphi;
                him[mm] += beta * sphi;
            }
        }
    }
    RssVector rss(m);
    for (std::size_t mm = 0; mm < m; ++mm)
        rss[mm] = scene.power * (hre[mm] * hre[mm] + him[mm] * him[mm]);
    return rss;
}

RssVector add_noise(const RssVector& rss, double level_db, std::mt19937_64& rng) {
    if (level_db < 0.0)
        throw DataError("noise level must be nonnegative");
    if (level_db == 0.0)
        return rss;
    std::normal_distribution<double> nd(0.0, level_db);
    RssVector out(rss.size());
    for (std::size_t i = 0; i < rss.size(); ++i)
        out[i] = rss[i] * std::pow(10.0, nd(rng) / 10.0);
    return out;
}

std::pair<std::vector<int>, std::vector<int>> make_split(int nx, int ny, SplitMode mode,
                                                         double fraction) {
    if (!(fraction > 0.0) || !(fraction < 1.0))
        throw DataError("split fraction must be in (0,1)");
    const int total = nx * ny;
    const int target = static_cast<int>(std::llround(fraction * total));
    if (target < 1 || target >= total)
        throw DataError("split fraction incompatible with grid size");

    std::vector<int> held;
    held.reserve(static_cast<std::size_t>(target));
    auto id = [ny](int ix, int iy) { return ix * ny + iy; };

    if (mode == SplitMode::EdgeBand) {
        // rings from the border inward, each walked along its perimeter so the
        // growing region stays connected
        const int max_ring = (std::min(nx, ny) + 1) / 2;
        for (int r = 0; r < max_ring && static_cast<int>(held.size()) < target; ++r) {
            const int x0 = r, x1 = nx - 1 - r, y0 = r, y1 = ny - 1 - r;
            std::vector<int> ring;
            for (int x = x0; x <= x1; ++x)
                ring.push_back(id(x, y0));
            for (int y = y0 + 1; y <= y1; ++y)
                ring.push_back(id(x1, y));
            if (y1 > y0)
                for (int x = x1 - 1; x >= x0; --x)
                    ring.push_back(id(x, y1));
            if (x1 > x0)
                for (int y = y1 - 1; y > y0; --y)
                    ring.push_back(id(x0, y));
            for (int cid : ring) {
                if (static_cast<int>(held.size()) >= target)
                    break;
                held.push_back(cid);
            }
        }
    } else {
        // centered block filled row-major; the partial last row stays adjacent
        int h = std::min(ny, std::max(1, static_cast<int>(std::ceil(std::sqrt(
                                             static_cast<double>(target))))));
        int w = std::min(nx, (target + h - 1) / h);
        if (w * h < target) // stretch along the wider axis when clamped
            h = std::min(ny, (target + w - 1) / w);
        if (w * h < target)
            throw DataError("split fraction incompatible with contiguity");
        const int x0 = (nx - w) / 2, y0 = (ny - h) / 2;
        for (int dy = 0; dy < h && static_cast<int>(held.size()) < target; ++dy)
            for (int dx = 0; dx < w && static_cast<int>(held.size()) < target; ++dx)
                held.push_back(id(x0 + dx, y0 + dy));
    }

    std::sort(held.begin(), held.end());
    std::vector<int> train;
    train.reserve(static_cast<std::size_t>(total - target));
    std::size_t hp = 0;
    for (int i = 0; i < total; ++i) {
        if (hp < held.size() && held[hp] == i) {
            ++hp;
            continue;
        }
        train.push_back(i);
    }
    return {train, held};
}

MeasurementSet make_measurements(const SyntheticScene& scene, SplitMode mode, double fraction) {
    MeasurementSet ms;
    ms.bs_position = scene.bs;
    ms.beams = scene.beams;
    ms.grid_cell_size = scene.cell;
    ms.tx_power = scene.power;
    ms.grid_nx = scene.grid_nx;
    ms.grid_ny = scene.grid_ny;

    auto nrng = seeded_stream(scene.seed, "gen.noise");
    for (int ix = 0; ix < scene.grid_nx; ++ix)
        for (int iy = 0; iy < scene.grid_ny; ++iy) {
            const Vec3 p = scene.grid_position(ix, iy);
            ms.grid_positions.push_back(p);
            ms.rss.push_back(add_noise(true_rss(scene, p), scene.noise_db, nrng));
        }
    auto [train, test] = make_split(scene.grid_nx, scene.grid_ny, mode, fraction);
    ms.train_ids = std::move(train);
    ms.test_ids = std::move(test);
    return ms;
}

} // namespace radsplat::synth
