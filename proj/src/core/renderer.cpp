// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#include "core/renderer.hpp"

#include "core/kernels.hpp"
#include "core/prep.hpp"
#include "core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace radsplat {

using ad::Array;
using ad::CVar;
using ad::Tape;
using ad::Var;

// ---------------------------------------------------------------------------
// shared value kernels: the tape ops and the frozen-parameter context call
// exactly these, so both paths produce identical values
// ---------------------------------------------------------------------------
namespace {

void pos_encode_row(const double* d, int order, double* out) {
    // sin block [ (v-1)*3 + c ], then cos block offset by 3*order
    double f = 1.0;
    for (int v = 0; v < order; ++v) {
        f *= M_PI;
        for (int c = 0; c < 3; ++c) {
            out[v * 3 + c] = std::sin(f * d[c]);
            out[order * 3 + v * 3 + c] = std::cos(f * d[c]);
        }
    }
}

void cov6_row(const double* q, const double* ls, double* out) {
    const double qn = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    const double inv = qn > 0.0 ? 1.0 / qn : 0.0;
    const double w = q[0] * inv, x = q[1] * inv, y = q[2] * inv, z = q[3] * inv;
    double R[3][3] = {{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                      {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                      {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
    double d[3];
    for (int i = 0; i < 3; ++i)
        d[i] = std::exp(2.0 * ls[i]);
    // Sigma = R diag(d) R^T, upper triangle
    double S[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            S[i][j] = R[i][0] * d[0] * R[j][0] + R[i][1] * d[1] * R[j][1] + R[i][2] * d[2] * R[j][2];
    out[0] = S[0][0];
    out[1] = S[0][1];
    out[2] = S[0][2];
    out[3] = S[1][1];
    out[4] = S[1][2];
    out[5] = S[2][2];
}

// Precision entries from the Cholesky pre-activations.
void precision_from_lraw(double a, double b, double c, double& lam11, double& lam12,
                         double& lam22) {
    const double l11 = kernels::softplus(a);
    const double l21 = b;
    const double l22 = kernels::softplus(c);
    lam11 = l11 * l11;
    lam12 = l11 * l21;
    lam22 = l21 * l21 + l22 * l22;
}

void splat_row(double x1, double x2, double lam11, double lam12, double lam22,
               const BeamGrid& grid, double scale_t, double* out) {
    for (int i = 0; i < grid.m1; ++i) {
        const double g1 = static_cast<double>(i) - x1;
        for (int j = 0; j < grid.m2; ++j) {
            const double g2 = static_cast<double>(j) - x2;
            const double q = g1 * g1 * lam11 + 2.0 * g1 * g2 * lam12 + g2 * g2 * lam22;
            out[i * grid.m2 + j] = std::exp(-0.5 * scale_t * q);
        }
    }
}

void view_dir_row(const Vec3& target, const double* mu, const Vec3& fallback, double eps,
                  double* out, bool* used_fallback) {
    const double ux = target.x - mu[0], uy = target.y - mu[1], uz = target.z - mu[2];
    const double r = std::sqrt(ux * ux + uy * uy + uz * uz);
    if (r < eps) {
        out[0] = fallback.x;
        out[1] = fallback.y;
        out[2] = fallback.z;
        *used_fallback = true;
        return;
    }
    const double inv = 1.0 / r;
    out[0] = ux * inv;
    out[1] = uy * inv;
    out[2] = uz * inv;
    *used_fallback = false;
}

// Depth-sorted complex compositing; per beam:
//   Q_0 = 1, A_i = alpha_i Q_i, Q_{i+1} = Q_i (1 - alpha_i)
//   S = sum_i (c_i w_i) A_i,  y = P |S|^2
void composite_forward(const Array& cre, const Array& cim, const Array& are, const Array& aim,
                       const Array& w, const std::vector<int>& order, double power, double* y,
                       double* s_re, double* s_im) {
    const std::size_t m = cre.cols;
    const std::size_t n = order.size();
    for (std::size_t mm = 0; mm < m; ++mm) {
        double qre = 1.0, qim = 0.0, sre = 0.0, sim = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t idx = static_cast<std::size_t>(order[i]);
            const double ar = are.at(idx, mm), ai = aim.at(idx, mm);
            const double Are = ar * qre - ai * qim;
            const double Aim = ar * qim + ai * qre;
            const double wv = w.at(idx, mm);
            const double cwre = cre.at(idx, mm) * wv;
            const double cwim = cim.at(idx, mm) * wv;
            sre += cwre * Are - cwim * Aim;
            sim += cwre * Aim + cwim * Are;
            const double nqre = qre * (1.0 - ar) + qim * ai;
            const double nqim = -qre * ai + qim * (1.0 - ar);
            qre = nqre;
            qim = nqim;
        }
        y[mm] = power * (sre * sre + sim * sim);
        if (s_re)
            s_re[mm] = sre;
        if (s_im)
            s_im[mm] = sim;
    }
}

Vec3 fallback_direction(const Vec3& target, const Vec3& bs) {
    const Vec3 u = target - bs;
    const double r = u.norm();
    if (r < 1e-12)
        return Vec3{0.0, 0.0, 1.0};
    return u / r;
}

} // namespace

// ---------------------------------------------------------------------------
// Aabb / ScattererParams / RadModel
// ---------------------------------------------------------------------------

void Aabb::expand(const Vec3& p) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
}

Aabb Aabb::of(const std::vector<Vec3>& pts) {
    if (pts.empty())
        throw std::invalid_argument("aabb of empty set");
    Aabb box{pts[0], pts[0]};
    for (const Vec3& p : pts)
        box.expand(p);
    return box;
}

ScattererParams ScattererParams::init(int n, int m, int sh_degree,
                                      std::mt19937_64& phase_rng) {
    const int b = (sh_degree + 1) * (sh_degree + 1);
    ScattererParams sc;
    sc.log_scale = Array(static_cast<std::size_t>(n), 3, 0.0);
    sc.quat = Array(static_cast<std::size_t>(n), 4, 0.0);
    for (int i = 0; i < n; ++i)
        sc.quat.at(static_cast<std::size_t>(i), 0) = 1.0;
    std::uniform_real_distribution<double> uphase(-M_PI, M_PI);
    sc.att_phase = Array(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
    sc.sig_phase = Array(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
    for (double& x : sc.att_phase.v)
        x = uphase(phase_rng);
    for (double& x : sc.sig_phase.v)
        x = uphase(phase_rng);
    sc.sh_coef =
        Array(static_cast<std::size_t>(n), static_cast<std::size_t>(m * b), 0.0);
    // start near an isotropic weak emitter: small DC coefficient only
    for (int i = 0; i < n; ++i)
        for (int mm = 0; mm < m; ++mm)
            sc.sh_coef.at(static_cast<std::size_t>(i), static_cast<std::size_t>(mm * b)) = 0.01;
    return sc;
}

void ScattererParams::renormalize_quats() {
    for (std::size_t i = 0; i < quat.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
            s += quat.at(i, j) * quat.at(i, j);
        s = std::sqrt(s);
        if (s > 0.0)
            for (std::size_t j = 0; j < 4; ++j)
                quat.at(i, j) /= s;
        else
            quat.at(i, 0) = 1.0;
    }
}

MeansMode means_mode_from_string(const std::string& s) {
    if (s == "rm" || s == "radsplatter")
        return MeansMode::Rm;
    if (s == "direct" || s == "direct_opt")
        return MeansMode::DirectOpt;
    if (s == "direct_fixed")
        return MeansMode::DirectFixed;
    throw DataError("unknown means mode: " + s);
}

std::string to_string(MeansMode mode) {
    switch (mode) {
    case MeansMode::Rm:
        return "rm";
    case MeansMode::DirectOpt:
        return "direct_opt";
    case MeansMode::DirectFixed:
        return "direct_fixed";
    }
    return "rm";
}

RadModel RadModel::init(const SceneConfig& cfg, const Vec3& bs, const PointCloud& candidates,
                        const Aabb& scene_box, const Aabb& coverage_box, MeansMode mode,
                        std::uint64_t seed, MeansInit means_init) {
    cfg.validate();
    RadModel model;
    model.cfg = cfg;
    model.means_mode = mode;
    model.bs = bs;
    model.norm.center = scene_box.center();
    model.norm.diag = scene_box.diag() > 0.0 ? scene_box.diag() : 1.0;

    const int n = cfg.scatterer_count;
    const int m = cfg.beam_grid.total();

    if (mode == MeansMode::Rm) {
        model.rm = SelectionModel::init(candidates, n);
    } else {
        model.direct_means = Array(static_cast<std::size_t>(n), 3);
        auto rng = seeded_stream(seed, "init.means");
        if (means_init == MeansInit::Cloud) {
            if (candidates.count() < static_cast<std::size_t>(n))
                throw DataError("cloud-initialized means need a candidate cloud with >= N points");
            auto idx =
                prep::farthest_point_indices(candidates.points, static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                const Vec3& p = candidates.points[idx[static_cast<std::size_t>(i)]];
                model.direct_means.at(static_cast<std::size_t>(i), 0) = p.x;
                model.direct_means.at(static_cast<std::size_t>(i), 1) = p.y;
                model.direct_means.at(static_cast<std::size_t>(i), 2) = p.z;
            }
        } else {
            std::uniform_real_distribution<double> ux(coverage_box.lo.x, coverage_box.hi.x);
            std::uniform_real_distribution<double> uy(coverage_box.lo.y, coverage_box.hi.y);
            std::uniform_real_distribution<double> uz(coverage_box.lo.z, coverage_box.hi.z);
            for (int i = 0; i < n; ++i) {
                model.direct_means.at(static_cast<std::size_t>(i), 0) = ux(rng);
                model.direct_means.at(static_cast<std::size_t>(i), 1) = uy(rng);
                model.direct_means.at(static_cast<std::size_t>(i), 2) = uz(rng);
            }
        }
    }

    model.mlp1 = ad::Mlp::make(6 * cfg.encoding_order, cfg.mlp_hidden, cfg.mlp_depth, m,
                               ad::Activation::Relu, ad::Activation::Sigmoid);
    model.mlp2 = ad::Mlp::make(3, cfg.mlp_hidden, cfg.mlp_depth, 2, ad::Activation::Relu,
                               ad::Activation::Sigmoid);
    model.mlp3 = ad::Mlp::make(6, cfg.mlp_hidden, cfg.mlp_depth, 3, ad::Activation::Relu,
                               ad::Activation::None);
    {
        auto r1 = seeded_stream(seed, "init.mlp1");
        model.mlp1.init_params(r1);
        auto r2 = seeded_stream(seed, "init.mlp2");
        model.mlp2.init_params(r2);
        auto r3 = seeded_stream(seed, "init.mlp3");
        model.mlp3.init_params(r3);
    }
    // start with low per-scatterer extinction so deep scatterers stay live
    for (double& x : model.mlp1.biases.back().v)
        x = -5.0;
    // and with wide splats (small precision): softplus(-1.5) ~ 0.2
    model.mlp3.biases.back().v = {-1.5, 0.0, -1.5};

    auto rphase = seeded_stream(seed, "init.phases");
    model.sc = ScattererParams::init(n, m, cfg.sh_degree, rphase);
    return model;
}

ad::Array RadModel::means_value(bool hard) const {
    if (means_mode == MeansMode::Rm)
        return rm.means_value(hard);
    return direct_means;
}

void RadModel::register_params(ad::ParamStore& store) {
    visit_params([&store](const char* name, Array* a, bool trainable) {
        store.add(name, a, trainable);
    });
}

// ---------------------------------------------------------------------------
// fused ops
// ---------------------------------------------------------------------------
namespace ops {

Var pos_encode(Tape& t, Var d, int order) {
    const Array& vd = t.val(d);
    if (vd.cols != 3)
        throw std::invalid_argument("pos_encode: input must be [N,3]");
    if (order < 1)
        throw std::invalid_argument("pos_encode: order must be >= 1");
    Array out(vd.rows, static_cast<std::size_t>(6 * order));
    for (std::size_t i = 0; i < vd.rows; ++i)
        pos_encode_row(&vd.v[i * 3], order, &out.v[i * out.cols]);
    const int id = d.id;
    return t.make_node(std::move(out), [id, order](Tape& tt, int self) {
        const Array& g = tt.grad_buf(self);
        const Array& x = tt.val_of(id);
        Array& gx = tt.grad_buf(id);
        for (std::size_t i = 0; i < x.rows; ++i) {
            double f = 1.0;
            for (int v = 0; v < order; ++v) {
                f *= M_PI;
                for (int c = 0; c < 3; ++c) {
                    const double arg = f * x.at(i, static_cast<std::size_t>(c));
                    const double gs = g.at(i, static_cast<std::size_t>(v * 3 + c));
                    const double gc = g.at(i, static_cast<std::size_t>(order * 3 + v * 3 + c));
                    gx.at(i, static_cast<std::size_t>(c)) +=
                        f * (gs * std::cos(arg) - gc * std::sin(arg));
                }
            }
        }
    });
}

Var sh_basis(Tape& t, Var v, int degree) {
    const Array& vv = t.val(v);
    if (vv.cols != 3)
        throw std::invalid_argument("sh_basis: input must be [N,3]");
    const std::size_t b = static_cast<std::size_t>((degree + 1) * (degree + 1));
    Array out(vv.rows, b);
    for (std::size_t i = 0; i < vv.rows; ++i)
        kernels::sh_basis(degree, vv.at(i, 0), vv.at(i, 1), vv.at(i, 2), &out.v[i * b]);
    const int id = v.id;
    return t.make_node(std::move(out), [id, degree, b](Tape& tt, int self) {
        const Array& g = tt.grad_buf(self);
        const Array& x = tt.val_of(id);
        Array& gx = tt.grad_buf(id);
        std::vector<double> jac(b * 3);
        for (std::size_t i = 0; i < x.rows; ++i) {
            kernels::sh_basis_jac(degree, x.at(i, 0), x.at(i, 1), x.at(i, 2), jac.data());
            for (std::size_t k = 0; k < b; ++k) {
                const double gk = g.at(i, k);
                gx.at(i, 0) += gk * jac[k * 3 + 0];
                gx.at(i, 1) += gk * jac[k * 3 + 1];
                gx.at(i, 2) += gk * jac[k * 3 + 2];
            }
        }
    });
}

Var sh_contract(Tape& t, Var tau, Var basis) {
    const Array& vt = t.val(tau);
    const Array& vb = t.val(basis);
    if (vt.rows != vb.rows || vb.cols == 0 || vt.cols % vb.cols != 0)
        throw std::invalid_argument("sh_contract: tau must be [N, M*B] with basis [N,B]");
    const std::size_t b = vb.cols;
    const std::size_t m = vt.cols / b;
    Array out(vt.rows, m);
    for (std::size_t i = 0; i < vt.rows; ++i)
        for (std::size_t mm = 0; mm < m; ++mm) {
            double s = 0.0;
            for (std::size_t k = 0; k < b; ++k)
                s += vt.at(i, mm * b + k) * vb.at(i, k);
            out.at(i, mm) = s;
        }
    const int it = tau.id, ib = basis.id;
    return t.make_node(std::move(out), [it, ib, b, m](Tape& tt, int self) {
        const Array& g = tt.grad_buf(self);
        const Array& vt2 = tt.val_of(it);
        const Array& vb2 = tt.val_of(ib);
        Array& gt = tt.grad_buf(it);
        Array& gb = tt.grad_buf(ib);
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t mm = 0; mm < m; ++mm) {
                const double gm = g.at(i, mm);
                for (std::size_t k = 0; k < b; ++k) {
                    gt.at(i, mm * b + k) += gm * vb2.at(i, k);
                    gb.at(i, k) += gm * vt2.at(i, mm * b + k);
                }
            }
    });
}

Var view_dirs(Tape& t, Var means, const Vec3& target, const Vec3& fallback, WarnCounter* warn,
              double eps) {
    const Array& mu = t.val(means);
    if (mu.cols != 3)
        throw std::invalid_argument("view_dirs: means must be [N,3]");
    Array out(mu.rows, 3);
    auto live = std::make_shared<std::vector<bool>>(mu.rows, true);
    for (std::size_t i = 0; i < mu.rows; ++i) {
        bool fb = false;
        view_dir_row(target, &mu.v[i * 3], fallback, eps, &out.v[i * 3], &fb);
        if (fb) {
            (*live)[i] = false;
            if (warn)
                warn->coincident_view_targets++;
        }
    }
    const int id = means.id;
    return t.make_node(std::move(out), [id, target, live](Tape& tt, int self) {
        const Array& g = tt.grad_buf(self);
        const Array& v = tt.val_of(self);
        const Array& mu2 = tt.val_of(id);
        Array& gm = tt.grad_buf(id);
        for (std::size_t i = 0; i < g.rows; ++i) {
            if (!(*live)[i])
                continue; // fallback rows are constants
            const double ux = target.x - mu2.at(i, 0);
            const double uy = target.y - mu2.at(i, 1);
            const double uz = target.z - mu2.at(i, 2);
            const double r = std::sqrt(ux * ux + uy * uy + uz * uz);
            const double inv = 1.0 / r;
            const double vx = v.at(i, 0), vy = v.at(i, 1), vz = v.at(i, 2);
            const double dot = g.at(i, 0) * vx + g.at(i, 1) * vy + g.at(i, 2) * vz;
            // d v / d mu = -(I - v v^T)/r
            gm.at(i, 0) -= (g.at(i, 0) - vx * dot) * inv;
            gm.at(i, 1) -= (g.at(i, 1) - vy * dot) * inv;
            gm.at(i, 2) -= (g.at(i, 2) - vz * dot) * inv;
        }
    });
}

Var cov6(Tape& t, Var quat, Var log_scale) {
    const Array& q = t.val(quat);
    const Array& ls = t.val(log_scale);
    if (q.cols != 4 || ls.cols != 3 || q.rows != ls.rows)
        throw std::invalid_argument("cov6: quat [N,4] and log_scale [N,3] required");
    Array out(q.rows, 6);
    for (std::size_t i = 0; i < q.rows; ++i)
        cov6_row(&q.v[i * 4], &ls.v[i * 3], &out.v[i * 6]);
    const int iq = quat.id, il = log_scale.id;
    return t.make_node(std::move(out), [iq, il](Tape& tt, int self) {
        const Array& g = tt.grad_buf(self);
        const Array& q2 = tt.val_of(iq);
        const Array& ls2 = tt.val_of(il);
        Array& gq = tt.grad_buf(iq);
        Array& gl = tt.grad_buf(il);
        for (std::size_t i = 0; i < q2.rows; ++i) {
            const double* qr = &q2.v[i * 4];
            const double qn =
                std::sqrt(qr[0] * qr[0] + qr[1] * qr[1] + qr[2] * qr[2] + qr[3] * qr[3]);
            const double inv = qn > 0.0 ? 1.0 / qn : 0.0;
            const double w = qr[0] * inv, x = qr[1] * inv, y = qr[2] * inv, z = qr[3] * inv;
            const double R[3][3] = {
                {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
            double d[3];
            for (int k = 0; k < 3; ++k)
                d[k] = std::exp(2.0 * ls2.at(i, static_cast<std::size_t>(k)));

            // adjoint of the upper-triangle selection
            double M[3][3] = {{g.at(i, 0), g.at(i, 1), g.at(i, 2)},
                              {0.0, g.at(i, 3), g.at(i, 4)},
                              {0.0, 0.0, g.at(i, 5)}};

            // Rbar = (M + M^T) R D
            double Ms[3][3];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    Ms[r][c] = M[r][c] + M[c][r];
            double Rbar[3][3];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    double s = 0.0;
                    for (int k = 0; k < 3; ++k)
                        s += Ms[r][k] * R[k][c];
                    Rbar[r][c] = s * d[c];
                }
            // dbar_k = (R^T M R)_kk, then chain into log scales
            for (int k = 0; k < 3; ++k) {
                double s = 0.0;
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c)
                        s += R[r][k] * M[r][c] * R[c][k];
                gl.at(i, static_cast<std::size_t>(k)) += s * 2.0 * d[k];
            }
            // unit-quaternion adjoint via dR/du
            const double dRdu[4][3][3] = {
                {{0, -2 * z, 2 * y}, {2 * z, 0, -2 * x}, {-2 * y, 2 * x, 0}},
                {{0, 2 * y, 2 * z}, {2 * y, -4 * x, -2 * w}, {2 * z, 2 * w, -4 * x}},
                {{-4 * y, 2 * x, 2 * w}, {2 * x, 0, 2 * z}, {-2 * w, 2 * z, -4 * y}},
                {{-4 * z, -2 * w, 2 * x}, {2 * w, -4 * z, 2 * y}, {2 * x, 2 * y, 0}}};
            double ubar[4];
            for (int k = 0; k < 4; ++k) {
                double s = 0.0;
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c)
                        s += Rbar[r][c] * dRdu[k][r][c];
                ubar[k] = s;
            }
            // through normalization u = q/|q|
            const double u[4] = {w, x, y, z};
            double udot = 0.0;
            for (int k = 0; k < 4; ++k)
                udot += ubar[k] * u[k];
            for (int k = 0; k < 4; ++k)
                gq.at(i, static_cast<std::size_t>(k)) += (ubar[k] - u[k] * udot) * inv;
        }
    });
}

Var splat_weights_op(Tape& t, Var x2d, Var lraw, const BeamGrid& grid, double scale_t) {
    const Array& x = t.val(x2d);
    const Array& l = t.val(lraw);
    if (x.cols != 2 || l.cols != 3 || x.rows != l.rows)
        throw std::invalid_argument("splat_weights_op: x2d [N,2] and lraw [N,3] required");
    if (!(scale_t > 0.0))
        throw std::invalid_argument("splat_weights_op: scale must be positive");
    const std::size_t m = static_cast<std::size_t>(grid.total());
    Array out(x.rows, m);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double l11, l12, l22;
        precision_from_lraw(l.at(i, 0), l.at(i, 1), l.at(i, 2), l11, l12, l22);
        splat_row(x.at(i, 0), x.at(i, 1), l11, l12, l22, grid, scale_t, &out.v[i * m]);
    }
    const int ix = x2d.id, il = lraw.id;
    return t.make_node(std::move(out), [ix, il, grid, scale_t](Tape& tt, int self) {
        const Array& g = tt.grad_buf(self);
        const Array& wv = tt.val_of(self);
        const Array& x2 = tt.val_of(ix);
        const Array& l2 = tt.val_of(il);
        Array& gx = tt.grad_buf(ix);
        Array& glr = tt.grad_buf(il);
        for (std::size_t i = 0; i < x2.rows; ++i) {
            const double a = l2.at(i, 0), b = l2.at(i, 1), c = l2.at(i, 2);
            const double l11 = kernels::softplus(a);
            const double l21 = b;
            const double l22 = kernels::softplus(c);
            const double lam11 = l11 * l11, lam12 = l11 * l21, lam22 = l21 * l21 + l22 * l22;
            double d11 = 0.0, d12 = 0.0, d22 = 0.0, dx1 = 0.0, dx2 = 0.0;
            for (int bi = 0; bi < grid.m1; ++bi) {
                const double g1 = static_cast<double>(bi) - x2.at(i, 0);
                for (int bj = 0; bj < grid.m2; ++bj) {
                    const double g2 = static_cast<double>(bj) - x2.at(i, 1);
                    const std::size_t mm = static_cast<std::size_t>(bi * grid.m2 + bj);
                    const double gw = g.at(i, mm) * wv.at(i, mm) * scale_t;
                    d11 += gw * (-0.5) * g1 * g1;
                    d12 += gw * (-1.0) * g1 * g2;
                    d22 += gw * (-0.5) * g2 * g2;
                    dx1 += gw * (lam11 * g1 + lam12 * g2);
                    dx2 += gw * (lam12 * g1 + lam22 * g2);
                }
            }
            gx.at(i, 0) += dx1;
            gx.at(i, 1) += dx2;
            const double sa = kernels::sigmoid(a), sc = kernels::sigmoid(c);
            glr.at(i, 0) += (d11 * 2.0 * l11 + d12 * l21) * sa;
            glr.at(i, 1) += d12 * l11 + d22 * 2.0 * l21;
            glr.at(i, 2) += d22 * 2.0 * l22 * sc;
        }
    });
}

Var composite_em(Tape& t, CVar c, CVar att, Var w, const std::vector<int>& order, double power) {
    const Array& cre = t.val(c.re);
    const Array& cim = t.val(c.im);
    const Array& are = t.val(att.re);
    const Array& aim = t.val(att.im);
    const Array& wv = t.val(w);
    if (!cre.same_shape(cim) || !cre.same_shape(are) || !cre.same_shape(aim) ||
        !cre.same_shape(wv))
        throw std::invalid_argument("composite_em: all attribute arrays must be [N,M]");
    if (order.size() != cre.rows)
        throw std::invalid_argument("composite_em: order length must equal N");

    const std::size_t m = cre.cols;
    Array y(1, m);
    auto s_aux = std::make_shared<Array>(2, m);
    composite_forward(cre, cim, are, aim, wv, order, power, y.v.data(), &s_aux->v[0],
                      &s_aux->v[m]);

    const int icre = c.re.id, icim = c.im.id, iare = att.re.id, iaim = att.im.id, iw = w.id;
    auto ord = std::make_shared<std::vector<int>>(order);
    return t.make_node(std::move(y), [icre, icim, iare, iaim, iw, ord, s_aux,
                                      power](Tape& tt, int self) {
        const Array& g = tt.grad_buf(self);
        const Array& cre2 = tt.val_of(icre);
        const Array& cim2 = tt.val_of(icim);
        const Array& are2 = tt.val_of(iare);
        const Array& aim2 = tt.val_of(iaim);
        const Array& wv2 = tt.val_of(iw);
        Array& gcre = tt.grad_buf(icre);
        Array& gcim = tt.grad_buf(icim);
        Array& gare = tt.grad_buf(iare);
        Array& gaim = tt.grad_buf(iaim);
        Array& gw = tt.grad_buf(iw);

        const std::size_t n = ord->size();
        const std::size_t m2 = cre2.cols;
        std::vector<double> qre(n), qim(n), abre(n), abim(n);

        for (std::size_t mm = 0; mm < m2; ++mm) {
            const double sre = s_aux->at(0, mm), sim = s_aux->at(1, mm);
            const double sbre = 2.0 * power * g.v[mm] * sre;
            const double sbim = 2.0 * power * g.v[mm] * sim;

            // recompute prefix transmittances Q_i
            double qr = 1.0, qi = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                qre[i] = qr;
                qim[i] = qi;
                const std::size_t idx = static_cast<std::size_t>((*ord)[i]);
                const double ar = are2.at(idx, mm), ai = aim2.at(idx, mm);
                const double nqr = qr * (1.0 - ar) + qi * ai;
                const double nqi = -qr * ai + qi * (1.0 - ar);
                qr = nqr;
                qi = nqi;
            }
            // per-path adjoints: path_i = (c w) * A_i with A_i = alpha_i Q_i
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t idx = static_cast<std::size_t>((*ord)[i]);
                const double ar = are2.at(idx, mm), ai = aim2.at(idx, mm);
                const double Are = ar * qre[i] - ai * qim[i];
                const double Aim = ar * qim[i] + ai * qre[i];
                const double wvv = wv2.at(idx, mm);
                const double cr = cre2.at(idx, mm), ci = cim2.at(idx, mm);
                // cbar += Sbar * conj(A) * w
                gcre.at(idx, mm) += (sbre * Are + sbim * Aim) * wvv;
                gcim.at(idx, mm) += (-sbre * Aim + sbim * Are) * wvv;
                // Abar = Sbar * conj(c) * w
                abre[i] = (sbre * cr + sbim * ci) * wvv;
                abim[i] = (-sbre * ci + sbim * cr) * wvv;
                // wbar += Re(Sbar * conj(c A))
                const double cAre = cr * Are - ci * Aim;
                const double cAim = cr * Aim + ci * Are;
                gw.at(idx, mm) += sbre * cAre + sbim * cAim;
            }
            // reverse sweep through A_i = alpha_i Q_i and Q_{i+1} = Q_i (1-alpha_i)
            double qbr = 0.0, qbi = 0.0; // Qbar_{i+1}
            for (std::size_t ii = n; ii-- > 0;) {
                const std::size_t idx = static_cast<std::size_t>((*ord)[ii]);
                const double ar = are2.at(idx, mm), ai = aim2.at(idx, mm);
                const double Qre = qre[ii], Qim = qim[ii];
                // alphabar += Abar conj(Q) - Qbar_{i+1} conj(Q)
                const double tr = abre[ii] - qbr;
                const double ti = abim[ii] - qbi;
                gare.at(idx, mm) += tr * Qre + ti * Qim;
                gaim.at(idx, mm) += -tr * Qim + ti * Qre;
                // Qbar_i = Abar conj(alpha) + Qbar_{i+1} conj(1-alpha)
                // with conj(1-alpha) = (1-ar) + j*ai
                const double nqbr = (abre[ii] * ar + abim[ii] * ai) +
                                    (qbr * (1.0 - ar) - qbi * ai);
                const double nqbi = (-abre[ii] * ai + abim[ii] * ar) +
                                    (qbr * ai + qbi * (1.0 - ar));
                qbr = nqbr;
                qbi = nqbi;
            }
        }
    });
}

ad::CVar attenuation(Tape& t, Var means, const Vec3& bs, const ad::Mlp& net, Var phase,
                     int order, double inv_diag, const std::vector<Var>& wl,
                     const std::vector<Var>& bl) {
    Var bs_row = t.input(Array::row({bs.x, bs.y, bs.z}));
    Var d = t.sub_from_rowvec(bs_row, means); // P_BS - mu
    Var dn = t.scale(d, inv_diag);
    Var pe = pos_encode(t, dn, order);
    Var mag = net.forward(t, pe, wl, bl); // sigmoid output: magnitudes in (0,1)
    Var re = t.mul(mag, t.cos(phase));
    Var im = t.mul(mag, t.sin(phase));
    return {re, im};
}

} // namespace ops

// ---------------------------------------------------------------------------
// value-level pieces
// ---------------------------------------------------------------------------

std::vector<int> depth_order(const Array& means, const Vec3& target) {
    std::vector<int> idx(means.rows);
    std::vector<double> d2(means.rows);
    for (std::size_t i = 0; i < means.rows; ++i) {
        idx[i] = static_cast<int>(i);
        const double dx = means.at(i, 0) - target.x;
        const double dy = means.at(i, 1) - target.y;
        const double dz = means.at(i, 2) - target.z;
        d2[i] = dx * dx + dy * dy + dz * dz;
    }
    std::stable_sort(idx.begin(), idx.end(), [&d2](int a, int b) {
        return d2[static_cast<std::size_t>(a)] < d2[static_cast<std::size_t>(b)];
    });
    return idx;
}

std::vector<Projection2D> project_value(const RadModel& model, const Array& means) {
    const double inv_diag = 1.0 / model.norm.diag;
    Array mu_in(means.rows, 3);
    for (std::size_t i = 0; i < means.rows; ++i) {
        mu_in.at(i, 0) = (means.at(i, 0) + -model.norm.center.x) * inv_diag;
        mu_in.at(i, 1) = (means.at(i, 1) + -model.norm.center.y) * inv_diag;
        mu_in.at(i, 2) = (means.at(i, 2) + -model.norm.center.z) * inv_diag;
    }
    const Array x2raw = model.mlp2.forward_value(mu_in);
    Array c6(means.rows, 6);
    for (std::size_t i = 0; i < means.rows; ++i)
        cov6_row(&model.sc.quat.v[i * 4], &model.sc.log_scale.v[i * 3], &c6.v[i * 6]);
    const Array lraw = model.mlp3.forward_value(c6);

    const double o1 = static_cast<double>(model.cfg.beam_grid.m1 - 1);
    const double o2 = static_cast<double>(model.cfg.beam_grid.m2 - 1);
    std::vector<Projection2D> out(means.rows);
    for (std::size_t i = 0; i < means.rows; ++i) {
        out[i].x[0] = x2raw.at(i, 0) * o1;
        out[i].x[1] = x2raw.at(i, 1) * o2;
        precision_from_lraw(lraw.at(i, 0), lraw.at(i, 1), lraw.at(i, 2), out[i].lam[0],
                            out[i].lam[1], out[i].lam[2]);
    }
    return out;
}

Array splat_weights(const Projection2D& p, const BeamGrid& grid, double scale_t) {
    if (!(scale_t > 0.0))
        throw std::invalid_argument("splat_weights: scale must be positive");
    Array out(static_cast<std::size_t>(grid.m1), static_cast<std::size_t>(grid.m2));
    splat_row(p.x[0], p.x[1], p.lam[0], p.lam[1], p.lam[2], grid, scale_t, out.v.data());
    return out;
}

ComplexVec sh_radio(const Array& tau_n, Vec3 v, int degree, const std::vector<double>& phase,
                    WarnCounter* warn) {
    const std::size_t b = static_cast<std::size_t>((degree + 1) * (degree + 1));
    if (tau_n.cols != b)
        throw std::invalid_argument("sh_radio: tau must be [M, (k+1)^2]");
    const std::size_t m = tau_n.rows;
    if (phase.size() != m)
        throw std::invalid_argument("sh_radio: phase length must equal M");
    const double len = v.norm();
    if (std::fabs(len - 1.0) > 1e-6)
        throw std::domain_error("sh_radio: direction deviates from unit length");
    if (len != 1.0) {
        v = v / len;
        if (warn)
            warn->renormalized_directions++;
    }
    std::vector<double> basis(b);
    kernels::sh_basis(degree, v.x, v.y, v.z, basis.data());
    ComplexVec out;
    out.re.resize(m);
    out.im.resize(m);
    for (std::size_t mm = 0; mm < m; ++mm) {
        double s = 0.0;
        for (std::size_t k = 0; k < b; ++k)
            s += tau_n.at(mm, k) * basis[k];
        out.re[mm] = s * std::cos(phase[mm]);
        out.im[mm] = s * std::sin(phase[mm]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// render graph
// ---------------------------------------------------------------------------

RenderGraph build_render_graph(Tape& t, RadModel& model) {
    RenderGraph g;
    model.visit_params([&](const char* name, Array* a, bool) {
        g.names.emplace_back(name);
        g.leaves.push_back(t.input(*a));
    });
    auto leaf = [&g](const std::string& name) -> Var {
        for (std::size_t i = 0; i < g.names.size(); ++i)
            if (g.names[i] == name)
                return g.leaves[i];
        throw std::logic_error("render graph: missing leaf " + name);
    };

    // means
    if (model.means_mode == MeansMode::Rm) {
        g.selection = t.softmax_rows(leaf("rm.logits"));
        g.means = t.add(t.matmul(g.selection, leaf("rm.points")), leaf("rm.bias"));
    } else {
        g.means = leaf("means");
    }

    auto net_leaves = [&](const char* prefix, const ad::Mlp& net) {
        std::vector<Var> wl, bl;
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            wl.push_back(leaf(std::string(prefix) + ".w" + std::to_string(l)));
            bl.push_back(leaf(std::string(prefix) + ".b" + std::to_string(l)));
        }
        return std::make_pair(wl, bl);
    };

    const double inv_diag = 1.0 / model.norm.diag;

    // attenuation
    {
        auto [wl, bl] = net_leaves("mlp1", model.mlp1);
        ad::CVar att = ops::attenuation(t, g.means, model.bs, model.mlp1, leaf("sc.att_phase"),
                                        model.cfg.encoding_order, inv_diag, wl, bl);
        g.att_re = att.re;
        g.att_im = att.im;
    }

    // camera-free projection + splat weights
    {
        auto [wl2, bl2] = net_leaves("mlp2", model.mlp2);
        Var center_neg = t.input(
            Array::row({-model.norm.center.x, -model.norm.center.y, -model.norm.center.z}));
        Var mu_in = t.scale(t.add_rowvec(g.means, center_neg), inv_diag);
        Var x2raw = model.mlp2.forward(t, mu_in, wl2, bl2); // sigmoid in (0,1)
        Var ovec = t.input(Array::row({static_cast<double>(model.cfg.beam_grid.m1 - 1),
                                       static_cast<double>(model.cfg.beam_grid.m2 - 1)}));
        Var x2d = t.mul_rowvec(x2raw, ovec);

        auto [wl3, bl3] = net_leaves("mlp3", model.mlp3);
        Var c6 = ops::cov6(t, leaf("sc.quat"), leaf("sc.log_scale"));
        Var lraw = model.mlp3.forward(t, c6, wl3, bl3);
        g.w = ops::splat_weights_op(t, x2d, lraw, model.cfg.beam_grid, model.cfg.splat_scale);
    }

    g.cos_sig = t.cos(leaf("sc.sig_phase"));
    g.sin_sig = t.sin(leaf("sc.sig_phase"));
    g.tau = leaf("sc.sh_coef");
    return g;
}

Var render_sample(Tape& t, const RenderGraph& g, const RadModel& model, const Vec3& target,
                  WarnCounter* warn) {
    const std::vector<int> order = depth_order(t.val(g.means), target);
    const Vec3 fb = fallback_direction(target, model.bs);
    Var v = ops::view_dirs(t, g.means, target, fb, warn);
    Var basis = ops::sh_basis(t, v, model.cfg.sh_degree);
    Var csh = ops::sh_contract(t, g.tau, basis);
    Var c_re = t.mul(csh, g.cos_sig);
    Var c_im = t.mul(csh, g.sin_sig);
    return ops::composite_em(t, {c_re, c_im}, {g.att_re, g.att_im}, g.w, order,
                             model.cfg.tx_power);
}

RssVector render_value(RadModel& model, const Vec3& target, WarnCounter* warn) {
    Tape t;
    RenderGraph g = build_render_graph(t, model);
    Var y = render_sample(t, g, model, target, warn);
    return t.val(y).v;
}

// ---------------------------------------------------------------------------
// RenderContext
// ---------------------------------------------------------------------------

RenderContext::RenderContext(const RadModel& model, bool hard_means) {
    n_ = model.scatterer_count();
    m_ = model.beam_count();
    degree_ = model.cfg.sh_degree;
    basis_n_ = model.sh_basis_count();
    power_ = model.cfg.tx_power;
    bs_ = model.bs;
    means_ = model.means_value(hard_means);

    const double inv_diag = 1.0 / model.norm.diag;
    const std::size_t n = static_cast<std::size_t>(n_);
    const std::size_t m = static_cast<std::size_t>(m_);

    // attenuation: gamma(inv_diag*(bs - mu)) -> MLP1 -> complex via phase
    const int order = model.cfg.encoding_order;
    Array pe(n, static_cast<std::size_t>(6 * order));
    for (std::size_t i = 0; i < n; ++i) {
        double d[3] = {(bs_.x - means_.at(i, 0)) * inv_diag, (bs_.y - means_.at(i, 1)) * inv_diag,
                       (bs_.z - means_.at(i, 2)) * inv_diag};
        pos_encode_row(d, order, &pe.v[i * pe.cols]);
    }
    const Array mag = model.mlp1.forward_value(pe);
    att_re_ = Array(n, m);
    att_im_ = Array(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            att_re_.at(i, j) = mag.at(i, j) * std::cos(model.sc.att_phase.at(i, j));
            att_im_.at(i, j) = mag.at(i, j) * std::sin(model.sc.att_phase.at(i, j));
        }

    // projection + splat weights
    Array mu_in(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
        mu_in.at(i, 0) = (means_.at(i, 0) + -model.norm.center.x) * inv_diag;
        mu_in.at(i, 1) = (means_.at(i, 1) + -model.norm.center.y) * inv_diag;
        mu_in.at(i, 2) = (means_.at(i, 2) + -model.norm.center.z) * inv_diag;
    }
    const Array x2raw = model.mlp2.forward_value(mu_in);
    Array c6(n, 6);
    for (std::size_t i = 0; i < n; ++i)
        cov6_row(&model.sc.quat.v[i * 4], &model.sc.log_scale.v[i * 3], &c6.v[i * 6]);
    const Array lraw = model.mlp3.forward_value(c6);
    const double o1 = static_cast<double>(model.cfg.beam_grid.m1 - 1);
    const double o2 = static_cast<double>(model.cfg.beam_grid.m2 - 1);
    w_ = Array(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        double l11, l12, l22;
        precision_from_lraw(lraw.at(i, 0), lraw.at(i, 1), lraw.at(i, 2), l11, l12, l22);
        splat_row(x2raw.at(i, 0) * o1, x2raw.at(i, 1) * o2, l11, l12, l22, model.cfg.beam_grid,
                  model.cfg.splat_scale, &w_.v[i * m]);
    }

    cos_sig_ = Array(n, m);
    sin_sig_ = Array(n, m);
    for (std::size_t i = 0; i < n * m; ++i) {
        cos_sig_.v[i] = std::cos(model.sc.sig_phase.v[i]);
        sin_sig_.v[i] = std::sin(model.sc.sig_phase.v[i]);
    }
    tau_ = model.sc.sh_coef;
}

RssVector RenderContext::render(const Vec3& target, WarnCounter* warn) const {
    const std::size_t n = static_cast<std::size_t>(n_);
    const std::size_t m = static_cast<std::size_t>(m_);
    const std::size_t b = static_cast<std::size_t>(basis_n_);
    const Vec3 fb = fallback_direction(target, bs_);

    Array c_re(n, m), c_im(n, m);
    std::vector<double> basis(b);
    for (std::size_t i = 0; i < n; ++i) {
        double v[3];
        bool used_fb = false;
        view_dir_row(target, &means_.v[i * 3], fb, 1e-9, v, &used_fb);
        if (used_fb && warn)
            warn->coincident_view_targets++;
        kernels::sh_basis(degree_, v[0], v[1], v[2], basis.data());
        for (std::size_t mm = 0; mm < m; ++mm) {
            double s = 0.0;
            for (std::size_t k = 0; k < b; ++k)
                s += tau_.at(i, mm * b + k) * basis[k];
            c_re.at(i, mm) = s * cos_sig_.at(i, mm);
            c_im.at(i, mm) = s * sin_sig_.at(i, mm);
        }
    }
    const std::vector<int> order = depth_order(means_, target);
    RssVector y(m);
    composite_forward(c_re, c_im, att_re_, att_im_, w_, order, power_, y.data(), nullptr,
                      nullptr);
    return y;
}

} // namespace radsplat
