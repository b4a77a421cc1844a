// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include "core/autodiff.hpp"
#include "core/errors.hpp"
#include "core/geometry.hpp"
#include "core/mlp.hpp"
#include "core/optimizer.hpp"
#include "core/selector.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace radsplat {

struct Aabb {
    Vec3 lo{0, 0, 0}, hi{0, 0, 0};
    Vec3 center() const { return (lo + hi) * 0.5; }
    double diag() const { return (hi - lo).norm(); }
    void expand(const Vec3& p);
    static Aabb of(const std::vector<Vec3>& pts);
};

// Per-scatterer trainable attributes besides the means: anisotropic shape
// (log scales + quaternion), attenuation phase, signal phase, and the
// beam-indexed spherical-harmonics coefficients.
struct ScattererParams {
    ad::Array log_scale; // N x 3
    ad::Array quat;      // N x 4, renormalized after every optimizer step
    ad::Array att_phase; // N x M
    ad::Array sig_phase; // N x M
    ad::Array sh_coef;   // N x (M*B), B = (k+1)^2, layout [m*B + b]

    // Phases start uniform over (-pi, pi): an all-zero phase start is a
    // symmetric saddle where every phase gradient vanishes identically and
    // the model can never leave the real-valued subspace.
    static ScattererParams init(int n, int m, int sh_degree, std::mt19937_64& phase_rng);
    void renormalize_quats();
};

enum class MeansMode { Rm, DirectOpt, DirectFixed };
MeansMode means_mode_from_string(const std::string& s);
std::string to_string(MeansMode mode);

// Where non-RM means come from: farthest-point samples of the candidate cloud
// or uniform draws over the coverage box.
enum class MeansInit { Cloud, UniformBox };

// Input scaling constants baked into checkpoints so a loaded model renders
// identically regardless of the dataset at hand.
struct Normalization {
    Vec3 center{0, 0, 0};
    double diag = 1.0;
};

// The full trainable model: means source, the three projection/attenuation
// networks, and per-scatterer attributes.
struct RadModel {
    SceneConfig cfg;
    MeansMode means_mode = MeansMode::Rm;
    SelectionModel rm;      // valid in Rm mode
    ad::Array direct_means; // N x 3 in Direct* modes
    ad::Mlp mlp1, mlp2, mlp3;
    ScattererParams sc;
    Vec3 bs;
    Normalization norm;

    static RadModel init(const SceneConfig& cfg, const Vec3& bs, const PointCloud& candidates,
                         const Aabb& scene_box, const Aabb& coverage_box, MeansMode mode,
                         std::uint64_t seed, MeansInit means_init = MeansInit::Cloud);

    int scatterer_count() const { return cfg.scatterer_count; }
    int beam_count() const { return cfg.beam_grid.total(); }
    int sh_basis_count() const { return (cfg.sh_degree + 1) * (cfg.sh_degree + 1); }

    ad::Array means_value(bool hard) const;
    void renormalize_quats() { sc.renormalize_quats(); }

    // Visits every model array in the fixed registration order shared by the
    // optimizer, render graphs and checkpoints: f(name, array*, trainable).
    template <typename F> void visit_params(F&& f) {
        if (means_mode == MeansMode::Rm) {
            f("rm.logits", &rm.logits, true);
            f("rm.bias", &rm.bias, true);
            f("rm.points", &rm.points, false);
        } else {
            f("means", &direct_means, means_mode == MeansMode::DirectOpt);
        }
        auto net = [&f](const char* prefix, ad::Mlp& m) {
            for (std::size_t l = 0; l < m.weights.size(); ++l) {
                const std::string p(prefix);
                f((p + ".w" + std::to_string(l)).c_str(), &m.weights[l], true);
                f((p + ".b" + std::to_string(l)).c_str(), &m.biases[l], true);
            }
        };
        net("mlp1", mlp1);
        net("mlp2", mlp2);
        net("mlp3", mlp3);
        f("sc.log_scale", &sc.log_scale, true);
        f("sc.quat", &sc.quat, true);
        f("sc.att_phase", &sc.att_phase, true);
        f("sc.sig_phase", &sc.sig_phase, true);
        f("sc.sh_coef", &sc.sh_coef, true);
    }
    void register_params(ad::ParamStore& store);
};

// ---------------------------------------------------------------------------
// fused tape ops (hand-derived adjoints, each finite-difference tested)
// ---------------------------------------------------------------------------
namespace ops {

// [N,3] -> [N,6V]: sin(pi^v d_c) for v=1..V then cos(pi^v d_c), per coordinate.
ad::Var pos_encode(ad::Tape& t, ad::Var d, int order);

// [N,3] unit directions -> [N,(k+1)^2] real SH basis values.
ad::Var sh_basis(ad::Tape& t, ad::Var v, int degree);

// tau [N, M*B] x basis [N,B] -> [N,M]: out(n,m) = sum_b tau(n, m*B+b) basis(n,b)
ad::Var sh_contract(ad::Tape& t, ad::Var tau, ad::Var basis);

// v_n = (target - mu_n)/||target - mu_n||; rows closer than eps fall back to
// the constant direction `fallback` (zero gradient), counted as warnings.
ad::Var view_dirs(ad::Tape& t, ad::Var means, const Vec3& target, const Vec3& fallback,
                  WarnCounter* warn = nullptr, double eps = 1e-9);

// quat [N,4], log_scale [N,3] -> [N,6] upper-triangle of R diag(exp(2 ls)) R^T
ad::Var cov6(ad::Tape& t, ad::Var quat, ad::Var log_scale);

// x2d [N,2] beamspace means, lraw [N,3] Cholesky pre-activations
// (l11 = softplus(a), l21 = b, l22 = softplus(c)) -> splat weights [N,M]
ad::Var splat_weights_op(ad::Tape& t, ad::Var x2d, ad::Var lraw, const BeamGrid& grid,
                         double scale_t);

// Depth-sorted complex alpha compositing followed by the power readout:
// y_m = P |sum_n c ⊙ alpha_att ⊙ w|^2 with alpha_att the blended attenuation.
ad::Var composite_em(ad::Tape& t, ad::CVar c, ad::CVar att, ad::Var w,
                     const std::vector<int>& order, double power);

// Attenuation graph piece: alpha = sigmoid(MLP1(gamma(inv_diag*(bs - means))))
// ⊙ e^{j phase}. Leaves for the net are caller-provided (training order).
ad::CVar attenuation(ad::Tape& t, ad::Var means, const Vec3& bs, const ad::Mlp& net,
                     ad::Var phase, int order, double inv_diag, const std::vector<ad::Var>& wl,
                     const std::vector<ad::Var>& bl);

} // namespace ops

// Ascending distance-to-target order over scatterer rows; ties by lower index.
std::vector<int> depth_order(const ad::Array& means, const Vec3& target);

// ---------------------------------------------------------------------------
// value-level operations (frozen parameters)
// ---------------------------------------------------------------------------

struct Projection2D {
    double x[2];   // beamspace mean, within [0, M1-1] x [0, M2-1]
    double lam[3]; // precision entries (L11, L12, L22), SPD by construction
};

// Camera-free projection of every scatterer at fixed parameters.
std::vector<Projection2D> project_value(const RadModel& model, const ad::Array& means);

// Splat weight lattice for one projected scatterer; w(m1,m2) in (0,1].
ad::Array splat_weights(const Projection2D& p, const BeamGrid& grid, double scale_t);

struct ComplexVec {
    std::vector<double> re, im;
};

// View-dependent radio signal of one scatterer: sh(tau, v, k) ⊙ e^{j phase}.
// tau_n is [M, B]; v must be unit up to 1e-6 (renormalized with a warning)
// and errors beyond that.
ComplexVec sh_radio(const ad::Array& tau_n, Vec3 v, int degree, const std::vector<double>& phase,
                    WarnCounter* warn = nullptr);

// ---------------------------------------------------------------------------
// full differentiable renderer
// ---------------------------------------------------------------------------

// Grid-independent part of the render graph, built once per tape and shared by
// every sample in a mini-batch. Leaf order matches visit_params.
struct RenderGraph {
    std::vector<std::string> names;
    std::vector<ad::Var> leaves;
    ad::Var selection{}; // row-stochastic T (Rm mode only)
    ad::Var means{};
    ad::Var att_re{}, att_im{};
    ad::Var w{};
    ad::Var cos_sig{}, sin_sig{};
    ad::Var tau{};
};

RenderGraph build_render_graph(ad::Tape& t, RadModel& model);

// One target grid: view directions, SH radio signal, depth sort, compositing.
ad::Var render_sample(ad::Tape& t, const RenderGraph& g, const RadModel& model,
                      const Vec3& target, WarnCounter* warn = nullptr);

// Single-shot differentiable render (builds a private graph).
RssVector render_value(RadModel& model, const Vec3& target, WarnCounter* warn = nullptr);

// Frozen-parameter renderer: grid-independent tensors are prepared once, each
// render() is then O(N*M*B). Values agree with the tape path bit-for-bit.
class RenderContext {
public:
    RenderContext(const RadModel& model, bool hard_means);

    RssVector render(const Vec3& target, WarnCounter* warn = nullptr) const;
    const ad::Array& means() const { return means_; }
    int beam_count() const { return m_; }

private:
    int n_ = 0, m_ = 0, basis_n_ = 0, degree_ = 0;
    double power_ = 1.0;
    Vec3 bs_;
    ad::Array means_;
    ad::Array att_re_, att_im_;
    ad::Array w_;
    ad::Array cos_sig_, sin_sig_;
    ad::Array tau_;
};

} // namespace radsplat
