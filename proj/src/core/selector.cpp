// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#include "core/selector.hpp"

#include "core/kernels.hpp"
#include "core/prep.hpp"

#include <cmath>
#include <stdexcept>

namespace radsplat {

SelectionModel SelectionModel::init(const PointCloud& candidates, int n_scatterers) {
    candidates.validate();
    const std::size_t r = candidates.count();
    const std::size_t n = static_cast<std::size_t>(n_scatterers);
    if (n < 1 || n > r)
        throw std::invalid_argument("selection model: need 1 <= N <= R");

    SelectionModel m;
    m.points = ad::Array(r, 3);
    for (std::size_t i = 0; i < r; ++i) {
        m.points.at(i, 0) = candidates.points[i].x;
        m.points.at(i, 1) = candidates.points[i].y;
        m.points.at(i, 2) = candidates.points[i].z;
    }
    m.bias = ad::Array(n, 3, 0.0);

    const auto seeds = prep::farthest_point_indices(candidates.points, n);
    double sigma = prep::median_nn_distance(candidates);
    if (!(sigma > 0.0))
        sigma = 1.0;
    m.logits = ad::Array(n, r);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& s = candidates.points[seeds[i]];
        for (std::size_t j = 0; j < r; ++j)
            m.logits.at(i, j) = -dist(candidates.points[j], s) / sigma;
    }
    return m;
}

SelectionModel::TapeVars SelectionModel::build(ad::Tape& t) const {
    TapeVars v;
    v.logits = t.input(logits);
    v.bias = t.input(bias);
    v.t = t.softmax_rows(v.logits);
    v.means = t.add(t.matmul(v.t, t.input(points)), v.bias);
    return v;
}

ad::Array SelectionModel::selection_value() const {
    ad::Array t(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        double mx = logits.at(i, 0);
        for (std::size_t j = 1; j < logits.cols; ++j)
            mx = std::max(mx, logits.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            const double e = std::exp(logits.at(i, j) - mx);
            t.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < logits.cols; ++j)
            t.at(i, j) /= sum;
    }
    return t;
}

ad::Array SelectionModel::means_value(bool hard) const {
    if (hard)
        return round_selection().means;
    ad::Array mu = kernels::matmul(selection_value(), points);
    for (std::size_t i = 0; i < mu.size(); ++i)
        mu.v[i] += bias.v[i];
    return mu;
}

ad::Var SelectionModel::reg_loss(ad::Tape& t, const TapeVars& vars, const Vec3& bs,
                                 double lambda1, double lambda2, double lambda_mec,
                                 double lambda_sparsity) const {
    if (lambda1 < 0 || lambda2 < 0 || lambda_mec < 0 || lambda_sparsity < 0)
        throw std::invalid_argument("reg_loss: weights must be nonnegative");
    const std::size_t n = scatterer_count();

    // lambda1 * sum of row distances ||(T P)_n - bs||  (bias excluded here)
    ad::Var tp = t.matmul(vars.t, t.input(points));
    ad::Var bs_row = t.input(ad::Array::row({bs.x, bs.y, bs.z}));
    ad::Var d = t.sub_from_rowvec(bs_row, tp); // bs - (TP)_n rowwise
    ad::Var prox = t.sum(t.norm_l2_rows(d));

    ad::Var bias_norm = t.sum(t.norm_l2_rows(vars.bias));

    // MEC: sum_n (1 - max_r T_nr), zero exactly at one-hot rows
    ad::Var mec = t.add_scalar(t.scale(t.sum(t.max_rows(vars.t)), -1.0), static_cast<double>(n));

    // ||T||_1 is constant (= N) under the exact simplex; kept for non-softmax
    // parameterizations and documented as inert by default.
    ad::Var l1 = t.norm_l1(vars.t);

    ad::Var total = t.scale(prox, lambda1);
    total = t.add(total, t.scale(bias_norm, lambda2));
    total = t.add(total, t.scale(mec, lambda_mec));
    total = t.add(total, t.scale(l1, lambda_sparsity));
    return total;
}

ad::Array round_rows_to_binary(const ad::Array& t) {
    ad::Array out(t.rows, t.cols, 0.0);
    for (std::size_t i = 0; i < t.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < t.cols; ++j)
            if (t.at(i, j) > t.at(i, best))
                best = j; // ties keep lowest index
        out.at(i, best) = 1.0;
    }
    return out;
}

SelectionModel::Rounded SelectionModel::round_selection() const {
    Rounded out;
    out.t_binary = round_rows_to_binary(selection_value());
    out.selected.resize(out.t_binary.rows);
    for (std::size_t i = 0; i < out.t_binary.rows; ++i)
        for (std::size_t j = 0; j < out.t_binary.cols; ++j)
            if (out.t_binary.at(i, j) == 1.0)
                out.selected[i] = j;
    out.means = kernels::matmul(out.t_binary, points);
    for (std::size_t i = 0; i < out.means.size(); ++i)
        out.means.v[i] += bias.v[i];
    return out;
}

} // namespace radsplat
