// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors
//
// Test-only central finite-difference oracle. Independent of the tape's
// backward pass: it re-runs the forward closure at perturbed parameters.

#pragma once

#include "core/autodiff.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace radsplat::testing {

struct FdReport {
    bool ok = true;
    double worst_rel = 0.0;
    std::string where;
};

// make_loss receives the parameter set and must return the scalar loss value.
// analytic_grads are compared against central differences with step h; a
// mismatch is flagged when |ad - fd| > rel_tol * max(|ad|, |fd|, abs_floor).
inline FdReport check_gradients(
    const std::vector<ad::Array>& params,
    const std::function<double(const std::vector<ad::Array>&)>& loss_value,
    const std::vector<ad::Array>& analytic_grads, double rel_tol = 1e-4,
    double abs_floor = 1e-6, double h = 1e-5) {
    FdReport rep;
    std::vector<ad::Array> work = params;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            const double keep = work[p].v[i];
            work[p].v[i] = keep + h;
            const double up = loss_value(work);
            work[p].v[i] = keep - h;
            const double dn = loss_value(work);
            work[p].v[i] = keep;
            const double fd = (up - dn) / (2.0 * h);
            const double adg = analytic_grads[p].v[i];
            const double denom = std::max({std::fabs(adg), std::fabs(fd), abs_floor});
            const double rel = std::fabs(adg - fd) / denom;
            if (rel > rep.worst_rel) {
                rep.worst_rel = rel;
                rep.where = "param " + std::to_string(p) + " index " + std::to_string(i) +
                            " ad=" + std::to_string(adg) + " fd=" + std::to_string(fd);
            }
            if (rel > rel_tol)
                rep.ok = false;
        }
    }
    return rep;
}

// Convenience: builds the tape once for analytic gradients, then runs the FD
// sweep with the same graph builder.
inline FdReport check_tape_gradients(
    const std::vector<ad::Array>& params,
    const std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>& build,
    double rel_tol = 1e-4, double abs_floor = 1e-6, double h = 1e-5) {
    auto eval = [&](const std::vector<ad::Array>& ps) {
        ad::Tape t;
        std::vector<ad::Var> leaves;
        leaves.reserve(ps.size());
        for (const auto& p : ps)
            leaves.push_back(t.input(p));
        return t.val(build(t, leaves)).v[0];
    };

    ad::Tape t;
    std::vector<ad::Var> leaves;
    for (const auto& p : params)
        leaves.push_back(t.input(p));
    ad::Var root = build(t, leaves);
    t.backward(root);
    std::vector<ad::Array> grads;
    for (ad::Var l : leaves)
        grads.push_back(t.grad(l));

    return check_gradients(params, eval, grads, rel_tol, abs_floor, h);
}

inline ad::Array random_array(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                              double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    ad::Array a(r, c);
    for (double& x : a.v)
        x = dist(rng);
    return a;
}

} // namespace radsplat::testing
