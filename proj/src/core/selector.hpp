// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include "core/autodiff.hpp"
#include "core/geometry.hpp"

#include <cstdint>
#include <vector>

namespace radsplat {

// Scatterer means reparameterized as a row-stochastic selection over the raw
// point cloud plus a trainable bias: means = softmax(logits) * points + bias.
// The softmax parameterization keeps every row on the simplex by construction.
struct SelectionModel {
    ad::Array logits; // N x R, trainable
    ad::Array bias;   // N x 3 (meters), trainable
    ad::Array points; // R x 3, cached raw candidate points

    std::size_t scatterer_count() const { return logits.rows; }
    std::size_t point_count() const { return logits.cols; }

    // Logits seeded from farthest-point samples of the cloud so the initial
    // soft means spread over it; bias starts at zero (the penalty minimum).
    static SelectionModel init(const PointCloud& candidates, int n_scatterers);

    struct TapeVars {
        ad::Var logits, bias; // leaves
        ad::Var t;            // softmax rows
        ad::Var means;        // N x 3
    };
    // Builds leaves + T = softmax(logits) and means = T*P + B on the tape.
    TapeVars build(ad::Tape& tape) const;

    // Row-stochastic T as plain values.
    ad::Array selection_value() const;
    // Soft means (hard = false) or argmax-rounded means (hard = true).
    ad::Array means_value(bool hard) const;

    // lambda1 * sum_n ||(T P)_n - bs|| + lambda2 * sum_n ||B_n||
    //  + lambda_mec * sum_n (1 - max_r T_nr) + lambda_sparsity * ||T||_1
    ad::Var reg_loss(ad::Tape& tape, const TapeVars& vars, const Vec3& bs, double lambda1,
                     double lambda2, double lambda_mec, double lambda_sparsity) const;

    struct Rounded {
        std::vector<std::size_t> selected; // argmax column per row
        ad::Array t_binary;                // N x R, exact 0/1 rows
        ad::Array means;                   // t_binary * P + B
    };
    // Test-time rounding: per row the argmax entry becomes 1 (ties -> lowest
    // index). Idempotent on already-binary rows.
    Rounded round_selection() const;
};

// Per-row argmax rounding of any nonnegative matrix (ties -> lowest index).
ad::Array round_rows_to_binary(const ad::Array& t);

} // namespace radsplat
