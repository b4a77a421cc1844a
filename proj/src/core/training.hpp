// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include "core/geometry.hpp"
#include "core/optimizer.hpp"
#include "core/renderer.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace radsplat {

struct MetricsRow {
    std::uint64_t step = 0;
    double loss_mse = 0.0;
    double loss_tv = 0.0;
    double loss_reg = 0.0;
    double mae_train = 0.0; // batch-level dB MAE
};
using MetricsSink = std::function<void(const MetricsRow&)>;

struct FinetuneConfig {
    double boundary_distance = 20.0; // D, meters
    int iters_per_round = 2000;      // K
    int max_rounds = 64;

    void validate() const;
};

// Owns the model, optimizer moments, current L_k/L_o and the training labels.
// Labels for original training grids are ground truth; grids absorbed by the
// fine-tuning recursion carry predicted labels, never ground truth.
// Not movable: the parameter store points into the model's arrays.
struct TrainState {
    RadModel model;
    ad::ParamStore store;
    ad::AdamState adam;
    std::vector<int> train_ids; // current L_k, sorted
    std::vector<int> test_ids;  // current L_o, sorted
    std::vector<RssVector> labels;
    std::vector<char> is_pseudo_label;
    std::vector<Vec3> positions;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
    std::vector<MetricsRow> history;

    TrainState(const TrainState&) = delete;
    TrainState& operator=(const TrainState&) = delete;

    static std::unique_ptr<TrainState> create(RadModel model, const MeasurementSet& ms,
                                              std::uint64_t seed);

private:
    TrainState() = default;
};

// Composite data loss over a mini-batch: mean over the batch of beam-averaged
// squared error plus lambda_tv times the mean L1 distance between each
// prediction and the prediction at its nearest-neighbor position within the
// batch (self-excluded; batches of one have zero TV). Optional per-sample
// weights scale the squared-error term.
ad::Var mse_tv_loss(ad::Tape& t, const std::vector<ad::Var>& preds,
                    const std::vector<const RssVector*>& targets,
                    const std::vector<Vec3>& positions, double lambda_tv,
                    const std::vector<double>* sample_weights = nullptr);

// Data loss plus the selection-model regularizer (zero in direct-means modes).
struct LossParts {
    ad::Var total, mse, tv, reg;
    std::vector<ad::Var> preds; // per-sample rendered RSS, batch order
};
LossParts total_loss(ad::Tape& t, RadModel& model, const RenderGraph& g,
                     const std::vector<int>& batch_ids, const std::vector<RssVector>& labels,
                     const std::vector<Vec3>& positions,
                     const std::vector<double>* sample_weights = nullptr);

// Deterministic mini-batch Adam for `steps` steps. Batches are drawn from a
// per-step stream derived from (seed, step), so resumed runs replay exactly.
// Throws NumericError with a diagnostic when the loss goes non-finite.
void train(TrainState& state, int steps, const MetricsSink& sink = nullptr);

// L_D: held-out grids within D meters of any current training grid.
std::vector<int> boundary_grids(const std::vector<int>& train_ids,
                                const std::vector<int>& test_ids,
                                const std::vector<Vec3>& positions, double boundary_distance);

// The recursive scheme: train K steps, pseudo-label the boundary band, absorb
// it, repeat until no held-out grids remain (then one last K-step stage).
// Ground truth for held-out grids is never read; the caller keeps the
// original split for final evaluation.
void recursive_finetune(TrainState& state, const FinetuneConfig& cfg,
                        const MetricsSink& sink = nullptr);

} // namespace radsplat
