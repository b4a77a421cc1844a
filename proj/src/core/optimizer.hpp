// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include "core/autodiff.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace radsplat::ad {

// Named registry of trainable (and frozen) arrays. The store does not own the
// arrays; owners must outlive it and must not reallocate registered storage.
struct ParamStore {
    struct Entry {
        std::string name;
        Array* value = nullptr;
        bool trainable = true;
    };
    std::vector<Entry> entries;

    void add(std::string name, Array* value, bool trainable = true);
    const Entry* find(std::string_view name) const;
    std::vector<Entry*> trainable_entries();
    std::size_t scalar_count(bool trainable_only) const;
};

struct AdamConfig {
    double lr = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment slots aligned with a fixed trainable-parameter order.
struct AdamState {
    AdamConfig cfg;
    std::uint64_t step = 0;
    std::vector<Array> m;
    std::vector<Array> v;
    std::vector<double> lr_mult; // per-parameter learning-rate multipliers

    // Allocates zero moments matching the given parameter shapes.
    void reset(const std::vector<const Array*>& params);
};

// One bias-corrected Adam update. grads[i] pairs with params[i]; moments must
// already shape-match (reset() or a loaded checkpoint).
void adam_step(const std::vector<Array*>& params, const std::vector<const Array*>& grads,
               AdamState& state);

// Global L2 norm across all gradient arrays.
double grad_global_norm(const std::vector<Array>& grads);
// Rescales all gradients so the global norm is at most max_norm.
void clip_grads(std::vector<Array>& grads, double max_norm);

} // namespace radsplat::ad
