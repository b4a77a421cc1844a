// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include "core/autodiff.hpp"

#include <random>
#include <vector>

namespace radsplat::ad {

enum class Activation { None, Relu, Sigmoid };

// Shallow fully-connected network, x @ W + b per layer, row-major batches.
struct Mlp {
    std::vector<int> widths; // input, hidden..., output
    Activation hidden_act = Activation::Relu;
    Activation output_act = Activation::None;
    std::vector<Array> weights; // [in, out] per layer
    std::vector<Array> biases;  // [1, out] per layer

    static Mlp make(int in, int hidden, int depth, int out, Activation hidden_act,
                    Activation output_act);

    // Uniform He-style init, biases zero. Deterministic given the stream.
    void init_params(std::mt19937_64& rng);

    int layer_count() const { return static_cast<int>(weights.size()); }
    int param_count() const;

    // Forward with caller-owned leaves (one per weight and bias, in layer
    // order) so the caller can read gradients after backward().
    Var forward(Tape& t, Var x, const std::vector<Var>& w_leaves,
                const std::vector<Var>& b_leaves) const;
    // Forward creating fresh leaves internally.
    Var forward(Tape& t, Var x) const;
    // Value-only forward for frozen-parameter inference; same kernels as the
    // tape path, so outputs agree bit-for-bit.
    Array forward_value(const Array& x) const;
};

} // namespace radsplat::ad
