// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#include "core/mlp.hpp"

#include "core/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace radsplat::ad {

Mlp Mlp::make(int in, int hidden, int depth, int out, Activation hidden_act,
              Activation output_act) {
    if (in < 1 || hidden < 1 || depth < 1 || out < 1)
        throw std::invalid_argument("mlp: all dimensions must be positive");
    Mlp net;
    net.hidden_act = hidden_act;
    net.output_act = output_act;
    net.widths.push_back(in);
    for (int i = 0; i < depth; ++i)
        net.widths.push_back(hidden);
    net.widths.push_back(out);
    for (std::size_t l = 0; l + 1 < net.widths.size(); ++l) {
        net.weights.emplace_back(static_cast<std::size_t>(net.widths[l]),
                                 static_cast<std::size_t>(net.widths[l + 1]));
        net.biases.emplace_back(1, static_cast<std::size_t>(net.widths[l + 1]));
    }
    return net;
}

void Mlp::init_params(std::mt19937_64& rng) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(widths[l]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : weights[l].v)
            w = dist(rng);
        for (double& b : biases[l].v)
            b = 0.0;
    }
}

int Mlp::param_count() const {
    int n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += static_cast<int>(weights[l].size() + biases[l].size());
    return n;
}

namespace {

Var apply_act(Tape& t, Var x, Activation a) {
    switch (a) {
    case Activation::None:
        return x;
    case Activation::Relu:
        return t.relu(x);
    case Activation::Sigmoid:
        return t.sigmoid(x);
    }
    return x;
}

void apply_act_value(Array& x, Activation a) {
    switch (a) {
    case Activation::None:
        return;
    case Activation::Relu:
        for (double& v : x.v)
            v = v > 0.0 ? v : 0.0;
        return;
    case Activation::Sigmoid:
        for (double& v : x.v)
            v = kernels::sigmoid(v);
        return;
    }
}

} // namespace

Var Mlp::forward(Tape& t, Var x, const std::vector<Var>& w_leaves,
                 const std::vector<Var>& b_leaves) const {
    if (w_leaves.size() != weights.size() || b_leaves.size() != biases.size())
        throw std::invalid_argument("mlp: leaf count mismatch");
    if (t.val(x).cols != static_cast<std::size_t>(widths.front()))
        throw std::invalid_argument("mlp: input dimension mismatch");
    Var h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        h = t.add_rowvec(t.matmul(h, w_leaves[l]), b_leaves[l]);
        h = apply_act(t, h, l + 1 == weights.size() ? output_act : hidden_act);
    }
    return h;
}

Var Mlp::forward(Tape& t, Var x) const {
    std::vector<Var> wl, bl;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        wl.push_back(t.input(weights[l]));
        bl.push_back(t.input(biases[l]));
    }
    return forward(t, x, wl, bl);
}

Array Mlp::forward_value(const Array& x) const {
    if (x.cols != static_cast<std::size_t>(widths.front()))
        throw std::invalid_argument("mlp: input dimension mismatch");
    Array h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Array z = kernels::matmul(h, weights[l]);
        for (std::size_t i = 0; i < z.rows; ++i)
            for (std::size_t j = 0; j < z.cols; ++j)
                z.at(i, j) += biases[l].v[j];
        apply_act_value(z, l + 1 == weights.size() ? output_act : hidden_act);
        h = std::move(z);
    }
    return h;
}

} // namespace radsplat::ad
