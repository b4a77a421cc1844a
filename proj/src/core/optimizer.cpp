// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#include "core/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace radsplat::ad {

void ParamStore::add(std::string name, Array* value, bool trainable) {
    if (!value)
        throw std::invalid_argument("param store: null array");
    if (find(name))
        throw std::invalid_argument("param store: duplicate name " + name);
    entries.push_back(Entry{std::move(name), value, trainable});
}

const ParamStore::Entry* ParamStore::find(std::string_view name) const {
    for (const Entry& e : entries)
        if (e.name == name)
            return &e;
    return nullptr;
}

std::vector<ParamStore::Entry*> ParamStore::trainable_entries() {
    std::vector<Entry*> out;
    for (Entry& e : entries)
        if (e.trainable)
            out.push_back(&e);
    return out;
}

std::size_t ParamStore::scalar_count(bool trainable_only) const {
    std::size_t n = 0;
    for (const Entry& e : entries)
        if (!trainable_only || e.trainable)
            n += e.value->size();
    return n;
}

void AdamState::reset(const std::vector<const Array*>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const Array* p : params) {
        m.emplace_back(p->rows, p->cols, 0.0);
        v.emplace_back(p->rows, p->cols, 0.0);
    }
    lr_mult.assign(params.size(), 1.0);
}

void adam_step(const std::vector<Array*>& params, const std::vector<const Array*>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != state.v.size())
        throw std::invalid_argument("adam_step: parameter/gradient/moment count mismatch");

    state.step += 1;
    const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    for (std::size_t k = 0; k < params.size(); ++k) {
        Array& p = *params[k];
        const Array& g = *grads[k];
        if (!p.same_shape(g) || !p.same_shape(state.m[k]))
            throw std::invalid_argument("adam_step: shape mismatch at parameter " +
                                        std::to_string(k));
        const double lr =
            state.cfg.lr * (k < state.lr_mult.size() ? state.lr_mult[k] : 1.0);
        Array& mk = state.m[k];
        Array& vk = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            mk.v[i] = b1 * mk.v[i] + (1.0 - b1) * g.v[i];
            vk.v[i] = b2 * vk.v[i] + (1.0 - b2) * g.v[i] * g.v[i];
            const double mhat = mk.v[i] / bc1;
            const double vhat = vk.v[i] / bc2;
            p.v[i] -= lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
        }
    }
}

double grad_global_norm(const std::vector<Array>& grads) {
    double s = 0.0;
    for (const Array& g : grads)
        for (double x : g.v)
            s += x * x;
    return std::sqrt(s);
}

void clip_grads(std::vector<Array>& grads, double max_norm) {
    const double n = grad_global_norm(grads);
    if (n > max_norm && n > 0.0) {
        const double f = max_norm / n;
        for (Array& g : grads)
            for (double& x : g.v)
                x *= f;
    }
}

} // namespace radsplat::ad
