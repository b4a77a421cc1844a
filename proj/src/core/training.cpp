// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#include "core/training.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace radsplat {

using ad::Array;
using ad::Tape;
using ad::Var;

void FinetuneConfig::validate() const {
    if (!(boundary_distance > 0.0))
        throw DataError("finetune boundary distance must be positive");
    if (iters_per_round < 1 || max_rounds < 1)
        throw DataError("finetune iterations and rounds must be positive");
}

std::unique_ptr<TrainState> TrainState::create(RadModel model, const MeasurementSet& ms,
                                               std::uint64_t seed) {
    auto st = std::unique_ptr<TrainState>(new TrainState());
    st->model = std::move(model);
    st->model.register_params(st->store);

    std::vector<const Array*> trainables;
    std::vector<double> mults;
    for (const auto& e : st->store.entries) {
        if (!e.trainable)
            continue;
        trainables.push_back(e.value);
        const SceneConfig& cfg = st->model.cfg;
        double mult = 1.0;
        if (e.name.rfind("rm.", 0) == 0 || e.name == "means")
            mult = cfg.lr_mult_position;
        else if (e.name.rfind("mlp2.", 0) == 0 || e.name.rfind("mlp3.", 0) == 0)
            mult = cfg.lr_mult_projection;
        else if (e.name == "sc.log_scale" || e.name == "sc.quat")
            mult = cfg.lr_mult_shape;
        mults.push_back(mult);
    }
    st->adam.cfg.lr = st->model.cfg.learning_rate;
    st->adam.reset(trainables);
    st->adam.lr_mult = std::move(mults);

    st->train_ids = ms.train_ids;
    st->test_ids = ms.test_ids;
    st->positions = ms.grid_positions;
    st->labels.resize(ms.grid_count());
    st->is_pseudo_label.assign(ms.grid_count(), 0);
    // ground-truth labels are copied for training grids only; held-out labels
    // are never touched here
    for (int id : st->train_ids)
        st->labels[static_cast<std::size_t>(id)] = ms.rss_at(id);
    st->seed = seed;

    // Rescale the SH coefficients so the mean initial render matches the mean
    // training power. An initial field orders of magnitude below the data
    // scale sits next to the zero-field saddle (grad ~ |h| -> 0) and training
    // collapses into it instead of escaping.
    {
        RenderContext ctx(st->model, false);
        double truth_acc = 0.0, pred_acc = 0.0;
        const std::size_t stride = std::max<std::size_t>(1, st->train_ids.size() / 32);
        for (std::size_t i = 0; i < st->train_ids.size(); i += stride) {
            const int id = st->train_ids[i];
            const RssVector pred = ctx.render(st->positions[static_cast<std::size_t>(id)]);
            const RssVector& truth = st->labels[static_cast<std::size_t>(id)];
            for (std::size_t m = 0; m < pred.size(); ++m) {
                truth_acc += truth[m];
                pred_acc += pred[m];
            }
        }
        if (truth_acc > 0.0 && pred_acc > 0.0) {
            const double rho = std::sqrt(truth_acc / pred_acc);
            for (double& x : st->model.sc.sh_coef.v)
                x *= rho;
        }
    }
    return st;
}

namespace {

struct DataLoss {
    Var mse, tv, combined;
};

DataLoss data_loss_parts(Tape& t, const std::vector<Var>& preds,
                         const std::vector<const RssVector*>& targets,
                         const std::vector<Vec3>& positions, double lambda_tv,
                         const std::vector<double>* sample_weights) {
    const std::size_t batch = preds.size();
    if (batch == 0)
        throw DataError("mse_tv_loss: empty batch");
    if (targets.size() != batch || positions.size() != batch)
        throw DataError("mse_tv_loss: batch size mismatch");

    DataLoss out;
    Var mse{};
    for (std::size_t l = 0; l < batch; ++l) {
        Array target(1, targets[l]->size());
        target.v = *targets[l];
        Var diff = t.sub(preds[l], t.input(target));
        Var term = t.mean(t.mul(diff, diff));
        if (sample_weights)
            term = t.scale(term, (*sample_weights)[l]);
        mse = l == 0 ? term : t.add(mse, term);
    }
    out.mse = t.scale(mse, 1.0 / static_cast<double>(batch));

    if (lambda_tv <= 0.0 || batch < 2) {
        out.tv = t.input(Array::scalar(0.0));
        out.combined = out.mse;
        return out;
    }
    Var tv{};
    bool first = true;
    for (std::size_t l = 0; l < batch; ++l) {
        std::size_t nn = batch; // 1-NN by grid position within the batch, self-excluded
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < batch; ++k) {
            if (k == l)
                continue;
            const double d2 = dist2(positions[l], positions[k]);
            if (d2 < best) {
                best = d2;
                nn = k;
            }
        }
        Var term = t.norm_l1(t.sub(preds[l], preds[nn]));
        tv = first ? term : t.add(tv, term);
        first = false;
    }
    out.tv = t.scale(tv, lambda_tv / static_cast<double>(batch));
    out.combined = t.add(out.mse, out.tv);
    return out;
}

Var reg_from_graph(Tape& t, RadModel& model, const RenderGraph& g) {
    if (model.means_mode != MeansMode::Rm)
        return t.input(Array::scalar(0.0));
    SelectionModel::TapeVars vars;
    vars.t = g.selection;
    vars.means = g.means;
    for (std::size_t i = 0; i < g.names.size(); ++i) {
        if (g.names[i] == "rm.logits")
            vars.logits = g.leaves[i];
        if (g.names[i] == "rm.bias")
            vars.bias = g.leaves[i];
    }
    return model.rm.reg_loss(t, vars, model.bs, model.cfg.lambda1, model.cfg.lambda2,
                             model.cfg.lambda_mec, model.cfg.lambda_sparsity);
}

} // namespace

Var mse_tv_loss(Tape& t, const std::vector<Var>& preds,
                const std::vector<const RssVector*>& targets,
                const std::vector<Vec3>& positions, double lambda_tv,
                const std::vector<double>* sample_weights) {
    return data_loss_parts(t, preds, targets, positions, lambda_tv, sample_weights).combined;
}

LossParts total_loss(Tape& t, RadModel& model, const RenderGraph& g,
                     const std::vector<int>& batch_ids, const std::vector<RssVector>& labels,
                     const std::vector<Vec3>& positions,
                     const std::vector<double>* sample_weights) {
    if (batch_ids.empty())
        throw DataError("total_loss: empty batch");
    LossParts parts;
    parts.preds.reserve(batch_ids.size());
    std::vector<const RssVector*> targets;
    std::vector<Vec3> batch_pos;
    for (int id : batch_ids) {
        const std::size_t i = static_cast<std::size_t>(id);
        parts.preds.push_back(render_sample(t, g, model, positions[i]));
        targets.push_back(&labels[i]);
        batch_pos.push_back(positions[i]);
    }
    const DataLoss data = data_loss_parts(t, parts.preds, targets, batch_pos,
                                          model.cfg.lambda_tv, sample_weights);
    parts.mse = data.mse;
    parts.tv = data.tv;
    parts.reg = reg_from_graph(t, model, g);
    parts.total = t.add(data.combined, parts.reg);
    return parts;
}

namespace {

std::vector<int> draw_batch(const std::vector<int>& pool, int batch_size, std::uint64_t seed,
                            std::uint64_t step) {
    const std::size_t n = pool.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(batch_size), n);
    auto rng = seeded_stream(seed ^ (0x9e3779b97f4a7c15ull * (step + 1)), "train.batch");
    std::vector<int> ids = pool;
    for (std::size_t i = 0; i < k; ++i) { // partial Fisher-Yates
        std::uniform_int_distribution<std::size_t> u(i, n - 1);
        std::swap(ids[i], ids[u(rng)]);
    }
    ids.resize(k);
    return ids;
}

double batch_mae_db(Tape& t, const std::vector<Var>& preds, const std::vector<int>& ids,
                    const std::vector<RssVector>& labels) {
    double acc = 0.0;
    for (std::size_t l = 0; l < preds.size(); ++l) {
        const Array& y = t.val(preds[l]);
        const RssVector& gt = labels[static_cast<std::size_t>(ids[l])];
        double s = 0.0;
        for (std::size_t m = 0; m < y.size(); ++m)
            s += std::fabs(safe_db(y.v[m]) - safe_db(gt[m]));
        acc += s / static_cast<double>(y.size());
    }
    return acc / static_cast<double>(preds.size());
}

} // namespace

void train(TrainState& state, int steps, const MetricsSink& sink) {
    if (state.train_ids.empty())
        throw DataError("train: no training grids");
    if (steps < 0)
        throw DataError("train: negative step count");

    std::vector<ad::ParamStore::Entry*> trainables = state.store.trainable_entries();
    std::vector<Array*> params;
    for (auto* e : trainables)
        params.push_back(e->value);

    for (int s = 0; s < steps; ++s) {
        const std::vector<int> batch =
            draw_batch(state.train_ids, state.model.cfg.batch_size, state.seed, state.step);

        std::vector<double> weights;
        weights.reserve(batch.size());
        for (int id : batch)
            weights.push_back(state.is_pseudo_label[static_cast<std::size_t>(id)]
                                  ? state.model.cfg.pseudo_label_weight
                                  : 1.0);

        Tape t;
        RenderGraph g = build_render_graph(t, state.model);
        const LossParts parts =
            total_loss(t, state.model, g, batch, state.labels, state.positions, &weights);

        const double loss_value = t.val(parts.total).v[0];
        if (!std::isfinite(loss_value)) {
            std::ostringstream os;
            os << "non-finite loss at step " << state.step
               << ": mse=" << t.val(parts.mse).v[0] << " tv=" << t.val(parts.tv).v[0]
               << " reg=" << t.val(parts.reg).v[0];
            throw NumericError(os.str());
        }

        t.backward(parts.total);

        std::vector<Array> grads;
        grads.reserve(trainables.size());
        for (std::size_t li = 0; li < state.store.entries.size(); ++li)
            if (state.store.entries[li].trainable)
                grads.push_back(t.grad(g.leaves[li]));
        ad::clip_grads(grads, state.model.cfg.grad_clip);
        std::vector<const Array*> grad_ptrs;
        grad_ptrs.reserve(grads.size());
        for (const Array& ga : grads)
            grad_ptrs.push_back(&ga);
        ad::adam_step(params, grad_ptrs, state.adam);
        state.model.renormalize_quats();

        MetricsRow row;
        row.step = ++state.step;
        row.loss_mse = t.val(parts.mse).v[0];
        row.loss_tv = t.val(parts.tv).v[0];
        row.loss_reg = t.val(parts.reg).v[0];
        row.mae_train = batch_mae_db(t, parts.preds, batch, state.labels);
        state.history.push_back(row);
        if (sink)
            sink(row);
    }
}

std::vector<int> boundary_grids(const std::vector<int>& train_ids,
                                const std::vector<int>& test_ids,
                                const std::vector<Vec3>& positions, double boundary_distance) {
    if (!(boundary_distance > 0.0))
        throw DataError("boundary distance must be positive");
    const double d2max = boundary_distance * boundary_distance;
    std::vector<int> out;
    for (int l : test_ids) {
        const Vec3& p = positions[static_cast<std::size_t>(l)];
        for (int k : train_ids) {
            if (dist2(p, positions[static_cast<std::size_t>(k)]) <= d2max) {
                out.push_back(l);
                break;
            }
        }
    }
    return out;
}

void recursive_finetune(TrainState& state, const FinetuneConfig& cfg, const MetricsSink& sink) {
    cfg.validate();
    if (state.test_ids.empty())
        throw DataError("recursive_finetune: no held-out grids to absorb");

    for (int round = 0; round < cfg.max_rounds; ++round) {
        train(state, cfg.iters_per_round, sink); // Step 1
        if (state.test_ids.empty())
            return; // the closing stage trained on full coverage

        const std::vector<int> band = boundary_grids(state.train_ids, state.test_ids,
                                                     state.positions, cfg.boundary_distance);
        if (band.empty())
            throw DataError("recursive_finetune: boundary band empty while grids remain; "
                            "increase the boundary distance D");

        // Step 2: predict the band with the current model (soft means, the
        // training-phase convention)
        RenderContext ctx(state.model, /*hard_means=*/false);
        for (int l : band)
            state.labels[static_cast<std::size_t>(l)] =
                ctx.render(state.positions[static_cast<std::size_t>(l)]);

        // Step 3: absorb the band; predicted labels only, never ground truth
        for (int l : band) {
            state.is_pseudo_label[static_cast<std::size_t>(l)] = 1;
            state.train_ids.push_back(l);
        }
        std::sort(state.train_ids.begin(), state.train_ids.end());
        std::vector<int> remaining;
        remaining.reserve(state.test_ids.size() - band.size());
        std::set_difference(state.test_ids.begin(), state.test_ids.end(), band.begin(),
                            band.end(), std::back_inserter(remaining));
        state.test_ids = std::move(remaining);
    }
    if (!state.test_ids.empty())
        throw DataError("recursive_finetune: round budget exhausted before coverage");
}

} // namespace radsplat
