#include "spottune/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spottune {

const char* run_mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::spottune: return "spottune";
        case RunMode::spottune_global_k: return "spottune-global-k";
        case RunMode::standard_ft: return "standard-ft";
        case RunMode::feature_extractor: return "feature-extractor";
        case RunMode::stochastic_ft: return "stochastic-ft";
        case RunMode::last_k_ft: return "last-k-ft";
    }
    return "?";
}

RunMode parse_run_mode(const std::string& name) {
    for (RunMode m : {RunMode::spottune, RunMode::spottune_global_k, RunMode::standard_ft,
                      RunMode::feature_extractor, RunMode::stochastic_ft, RunMode::last_k_ft}) {
        if (name == run_mode_name(m)) return m;
    }
    throw Error("unknown run mode: " + name);
}

bool mode_uses_policy(RunMode mode) {
    return mode == RunMode::spottune || mode == RunMode::spottune_global_k;
}

std::vector<Param*> ModePlan::trainable() const {
    std::vector<Param*> out = main_group;
    out.insert(out.end(), policy_group.begin(), policy_group.end());
    return out;
}

std::size_t ModePlan::trainable_count() const {
    std::size_t n = 0;
    for (const Param* p : main_group) n += p->numel();
    for (const Param* p : policy_group) n += p->numel();
    return n;
}

namespace {

void append_block_params(std::vector<Param*>& out, ResidualBlock& blk) {
    out.push_back(&blk.w1);
    out.push_back(&blk.b1);
    out.push_back(&blk.w2);
    out.push_back(&blk.b2);
}

}  // namespace

ModePlan configure_mode(Backbone& model, RunMode mode, std::size_t k, RngStream& rng) {
    if (mode_uses_policy(mode)) {
        throw Error(std::string("configure_mode: ") + run_mode_name(mode) +
                    " needs the routed model, not the plain backbone");
    }
    const std::size_t total = model.blocks.size();
    ModePlan plan;
    auto add_head = [&] {
        plan.main_group.push_back(&model.head.w);
        plan.main_group.push_back(&model.head.b);
    };
    auto add_stem = [&] {
        plan.main_group.push_back(&model.stem.w);
        plan.main_group.push_back(&model.stem.b);
    };

    switch (mode) {
        case RunMode::standard_ft: {
            add_stem();
            for (std::size_t i = 0; i < total; ++i) plan.tuned_block_ids.push_back(i);
            break;
        }
        case RunMode::feature_extractor:
            break;  // head only
        case RunMode::last_k_ft: {
            if (k > total) {
                throw Error("configure_mode: k = " + std::to_string(k) + " exceeds " +
                            std::to_string(total) + " blocks");
            }
            add_stem();
            for (std::size_t i = total - k; i < total; ++i) plan.tuned_block_ids.push_back(i);
            break;
        }
        case RunMode::stochastic_ft: {
            add_stem();
            // One seeded draw of half the blocks per run.
            std::vector<std::size_t> ids(total);
            std::iota(ids.begin(), ids.end(), std::size_t{0});
            for (std::size_t i = total; i > 1; --i) {
                std::swap(ids[i - 1], ids[rng.below(i)]);
            }
            ids.resize(total / 2);
            std::sort(ids.begin(), ids.end());
            plan.tuned_block_ids = std::move(ids);
            break;
        }
        default:
            break;
    }
    for (std::size_t i : plan.tuned_block_ids) append_block_params(plan.main_group, model.blocks[i]);
    add_head();
    return plan;
}

ModePlan configure_mode(SpotTuneModel& model, RunMode mode) {
    if (!mode_uses_policy(mode)) {
        throw Error(std::string("configure_mode: ") + run_mode_name(mode) +
                    " runs on the plain backbone, not the routed model");
    }
    ModePlan plan;
    plan.main_group.push_back(&model.stem.w);
    plan.main_group.push_back(&model.stem.b);
    for (std::size_t i = model.dims.frozen_prefix; i < model.blocks.size(); ++i) {
        plan.tuned_block_ids.push_back(i);
        append_block_params(plan.main_group, model.blocks[i].tuned);
    }
    plan.main_group.push_back(&model.head.w);
    plan.main_group.push_back(&model.head.b);
    plan.policy_group = {&model.policy.w1, &model.policy.b1, &model.policy.w2, &model.policy.b2};
    return plan;
}

namespace {

Tensor gather_inputs(const LabeledSet& data, std::span<const std::size_t> idx) {
    const std::size_t dim = data.input_dim();
    Tensor out(Shape{idx.size(), dim});
    for (std::size_t r = 0; r < idx.size(); ++r) {
        std::copy_n(&data.inputs.data[idx[r] * dim], dim, &out.data[r * dim]);
    }
    return out;
}

std::vector<std::uint32_t> gather_labels(const LabeledSet& data, std::span<const std::size_t> idx) {
    std::vector<std::uint32_t> out(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) out[r] = data.labels[idx[r]];
    return out;
}

std::size_t count_correct(const Tensor& logits, std::span<const std::uint32_t> labels) {
    const std::size_t rows = logits.shape[0], cols = logits.shape[1];
    std::size_t correct = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < cols; ++c) {
            if (logits(r, c) > logits(r, best)) best = c;
        }
        if (best == labels[r]) ++correct;
    }
    return correct;
}

std::vector<std::size_t> batch_starts(std::size_t n, std::size_t batch) {
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s < n; s += batch) starts.push_back(s);
    return starts;
}

// Budget/entropy values from plain fractions, mirroring the tape losses.
double budget_value(const std::vector<double>& v, std::size_t k) {
    double s = 0.0;
    for (double x : v) s += x;
    const double d = s - double(k);
    return d * d;
}

double entropy_value(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s -= x * std::log(std::max(x, 1e-12));
    return s;
}

struct EpochStats {
    double lc_sum = 0, lk_sum = 0, le_sum = 0, sum_v_sum = 0;
    std::size_t correct = 0, examples = 0, steps = 0;

    MetricsRow row(std::size_t epoch, double lr_main, double lr_policy) const {
        MetricsRow r;
        r.epoch = epoch;
        r.split = "train";
        const double n = std::max<double>(1.0, double(steps));
        r.accuracy = examples ? double(correct) / double(examples) : 0.0;
        r.lc = lc_sum / n;
        r.lk = lk_sum / n;
        r.le = le_sum / n;
        r.sum_v = sum_v_sum / n;
        r.lr_main = lr_main;
        r.lr_policy = lr_policy;
        return r;
    }
};

MetricsRow eval_row(std::size_t epoch, const EvalResult& ev, const LossWeights& weights,
                    double lr_main, double lr_policy) {
    MetricsRow r;
    r.epoch = epoch;
    r.split = "eval";
    r.accuracy = ev.accuracy;
    r.lc = ev.lc;
    r.lr_main = lr_main;
    r.lr_policy = lr_policy;
    if (!ev.decisions.hard.empty()) {
        const UsageFractions f = usage_fractions(ev.decisions, /*relaxed=*/false);
        r.v_hard = f.v;
        r.lk = budget_value(f.v, weights.k);
        r.le = entropy_value(f.v);
        for (double x : f.v) r.sum_v += x;
    }
    return r;
}

}  // namespace

EvalResult evaluate(const Backbone& model, const LabeledSet& data, std::size_t batch) {
    auto params = all_params(const_cast<Backbone&>(model));
    EvalResult out;
    double lc_weighted = 0.0;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t start : batch_starts(data.size(), batch)) {
        const std::size_t end = std::min(start + batch, data.size());
        std::span<const std::size_t> idx(order.data() + start, end - start);
        Tape t;
        Binding b(t, params, {});
        const int x = t.constant(gather_inputs(data, idx));
        const int logits = backbone_forward(t, b, model, x);
        const auto labels = gather_labels(data, idx);
        out.accuracy += double(count_correct(t.value(logits), labels));
        lc_weighted += t.value(t.cross_entropy(logits, labels)).data[0] * double(idx.size());
    }
    out.accuracy /= double(data.size());
    out.lc = lc_weighted / double(data.size());
    return out;
}

EvalResult evaluate(const SpotTuneModel& model, const LabeledSet& data, RoutingKind routing,
                    std::uint64_t eval_seed, double tau, std::size_t batch) {
    auto params = all_params(const_cast<SpotTuneModel&>(model));
    RngStream noise_stream = RngStream(eval_seed).child("eval-noise");
    EvalResult out;
    double lc_weighted = 0.0;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t start : batch_starts(data.size(), batch)) {
        const std::size_t end = std::min(start + batch, data.size());
        std::span<const std::size_t> idx(order.data() + start, end - start);
        Tape t;
        Binding b(t, params, {});
        const int x = t.constant(gather_inputs(data, idx));
        RoutingSpec spec;
        spec.kind = routing;
        spec.stream = &noise_stream;
        const SpotTuneForward fwd = spottune_forward(t, b, model, x, spec, tau);
        const auto labels = gather_labels(data, idx);
        out.accuracy += double(count_correct(t.value(fwd.logits), labels));
        lc_weighted += t.value(t.cross_entropy(fwd.logits, labels)).data[0] * double(idx.size());
        for (auto& bits : fwd.decisions.hard) out.decisions.hard.push_back(bits);
        for (auto& soft : fwd.decisions.soft) out.decisions.soft.push_back(soft);
    }
    out.accuracy /= double(data.size());
    out.lc = lc_weighted / double(data.size());
    return out;
}

namespace {

// Shared epoch driver; `step_fn` runs one minibatch (forward, loss, backward,
// sgd) and fills the stats, `eval_fn` produces the end-of-epoch eval result.
template <typename StepFn, typename EvalFn>
TrainOutcome run_epochs(const TrainSetup& setup, std::size_t train_size, StepFn&& step_fn,
                        EvalFn&& eval_fn) {
    TrainOutcome out;
    RngStream shuffle_rng = RngStream(setup.seed_train).child("shuffle");
    std::vector<std::size_t> order(train_size);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < setup.epochs; ++epoch) {
        const double lr_main = setup.main_schedule.at(epoch);
        const double lr_policy = setup.policy_schedule.at(epoch);
        for (std::size_t i = train_size; i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        }
        EpochStats stats;
        std::size_t step = 0;
        for (std::size_t start : batch_starts(train_size, setup.batch)) {
            const std::size_t end = std::min(start + setup.batch, train_size);
            std::span<const std::size_t> idx(order.data() + start, end - start);
            try {
                step_fn(idx, lr_main, lr_policy, stats);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + " step " +
                                   std::to_string(step) + ": " + e.what());
            }
            ++step;
        }
        out.log.push_back(stats.row(epoch, lr_main, lr_policy));
        out.final_eval = eval_fn();
        out.log.push_back(
            eval_row(epoch, out.final_eval, setup.weights, lr_main, lr_policy));
    }
    if (setup.epochs == 0) {
        out.final_eval = eval_fn();
        out.log.push_back(eval_row(0, out.final_eval, setup.weights,
                                   setup.main_schedule.at(0), setup.policy_schedule.at(0)));
    }
    return out;
}

}  // namespace

TrainOutcome train_backbone(Backbone& model, const ModePlan& plan, const TaskData& data,
                            const TrainSetup& setup) {
    auto params = all_params(model);
    const auto trainable = plan.trainable();
    SgdGroup main_sgd(plan.main_group, setup.momentum);

    return run_epochs(
        setup, data.train.size(),
        [&](std::span<const std::size_t> idx, double lr_main, double, EpochStats& stats) {
            Tape t;
            Binding b(t, params, trainable);
            const int x = t.constant(gather_inputs(data.train, idx));
            const int logits = backbone_forward(t, b, model, x);
            const auto labels = gather_labels(data.train, idx);
            const int loss = t.cross_entropy(logits, labels);
            stats.lc_sum += t.value(loss).data[0];
            stats.correct += count_correct(t.value(logits), labels);
            stats.examples += idx.size();
            ++stats.steps;
            t.backward(loss);
            main_sgd.step(b, lr_main);
        },
        [&] { return evaluate(model, data.eval, setup.batch); });
}

TrainOutcome train_spottune(SpotTuneModel& model, RunMode mode, const ModePlan& plan,
                            const TaskData& data, const TrainSetup& setup) {
    if (!mode_uses_policy(mode)) {
        throw Error("train_spottune: mode must be spottune or spottune-global-k");
    }
    auto params = all_params(model);
    const auto trainable = plan.trainable();
    SgdGroup main_sgd(plan.main_group, setup.momentum);
    SgdGroup policy_sgd(plan.policy_group, setup.momentum);
    RngStream noise_stream = RngStream(setup.seed_train).child("route-noise");
    const bool global_k = mode == RunMode::spottune_global_k;

    return run_epochs(
        setup, data.train.size(),
        [&](std::span<const std::size_t> idx, double lr_main, double lr_policy,
            EpochStats& stats) {
            Tape t;
            Binding b(t, params, trainable);
            const int x = t.constant(gather_inputs(data.train, idx));
            RoutingSpec spec;
            spec.kind = RoutingKind::sampled;
            spec.stream = &noise_stream;
            const SpotTuneForward fwd = spottune_forward(t, b, model, x, spec, setup.tau);
            const auto labels = gather_labels(data.train, idx);

            const int lc = t.cross_entropy(fwd.logits, labels);
            const int v = usage_fraction_nodes(t, fwd.soft_nodes);
            const int lk = global_k_loss(t, v, setup.weights.k);
            const int le = entropy_loss(t, v);
            const int loss = global_k ? total_loss(t, lc, lk, le, setup.weights) : lc;

            stats.lc_sum += t.value(lc).data[0];
            stats.lk_sum += t.value(lk).data[0];
            stats.le_sum += t.value(le).data[0];
            for (double x_v : t.value(v).data) stats.sum_v_sum += x_v;
            stats.correct += count_correct(t.value(fwd.logits), labels);
            stats.examples += idx.size();
            ++stats.steps;

            t.backward(loss);
            main_sgd.step(b, lr_main);
            policy_sgd.step(b, lr_policy);
        },
        [&] {
            return evaluate(model, data.eval, setup.eval_routing, setup.seed_eval, setup.tau,
                            setup.batch);
        });
}

}  // namespace spottune
