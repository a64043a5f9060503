#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spottune/data.hpp"
#include "spottune/losses.hpp"
#include "spottune/metrics.hpp"
#include "spottune/model.hpp"
#include "spottune/optim.hpp"

namespace spottune {

enum class RunMode : std::uint8_t {
    spottune,
    spottune_global_k,
    standard_ft,
    feature_extractor,
    stochastic_ft,
    last_k_ft,
};

const char* run_mode_name(RunMode mode);
RunMode parse_run_mode(const std::string& name);
bool mode_uses_policy(RunMode mode);

// Exactly the parameters a mode may change, split into the two optimizer
// groups (main lr vs. policy lr).
struct ModePlan {
    std::vector<Param*> main_group;
    std::vector<Param*> policy_group;
    std::vector<std::size_t> tuned_block_ids;  // block positions allowed to change

    std::vector<Param*> trainable() const;
    std::size_t trainable_count() const;
};

// Baseline modes run on the plain backbone. The stem trains in every mode
// except feature-extractor; the head always trains. `rng` seeds the stochastic
// block choice (one draw per run).
ModePlan configure_mode(Backbone& model, RunMode mode, std::size_t k, RngStream& rng);
// The adaptive modes: routable tuned copies + stem + head + policy network.
ModePlan configure_mode(SpotTuneModel& model, RunMode mode);

struct EvalResult {
    double accuracy = 0.0;
    double lc = 0.0;
    RouteDecisions decisions;  // empty for the plain backbone
};

struct TrainSetup {
    std::size_t epochs = 30;
    std::size_t batch = 32;
    double momentum = 0.9;
    double tau = 5.0;
    LossWeights weights;
    Schedule main_schedule;
    Schedule policy_schedule;
    std::uint64_t seed_train = 0;
    std::uint64_t seed_eval = 0;
    RoutingKind eval_routing = RoutingKind::sampled;
};

struct TrainOutcome {
    MetricsLog log;
    EvalResult final_eval;
};

EvalResult evaluate(const Backbone& model, const LabeledSet& data, std::size_t batch);
EvalResult evaluate(const SpotTuneModel& model, const LabeledSet& data, RoutingKind routing,
                    std::uint64_t eval_seed, double tau, std::size_t batch);

// Epoch loop for the baseline modes (and source pre-training): forward,
// cross-entropy, backward, one SGD step per group. Aborts with a NumericError
// naming the epoch/step if the loss goes non-finite.
TrainOutcome train_backbone(Backbone& model, const ModePlan& plan, const TaskData& data,
                            const TrainSetup& setup);

// Epoch loop for the adaptive modes; adds the budget and entropy losses when
// the mode is spottune-global-k.
TrainOutcome train_spottune(SpotTuneModel& model, RunMode mode, const ModePlan& plan,
                            const TaskData& data, const TrainSetup& setup);

}  // namespace spottune
