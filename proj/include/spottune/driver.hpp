#pragma once

#include <memory>
#include <optional>
#include <string>

#include "spottune/checkpoint.hpp"
#include "spottune/config.hpp"
#include "spottune/train.hpp"

namespace spottune {

// Normalized pretrain view of a config: the run defines the source task, so
// the shift collapses to 0 and the echoed source_data_seed is the data seed.
RunConfig pretrain_effective(RunConfig cfg);

// Normalized finetune view: structural dims always come from the source
// checkpoint, and source_data_seed resolves from its echo when unset.
RunConfig finetune_effective(RunConfig cfg, const CheckpointMeta& source_meta);

// Target train/eval data per the config: SPTD files when both paths are set,
// otherwise generated from the task keys.
TaskData resolve_task_data(const RunConfig& cfg);

// Trains a source model from scratch on the source task.
Backbone pretrain_source(const RunConfig& cfg, TrainOutcome* outcome = nullptr);

// One fine-tuning run in any mode, starting from a pre-trained source model.
// The models live on the heap so `plan`'s parameter pointers stay valid when
// the result moves.
struct FinetunedModel {
    RunMode mode = RunMode::spottune;
    std::unique_ptr<Backbone> backbone;        // baseline modes
    std::unique_ptr<SpotTuneModel> spottune;   // adaptive modes
    ModePlan plan;
    TrainOutcome outcome;
};

FinetunedModel finetune_from_source(const RunConfig& cfg, const Backbone& source);

}  // namespace spottune
