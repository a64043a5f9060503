#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spottune/data.hpp"
#include "spottune/model.hpp"
#include "spottune/train.hpp"

namespace spottune {

// Full run configuration. Parsed from flat key=value text; command-line
// key=value tokens override file keys; a named preset fills the schedule
// fields before any explicit key is applied.
struct RunConfig {
    RunMode mode = RunMode::spottune;

    // model dims
    std::size_t blocks = 12;
    std::size_t width = 8;
    std::size_t frozen_prefix = 0;
    std::size_t policy_hidden = 32;

    // synthetic task
    std::size_t input_dim = 16;
    std::size_t classes = 4;
    std::size_t train_examples = 2048;
    std::size_t eval_examples = 512;
    double shift = 0.5;
    std::uint64_t source_data_seed = 0;  // resolved from the source checkpoint when 0

    // objective
    std::size_t k = 3;
    double lambda1 = 0.5;
    double lambda2 = 0.1;
    double tau = 5.0;

    // optimization
    std::string preset = "desk";
    std::size_t epochs = 40;
    std::size_t batch = 32;
    double lr = 0.01;
    double policy_lr = 0.05;
    double momentum = 0.9;
    std::vector<std::size_t> decay_epochs{28, 36};
    double decay_factor = 0.1;

    // seeds
    std::uint64_t seed_init = 1;
    std::uint64_t seed_data = 2;
    std::uint64_t seed_train = 3;
    std::uint64_t seed_eval = 4;

    RoutingKind eval_routing = RoutingKind::sampled;

    // paths
    std::string out_dir = ".";
    std::string source_checkpoint;
    std::string checkpoint;
    std::string train_data;
    std::string eval_data;
    std::string data_out;
    std::string role = "target";  // gen-data: source | target

    ModelDims model_dims() const;
    TaskSpec task_spec() const;       // this run's task (shift/seed_data)
    TaskSpec source_task_spec() const;  // the source task (shift 0, source_data_seed)
    Schedule main_schedule() const;
    Schedule policy_schedule() const;
    TrainSetup train_setup() const;
};

// Fills the schedule-related fields from a named preset; unknown names throw.
void apply_preset(RunConfig& cfg, const std::string& name);

// Parses key=value lines (blank lines and #-comments allowed) on top of `cfg`.
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_pair(RunConfig& cfg, const std::string& key, const std::string& value);

// defaults -> preset (last one named in file/overrides) -> file keys -> overrides.
RunConfig resolve_config(const std::string& file_text,
                         const std::vector<std::string>& override_pairs);

// Range checks; throws ConfigError naming the offending key.
void validate_config(const RunConfig& cfg);

// Canonical serialization: all keys, sorted, full float precision.
std::string serialize_config(const RunConfig& cfg);

// Serialization for checkpoint echoes: output locations (out_dir, checkpoint,
// data_out) are blanked, so where a run writes never changes what it writes.
std::string config_echo_text(RunConfig cfg);

}  // namespace spottune
