// Command-line front end: source pre-training, fine-tuning in every run mode,
// evaluation, policy exports, dataset generation, and the decathlon-style
// score calculator.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "spottune/checkpoint.hpp"
#include "spottune/config.hpp"
#include "spottune/driver.hpp"
#include "spottune/io.hpp"
#include "spottune/metrics.hpp"

namespace fs = std::filesystem;
using namespace spottune;

namespace {

constexpr const char* kUsage = R"(usage: spottune <command> [config-file] [key=value ...]

commands:
  pretrain         train a source model on the source task, write an SPTC checkpoint
  finetune         run any fine-tuning mode from a source checkpoint
  eval             report eval accuracy of a checkpoint
  export-policy    write policy_heatmap.csv and usage_histogram.csv for a checkpoint
  gen-data         write SPTD dataset files for the configured task
  score-decathlon  score a two-column CSV of (error, baseline-error) rows

Config files are flat key=value lines; later key=value arguments override file
keys. score-decathlon takes the CSV path in place of the config file.
)";

struct CliArgs {
    std::string command;
    std::string config_path;
    std::vector<std::string> overrides;
};

CliArgs parse_args(int argc, char** argv) {
    if (argc < 2) throw UsageError("missing command\n" + std::string(kUsage));
    CliArgs args;
    args.command = argv[1];
    for (int i = 2; i < argc; ++i) {
        const std::string tok = argv[i];
        if (tok.find('=') != std::string::npos) {
            args.overrides.push_back(tok);
        } else if (args.config_path.empty()) {
            args.config_path = tok;
        } else {
            throw UsageError("unexpected argument '" + tok + "'");
        }
    }
    return args;
}

std::string read_text_file(const std::string& path) {
    const auto buf = read_file(path);
    return std::string(buf.begin(), buf.end());
}

RunConfig load_config(const CliArgs& args) {
    std::string text;
    if (!args.config_path.empty()) {
        if (!fs::exists(args.config_path)) {
            throw UsageError("config file not found: " + args.config_path);
        }
        text = read_text_file(args.config_path);
    }
    return resolve_config(text, args.overrides);
}

void ensure_out_dir(const RunConfig& cfg) {
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

void write_metrics(const RunConfig& cfg, const MetricsLog& log) {
    write_file_atomic(out_path(cfg, "metrics.csv"), metrics_csv(log));
}

void print_final_accuracy(const TrainOutcome& outcome) {
    std::printf("final eval accuracy: %s\n", format_full(outcome.final_eval.accuracy).c_str());
}

const Backbone& require_backbone(const LoadedCheckpoint& ckpt, const std::string& path) {
    if (!ckpt.backbone) {
        throw UsageError("checkpoint '" + path + "' holds a routed model, expected a plain one");
    }
    return *ckpt.backbone;
}

int cmd_pretrain(const CliArgs& args) {
    RunConfig cfg = load_config(args);
    ensure_out_dir(cfg);
    TrainOutcome outcome;
    const Backbone model = pretrain_source(cfg, &outcome);

    CheckpointMeta meta;
    meta.config_echo = config_echo_text(pretrain_effective(cfg));
    const std::string path =
        cfg.checkpoint.empty() ? out_path(cfg, "source.sptc") : cfg.checkpoint;
    save_checkpoint(path, model, meta);
    write_metrics(cfg, outcome.log);

    const ParamCounts counts = count_parameters(model);
    std::printf("source model: %zu parameters (%zu blocks)\n", counts.total(), model.dims.blocks);
    print_final_accuracy(outcome);
    std::printf("checkpoint: %s\n", path.c_str());
    return 0;
}

int cmd_finetune(const CliArgs& args) {
    RunConfig cfg = load_config(args);
    if (cfg.source_checkpoint.empty()) {
        throw ConfigError("source_checkpoint", "key 'source_checkpoint': required for finetune");
    }
    const LoadedCheckpoint source = load_checkpoint(cfg.source_checkpoint);
    cfg = finetune_effective(cfg, source.meta);
    validate_config(cfg);
    ensure_out_dir(cfg);

    const FinetunedModel run = finetune_from_source(cfg, require_backbone(source, cfg.source_checkpoint));

    CheckpointMeta meta;
    meta.source_hash = fnv1a64_file(cfg.source_checkpoint);
    meta.config_echo = config_echo_text(cfg);
    const std::string path = cfg.checkpoint.empty() ? out_path(cfg, "model.sptc") : cfg.checkpoint;
    if (run.spottune) {
        save_checkpoint(path, *run.spottune, meta);
    } else {
        save_checkpoint(path, *run.backbone, meta);
    }
    write_metrics(cfg, run.outcome.log);
    if (run.spottune) {
        write_file_atomic(out_path(cfg, "policy_heatmap.csv"),
                          policy_heatmap_csv(run.outcome.final_eval.decisions, cfg.frozen_prefix));
        write_file_atomic(out_path(cfg, "usage_histogram.csv"),
                          usage_histogram_csv(run.outcome.final_eval.decisions));
    }

    const ParamCounts counts =
        run.spottune ? count_parameters(*run.spottune) : count_parameters(*run.backbone);
    std::printf("mode: %s\n", run_mode_name(cfg.mode));
    std::printf("parameters: %zu total, %zu trainable (policy %zu)\n", counts.total(),
                run.plan.trainable_count(), counts.policy);
    print_final_accuracy(run.outcome);
    std::printf("checkpoint: %s\n", path.c_str());
    return 0;
}

// eval and export-policy resolve their configuration on top of the
// checkpoint's echo, so by default they reproduce the run's own dataset and
// evaluation seeds.
RunConfig config_over_echo(const CliArgs& args, const LoadedCheckpoint& ckpt) {
    std::string text = ckpt.meta.config_echo;
    if (!args.config_path.empty()) {
        text += "\n";
        text += read_text_file(args.config_path);
    }
    RunConfig cfg = resolve_config(text, args.overrides);
    cfg.blocks = ckpt.meta.dims.blocks;
    cfg.width = ckpt.meta.dims.width;
    cfg.input_dim = ckpt.meta.dims.input_dim;
    cfg.classes = ckpt.meta.dims.num_classes;
    cfg.frozen_prefix = ckpt.meta.dims.frozen_prefix;
    cfg.policy_hidden = ckpt.meta.dims.policy_hidden;
    return cfg;
}

LoadedCheckpoint load_checkpoint_arg(const CliArgs& args, RunConfig* cfg_out) {
    // The checkpoint path may come from the config file or an override.
    RunConfig bootstrap = load_config(args);
    if (bootstrap.checkpoint.empty()) {
        throw ConfigError("checkpoint", "key 'checkpoint': required for this command");
    }
    LoadedCheckpoint ckpt = load_checkpoint(bootstrap.checkpoint);
    RunConfig cfg = config_over_echo(args, ckpt);
    cfg.checkpoint = bootstrap.checkpoint;
    *cfg_out = cfg;
    return ckpt;
}

EvalResult eval_loaded(const LoadedCheckpoint& ckpt, const RunConfig& cfg,
                       const LabeledSet& eval_set) {
    if (ckpt.spottune) {
        return evaluate(*ckpt.spottune, eval_set, cfg.eval_routing, cfg.seed_eval, cfg.tau,
                        cfg.batch);
    }
    return evaluate(*ckpt.backbone, eval_set, cfg.batch);
}

int cmd_eval(const CliArgs& args) {
    RunConfig cfg;
    const LoadedCheckpoint ckpt = load_checkpoint_arg(args, &cfg);
    const TaskData data = resolve_task_data(cfg);
    const EvalResult result = eval_loaded(ckpt, cfg, data.eval);
    std::printf("eval accuracy: %s\n", format_full(result.accuracy).c_str());
    std::printf("eval cross-entropy: %s\n", format_full(result.lc).c_str());
    return 0;
}

int cmd_export_policy(const CliArgs& args) {
    RunConfig cfg;
    const LoadedCheckpoint ckpt = load_checkpoint_arg(args, &cfg);
    if (!ckpt.spottune) {
        throw UsageError("checkpoint '" + cfg.checkpoint +
                         "' holds a plain model; export-policy needs a routed one");
    }
    ensure_out_dir(cfg);
    const TaskData data = resolve_task_data(cfg);
    const EvalResult result = eval_loaded(ckpt, cfg, data.eval);
    const std::string heatmap = out_path(cfg, "policy_heatmap.csv");
    const std::string histogram = out_path(cfg, "usage_histogram.csv");
    write_file_atomic(heatmap, policy_heatmap_csv(result.decisions, cfg.frozen_prefix));
    write_file_atomic(histogram, usage_histogram_csv(result.decisions));
    std::printf("wrote %s\n", heatmap.c_str());
    std::printf("wrote %s\n", histogram.c_str());
    return 0;
}

int cmd_gen_data(const CliArgs& args) {
    RunConfig cfg = load_config(args);
    if (cfg.data_out.empty()) {
        throw ConfigError("data_out", "key 'data_out': required for gen-data");
    }
    TaskData data;
    if (cfg.role == "source") {
        TaskSpec spec = cfg.source_task_spec();
        spec.seed = cfg.seed_data;
        data = generate_source(spec);
    } else if (cfg.role == "target") {
        data = generate_target(cfg.source_task_spec(), cfg.task_spec());
    } else {
        throw ConfigError("role", "key 'role': expected source or target, got '" + cfg.role + "'");
    }
    const fs::path base(cfg.data_out);
    if (base.has_parent_path()) fs::create_directories(base.parent_path());
    const std::string train_path = cfg.data_out + ".train.sptd";
    const std::string eval_path = cfg.data_out + ".eval.sptd";
    save_dataset(data.train, train_path);
    save_dataset(data.eval, eval_path);
    std::printf("wrote %s (%zu examples)\n", train_path.c_str(), data.train.size());
    std::printf("wrote %s (%zu examples)\n", eval_path.c_str(), data.eval.size());
    return 0;
}

int cmd_score_decathlon(const CliArgs& args) {
    if (args.config_path.empty()) {
        throw UsageError("score-decathlon needs a CSV path: spottune score-decathlon <csv>");
    }
    const auto domains = parse_domain_errors_csv(read_text_file(args.config_path));
    std::vector<double> per_domain;
    const double total = decathlon_score(domains, &per_domain);
    std::printf("domain,score\n");
    for (std::size_t i = 0; i < per_domain.size(); ++i) {
        std::printf("%zu,%s\n", i, format_full(per_domain[i]).c_str());
    }
    std::printf("total,%s\n", format_full(total).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        const CliArgs args = parse_args(argc, argv);
        if (args.command == "pretrain") return cmd_pretrain(args);
        if (args.command == "finetune") return cmd_finetune(args);
        if (args.command == "eval") return cmd_eval(args);
        if (args.command == "export-policy") return cmd_export_policy(args);
        if (args.command == "gen-data") return cmd_gen_data(args);
        if (args.command == "score-decathlon") return cmd_score_decathlon(args);
        if (args.command == "--help" || args.command == "-h" || args.command == "help") {
            std::fputs(kUsage, stdout);
            return 0;
        }
        throw UsageError("unknown command '" + args.command + "'\n" + std::string(kUsage));
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
