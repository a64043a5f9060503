#include "spottune/driver.hpp"

namespace spottune {

RunConfig pretrain_effective(RunConfig cfg) {
    cfg.mode = RunMode::standard_ft;
    cfg.shift = 0.0;
    cfg.source_data_seed = cfg.seed_data;
    cfg.source_checkpoint.clear();
    return cfg;
}

RunConfig finetune_effective(RunConfig cfg, const CheckpointMeta& source_meta) {
    cfg.blocks = source_meta.dims.blocks;
    cfg.width = source_meta.dims.width;
    cfg.input_dim = source_meta.dims.input_dim;
    cfg.classes = source_meta.dims.num_classes;
    if (cfg.source_data_seed == 0) {
        RunConfig echoed;
        apply_config_text(echoed, source_meta.config_echo);
        cfg.source_data_seed = echoed.source_data_seed ? echoed.source_data_seed : echoed.seed_data;
    }
    return cfg;
}

TaskData resolve_task_data(const RunConfig& cfg) {
    if (!cfg.train_data.empty() || !cfg.eval_data.empty()) {
        if (cfg.train_data.empty() || cfg.eval_data.empty()) {
            throw ConfigError("train_data", "keys 'train_data' and 'eval_data' must be set together");
        }
        TaskData data{load_dataset(cfg.train_data), load_dataset(cfg.eval_data)};
        for (const auto* set : {&data.train, &data.eval}) {
            if (set->input_dim() != cfg.input_dim) {
                throw ConfigError("train_data", "dataset input dim " +
                                                    std::to_string(set->input_dim()) +
                                                    " does not match input_dim " +
                                                    std::to_string(cfg.input_dim));
            }
            if (set->num_classes != cfg.classes) {
                throw ConfigError("train_data", "dataset class count " +
                                                    std::to_string(set->num_classes) +
                                                    " does not match classes " +
                                                    std::to_string(cfg.classes));
            }
        }
        return data;
    }
    return generate_target(cfg.source_task_spec(), cfg.task_spec());
}

Backbone pretrain_source(const RunConfig& raw_cfg, TrainOutcome* outcome) {
    const RunConfig cfg = pretrain_effective(raw_cfg);
    const TaskData data = generate_source(cfg.source_task_spec());
    RngStream init_rng = RngStream(cfg.seed_init).child("source-init");
    Backbone model = Backbone::init(cfg.model_dims(), init_rng);
    RngStream mode_rng = RngStream(cfg.seed_train).child("mode");
    const ModePlan plan = configure_mode(model, RunMode::standard_ft, 0, mode_rng);
    TrainOutcome out = train_backbone(model, plan, data, cfg.train_setup());
    if (outcome) *outcome = std::move(out);
    return model;
}

FinetunedModel finetune_from_source(const RunConfig& cfg, const Backbone& source) {
    const TaskData data = resolve_task_data(cfg);
    RngStream init_rng = RngStream(cfg.seed_init).child("target-init");
    RngStream mode_rng = RngStream(cfg.seed_train).child("mode");

    FinetunedModel result;
    result.mode = cfg.mode;
    if (mode_uses_policy(cfg.mode)) {
        result.spottune = std::make_unique<SpotTuneModel>(
            SpotTuneModel::from_source(source, cfg.frozen_prefix, cfg.policy_hidden, init_rng));
        result.plan = configure_mode(*result.spottune, cfg.mode);
        result.outcome =
            train_spottune(*result.spottune, cfg.mode, result.plan, data, cfg.train_setup());
    } else {
        result.backbone = std::make_unique<Backbone>(retarget_backbone(source, init_rng));
        result.plan = configure_mode(*result.backbone, cfg.mode, cfg.k, mode_rng);
        result.outcome = train_backbone(*result.backbone, result.plan, data, cfg.train_setup());
    }
    return result;
}

}  // namespace spottune
