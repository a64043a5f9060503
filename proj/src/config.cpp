#include "spottune/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "spottune/metrics.hpp"

namespace spottune {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
        throw ConfigError(key, "key '" + key + "': expected a number, got '" + value + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    // strtoull silently wraps negatives, so reject them up front.
    if (value.find('-') != std::string::npos || end == value.c_str() || *end != '\0' ||
        errno == ERANGE) {
        throw ConfigError(key, "key '" + key + "': expected a non-negative integer, got '" +
                                   value + "'");
    }
    return v;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    if (trim(value).empty()) return out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        out.push_back(static_cast<std::size_t>(parse_u64(key, trim(item))));
    }
    return out;
}

std::string routing_name(RoutingKind r) {
    switch (r) {
        case RoutingKind::sampled: return "sampled";
        case RoutingKind::argmax: return "argmax";
        case RoutingKind::forced: return "forced";
    }
    return "?";
}

struct KeyBinding {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, KeyBinding>& key_table() {
    static const std::map<std::string, KeyBinding> table = [] {
        std::map<std::string, KeyBinding> t;
        auto size_key = [&](const char* key, std::size_t RunConfig::*field) {
            t[key] = {[key, field](RunConfig& c, const std::string& v) {
                          c.*field = static_cast<std::size_t>(parse_u64(key, v));
                      },
                      [field](const RunConfig& c) { return std::to_string(c.*field); }};
        };
        auto u64_key = [&](const char* key, std::uint64_t RunConfig::*field) {
            t[key] = {[key, field](RunConfig& c, const std::string& v) {
                          c.*field = parse_u64(key, v);
                      },
                      [field](const RunConfig& c) { return std::to_string(c.*field); }};
        };
        auto double_key = [&](const char* key, double RunConfig::*field) {
            t[key] = {[key, field](RunConfig& c, const std::string& v) {
                          c.*field = parse_double(key, v);
                      },
                      [field](const RunConfig& c) { return format_full(c.*field); }};
        };
        auto string_key = [&](const char* key, std::string RunConfig::*field) {
            t[key] = {[field](RunConfig& c, const std::string& v) { c.*field = v; },
                      [field](const RunConfig& c) { return c.*field; }};
        };

        t["mode"] = {[](RunConfig& c, const std::string& v) {
                         try {
                             c.mode = parse_run_mode(v);
                         } catch (const Error&) {
                             throw ConfigError("mode", "key 'mode': unknown run mode '" + v + "'");
                         }
                     },
                     [](const RunConfig& c) { return std::string(run_mode_name(c.mode)); }};
        size_key("blocks", &RunConfig::blocks);
        size_key("width", &RunConfig::width);
        size_key("frozen_prefix", &RunConfig::frozen_prefix);
        size_key("policy_hidden", &RunConfig::policy_hidden);
        size_key("input_dim", &RunConfig::input_dim);
        size_key("classes", &RunConfig::classes);
        size_key("train_examples", &RunConfig::train_examples);
        size_key("eval_examples", &RunConfig::eval_examples);
        double_key("shift", &RunConfig::shift);
        u64_key("source_data_seed", &RunConfig::source_data_seed);
        size_key("k", &RunConfig::k);
        double_key("lambda1", &RunConfig::lambda1);
        double_key("lambda2", &RunConfig::lambda2);
        double_key("tau", &RunConfig::tau);
        string_key("preset", &RunConfig::preset);
        size_key("epochs", &RunConfig::epochs);
        size_key("batch", &RunConfig::batch);
        double_key("lr", &RunConfig::lr);
        double_key("policy_lr", &RunConfig::policy_lr);
        double_key("momentum", &RunConfig::momentum);
        t["decay_epochs"] = {[](RunConfig& c, const std::string& v) {
                                 c.decay_epochs = parse_size_list("decay_epochs", v);
                             },
                             [](const RunConfig& c) {
                                 std::string s;
                                 for (std::size_t i = 0; i < c.decay_epochs.size(); ++i) {
                                     if (i) s += ',';
                                     s += std::to_string(c.decay_epochs[i]);
                                 }
                                 return s;
                             }};
        double_key("decay_factor", &RunConfig::decay_factor);
        u64_key("seed_init", &RunConfig::seed_init);
        u64_key("seed_data", &RunConfig::seed_data);
        u64_key("seed_train", &RunConfig::seed_train);
        u64_key("seed_eval", &RunConfig::seed_eval);
        t["eval_routing"] = {
            [](RunConfig& c, const std::string& v) {
                if (v == "sampled") {
                    c.eval_routing = RoutingKind::sampled;
                } else if (v == "argmax") {
                    c.eval_routing = RoutingKind::argmax;
                } else {
                    throw ConfigError("eval_routing",
                                      "key 'eval_routing': expected sampled or argmax, got '" + v +
                                          "'");
                }
            },
            [](const RunConfig& c) { return routing_name(c.eval_routing); }};
        string_key("out_dir", &RunConfig::out_dir);
        string_key("source_checkpoint", &RunConfig::source_checkpoint);
        string_key("checkpoint", &RunConfig::checkpoint);
        string_key("train_data", &RunConfig::train_data);
        string_key("eval_data", &RunConfig::eval_data);
        string_key("data_out", &RunConfig::data_out);
        string_key("role", &RunConfig::role);
        return t;
    }();
    return table;
}

std::vector<std::pair<std::string, std::string>> split_pairs(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(t, "line " + std::to_string(line_no) + ": expected key=value, got '" +
                                     t + "'");
        }
        pairs.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return pairs;
}

}  // namespace

void apply_config_pair(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = key_table();
    auto it = table.find(key);
    if (it == table.end()) {
        throw ConfigError(key, "unknown config key '" + key + "'");
    }
    it->second.set(cfg, value);
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
    for (const auto& [key, value] : split_pairs(text)) apply_config_pair(cfg, key, value);
}

void apply_preset(RunConfig& cfg, const std::string& name) {
    cfg.preset = name;
    if (name == "desk") {
        cfg.epochs = 40;
        cfg.batch = 32;
        cfg.lr = 0.01;
        cfg.policy_lr = 0.05;
        cfg.decay_epochs = {28, 36};
        cfg.decay_factor = 0.1;
    } else if (name == "finetune") {
        // Paper-style fine-tuning protocol at half epoch count.
        cfg.epochs = 20;
        cfg.batch = 32;
        cfg.lr = 1e-2;
        cfg.policy_lr = 1e-4;
        cfg.decay_epochs = {8, 15};
        cfg.decay_factor = 0.1;
    } else if (name == "decathlon") {
        // Multi-domain protocol at half epoch count.
        cfg.epochs = 55;
        cfg.batch = 128;
        cfg.lr = 0.1;
        cfg.policy_lr = 1e-2;
        cfg.decay_epochs = {20, 30, 40};
        cfg.decay_factor = 0.1;
    } else {
        throw ConfigError("preset", "key 'preset': unknown preset '" + name + "'");
    }
}

RunConfig resolve_config(const std::string& file_text,
                         const std::vector<std::string>& override_pairs) {
    auto pairs = split_pairs(file_text);
    for (const std::string& tok : override_pairs) {
        const std::size_t eq = tok.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(tok, "override '" + tok + "' is not key=value");
        }
        pairs.emplace_back(trim(tok.substr(0, eq)), trim(tok.substr(eq + 1)));
    }

    RunConfig cfg;
    std::string preset = cfg.preset;
    for (const auto& [key, value] : pairs) {
        if (key == "preset") preset = value;
    }
    apply_preset(cfg, preset);
    for (const auto& [key, value] : pairs) apply_config_pair(cfg, key, value);
    validate_config(cfg);
    return cfg;
}

void validate_config(const RunConfig& cfg) {
    if (cfg.blocks == 0) throw ConfigError("blocks", "key 'blocks': must be at least 1");
    if (cfg.width == 0) throw ConfigError("width", "key 'width': must be at least 1");
    if (cfg.frozen_prefix > cfg.blocks) {
        throw ConfigError("frozen_prefix", "key 'frozen_prefix': exceeds blocks (" +
                                               std::to_string(cfg.blocks) + ")");
    }
    if (cfg.policy_hidden == 0) {
        throw ConfigError("policy_hidden", "key 'policy_hidden': must be at least 1");
    }
    if (cfg.input_dim == 0) throw ConfigError("input_dim", "key 'input_dim': must be at least 1");
    if (cfg.classes < 2) throw ConfigError("classes", "key 'classes': must be at least 2");
    if (cfg.train_examples < cfg.classes) {
        throw ConfigError("train_examples", "key 'train_examples': fewer than classes");
    }
    if (cfg.eval_examples == 0) {
        throw ConfigError("eval_examples", "key 'eval_examples': must be at least 1");
    }
    if (!(cfg.shift >= 0.0 && cfg.shift <= 1.0)) {
        throw ConfigError("shift", "key 'shift': must lie in [0, 1]");
    }
    const std::size_t routable = cfg.blocks - cfg.frozen_prefix;
    if (cfg.mode == RunMode::spottune_global_k && cfg.k > routable) {
        throw ConfigError("k", "key 'k': exceeds routable blocks (" + std::to_string(routable) +
                                   ")");
    }
    if (cfg.mode == RunMode::last_k_ft && cfg.k > cfg.blocks) {
        throw ConfigError("k", "key 'k': exceeds blocks (" + std::to_string(cfg.blocks) + ")");
    }
    if (cfg.lambda1 < 0.0) throw ConfigError("lambda1", "key 'lambda1': must be non-negative");
    if (cfg.lambda2 < 0.0) throw ConfigError("lambda2", "key 'lambda2': must be non-negative");
    if (!(cfg.tau > 0.0)) throw ConfigError("tau", "key 'tau': must be positive");
    if (cfg.batch == 0) throw ConfigError("batch", "key 'batch': must be at least 1");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
        throw ConfigError("momentum", "key 'momentum': must lie in [0, 1)");
    }
    if (!(cfg.decay_factor > 0.0)) {
        throw ConfigError("decay_factor", "key 'decay_factor': must be positive");
    }
    for (std::size_t i = 0; i < cfg.decay_epochs.size(); ++i) {
        if (i > 0 && cfg.decay_epochs[i] <= cfg.decay_epochs[i - 1]) {
            throw ConfigError("decay_epochs", "key 'decay_epochs': must be strictly increasing");
        }
        if (cfg.epochs > 0 && cfg.decay_epochs[i] >= cfg.epochs) {
            throw ConfigError("decay_epochs", "key 'decay_epochs': " +
                                                  std::to_string(cfg.decay_epochs[i]) +
                                                  " is past the last epoch");
        }
    }
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& [key, binding] : key_table()) {
        out += key + "=" + binding.get(cfg) + "\n";
    }
    return out;
}

std::string config_echo_text(RunConfig cfg) {
    cfg.out_dir = ".";
    cfg.checkpoint.clear();
    cfg.data_out.clear();
    return serialize_config(cfg);
}

ModelDims RunConfig::model_dims() const {
    ModelDims d;
    d.input_dim = input_dim;
    d.width = width;
    d.num_classes = classes;
    d.blocks = blocks;
    d.frozen_prefix = frozen_prefix;
    d.policy_hidden = policy_hidden;
    return d;
}

TaskSpec RunConfig::task_spec() const {
    TaskSpec s;
    s.input_dim = input_dim;
    s.num_classes = classes;
    s.num_train = train_examples;
    s.num_eval = eval_examples;
    s.shift = shift;
    s.seed = seed_data;
    return s;
}

TaskSpec RunConfig::source_task_spec() const {
    TaskSpec s = task_spec();
    s.shift = 0.0;
    s.seed = source_data_seed;
    return s;
}

Schedule RunConfig::main_schedule() const { return {lr, decay_epochs, decay_factor}; }

Schedule RunConfig::policy_schedule() const { return {policy_lr, decay_epochs, decay_factor}; }

TrainSetup RunConfig::train_setup() const {
    TrainSetup s;
    s.epochs = epochs;
    s.batch = batch;
    s.momentum = momentum;
    s.tau = tau;
    s.weights = {lambda1, lambda2, k};
    s.main_schedule = main_schedule();
    s.policy_schedule = policy_schedule();
    s.seed_train = seed_train;
    s.seed_eval = seed_eval;
    s.eval_routing = eval_routing;
    return s;
}

}  // namespace spottune
