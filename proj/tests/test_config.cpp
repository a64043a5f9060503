#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "spottune/config.hpp"

using namespace spottune;

TEST_CASE("key=value parsing with comments and overrides") {
    const std::string text =
        "# a comment\n"
        "mode = spottune-global-k\n"
        "\n"
        "k=4\n"
        "lr = 0.25\n";
    const RunConfig cfg = resolve_config(text, {"k=5", "seed_data=42"});
    CHECK(cfg.mode == RunMode::spottune_global_k);
    CHECK(cfg.k == 5);  // override wins
    CHECK(cfg.lr == 0.25);
    CHECK(cfg.seed_data == 42);
}

TEST_CASE("unknown keys and malformed values name the key") {
    CHECK_THROWS_AS(resolve_config("bogus_key=1\n", {}), ConfigError);
    try {
        resolve_config("bogus_key=1\n", {});
    } catch (const ConfigError& e) {
        CHECK(e.key == "bogus_key");
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
    CHECK_THROWS_AS(resolve_config("lr=fast\n", {}), ConfigError);
    CHECK_THROWS_AS(resolve_config("epochs=-3\n", {}), ConfigError);
    CHECK_THROWS_AS(resolve_config("just-a-word\n", {}), ConfigError);
    CHECK_THROWS_AS(resolve_config("", {"lr"}), ConfigError);
}

TEST_CASE("range validation names the key") {
    CHECK_THROWS_AS(resolve_config("shift=2\n", {}), ConfigError);
    CHECK_THROWS_AS(resolve_config("tau=0\n", {}), ConfigError);
    CHECK_THROWS_AS(resolve_config("momentum=1\n", {}), ConfigError);
    CHECK_THROWS_AS(resolve_config("frozen_prefix=13\n", {}), ConfigError);
    CHECK_THROWS_AS(resolve_config("mode=spottune-global-k\nk=13\n", {}), ConfigError);
    CHECK_THROWS_AS(resolve_config("decay_epochs=5,5\n", {}), ConfigError);
    CHECK_THROWS_AS(resolve_config("decay_epochs=5,99\n", {}), ConfigError);
    CHECK_THROWS_AS(resolve_config("classes=1\n", {}), ConfigError);
}

TEST_CASE("presets fill the schedule and explicit keys override them") {
    const RunConfig ft = resolve_config("preset=finetune\n", {});
    CHECK(ft.lr == 0.01);
    CHECK(ft.policy_lr == 1e-4);
    CHECK(ft.epochs == 20);
    CHECK(ft.decay_epochs == std::vector<std::size_t>{8, 15});
    CHECK(ft.batch == 32);

    const RunConfig dec = resolve_config("preset=decathlon\n", {});
    CHECK(dec.lr == 0.1);
    CHECK(dec.policy_lr == 1e-2);
    CHECK(dec.batch == 128);
    CHECK(dec.decay_epochs == std::vector<std::size_t>{20, 30, 40});

    // Order between the preset key and the explicit key does not matter.
    const RunConfig a = resolve_config("lr=0.5\npreset=finetune\n", {});
    const RunConfig b = resolve_config("preset=finetune\nlr=0.5\n", {});
    CHECK(a.lr == 0.5);
    CHECK(b.lr == 0.5);
    CHECK(a.policy_lr == 1e-4);

    CHECK_THROWS_AS(resolve_config("preset=warp\n", {}), ConfigError);
}

TEST_CASE("serialization is canonical and round-trips") {
    RunConfig cfg = resolve_config("mode=last-k-ft\nk=2\nlr=0.125\nseed_train=77\n", {});
    const std::string text = serialize_config(cfg);
    // Applying the echo to a default config reproduces every field.
    RunConfig again;
    apply_config_text(again, text);
    CHECK(serialize_config(again) == text);
    CHECK(again.mode == RunMode::last_k_ft);
    CHECK(again.k == 2);
    CHECK(again.lr == 0.125);
    CHECK(again.seed_train == 77);
    // Sorted keys, one per line.
    CHECK(text.find("batch=") < text.find("blocks="));
    CHECK(text.find("blocks=") < text.find("mode="));
}

TEST_CASE("derived task and schedule views") {
    const RunConfig cfg =
        resolve_config("shift=0.25\nseed_data=5\nsource_data_seed=9\nlr=0.2\ndecay_epochs=10\n"
                       "decay_factor=0.5\nepochs=20\n",
                       {});
    const TaskSpec target = cfg.task_spec();
    CHECK(target.shift == 0.25);
    CHECK(target.seed == 5);
    const TaskSpec source = cfg.source_task_spec();
    CHECK(source.shift == 0.0);
    CHECK(source.seed == 9);
    CHECK(cfg.main_schedule().at(10) == doctest::Approx(0.1).epsilon(1e-14));
}
