#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "spottune/checkpoint.hpp"
#include "spottune/data.hpp"
#include "spottune/io.hpp"
#include "spottune/metrics.hpp"

#ifndef SPOTTUNE_CLI_PATH
#error "SPOTTUNE_CLI_PATH must point at the spottune binary"
#endif

using namespace spottune;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "spottune_cli_test";

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SPOTTUNE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    const auto buf = read_file(p.string());
    return std::string(buf.begin(), buf.end());
}

// Small, fast run shared by the cases below.
const std::string kFastKeys =
    " epochs=4 decay_epochs= train_examples=192 eval_examples=96 seed_data=55";

struct Workspace {
    Workspace() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        REQUIRE(run_cli("pretrain out_dir=" + (kWork / "src").string() +
                        " epochs=8 decay_epochs=" + " train_examples=512 eval_examples=128") == 0);
    }
    std::string source() const { return (kWork / "src" / "source.sptc").string(); }
};

}  // namespace

TEST_CASE("identical invocations produce byte-identical outputs") {
    Workspace ws;
    for (const char* mode : {"spottune", "spottune-global-k", "standard-ft"}) {
        const std::string a = (kWork / (std::string("a_") + mode)).string();
        const std::string b = (kWork / (std::string("b_") + mode)).string();
        const std::string common = std::string(" mode=") + mode +
                                   " source_checkpoint=" + ws.source() + kFastKeys;
        REQUIRE(run_cli("finetune out_dir=" + a + common) == 0);
        REQUIRE(run_cli("finetune out_dir=" + b + common) == 0);

        CHECK(read_file(a + "/metrics.csv") == read_file(b + "/metrics.csv"));
        CHECK(read_file(a + "/model.sptc") == read_file(b + "/model.sptc"));
        if (std::string(mode) != "standard-ft") {
            CHECK(read_file(a + "/policy_heatmap.csv") == read_file(b + "/policy_heatmap.csv"));
            CHECK(read_file(a + "/usage_histogram.csv") == read_file(b + "/usage_histogram.csv"));
        }
    }
}

TEST_CASE("gen-data is reproducible and loadable") {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    const std::string base1 = (kWork / "d1").string();
    const std::string base2 = (kWork / "d2").string();
    const std::string keys = " role=target shift=0.5 seed_data=9 source_data_seed=2"
                             " train_examples=64 eval_examples=32";
    REQUIRE(run_cli("gen-data data_out=" + base1 + keys) == 0);
    REQUIRE(run_cli("gen-data data_out=" + base2 + keys) == 0);
    CHECK(fnv1a64_file(base1 + ".train.sptd") == fnv1a64_file(base2 + ".train.sptd"));
    CHECK(fnv1a64_file(base1 + ".eval.sptd") == fnv1a64_file(base2 + ".eval.sptd"));

    const LabeledSet train = load_dataset(base1 + ".train.sptd");
    CHECK(train.size() == 64);
    CHECK(train.input_dim() == 16);
}

TEST_CASE("feature-extractor runs leave the backbone bit-identical to the source") {
    Workspace ws;
    const std::string out = (kWork / "fe").string();
    REQUIRE(run_cli("finetune mode=feature-extractor out_dir=" + out +
                    " source_checkpoint=" + ws.source() + kFastKeys) == 0);

    const LoadedCheckpoint src = load_checkpoint(ws.source());
    const LoadedCheckpoint fe = load_checkpoint(out + "/model.sptc");
    REQUIRE(fe.backbone.has_value());
    CHECK(fe.meta.source_hash == fnv1a64_file(ws.source()));
    CHECK(fe.backbone->stem.w.value.data == src.backbone->stem.w.value.data);
    for (std::size_t i = 0; i < src.backbone->blocks.size(); ++i) {
        CHECK(fe.backbone->blocks[i].w1.value.data == src.backbone->blocks[i].w1.value.data);
        CHECK(fe.backbone->blocks[i].w2.value.data == src.backbone->blocks[i].w2.value.data);
    }
    CHECK(fe.backbone->head.w.value.data != src.backbone->head.w.value.data);

    // eval works on the stored checkpoint and is quiet about it
    CHECK(run_cli("eval checkpoint=" + out + "/model.sptc") == 0);
}

TEST_CASE("export-policy on an untrained routed model reads about one half per block") {
    Workspace ws;
    const std::string out = (kWork / "zero").string();
    // Zero epochs: the policy keeps its zero output layer, routing stays uniform.
    REQUIRE(run_cli("finetune mode=spottune out_dir=" + out + " source_checkpoint=" + ws.source() +
                    " epochs=0 decay_epochs= train_examples=64 eval_examples=2048 seed_data=66") ==
            0);
    const std::string exp = (kWork / "zero_export").string();
    REQUIRE(run_cli("export-policy checkpoint=" + out + "/model.sptc out_dir=" + exp) == 0);

    std::ifstream in(exp + "/policy_heatmap.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "block_index,v_l");
    int rows = 0;
    while (std::getline(in, line)) {
        const double v = std::stod(line.substr(line.find(',') + 1));
        CHECK(std::abs(v - 0.5) < 0.05);
        ++rows;
    }
    CHECK(rows == 12);

    // export-policy refuses plain checkpoints
    CHECK(run_cli("export-policy checkpoint=" + ws.source()) == 1);
}

TEST_CASE("score-decathlon calculator") {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    const std::string csv = (kWork / "scores.csv").string();
    std::ofstream(csv) << "error,baseline\n0.0,0.4\n0.4,0.4\n0.2,0.4\n";
    const std::string cmd = std::string(SPOTTUNE_CLI_PATH) + " score-decathlon " + csv + " > " +
                            (kWork / "out.txt").string() + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    const std::string out = slurp(kWork / "out.txt");
    CHECK(out.find("0,1000\n") != std::string::npos);
    CHECK(out.find("1,0\n") != std::string::npos);
    CHECK(out.find("2,250\n") != std::string::npos);
    CHECK(out.find("total,1250\n") != std::string::npos);
}

TEST_CASE("failure exit codes") {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    CHECK(run_cli("warp-speed") == 1);                        // unknown command
    CHECK(run_cli("finetune no_such_key=1") == 1);            // unknown key
    CHECK(run_cli("finetune shift=7 source_checkpoint=x") == 1);  // range violation
    CHECK(run_cli("eval checkpoint=/definitely/missing.sptc") == 1);
    CHECK(run_cli("pretrain out_dir=" + (kWork / "boom").string() +
                  " lr=1e8 epochs=1 decay_epochs= train_examples=96 eval_examples=32") == 2);
}
