#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "spottune/model.hpp"

namespace spottune {

enum class ModelKind : std::uint32_t { backbone = 0, spottune = 1 };

struct CheckpointMeta {
    ModelKind kind = ModelKind::backbone;
    ModelDims dims;
    std::uint64_t source_hash = 0;  // hash of the source checkpoint file, 0 for sources
    std::string config_echo;        // resolved run configuration, key=value lines
};

struct LoadedCheckpoint {
    CheckpointMeta meta;
    std::optional<Backbone> backbone;
    std::optional<SpotTuneModel> spottune;
};

// SPTC model file (binary, little-endian): header, named 64-bit float blobs
// for every parameter, bit-exact round trip.
void save_checkpoint(const std::string& path, const Backbone& model, const CheckpointMeta& meta);
void save_checkpoint(const std::string& path, const SpotTuneModel& model,
                     const CheckpointMeta& meta);

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace spottune
