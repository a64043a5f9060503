#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spottune/rng.hpp"
#include "spottune/tensor.hpp"

namespace spottune {

// Fully determines one synthetic classification task: Gaussian class clusters
// whose means interpolate between a source task's means (shift = 0) and an
// independently seeded set (shift = 1).
struct TaskSpec {
    std::size_t input_dim = 16;
    std::size_t num_classes = 4;
    std::size_t num_train = 2048;
    std::size_t num_eval = 512;
    double shift = 0.0;
    std::uint64_t seed = 0;
};

struct LabeledSet {
    Tensor inputs;  // [n, input_dim]
    std::vector<std::uint32_t> labels;
    std::uint32_t num_classes = 0;
    std::uint64_t provenance = 0;  // TaskSpec hash

    std::size_t size() const { return labels.size(); }
    std::size_t input_dim() const { return inputs.rank() == 2 ? inputs.shape[1] : 0; }
};

struct TaskData {
    LabeledSet train;
    LabeledSet eval;
};

// Per-class cluster parameters (isotropic Gaussians).
struct ClusterParams {
    std::size_t input_dim = 0;
    std::vector<std::vector<double>> means;  // [classes][input_dim]
    std::vector<double> sigma;               // [classes]
};

std::uint64_t task_hash(const TaskSpec& spec);

ClusterParams source_clusters(const TaskSpec& spec);
// Means move toward a fresh seeded set by `shift`; covariances stay the
// source's, so shift = 0 reproduces the source distribution exactly.
ClusterParams shifted_clusters(const ClusterParams& source, double shift, std::size_t num_classes,
                               std::uint64_t seed);

TaskData generate_source(const TaskSpec& spec);
// `target` supplies shift, seed and sample counts; dims must match the source.
TaskData generate_target(const TaskSpec& source_spec, const TaskSpec& target);
TaskData generate_target(const TaskSpec& source_spec, double shift, std::uint64_t seed);

// SPTD dataset file (binary, little-endian).
void save_dataset(const LabeledSet& set, const std::string& path);
LabeledSet load_dataset(const std::string& path);

}  // namespace spottune
