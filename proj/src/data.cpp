#include "spottune/data.hpp"

#include <bit>
#include <limits>

#include "spottune/io.hpp"

namespace spottune {

namespace {

// Cluster geometry: means at this scale over unit-ish class covariances keep
// the tasks solvable but leave headroom for transfer effects to show.
constexpr double kMeanScale = 1.2;
// Fresh target means are drawn tighter than the source's, so interpolated
// tasks at mid-shift and full-shift have comparable intrinsic difficulty.
constexpr double kFreshScale = 0.7;
constexpr double kSigmaLo = 0.5;
constexpr double kSigmaHi = 0.9;

constexpr std::uint32_t kDatasetMagic = 0x44545053;  // "SPTD" little-endian
constexpr std::uint32_t kDatasetVersion = 1;

void validate_spec(const TaskSpec& spec) {
    if (spec.input_dim == 0) throw Error("task: input_dim must be positive");
    if (spec.num_classes == 0) throw Error("task: num_classes must be positive");
    if (spec.num_classes > spec.num_train) {
        throw Error("task: num_classes " + std::to_string(spec.num_classes) +
                    " exceeds num_train " + std::to_string(spec.num_train));
    }
    if (!(spec.shift >= 0.0 && spec.shift <= 1.0)) {
        throw Error("task: shift must lie in [0, 1], got " + std::to_string(spec.shift));
    }
}

// Round-robin labels keep class counts balanced within one.
LabeledSet sample_set(const ClusterParams& params, std::size_t n, RngStream& rng,
                      std::uint64_t provenance) {
    const std::size_t classes = params.means.size();
    LabeledSet set;
    set.inputs = Tensor(Shape{n, params.input_dim});
    set.labels.resize(n);
    set.num_classes = static_cast<std::uint32_t>(classes);
    set.provenance = provenance;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % classes;
        set.labels[i] = static_cast<std::uint32_t>(c);
        for (std::size_t d = 0; d < params.input_dim; ++d) {
            set.inputs.data[i * params.input_dim + d] =
                params.means[c][d] + params.sigma[c] * rng.normal();
        }
    }
    return set;
}

ClusterParams fresh_clusters(std::size_t input_dim, std::size_t num_classes, std::uint64_t seed,
                             double mean_scale) {
    ClusterParams p;
    p.input_dim = input_dim;
    RngStream rng = RngStream(seed).child("clusters");
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::vector<double> mean(input_dim);
        for (double& v : mean) v = mean_scale * rng.normal();
        p.means.push_back(std::move(mean));
        p.sigma.push_back(kSigmaLo + (kSigmaHi - kSigmaLo) * rng.uniform01());
    }
    return p;
}

}  // namespace

std::uint64_t task_hash(const TaskSpec& spec) {
    std::uint64_t h = 0x5054443a5441534bULL;
    for (std::uint64_t field :
         {std::uint64_t(spec.input_dim), std::uint64_t(spec.num_classes),
          std::uint64_t(spec.num_train), std::uint64_t(spec.num_eval),
          std::bit_cast<std::uint64_t>(spec.shift), spec.seed}) {
        h = mix64(h ^ field);
    }
    return h;
}

ClusterParams source_clusters(const TaskSpec& spec) {
    validate_spec(spec);
    return fresh_clusters(spec.input_dim, spec.num_classes, spec.seed, kMeanScale);
}

ClusterParams shifted_clusters(const ClusterParams& source, double shift, std::size_t num_classes,
                               std::uint64_t seed) {
    if (!(shift >= 0.0 && shift <= 1.0)) {
        throw Error("task: shift must lie in [0, 1], got " + std::to_string(shift));
    }
    if (source.means.size() != num_classes) {
        throw Error("task: class count mismatch between source and target");
    }
    const ClusterParams fresh =
        fresh_clusters(source.input_dim, num_classes, seed, kMeanScale * kFreshScale);
    ClusterParams target = source;  // keeps the source covariances
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t d = 0; d < source.input_dim; ++d) {
            target.means[c][d] = (1.0 - shift) * source.means[c][d] + shift * fresh.means[c][d];
        }
    }
    return target;
}

TaskData generate_source(const TaskSpec& spec) {
    validate_spec(spec);
    const ClusterParams params = source_clusters(spec);
    const std::uint64_t h = task_hash(spec);
    RngStream train_rng = RngStream(spec.seed).child("train-samples");
    RngStream eval_rng = RngStream(spec.seed).child("eval-samples");
    return {sample_set(params, spec.num_train, train_rng, h),
            sample_set(params, spec.num_eval, eval_rng, h)};
}

TaskData generate_target(const TaskSpec& source_spec, const TaskSpec& target) {
    validate_spec(source_spec);
    validate_spec(target);
    if (target.input_dim != source_spec.input_dim ||
        target.num_classes != source_spec.num_classes) {
        throw Error("task: target dims must match the source task");
    }
    const ClusterParams params =
        shifted_clusters(source_clusters(source_spec), target.shift, target.num_classes, target.seed);
    const std::uint64_t h = task_hash(target);
    RngStream train_rng = RngStream(target.seed).child("train-samples");
    RngStream eval_rng = RngStream(target.seed).child("eval-samples");
    return {sample_set(params, target.num_train, train_rng, h),
            sample_set(params, target.num_eval, eval_rng, h)};
}

TaskData generate_target(const TaskSpec& source_spec, double shift, std::uint64_t seed) {
    TaskSpec target = source_spec;
    target.shift = shift;
    target.seed = seed;
    return generate_target(source_spec, target);
}

void save_dataset(const LabeledSet& set, const std::string& path) {
    ByteWriter w;
    w.u32(kDatasetMagic);
    w.u32(kDatasetVersion);
    w.u64(set.size());
    w.u32(static_cast<std::uint32_t>(set.input_dim()));
    w.u32(set.num_classes);
    w.u64(set.provenance);
    w.bytes(set.inputs.data.data(), set.inputs.data.size() * sizeof(double));
    w.bytes(set.labels.data(), set.labels.size() * sizeof(std::uint32_t));
    write_file_atomic(path, w.buffer().data(), w.buffer().size());
}

LabeledSet load_dataset(const std::string& path) {
    const std::vector<unsigned char> buf = read_file(path);
    ByteReader r(buf);
    if (r.u32("dataset magic") != kDatasetMagic) {
        throw ParseError("bad dataset magic (not an SPTD file, or foreign byte order)", 0);
    }
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.u32("dataset version");
    if (version != kDatasetVersion) {
        throw ParseError("unsupported dataset version " + std::to_string(version), version_at);
    }
    const std::size_t dims_at = r.offset();
    const std::uint64_t n = r.u64("dataset row count");
    const std::uint32_t input_dim = r.u32("dataset input dim");
    const std::uint32_t num_classes = r.u32("dataset class count");
    if (input_dim == 0 || num_classes == 0) {
        throw ParseError("dataset dims must be positive", dims_at);
    }
    // Reject sizes that cannot possibly fit in the file (or in memory).
    if (n > std::numeric_limits<std::uint64_t>::max() / (std::uint64_t(input_dim) * 8) ||
        n * std::uint64_t(input_dim) * 8 > buf.size()) {
        throw ParseError("dataset dimensions overflow the file size", dims_at);
    }

    LabeledSet set;
    set.provenance = r.u64("dataset provenance");
    set.num_classes = num_classes;
    set.inputs = Tensor(Shape{std::size_t(n), input_dim});
    r.bytes(set.inputs.data.data(), set.inputs.data.size() * sizeof(double), "dataset values");
    if (!set.inputs.all_finite()) {
        throw ParseError("dataset contains non-finite values", dims_at);
    }
    set.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = r.offset();
        set.labels[i] = r.u32("dataset label");
        if (set.labels[i] >= num_classes) {
            throw ParseError("label " + std::to_string(set.labels[i]) + " out of range [0, " +
                                 std::to_string(num_classes) + ")",
                             at);
        }
    }
    r.expect_end("dataset");
    return set;
}

}  // namespace spottune
