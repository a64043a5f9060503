#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "spottune/gumbel.hpp"
#include "spottune/rng.hpp"
#include "spottune/tensor.hpp"

namespace spottune {

// Named parameter tensor. Models own their parameters by value; training and
// checkpointing address them through `all_params` pointers.
struct Param {
    std::string name;
    Tensor value;

    std::size_t numel() const { return value.numel(); }
};

struct Affine {
    Param w, b;  // w: [in, out], b: [out]
};

// Two-layer residual body: affine -> relu -> affine, same input/output width
// so the identity skip is well-typed.
struct ResidualBlock {
    Param w1, b1;  // [width, hidden], [hidden]
    Param w2, b2;  // [hidden, width], [width]
};

// Frozen source block plus its trainable copy; the copy starts bit-identical.
struct BlockPair {
    ResidualBlock frozen;
    ResidualBlock tuned;
};

// Small MLP mapping the raw input to one (freeze, fine-tune) logit pair per
// routable block; output layout is [routable * 2], row-major per block.
struct PolicyNetwork {
    Param w1, b1;  // [input_dim, hidden]
    Param w2, b2;  // [hidden, routable * 2]
    std::size_t routable = 0;
};

struct ModelDims {
    std::size_t input_dim = 16;
    std::size_t width = 8;
    std::size_t num_classes = 4;
    std::size_t blocks = 12;
    std::size_t frozen_prefix = 0;
    std::size_t policy_hidden = 32;
};

// Plain residual classifier: source pre-training and the baseline fine-tuning
// modes run on this (one block per position, no copies, no policy).
struct Backbone {
    ModelDims dims;
    Affine stem;
    std::vector<ResidualBlock> blocks;
    Affine head;

    static Backbone init(const ModelDims& dims, RngStream& rng);
};

// Routed model: every position carries a frozen/tuned pair, a policy network
// decides per example which copy to run, leading `frozen_prefix` positions are
// exempt and always take the frozen path.
struct SpotTuneModel {
    ModelDims dims;
    Affine stem;
    std::vector<BlockPair> blocks;
    Affine head;
    PolicyNetwork policy;

    std::size_t routable() const { return dims.blocks - dims.frozen_prefix; }

    // Expands a pre-trained backbone: stem and both block copies start from the
    // source parameters, the head is freshly initialized for the target task,
    // and the policy's output layer starts at zero (uniform initial routing).
    static SpotTuneModel from_source(const Backbone& source, std::size_t frozen_prefix,
                                     std::size_t policy_hidden, RngStream& rng);
};

// Source backbone with a freshly initialized head, for the baseline modes.
Backbone retarget_backbone(const Backbone& source, RngStream& rng);

// Zero-parameter models of the right structure, for checkpoint loading.
Backbone make_backbone_shell(const ModelDims& dims);
SpotTuneModel make_spottune_shell(const ModelDims& dims);

std::vector<Param*> all_params(Backbone& m);
std::vector<Param*> all_params(SpotTuneModel& m);
std::vector<const Param*> all_params(const Backbone& m);
std::vector<const Param*> all_params(const SpotTuneModel& m);

struct ParamCounts {
    std::size_t stem = 0, blocks_frozen = 0, blocks_tuned = 0, head = 0, policy = 0;
    std::size_t total() const { return stem + blocks_frozen + blocks_tuned + head + policy; }
};

ParamCounts count_parameters(const Backbone& m);
ParamCounts count_parameters(const SpotTuneModel& m);

// Per-forward-pass association of parameters with tape leaves.
class Binding {
public:
    Binding(Tape& tape, const std::vector<Param*>& params, const std::vector<Param*>& trainable);

    int node(const Param& p) const;
    Tape& tape() const { return *tape_; }
    const std::vector<Param*>& params() const { return params_; }

private:
    Tape* tape_;
    std::vector<Param*> params_;
    std::unordered_map<const Param*, int> nodes_;
};

int affine_forward(Tape& t, const Binding& b, const Affine& a, int x);
// F(x): the block body without the skip.
int block_body(Tape& t, const Binding& b, const ResidualBlock& blk, int x);
// F(x) + x.
int block_forward(Tape& t, const Binding& b, const ResidualBlock& blk, int x);
// Full plain chain: stem -> blocks (with skips) -> head.
int backbone_forward(Tape& t, const Binding& b, const Backbone& m, int x);
// [B, routable * 2] routing logits for a batch.
int policy_forward(Tape& t, const Binding& b, const PolicyNetwork& p, int x);

// Routing logits for one example as a [routable, 2] matrix; column 0 is the
// freeze logit, column 1 the fine-tune logit.
Tensor policy_logits(const PolicyNetwork& p, const Tensor& x);

enum class RoutingKind : std::uint8_t { sampled, argmax, forced };

struct RoutingSpec {
    RoutingKind kind = RoutingKind::sampled;
    RngStream* stream = nullptr;                            // sampled
    const std::vector<std::vector<std::uint8_t>>* forced = nullptr;  // [B][routable]
    int force_all = -1;  // forced mode with a single bit for every block/example
};

// Per-example, per-routable-block decisions from one forward pass.
struct RouteDecisions {
    std::vector<std::vector<std::uint8_t>> hard;                 // [B][routable], 1 = fine-tune
    std::vector<std::vector<std::array<double, 2>>> soft;        // [B][routable], (freeze, tune)
};

struct SpotTuneForward {
    int logits = -1;              // [B, classes]
    std::vector<int> soft_nodes;  // per routable block, [B, 2] relaxed weights
    RouteDecisions decisions;
};

// Routed forward pass. Every block evaluates both copies; the sampled hard
// gate picks one per example while its relaxed weights carry the gradient, so
// the policy and the tuned copies train jointly.
SpotTuneForward spottune_forward(Tape& t, const Binding& b, const SpotTuneModel& m, int x,
                                 const RoutingSpec& routing, double tau);

// Plain chain through the frozen copies only (the pre-trained path).
int frozen_chain_forward(Tape& t, const Binding& b, const SpotTuneModel& m, int x);

}  // namespace spottune
