#pragma once

#include <cstdint>
#include <vector>

#include "spottune/model.hpp"
#include "spottune/tensor.hpp"

namespace spottune {

// Fraction of examples routed through each fine-tuned block.
struct UsageFractions {
    enum class Source : std::uint8_t { batch, dataset };
    std::vector<double> v;  // one entry per routable block, each in [0, 1]
    Source source = Source::batch;
};

struct LossWeights {
    double lambda1 = 0.5;  // weight of the block-budget loss
    double lambda2 = 0.1;  // weight of the decision-entropy loss
    std::size_t k = 3;     // target number of fine-tuned blocks
};

// Mean negative log-softmax probability of the true class.
int cross_entropy_loss(Tape& t, int logits, const std::vector<std::uint32_t>& labels);

// Hard fractions count routed examples; relaxed fractions average the soft
// fine-tune weights instead (the differentiable surrogate).
UsageFractions usage_fractions(const RouteDecisions& decisions, bool relaxed);

// Differentiable batch fractions: one scalar per routable block, the mean of
// the soft fine-tune column, stacked into a vector node.
int usage_fraction_nodes(Tape& t, const std::vector<int>& soft_nodes);

// ((sum_l v_l) - k)^2.
int global_k_loss(Tape& t, int v, std::size_t k);

// sum_l -v_l log v_l, with 0 log 0 treated as 0 (v clamped before the log).
int entropy_loss(Tape& t, int v);

// classification + lambda1 * budget + lambda2 * entropy.
int total_loss(Tape& t, int lc, int lk, int le, const LossWeights& w);

}  // namespace spottune
