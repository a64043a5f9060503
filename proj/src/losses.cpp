#include "spottune/losses.hpp"

namespace spottune {

namespace {
constexpr double kEntropyFloor = 1e-12;
}

int cross_entropy_loss(Tape& t, int logits, const std::vector<std::uint32_t>& labels) {
    return t.cross_entropy(logits, labels);
}

UsageFractions usage_fractions(const RouteDecisions& decisions, bool relaxed) {
    const std::size_t batch = decisions.hard.size();
    if (batch == 0) throw Error("usage_fractions: empty batch");
    const std::size_t routable = decisions.hard[0].size();
    UsageFractions out;
    out.v.assign(routable, 0.0);
    for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t l = 0; l < routable; ++l) {
            out.v[l] += relaxed ? decisions.soft[r][l][1] : double(decisions.hard[r][l]);
        }
    }
    for (double& v : out.v) v /= double(batch);
    return out;
}

int usage_fraction_nodes(Tape& t, const std::vector<int>& soft_nodes) {
    if (soft_nodes.empty()) throw Error("usage_fraction_nodes: no routable blocks");
    std::vector<int> per_block;
    per_block.reserve(soft_nodes.size());
    for (int soft : soft_nodes) {
        per_block.push_back(t.mean(t.slice(soft, 1, 1, 2)));
    }
    return t.stack(per_block);
}

int global_k_loss(Tape& t, int v, std::size_t k) {
    const std::size_t routable = t.value(v).numel();
    if (k > routable) {
        throw Error("global_k_loss: k = " + std::to_string(k) + " exceeds " +
                    std::to_string(routable) + " routable blocks");
    }
    const int excess = t.sub(t.sum(v), t.constant(Tensor::scalar(double(k))));
    return t.mul(excess, excess);
}

int entropy_loss(Tape& t, int v) {
    const int safe_log = t.log(t.clamp_min(v, kEntropyFloor));
    return t.scale(t.sum(t.mul(v, safe_log)), -1.0);
}

int total_loss(Tape& t, int lc, int lk, int le, const LossWeights& w) {
    return t.add(lc, t.add(t.scale(lk, w.lambda1), t.scale(le, w.lambda2)));
}

}  // namespace spottune
