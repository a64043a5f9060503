#include "spottune/model.hpp"

#include <algorithm>
#include <cmath>

namespace spottune {

namespace {

Tensor gaussian_matrix(std::size_t rows, std::size_t cols, double std_dev, RngStream& rng) {
    Tensor t(Shape{rows, cols});
    for (double& v : t.data) v = std_dev * rng.normal();
    return t;
}

Affine init_affine(const std::string& prefix, std::size_t in, std::size_t out, RngStream& rng) {
    Affine a;
    a.w = {prefix + ".w", gaussian_matrix(in, out, 1.0 / std::sqrt(double(in)), rng)};
    a.b = {prefix + ".b", Tensor(Shape{out})};
    return a;
}

ResidualBlock init_block(const std::string& prefix, std::size_t width, RngStream& rng) {
    ResidualBlock blk;
    const double s = 1.0 / std::sqrt(double(width));
    blk.w1 = {prefix + ".w1", gaussian_matrix(width, width, s, rng)};
    blk.b1 = {prefix + ".b1", Tensor(Shape{width})};
    // Damped output layer keeps the residual chain near identity at init, so
    // deep stacks train stably at the shipped learning rates.
    blk.w2 = {prefix + ".w2", gaussian_matrix(width, width, 0.1 * s, rng)};
    blk.b2 = {prefix + ".b2", Tensor(Shape{width})};
    return blk;
}

ResidualBlock rename_block(const ResidualBlock& src, const std::string& prefix) {
    ResidualBlock blk = src;
    blk.w1.name = prefix + ".w1";
    blk.b1.name = prefix + ".b1";
    blk.w2.name = prefix + ".w2";
    blk.b2.name = prefix + ".b2";
    return blk;
}

void append_block(std::vector<Param*>& out, ResidualBlock& blk) {
    out.push_back(&blk.w1);
    out.push_back(&blk.b1);
    out.push_back(&blk.w2);
    out.push_back(&blk.b2);
}

}  // namespace

Backbone Backbone::init(const ModelDims& dims, RngStream& rng) {
    Backbone m;
    m.dims = dims;
    m.stem = init_affine("stem", dims.input_dim, dims.width, rng);
    for (std::size_t i = 0; i < dims.blocks; ++i) {
        m.blocks.push_back(init_block("block" + std::to_string(i), dims.width, rng));
    }
    m.head = init_affine("head", dims.width, dims.num_classes, rng);
    return m;
}

Backbone retarget_backbone(const Backbone& source, RngStream& rng) {
    Backbone m = source;
    m.head = init_affine("head", m.dims.width, m.dims.num_classes, rng);
    return m;
}

SpotTuneModel SpotTuneModel::from_source(const Backbone& source, std::size_t frozen_prefix,
                                         std::size_t policy_hidden, RngStream& rng) {
    if (frozen_prefix > source.dims.blocks) {
        throw Error("from_source: frozen prefix " + std::to_string(frozen_prefix) + " exceeds " +
                    std::to_string(source.dims.blocks) + " blocks");
    }
    SpotTuneModel m;
    m.dims = source.dims;
    m.dims.frozen_prefix = frozen_prefix;
    m.dims.policy_hidden = policy_hidden;
    m.stem = source.stem;
    for (std::size_t i = 0; i < source.blocks.size(); ++i) {
        const std::string prefix = "block" + std::to_string(i);
        BlockPair pair;
        pair.frozen = rename_block(source.blocks[i], prefix + ".frozen");
        pair.tuned = rename_block(source.blocks[i], prefix + ".tuned");
        m.blocks.push_back(std::move(pair));
    }
    m.head = init_affine("head", m.dims.width, m.dims.num_classes, rng);

    const std::size_t routable = m.dims.blocks - frozen_prefix;
    m.policy.routable = routable;
    m.policy.w1 = {"policy.w1", gaussian_matrix(m.dims.input_dim, policy_hidden,
                                                1.0 / std::sqrt(double(m.dims.input_dim)), rng)};
    m.policy.b1 = {"policy.b1", Tensor(Shape{policy_hidden})};
    // Zero output layer: routing starts uniform and unbiased.
    m.policy.w2 = {"policy.w2", Tensor(Shape{policy_hidden, routable * 2})};
    m.policy.b2 = {"policy.b2", Tensor(Shape{routable * 2})};
    return m;
}

namespace {

Affine shell_affine(const std::string& prefix, std::size_t in, std::size_t out) {
    return {{prefix + ".w", Tensor(Shape{in, out})}, {prefix + ".b", Tensor(Shape{out})}};
}

ResidualBlock shell_block(const std::string& prefix, std::size_t width) {
    ResidualBlock blk;
    blk.w1 = {prefix + ".w1", Tensor(Shape{width, width})};
    blk.b1 = {prefix + ".b1", Tensor(Shape{width})};
    blk.w2 = {prefix + ".w2", Tensor(Shape{width, width})};
    blk.b2 = {prefix + ".b2", Tensor(Shape{width})};
    return blk;
}

}  // namespace

Backbone make_backbone_shell(const ModelDims& dims) {
    Backbone m;
    m.dims = dims;
    m.stem = shell_affine("stem", dims.input_dim, dims.width);
    for (std::size_t i = 0; i < dims.blocks; ++i) {
        m.blocks.push_back(shell_block("block" + std::to_string(i), dims.width));
    }
    m.head = shell_affine("head", dims.width, dims.num_classes);
    return m;
}

SpotTuneModel make_spottune_shell(const ModelDims& dims) {
    SpotTuneModel m;
    m.dims = dims;
    m.stem = shell_affine("stem", dims.input_dim, dims.width);
    for (std::size_t i = 0; i < dims.blocks; ++i) {
        const std::string prefix = "block" + std::to_string(i);
        m.blocks.push_back(
            {shell_block(prefix + ".frozen", dims.width), shell_block(prefix + ".tuned", dims.width)});
    }
    m.head = shell_affine("head", dims.width, dims.num_classes);
    const std::size_t routable = dims.blocks - dims.frozen_prefix;
    m.policy.routable = routable;
    m.policy.w1 = {"policy.w1", Tensor(Shape{dims.input_dim, dims.policy_hidden})};
    m.policy.b1 = {"policy.b1", Tensor(Shape{dims.policy_hidden})};
    m.policy.w2 = {"policy.w2", Tensor(Shape{dims.policy_hidden, routable * 2})};
    m.policy.b2 = {"policy.b2", Tensor(Shape{routable * 2})};
    return m;
}

std::vector<Param*> all_params(Backbone& m) {
    std::vector<Param*> out{&m.stem.w, &m.stem.b};
    for (auto& blk : m.blocks) append_block(out, blk);
    out.push_back(&m.head.w);
    out.push_back(&m.head.b);
    return out;
}

std::vector<Param*> all_params(SpotTuneModel& m) {
    std::vector<Param*> out{&m.stem.w, &m.stem.b};
    for (auto& pair : m.blocks) {
        append_block(out, pair.frozen);
        append_block(out, pair.tuned);
    }
    out.push_back(&m.head.w);
    out.push_back(&m.head.b);
    out.push_back(&m.policy.w1);
    out.push_back(&m.policy.b1);
    out.push_back(&m.policy.w2);
    out.push_back(&m.policy.b2);
    return out;
}

std::vector<const Param*> all_params(const Backbone& m) {
    auto ps = all_params(const_cast<Backbone&>(m));
    return {ps.begin(), ps.end()};
}

std::vector<const Param*> all_params(const SpotTuneModel& m) {
    auto ps = all_params(const_cast<SpotTuneModel&>(m));
    return {ps.begin(), ps.end()};
}

namespace {

std::size_t block_numel(const ResidualBlock& b) {
    return b.w1.numel() + b.b1.numel() + b.w2.numel() + b.b2.numel();
}

}  // namespace

ParamCounts count_parameters(const Backbone& m) {
    ParamCounts c;
    c.stem = m.stem.w.numel() + m.stem.b.numel();
    for (const auto& blk : m.blocks) c.blocks_frozen += block_numel(blk);
    c.head = m.head.w.numel() + m.head.b.numel();
    return c;
}

ParamCounts count_parameters(const SpotTuneModel& m) {
    ParamCounts c;
    c.stem = m.stem.w.numel() + m.stem.b.numel();
    for (const auto& pair : m.blocks) {
        c.blocks_frozen += block_numel(pair.frozen);
        c.blocks_tuned += block_numel(pair.tuned);
    }
    c.head = m.head.w.numel() + m.head.b.numel();
    c.policy = m.policy.w1.numel() + m.policy.b1.numel() + m.policy.w2.numel() + m.policy.b2.numel();
    return c;
}

Binding::Binding(Tape& tape, const std::vector<Param*>& params,
                 const std::vector<Param*>& trainable)
    : tape_(&tape), params_(params) {
    std::unordered_map<const Param*, bool> train_set;
    for (const Param* p : trainable) train_set[p] = true;
    for (Param* p : params_) {
        nodes_[p] = tape.leaf(p->value, train_set.count(p) > 0);
    }
}

int Binding::node(const Param& p) const {
    auto it = nodes_.find(&p);
    if (it == nodes_.end()) {
        throw Error("binding: parameter '" + p.name + "' is not bound to this tape");
    }
    return it->second;
}

int affine_forward(Tape& t, const Binding& b, const Affine& a, int x) {
    return t.bias_add(t.matmul(x, b.node(a.w)), b.node(a.b));
}

int block_body(Tape& t, const Binding& b, const ResidualBlock& blk, int x) {
    const int h = t.relu(t.bias_add(t.matmul(x, b.node(blk.w1)), b.node(blk.b1)));
    return t.bias_add(t.matmul(h, b.node(blk.w2)), b.node(blk.b2));
}

int block_forward(Tape& t, const Binding& b, const ResidualBlock& blk, int x) {
    return t.add(block_body(t, b, blk, x), x);
}

int backbone_forward(Tape& t, const Binding& b, const Backbone& m, int x) {
    int h = affine_forward(t, b, m.stem, x);
    for (const auto& blk : m.blocks) h = block_forward(t, b, blk, h);
    return affine_forward(t, b, m.head, h);
}

int policy_forward(Tape& t, const Binding& b, const PolicyNetwork& p, int x) {
    const int h = t.relu(t.bias_add(t.matmul(x, b.node(p.w1)), b.node(p.b1)));
    return t.bias_add(t.matmul(h, b.node(p.w2)), b.node(p.b2));
}

Tensor policy_logits(const PolicyNetwork& p, const Tensor& x) {
    if (x.rank() != 1 || x.shape[0] != p.w1.value.shape[0]) {
        throw ShapeError("policy_logits: input shape " + shape_str(x.shape) + " vs expected [" +
                         std::to_string(p.w1.value.shape[0]) + "]");
    }
    Tape t;
    PolicyNetwork& pm = const_cast<PolicyNetwork&>(p);
    Binding b(t, {&pm.w1, &pm.b1, &pm.w2, &pm.b2}, {});
    const int xn = t.leaf(Tensor::matrix(1, x.shape[0], x.data));
    const int out = policy_forward(t, b, p, xn);
    return Tensor(Shape{p.routable, 2}, std::vector<double>(t.value(out).data));
}

int frozen_chain_forward(Tape& t, const Binding& b, const SpotTuneModel& m, int x) {
    int h = affine_forward(t, b, m.stem, x);
    for (const auto& pair : m.blocks) h = block_forward(t, b, pair.frozen, h);
    return affine_forward(t, b, m.head, h);
}

SpotTuneForward spottune_forward(Tape& t, const Binding& b, const SpotTuneModel& m, int x,
                                 const RoutingSpec& routing, double tau) {
    const std::size_t batch = t.value(x).shape[0];
    const std::size_t routable = m.routable();

    int h = affine_forward(t, b, m.stem, x);
    for (std::size_t i = 0; i < m.dims.frozen_prefix; ++i) {
        h = block_forward(t, b, m.blocks[i].frozen, h);
    }

    SpotTuneForward out;
    out.decisions.hard.assign(batch, std::vector<std::uint8_t>(routable, 0));
    out.decisions.soft.assign(batch,
                              std::vector<std::array<double, 2>>(routable, {0.0, 0.0}));

    const int beta = policy_forward(t, b, m.policy, x);
    for (std::size_t l = 0; l < routable; ++l) {
        const BlockPair& pair = m.blocks[m.dims.frozen_prefix + l];
        const int beta_l = t.slice(beta, 1, 2 * l, 2 * l + 2);

        int gate;
        int soft = -1;
        if (routing.kind == RoutingKind::forced) {
            Tensor hard(Shape{batch, 2});
            for (std::size_t r = 0; r < batch; ++r) {
                int bit = routing.force_all;
                if (routing.forced != nullptr) bit = (*routing.forced)[r][l];
                if (bit != 0 && bit != 1) {
                    throw Error("spottune_forward: forced routing bit must be 0 or 1");
                }
                hard(r, static_cast<std::size_t>(bit)) = 1.0;
            }
            gate = t.constant(std::move(hard));
        } else {
            if (routing.kind == RoutingKind::sampled && routing.stream == nullptr) {
                throw Error("spottune_forward: sampled routing needs an rng stream");
            }
            Tensor noise = routing.kind == RoutingKind::argmax
                               ? Tensor(Shape{batch, 2})
                               : sample_gumbel({batch, 2}, *routing.stream);
            gate = straight_through_rows(t, beta_l, noise, tau);
            soft = gumbel_softmax_rows(t, beta_l, noise, tau);
        }

        const Tensor& gate_v = t.value(gate);
        for (std::size_t r = 0; r < batch; ++r) {
            out.decisions.hard[r][l] = gate_v(r, 1) == 1.0 ? 1 : 0;
            if (soft >= 0) {
                const Tensor& soft_v = t.value(soft);
                out.decisions.soft[r][l] = {soft_v(r, 0), soft_v(r, 1)};
            } else {
                out.decisions.soft[r][l] = {gate_v(r, 0), gate_v(r, 1)};
            }
        }
        if (soft >= 0) out.soft_nodes.push_back(soft);

        const int f_frozen = block_body(t, b, pair.frozen, h);
        const int f_tuned = block_body(t, b, pair.tuned, h);
        const int routed = t.add(t.scale_rows(f_tuned, t.slice(gate, 1, 1, 2)),
                                 t.scale_rows(f_frozen, t.slice(gate, 1, 0, 1)));
        h = t.add(routed, h);
    }

    out.logits = affine_forward(t, b, m.head, h);
    return out;
}

}  // namespace spottune
