#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "spottune/gumbel.hpp"
#include "spottune/losses.hpp"
#include "testutil.hpp"

using namespace spottune;
using testutil::finite_difference;
using testutil::max_grad_rel_err;

namespace {

double scalar(Tape& t, int node) { return t.value(node).data[0]; }

// Independent long-double evaluation of mean negative log-softmax.
double cross_entropy_reference(const Tensor& logits, const std::vector<std::uint32_t>& labels) {
    const std::size_t rows = logits.shape[0], cols = logits.shape[1];
    long double total = 0.0L;
    for (std::size_t r = 0; r < rows; ++r) {
        long double z = 0.0L;
        for (std::size_t c = 0; c < cols; ++c) z += expl((long double)logits(r, c));
        total += logl(z) - (long double)logits(r, labels[r]);
    }
    return (double)(total / (long double)rows);
}

}  // namespace

TEST_CASE("cross entropy examples") {
    SUBCASE("uniform logits cost log C") {
        Tape t;
        const int logits = t.constant(Tensor(Shape{2, 4}, 0.3));
        const int loss = cross_entropy_loss(t, logits, {1, 3});
        CHECK(scalar(t, loss) == doctest::Approx(1.3862943611198906).epsilon(1e-14));
    }
    SUBCASE("saturated correct logits cost nearly nothing") {
        Tensor logits(Shape{1, 4});
        logits(0, 2) = 1000.0;
        Tape t;
        const int loss = cross_entropy_loss(t, t.constant(logits), {2});
        CHECK(scalar(t, loss) < 1e-6);
        CHECK(scalar(t, loss) >= 0.0);
    }
    SUBCASE("random case matches a high-precision reference") {
        RngStream rng(3);
        Tensor logits(Shape{5, 3});
        for (double& v : logits.data) v = 2.0 * rng.normal();
        const std::vector<std::uint32_t> labels{0, 2, 1, 1, 0};
        Tape t;
        const int loss = cross_entropy_loss(t, t.constant(logits), labels);
        CHECK(scalar(t, loss) ==
              doctest::Approx(cross_entropy_reference(logits, labels)).epsilon(1e-12));
    }
    SUBCASE("label out of range") {
        Tape t;
        const int logits = t.constant(Tensor(Shape{1, 3}, 0.0));
        CHECK_THROWS_AS(cross_entropy_loss(t, logits, {3}), Error);
    }
    SUBCASE("monotone in the true-class logit") {
        double prev = 1e9;
        for (double bump : {-1.0, 0.0, 1.0, 2.0, 4.0}) {
            Tensor logits(Shape{1, 3}, std::vector<double>{0.5, 0.1, -0.2});
            logits(0, 1) = bump;
            Tape t;
            const double loss = scalar(t, cross_entropy_loss(t, t.constant(logits), {1}));
            CHECK(loss < prev);
            prev = loss;
        }
    }
}

TEST_CASE("usage fractions") {
    RouteDecisions d;
    d.hard = {{1, 0}, {1, 0}, {1, 0}, {0, 0}};
    d.soft = {{{0.2, 0.8}, {0.9, 0.1}},
              {{0.3, 0.7}, {0.8, 0.2}},
              {{0.4, 0.6}, {0.7, 0.3}},
              {{0.9, 0.1}, {0.6, 0.4}}};

    SUBCASE("hard fractions count routed examples") {
        const UsageFractions f = usage_fractions(d, false);
        CHECK(f.v == std::vector<double>{0.75, 0.0});
    }
    SUBCASE("relaxed fractions average the soft weights") {
        const UsageFractions f = usage_fractions(d, true);
        CHECK(f.v[0] == doctest::Approx(0.55).epsilon(1e-12));
        CHECK(f.v[1] == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("all-freeze decisions give the zero vector") {
        RouteDecisions z;
        z.hard = {{0, 0, 0}, {0, 0, 0}};
        z.soft.assign(2, std::vector<std::array<double, 2>>(3, {1.0, 0.0}));
        const UsageFractions f = usage_fractions(z, false);
        CHECK(f.v == std::vector<double>{0.0, 0.0, 0.0});
    }
    SUBCASE("empty batch is an error") {
        RouteDecisions empty;
        CHECK_THROWS_AS(usage_fractions(empty, false), Error);
    }
}

TEST_CASE("relaxed fractions track hard fractions in expectation near symmetric logits") {
    // Small logit gap: the straight-through sample and its relaxation agree on
    // average; the gap widens away from symmetry, so this uses a mild one.
    RngStream rng(2025);
    const std::vector<double> la{0.05, -0.05};
    const double tau = 1.0;
    double hard_mean = 0.0, soft_mean = 0.0;
    const int n = 10'000;
    for (int i = 0; i < n; ++i) {
        const Tensor noise = sample_gumbel({2}, rng);
        const RelaxedSample s = straight_through(la, noise.data, tau);
        hard_mean += s.hard[1];
        soft_mean += s.soft[1];
    }
    CHECK(std::abs(hard_mean / n - soft_mean / n) < 0.02);
}

TEST_CASE("budget loss examples") {
    Tape t;
    SUBCASE("exact budget costs zero") {
        std::vector<double> v(16, 0.0);
        v[0] = v[1] = v[2] = 1.0;
        CHECK(scalar(t, global_k_loss(t, t.constant(Tensor::row(v)), 3)) == 0.0);
    }
    SUBCASE("uniform halves with k = 3 cost 25") {
        const std::vector<double> v(16, 0.5);
        CHECK(scalar(t, global_k_loss(t, t.constant(Tensor::row(v)), 3)) ==
              doctest::Approx(25.0).epsilon(1e-12));
    }
    SUBCASE("zero usage with k = 0 costs zero") {
        const std::vector<double> v(4, 0.0);
        CHECK(scalar(t, global_k_loss(t, t.constant(Tensor::row(v)), 0)) == 0.0);
    }
    SUBCASE("k beyond the routable count is an error") {
        CHECK_THROWS_AS(global_k_loss(t, t.constant(Tensor::row({0.5, 0.5})), 3), Error);
    }
}

TEST_CASE("entropy loss examples and properties") {
    Tape t;
    SUBCASE("binary fractions cost zero") {
        CHECK(scalar(t, entropy_loss(t, t.constant(Tensor::row({0.0, 1.0, 0.0, 1.0})))) == 0.0);
    }
    SUBCASE("v = 0.5 costs half log 2") {
        CHECK(scalar(t, entropy_loss(t, t.constant(Tensor::row({0.5})))) ==
              doctest::Approx(0.34657359027997264).epsilon(1e-14));
    }
    SUBCASE("v = 1/e reaches the per-block maximum 1/e") {
        CHECK(scalar(t, entropy_loss(t, t.constant(Tensor::row({0.36787944117144233})))) ==
              doctest::Approx(0.36787944117144233).epsilon(1e-12));
    }
    SUBCASE("positive away from the corners, never negative") {
        RngStream rng(9);
        for (int i = 0; i < 50; ++i) {
            const double v = 0.01 + 0.98 * rng.uniform01();
            CHECK(scalar(t, entropy_loss(t, t.constant(Tensor::row({v})))) > 0.0);
        }
        CHECK(scalar(t, entropy_loss(t, t.constant(Tensor::row({0.0, 0.3})))) >= 0.0);
    }
}

TEST_CASE("total loss combines the parts") {
    Tape t;
    SUBCASE("zero weights reduce to the classification loss") {
        const int total = total_loss(t, t.constant(Tensor::scalar(0.7)),
                                     t.constant(Tensor::scalar(9.0)),
                                     t.constant(Tensor::scalar(4.0)), {0.0, 0.0, 3});
        CHECK(scalar(t, total) == 0.7);
    }
    SUBCASE("weighted arithmetic") {
        const int total = total_loss(t, t.constant(Tensor::scalar(1.0)),
                                     t.constant(Tensor::scalar(2.0)),
                                     t.constant(Tensor::scalar(3.0)), {0.5, 0.1, 3});
        CHECK(scalar(t, total) == doctest::Approx(2.3).epsilon(1e-14));
    }
}

namespace {

// Builds the full differentiable pipeline from policy logits to (lc-free)
// routing losses: soft fractions from fixed noise, then budget/entropy.
struct FractionPipeline {
    std::size_t batch = 4, routable = 3;
    std::vector<Tensor> noise;  // per block, [batch, 2]

    FractionPipeline() {
        RngStream rng(1234);
        for (std::size_t l = 0; l < routable; ++l) noise.push_back(sample_gumbel({batch, 2}, rng));
    }

    // logits: flat [routable * batch * 2]; returns (lk, le, grads...) via tape
    double eval(const std::vector<double>& flat, std::size_t k, double lambda1, double lambda2,
                std::span<const double>* grad_out = nullptr) const {
        Tape t;
        const int logits = t.leaf(Tensor(Shape{routable * batch, 2},
                                         std::vector<double>(flat)), true);
        std::vector<int> soft_nodes;
        for (std::size_t l = 0; l < routable; ++l) {
            const int rows = t.slice(logits, 0, l * batch, (l + 1) * batch);
            soft_nodes.push_back(gumbel_softmax_rows(t, rows, noise[l], 5.0));
        }
        const int v = usage_fraction_nodes(t, soft_nodes);
        const int lk = global_k_loss(t, v, k);
        const int le = entropy_loss(t, v);
        const int loss = t.add(t.scale(lk, lambda1), t.scale(le, lambda2));
        const double out = t.value(loss).data[0];
        if (grad_out) {
            t.backward(loss);
            static thread_local std::vector<double> buf;
            auto g = t.grad(logits);
            buf.assign(g.begin(), g.end());
            *grad_out = buf;
        }
        return out;
    }
};

}  // namespace

TEST_CASE("budget and entropy gradients pass finite differences through the relaxation") {
    FractionPipeline pipe;
    RngStream rng(55);
    std::vector<double> flat(pipe.routable * pipe.batch * 2);
    for (double& v : flat) v = 0.6 * rng.normal();

    for (auto [l1, l2] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0}, std::pair{0.5, 0.1}}) {
        std::span<const double> analytic;
        pipe.eval(flat, 2, l1, l2, &analytic);
        const auto numeric = finite_difference(
            [&](const std::vector<double>& p) { return pipe.eval(p, 2, l1, l2); }, flat);
        CHECK(max_grad_rel_err(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("gradient of the total equals the weighted sum of component gradients") {
    FractionPipeline pipe;
    RngStream rng(66);
    std::vector<double> flat(pipe.routable * pipe.batch * 2);
    for (double& v : flat) v = 0.4 * rng.normal();

    std::span<const double> g_k_span, g_e_span, g_total_span;
    pipe.eval(flat, 1, 1.0, 0.0, &g_k_span);
    const std::vector<double> g_k(g_k_span.begin(), g_k_span.end());
    pipe.eval(flat, 1, 0.0, 1.0, &g_e_span);
    const std::vector<double> g_e(g_e_span.begin(), g_e_span.end());
    const double lambda1 = 0.5, lambda2 = 0.1;
    pipe.eval(flat, 1, lambda1, lambda2, &g_total_span);
    for (std::size_t i = 0; i < g_total_span.size(); ++i) {
        CHECK(g_total_span[i] ==
              doctest::Approx(lambda1 * g_k[i] + lambda2 * g_e[i]).epsilon(1e-10));
    }
}
