#include "spottune/gumbel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spottune {

namespace {

constexpr double kUniformEps = 1e-12;

void require_tau(double tau) {
    if (!(tau > 0.0)) {
        throw Error("gumbel: tau must be positive, got " + std::to_string(tau));
    }
}

void require_same_length(const char* op, std::size_t a, std::size_t b) {
    if (a != b) {
        throw ShapeError(std::string(op) + ": length mismatch " + std::to_string(a) + " vs " +
                         std::to_string(b));
    }
}

// Per-row soft relaxation; writes z values at `out`.
void soft_row(const double* logits, const double* noise, std::size_t z, double tau, double* out) {
    double mx = (logits[0] + noise[0]) / tau;
    for (std::size_t i = 1; i < z; ++i) mx = std::max(mx, (logits[i] + noise[i]) / tau);
    double sum = 0.0;
    for (std::size_t i = 0; i < z; ++i) {
        out[i] = std::exp((logits[i] + noise[i]) / tau - mx);
        sum += out[i];
    }
    for (std::size_t i = 0; i < z; ++i) out[i] /= sum;
}

}  // namespace

double gumbel_from_uniform(double u) {
    u = std::clamp(u, kUniformEps, 1.0 - kUniformEps);
    return -std::log(-std::log(u));
}

Tensor sample_gumbel(const Shape& shape, RngStream& rng) {
    if (shape.empty()) throw ShapeError("sample_gumbel: shape must be non-empty");
    Tensor out(shape);
    for (double& v : out.data) v = gumbel_from_uniform(rng.uniform01());
    return out;
}

std::size_t gumbel_max(std::span<const double> log_alphas, std::span<const double> noise) {
    require_same_length("gumbel_max", log_alphas.size(), noise.size());
    if (log_alphas.empty()) throw ShapeError("gumbel_max: empty input");
    std::size_t best = 0;
    double best_v = log_alphas[0] + noise[0];
    for (std::size_t i = 1; i < log_alphas.size(); ++i) {
        const double v = log_alphas[i] + noise[i];
        if (v > best_v) {
            best = i;
            best_v = v;
        }
    }
    return best;
}

std::vector<double> gumbel_softmax(std::span<const double> log_alphas,
                                   std::span<const double> noise, double tau) {
    require_tau(tau);
    require_same_length("gumbel_softmax", log_alphas.size(), noise.size());
    std::vector<double> out(log_alphas.size());
    soft_row(log_alphas.data(), noise.data(), log_alphas.size(), tau, out.data());
    return out;
}

RelaxedSample straight_through(std::span<const double> log_alphas, std::span<const double> noise,
                               double tau) {
    RelaxedSample s;
    s.temperature = tau;
    s.soft = gumbel_softmax(log_alphas, noise, tau);
    s.hard.assign(log_alphas.size(), 0.0);
    s.hard[gumbel_max(log_alphas, noise)] = 1.0;
    return s;
}

namespace {

// Shared validation for the row-wise tape ops.
std::pair<std::size_t, std::size_t> row_dims(const Tape& tape, int logits, const Tensor& noise,
                                             double tau, const char* op) {
    require_tau(tau);
    const Tensor& tl = tape.value(logits);
    if (tl.rank() != 2) {
        throw ShapeError(std::string(op) + ": logits must be rank 2, got " + shape_str(tl.shape));
    }
    if (noise.shape != tl.shape) {
        throw ShapeError(std::string(op) + ": noise shape " + shape_str(noise.shape) +
                         " does not match logits " + shape_str(tl.shape));
    }
    return {tl.shape[0], tl.shape[1]};
}

// dL/dlogit_j = (1/tau) * sum_i g_i * y_i * (delta_ij - y_j), per row.
void soft_jacobian_backward(Tape& t, int logits, int self, const std::vector<double>& soft,
                            std::size_t rows, std::size_t z, double tau) {
    auto g = t.grad(self);
    std::vector<double> d(rows * z);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* y = &soft[r * z];
        const double* gr = &g[r * z];
        double dot = 0.0;
        for (std::size_t i = 0; i < z; ++i) dot += gr[i] * y[i];
        for (std::size_t j = 0; j < z; ++j) d[r * z + j] = y[j] * (gr[j] - dot) / tau;
    }
    t.accumulate_grad(logits, d);
}

}  // namespace

int straight_through_rows(Tape& tape, int logits, const Tensor& noise, double tau) {
    const auto [rows, z] = row_dims(tape, logits, noise, tau, "straight_through");
    const Tensor& tl = tape.value(logits);
    Tensor hard(tl.shape);
    std::vector<double> soft(rows * z);
    for (std::size_t r = 0; r < rows; ++r) {
        std::span<const double> lr(&tl.data[r * z], z);
        std::span<const double> nr(&noise.data[r * z], z);
        soft_row(lr.data(), nr.data(), z, tau, &soft[r * z]);
        hard.data[r * z + gumbel_max(lr, nr)] = 1.0;
    }
    return tape.custom("straight_through", std::move(hard), {logits},
                       [logits, soft = std::move(soft), rows = rows, z = z, tau](Tape& t, int self) {
                           soft_jacobian_backward(t, logits, self, soft, rows, z, tau);
                       });
}

int gumbel_softmax_rows(Tape& tape, int logits, const Tensor& noise, double tau) {
    const auto [rows, z] = row_dims(tape, logits, noise, tau, "gumbel_softmax");
    const Tensor& tl = tape.value(logits);
    Tensor out(tl.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        soft_row(&tl.data[r * z], &noise.data[r * z], z, tau, &out.data[r * z]);
    }
    std::vector<double> soft = out.data;
    return tape.custom("gumbel_softmax", std::move(out), {logits},
                       [logits, soft = std::move(soft), rows = rows, z = z, tau](Tape& t, int self) {
                           soft_jacobian_backward(t, logits, self, soft, rows, z, tau);
                       });
}

}  // namespace spottune
