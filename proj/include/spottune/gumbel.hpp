#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spottune/rng.hpp"
#include "spottune/tensor.hpp"

namespace spottune {

// Hard/soft pair drawn with shared noise: `hard` is the one-hot argmax sample,
// `soft` is its temperature-tau softmax relaxation. argmax(soft) always equals
// the hot index of `hard`.
struct RelaxedSample {
    std::vector<double> hard;
    std::vector<double> soft;
    double temperature = 1.0;
};

// G = -log(-log(u)), with u clamped away from {0, 1} so the result is finite.
double gumbel_from_uniform(double u);

// I.i.d. Gumbel(0,1) noise of the given shape.
Tensor sample_gumbel(const Shape& shape, RngStream& rng);

// Index of max(log_alphas[i] + noise[i]); ties go to the lowest index.
std::size_t gumbel_max(std::span<const double> log_alphas, std::span<const double> noise);

// Softmax((log_alphas + noise) / tau).
std::vector<double> gumbel_softmax(std::span<const double> log_alphas,
                                   std::span<const double> noise, double tau);

RelaxedSample straight_through(std::span<const double> log_alphas, std::span<const double> noise,
                               double tau);

// Tape op over a [rows, z] logits node: forward emits the per-row hard one-hot
// sample, backward applies the Jacobian of the tau-relaxation at the same
// noise, so gradients flow to the logits as if the soft sample had been used.
int straight_through_rows(Tape& tape, int logits, const Tensor& noise, double tau);

// Tape op emitting the per-row soft relaxation itself (differentiable).
int gumbel_softmax_rows(Tape& tape, int logits, const Tensor& noise, double tau);

}  // namespace spottune
