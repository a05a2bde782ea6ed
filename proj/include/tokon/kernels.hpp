#pragma once

// Data-parallel kernels. The default namespace holds the OpenMP versions; the
// `reference` namespace keeps straightforward serial loops that the tests use
// as the ground truth and the benchmark compares against.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tokon/normalization.hpp"

namespace tokon {

class Vocab;

struct PooledMoments {
  double mean = 0.0;
  double sum_sq_dev = 0.0;
  std::size_t count = 0;
};

/// Per-step accumulated error sums over a set of series.
struct StepErrorSums {
  std::vector<double> squared;
  std::vector<double> absolute;
  std::size_t series = 0;
};

namespace kernels {

void normalize_into(std::span<const double> values, std::span<TokenIndex> out,
                    const DomainStats& stats, const TargetParams& target);

PooledMoments pooled_moments(std::span<const std::span<const double>> pool);

/// `predictions` and `targets` hold `rows` series of `horizon` values, row-major.
StepErrorSums step_error_sums(std::span<const double> predictions, std::span<const double> targets,
                              std::size_t rows, std::size_t horizon);

std::vector<std::size_t> count_tokens_batch(std::span<const std::string> texts, const Vocab& vocab);

}  // namespace kernels

namespace reference {

void normalize_into(std::span<const double> values, std::span<TokenIndex> out,
                    const DomainStats& stats, const TargetParams& target);

PooledMoments pooled_moments(std::span<const std::span<const double>> pool);

StepErrorSums step_error_sums(std::span<const double> predictions, std::span<const double> targets,
                              std::size_t rows, std::size_t horizon);

std::vector<std::size_t> count_tokens_batch(std::span<const std::string> texts, const Vocab& vocab);

}  // namespace reference

/// Threads OpenMP will use for the kernels (1 when built without OpenMP).
int kernel_threads() noexcept;

}  // namespace tokon
