#include "tokon/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tokon/error.hpp"
#include "tokon/tokenizer.hpp"

namespace tokon {

int kernel_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

void check_rows(std::span<const double> predictions, std::span<const double> targets,
                std::size_t rows, std::size_t horizon) {
  if (predictions.size() != rows * horizon || targets.size() != rows * horizon) {
    throw Error(Errc::LengthMismatch, "prediction/target buffers do not match rows x horizon");
  }
}

}  // namespace

namespace kernels {

void normalize_into(std::span<const double> values, std::span<TokenIndex> out,
                    const DomainStats& stats, const TargetParams& target) {
  if (values.size() != out.size()) throw Error(Errc::LengthMismatch, "output span size differs");
  const auto n = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = normalize_value(values[i], stats, target);
  }
}

PooledMoments pooled_moments(std::span<const std::span<const double>> pool) {
  const auto groups = static_cast<std::ptrdiff_t>(pool.size());
  double sum = 0.0;
  std::size_t count = 0;
#pragma omp parallel for schedule(static) reduction(+ : sum, count)
  for (std::ptrdiff_t g = 0; g < groups; ++g) {
    for (double x : pool[g]) sum += x;
    count += pool[g].size();
  }
  if (count == 0) return {};
  const double mean = sum / static_cast<double>(count);

  double sq = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : sq)
  for (std::ptrdiff_t g = 0; g < groups; ++g) {
    for (double x : pool[g]) sq += (x - mean) * (x - mean);
  }
  return {mean, sq, count};
}

StepErrorSums step_error_sums(std::span<const double> predictions, std::span<const double> targets,
                              std::size_t rows, std::size_t horizon) {
  check_rows(predictions, targets, rows, horizon);
  StepErrorSums out{std::vector<double>(horizon, 0.0), std::vector<double>(horizon, 0.0), rows};
  // Each thread owns a contiguous block of steps and walks the rows in order, so
  // every step's sum sees the same addition order as the serial loop.
#pragma omp parallel if (rows * horizon > 8192)
  {
    std::size_t k0 = 0;
    std::size_t k1 = horizon;
#ifdef _OPENMP
    const auto threads = static_cast<std::size_t>(omp_get_num_threads());
    const auto id = static_cast<std::size_t>(omp_get_thread_num());
    k0 = horizon * id / threads;
    k1 = horizon * (id + 1) / threads;
#endif
    if (k0 < k1) {
      std::vector<double> sq(k1 - k0, 0.0);
      std::vector<double> ab(k1 - k0, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* p = predictions.data() + r * horizon;
        const double* t = targets.data() + r * horizon;
        for (std::size_t k = k0; k < k1; ++k) {
          const double e = p[k] - t[k];
          sq[k - k0] += e * e;
          ab[k - k0] += std::abs(e);
        }
      }
      std::copy(sq.begin(), sq.end(), out.squared.begin() + static_cast<std::ptrdiff_t>(k0));
      std::copy(ab.begin(), ab.end(), out.absolute.begin() + static_cast<std::ptrdiff_t>(k0));
    }
  }
  return out;
}

std::vector<std::size_t> count_tokens_batch(std::span<const std::string> texts, const Vocab& vocab) {
  std::vector<std::size_t> out(texts.size());
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = encode_count(texts[i], vocab);
    } catch (...) {
#pragma omp critical(tokon_count_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace kernels

namespace reference {

void normalize_into(std::span<const double> values, std::span<TokenIndex> out,
                    const DomainStats& stats, const TargetParams& target) {
  if (values.size() != out.size()) throw Error(Errc::LengthMismatch, "output span size differs");
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = normalize_value(values[i], stats, target);
}

PooledMoments pooled_moments(std::span<const std::span<const double>> pool) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& g : pool) {
    for (double x : g) sum += x;
    count += g.size();
  }
  if (count == 0) return {};
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (const auto& g : pool) {
    for (double x : g) sq += (x - mean) * (x - mean);
  }
  return {mean, sq, count};
}

StepErrorSums step_error_sums(std::span<const double> predictions, std::span<const double> targets,
                              std::size_t rows, std::size_t horizon) {
  check_rows(predictions, targets, rows, horizon);
  StepErrorSums out{std::vector<double>(horizon, 0.0), std::vector<double>(horizon, 0.0), rows};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < horizon; ++k) {
      const double e = predictions[r * horizon + k] - targets[r * horizon + k];
      out.squared[k] += e * e;
      out.absolute[k] += std::abs(e);
    }
  }
  return out;
}

std::vector<std::size_t> count_tokens_batch(std::span<const std::string> texts, const Vocab& vocab) {
  std::vector<std::size_t> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(encode_count(t, vocab));
  return out;
}

}  // namespace reference

}  // namespace tokon
