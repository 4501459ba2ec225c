#pragma once

#include <cstdint>
#include <span>

namespace moral::eval {

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::int64_t total() const noexcept { return tp + fp + fn + tn; }
  /// Counts over aligned 0/1 vectors. Sizes must match.
  static ConfusionCounts from(std::span<const int> gold, std::span<const int> pred);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// F1 of the positive class; 0 when precision + recall is 0.
double f1_binary(const ConfusionCounts& c);
/// Unweighted mean of positive-class and negative-class F1.
double f1_macro(const ConfusionCounts& c);

enum class Metric { F1Binary, F1Macro };
double compute(Metric m, const ConfusionCounts& c);

/// Standard deviation (population form) of `metric` over `n_bootstrap`
/// resamples of post indices drawn with replacement.
double bootstrap_std(std::span<const int> gold, std::span<const int> pred, Metric metric, int n_bootstrap = 1000,
                     std::uint64_t seed = 0);

}  // namespace moral::eval
