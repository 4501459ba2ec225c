#include "moral/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "moral/rng.hpp"

namespace moral::eval {
namespace {

double f1(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  // 2PR/(P+R) simplifies to 2tp/(2tp+fp+fn); zero iff P+R is zero.
  const std::int64_t denom = 2 * tp + fp + fn;
  return tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

ConfusionCounts ConfusionCounts::from(std::span<const int> gold, std::span<const int> pred) {
  if (gold.size() != pred.size()) throw std::invalid_argument("gold and prediction lengths differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] != 0, p = pred[i] != 0;
    if (g && p) ++c.tp;
    else if (!g && p) ++c.fp;
    else if (g && !p) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_binary(const ConfusionCounts& c) { return f1(c.tp, c.fp, c.fn); }

double f1_macro(const ConfusionCounts& c) { return 0.5 * (f1(c.tp, c.fp, c.fn) + f1(c.tn, c.fn, c.fp)); }

double compute(Metric m, const ConfusionCounts& c) { return m == Metric::F1Binary ? f1_binary(c) : f1_macro(c); }

double bootstrap_std(std::span<const int> gold, std::span<const int> pred, Metric metric, int n_bootstrap,
                     std::uint64_t seed) {
  if (gold.size() != pred.size()) throw std::invalid_argument("gold and prediction lengths differ");
  if (gold.empty()) throw std::invalid_argument("bootstrap needs at least one post");
  if (n_bootstrap < 1) throw std::invalid_argument("n_bootstrap must be positive");
  Rng rng(seed);
  const std::size_t n = gold.size();
  std::vector<double> values(static_cast<std::size_t>(n_bootstrap));
  for (double& v : values) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(rng.below(n));
      const bool g = gold[j] != 0, p = pred[j] != 0;
      (g ? (p ? c.tp : c.fn) : (p ? c.fp : c.tn)) += 1;
    }
    v = compute(metric, c);
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

}  // namespace moral::eval
