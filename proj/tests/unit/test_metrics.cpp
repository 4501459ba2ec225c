#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "checks.hpp"
#include "moral/eval/metrics.hpp"
#include "moral/rng.hpp"

using namespace moral;
using namespace moral::eval;

namespace {

std::vector<int> expand(int tp, int fp, int fn, int tn, std::vector<int>& pred) {
  std::vector<int> gold;
  pred.clear();
  for (int i = 0; i < tp; ++i) gold.push_back(1), pred.push_back(1);
  for (int i = 0; i < fp; ++i) gold.push_back(0), pred.push_back(1);
  for (int i = 0; i < fn; ++i) gold.push_back(1), pred.push_back(0);
  for (int i = 0; i < tn; ++i) gold.push_back(0), pred.push_back(0);
  return gold;
}

// Counts the F1 numerator/denominator pair by enumeration.
double brute_f1(const std::vector<int>& gold, const std::vector<int>& pred, int positive) {
  int agree = 0, total = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    agree += 2 * (gold[i] == positive && pred[i] == positive);
    total += (gold[i] == positive) + (pred[i] == positive);
  }
  return total == 0 ? 0.0 : static_cast<double>(agree) / total;
}

}  // namespace

TEST_CASE("worked example tp=2 fp=1 fn=1 tn=6") {
  std::vector<int> pred;
  const auto gold = expand(2, 1, 1, 6, pred);
  const auto c = ConfusionCounts::from(gold, pred);
  CHECK(c == ConfusionCounts{2, 1, 1, 6});
  CHECK(f1_binary(c) == doctest::Approx(2.0 / 3.0));
  // Negative class: tp 6, fp 1, fn 1.
  CHECK(f1_macro(c) == doctest::Approx((2.0 / 3.0 + 6.0 / 7.0) / 2.0));
  CHECK(compute(Metric::F1Macro, c) == f1_macro(c));
}

TEST_CASE("degenerate counts") {
  CHECK(f1_binary(ConfusionCounts{0, 0, 0, 5}) == 0.0);
  CHECK(f1_macro(ConfusionCounts{0, 0, 0, 5}) == doctest::Approx(0.5));
  CHECK(f1_binary(ConfusionCounts{3, 0, 0, 0}) == 1.0);
  const std::vector<int> a = {1, 0}, b = {1};
  CHECK_THROWS(ConfusionCounts::from(a, b));
}

TEST_CASE("F1 matches brute force and is symmetric under relabeling") {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    std::vector<int> gold(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = rng.bernoulli(0.3);
      pred[i] = rng.bernoulli(0.4);
    }
    const auto c = ConfusionCounts::from(gold, pred);
    CHECK(c.total() == static_cast<std::int64_t>(n));
    CHECK(f1_binary(c) == doctest::Approx(brute_f1(gold, pred, 1)).epsilon(1e-12));
    CHECK(f1_macro(c) == doctest::Approx((brute_f1(gold, pred, 1) + brute_f1(gold, pred, 0)) / 2).epsilon(1e-12));

    // Swapping the classes leaves macro F1 unchanged.
    std::vector<int> g2(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) g2[i] = 1 - gold[i], p2[i] = 1 - pred[i];
    CHECK(f1_macro(ConfusionCounts::from(g2, p2)) == doctest::Approx(f1_macro(c)).epsilon(1e-12));
  }
}

TEST_CASE("bootstrap std") {
  std::vector<int> gold(120), noisy(120);
  Rng rng(5);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    gold[i] = i % 4 == 0;
    noisy[i] = rng.bernoulli(0.8) ? gold[i] : 1 - gold[i];
  }
  CHECK(bootstrap_std(gold, gold, Metric::F1Macro, 500, 1) == 0.0);
  const double a = bootstrap_std(gold, noisy, Metric::F1Binary, 500, 3);
  const double b = bootstrap_std(gold, noisy, Metric::F1Binary, 500, 3);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  CHECK(a > 0.0);
  CHECK(a < 0.2);
  CHECK(bootstrap_std(gold, noisy, Metric::F1Binary, 500, 4) != a);
}

TEST_CASE("bootstrap std against a loop oracle") {
  const auto o = checks::bootstrap();
  INFO(o.detail);
  CHECK(o.passed);
}
