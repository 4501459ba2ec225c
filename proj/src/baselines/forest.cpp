#include "moral/baselines/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace moral::baselines {
namespace {

double gini(double pos, double n) {
  if (n <= 0.0) return 0.0;
  const double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
  std::size_t n_left = 0;
};

}  // namespace

void DecisionTree::fit(const Eigen::MatrixXd& X, const std::vector<int>& y, std::vector<int> samples,
                       const ForestOptions& options, Rng& rng) {
  feature_.clear();
  threshold_.clear();
  left_.clear();
  right_.clear();
  value_.clear();
  if (samples.empty()) throw std::invalid_argument("decision tree: no training samples");
  build(X, y, samples, 0, samples.size(), 0, options, rng);
}

int DecisionTree::build(const Eigen::MatrixXd& X, const std::vector<int>& y, std::vector<int>& idx,
                        std::size_t begin, std::size_t end, int depth, const ForestOptions& options, Rng& rng) {
  const int node = static_cast<int>(feature_.size());
  feature_.push_back(-1);
  threshold_.push_back(0.0);
  left_.push_back(-1);
  right_.push_back(-1);
  const auto n = static_cast<double>(end - begin);
  double pos = 0.0;
  for (std::size_t i = begin; i < end; ++i) pos += y[idx[i]];
  value_.push_back(pos / n);

  const bool pure = pos == 0.0 || pos == n;
  if (pure || (options.max_depth > 0 && depth >= options.max_depth) ||
      end - begin < static_cast<std::size_t>(std::max(options.min_samples_split, 2 * options.min_samples_leaf))) {
    return node;
  }

  const auto d = static_cast<int>(X.cols());
  int k = options.max_features > 0 ? std::min(options.max_features, d)
                                   : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
  std::vector<int> features(d);
  std::iota(features.begin(), features.end(), 0);

  const double parent = gini(pos, n);
  Split best;
  best.impurity = parent;
  std::vector<std::pair<double, int>> column(end - begin);
  // Keep drawing features until k non-constant ones have been examined.
  int examined = 0;
  for (int f = 0; f < d && examined < k; ++f) {
    const auto j = f + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - f)));
    std::swap(features[f], features[j]);
    const int feat = features[f];
    for (std::size_t i = begin; i < end; ++i) column[i - begin] = {X(idx[i], feat), y[idx[i]]};
    std::sort(column.begin(), column.end());
    if (column.front().first == column.back().first) continue;
    ++examined;
    double left_pos = 0.0;
    const std::size_t m = column.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
      left_pos += column[i].second;
      if (column[i].first == column[i + 1].first) continue;
      const std::size_t nl = i + 1, nr = m - nl;
      if (nl < static_cast<std::size_t>(options.min_samples_leaf) ||
          nr < static_cast<std::size_t>(options.min_samples_leaf)) {
        continue;
      }
      const double imp = (static_cast<double>(nl) * gini(left_pos, static_cast<double>(nl)) +
                          static_cast<double>(nr) * gini(pos - left_pos, static_cast<double>(nr))) /
                         n;
      if (imp < best.impurity - 1e-12) {
        best.feature = feat;
        best.impurity = imp;
        best.n_left = nl;
        double t = 0.5 * (column[i].first + column[i + 1].first);
        if (t == column[i + 1].first) t = column[i].first;
        best.threshold = t;
      }
    }
  }
  if (best.feature < 0) return node;

  const auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                  idx.begin() + static_cast<std::ptrdiff_t>(end),
                                  [&](int s) { return X(s, best.feature) <= best.threshold; });
  const auto split = static_cast<std::size_t>(mid - idx.begin());
  feature_[node] = best.feature;
  threshold_[node] = best.threshold;
  const int l = build(X, y, idx, begin, split, depth + 1, options, rng);
  left_[node] = l;
  const int r = build(X, y, idx, split, end, depth + 1, options, rng);
  right_[node] = r;
  return node;
}

double DecisionTree::predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (feature_.empty()) throw std::logic_error("decision tree not fitted");
  int node = 0;
  while (feature_[node] >= 0) node = x(feature_[node]) <= threshold_[node] ? left_[node] : right_[node];
  return value_[node];
}

int DecisionTree::depth() const {
  if (feature_.empty()) return 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int best = 0;
  while (!stack.empty()) {
    auto [node, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (feature_[node] >= 0) {
      stack.emplace_back(left_[node], d + 1);
      stack.emplace_back(right_[node], d + 1);
    }
  }
  return best;
}

nlohmann::json DecisionTree::to_json() const {
  return {{"feature", feature_}, {"threshold", threshold_}, {"left", left_}, {"right", right_}, {"value", value_}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  DecisionTree t;
  j.at("feature").get_to(t.feature_);
  j.at("threshold").get_to(t.threshold_);
  j.at("left").get_to(t.left_);
  j.at("right").get_to(t.right_);
  j.at("value").get_to(t.value_);
  const std::size_t n = t.feature_.size();
  if (n == 0 || t.threshold_.size() != n || t.left_.size() != n || t.right_.size() != n || t.value_.size() != n) {
    throw std::runtime_error("decision tree json: inconsistent node arrays");
  }
  return t;
}

void RandomForest::fit(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  if (X.rows() == 0) throw std::invalid_argument("random forest: empty training set");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw std::invalid_argument("random forest: X/y size mismatch");
  for (int v : y) {
    if (v != 0 && v != 1) throw std::invalid_argument("random forest: labels must be 0 or 1");
  }
  if (options_.n_trees < 1) throw std::invalid_argument("random forest: n_trees must be positive");
  Rng master(options_.seed);
  trees_.assign(static_cast<std::size_t>(options_.n_trees), DecisionTree{});
  const auto n = static_cast<std::size_t>(X.rows());
  for (auto& tree : trees_) {
    Rng rng = master.fork(0);
    std::vector<int> samples(n);
    if (options_.bootstrap) {
      for (auto& s : samples) s = static_cast<int>(rng.below(n));
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    tree.fit(X, y, std::move(samples), options_, rng);
  }
}

double RandomForest::predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (trees_.empty()) throw std::logic_error("random forest not fitted");
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict_proba(x);
  return s / static_cast<double>(trees_.size());
}

std::vector<int> RandomForest::predict(const Eigen::MatrixXd& X) const {
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = predict_proba(X.row(i)) > 0.5;
  return out;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"options",
           {{"n_trees", options_.n_trees},
            {"max_depth", options_.max_depth},
            {"min_samples_split", options_.min_samples_split},
            {"min_samples_leaf", options_.min_samples_leaf},
            {"max_features", options_.max_features},
            {"bootstrap", options_.bootstrap},
            {"seed", options_.seed}}},
          {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  const auto& o = j.at("options");
  ForestOptions opt;
  o.at("n_trees").get_to(opt.n_trees);
  o.at("max_depth").get_to(opt.max_depth);
  o.at("min_samples_split").get_to(opt.min_samples_split);
  o.at("min_samples_leaf").get_to(opt.min_samples_leaf);
  o.at("max_features").get_to(opt.max_features);
  o.at("bootstrap").get_to(opt.bootstrap);
  o.at("seed").get_to(opt.seed);
  RandomForest f(opt);
  for (const auto& t : j.at("trees")) f.trees_.push_back(DecisionTree::from_json(t));
  return f;
}

}  // namespace moral::baselines
