#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "moral/rng.hpp"

namespace moral::baselines {

/// Defaults follow the common library defaults for a random forest
/// classifier: 100 fully grown gini trees on bootstrap samples, sqrt(d)
/// candidate features per split.
struct ForestOptions {
  int n_trees = 100;
  /// 0 means unlimited.
  int max_depth = 0;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  /// 0 means floor(sqrt(d)), at least 1.
  int max_features = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

/// Binary classification tree over dense rows. Node arrays are parallel;
/// a leaf has feature -1 and stores the positive-class fraction.
class DecisionTree {
 public:
  void fit(const Eigen::MatrixXd& X, const std::vector<int>& y, std::vector<int> samples,
           const ForestOptions& options, Rng& rng);
  double predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  std::size_t node_count() const noexcept { return feature_.size(); }
  int depth() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);

 private:
  int build(const Eigen::MatrixXd& X, const std::vector<int>& y, std::vector<int>& idx, std::size_t begin,
            std::size_t end, int depth, const ForestOptions& options, Rng& rng);

  std::vector<int> feature_;
  std::vector<double> threshold_;
  std::vector<int> left_, right_;
  std::vector<double> value_;
};

class RandomForest {
 public:
  explicit RandomForest(ForestOptions options = {}) : options_(options) {}

  /// Labels must be 0/1 and match X's row count.
  void fit(const Eigen::MatrixXd& X, const std::vector<int>& y);
  /// Mean of the trees' positive-class fractions.
  double predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// 1 when the mean positive fraction exceeds one half.
  std::vector<int> predict(const Eigen::MatrixXd& X) const;
  std::size_t size() const noexcept { return trees_.size(); }
  const ForestOptions& options() const noexcept { return options_; }

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  ForestOptions options_;
  std::vector<DecisionTree> trees_;
};

}  // namespace moral::baselines
