#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "moral/app/config.hpp"
#include "moral/corpus/types.hpp"

namespace moral::checks {

struct Outcome {
  bool passed = false;
  bool skipped = false;
  std::string detail;
  double seconds = 0.0;
};

/// Scratch directory holding the written fixture files.
std::filesystem::path fixture_dir();
/// Fixture config (designs, train settings) read from its generated config.yaml.
app::ExperimentConfig fixture_config();
/// Ingested fixture posts (not split).
std::vector<corpus::UnifiedPost> fixture_posts();

/// Class weights, projection, regularizers, softmax head and F1 metrics
/// against loop implementations on `instances` random cases each.
Outcome math_oracles(int instances = 1000, std::uint64_t seed = 1);
/// Finite differences on a 10-dimensional adversarial model.
Outcome gradient_reversal(std::uint64_t seed = 3);
/// lambda = 0, alpha = 0 adversarial training against the plain classifier.
Outcome reduction_property();
/// Care on the fixture reaches validation F1 Binary >= 0.95 within 5 epochs.
Outcome fixture_learning();
/// Linear domain probe on h loses >= 15 points with lambda 1 vs 0, moral F1
/// Binary drops <= 5 points.
Outcome adversarial_effect();
/// Zero std for perfect predictions, seed reproducibility, loop oracle.
Outcome bootstrap();
Outcome clean_golden(const std::filesystem::path& golden_json);
Outcome prompt_golden(const std::filesystem::path& golden_txt);
/// Needs the original corpora (see data/paper/config.yaml); skipped otherwise.
Outcome reproduction(const std::filesystem::path& config_yaml, const std::filesystem::path& reference_csv);

/// Logistic-regression probe accuracy: fit on a shuffled half, score on the other.
double probe_accuracy(const std::vector<Eigen::VectorXd>& x, const std::vector<int>& y, std::uint64_t seed = 99);

/// The fixed posts rendered into the prompt golden file.
std::vector<std::string> prompt_golden_posts();

}  // namespace moral::checks
