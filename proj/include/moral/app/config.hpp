#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "moral/baselines/forest.hpp"
#include "moral/baselines/llm.hpp"
#include "moral/corpus/splits.hpp"
#include "moral/eval/report.hpp"
#include "moral/labels.hpp"
#include "moral/model/classifier.hpp"

namespace moral::app {

/// Relative corpus paths resolve against this directory when it is set.
inline constexpr const char* kCorpusRootEnv = "MORAL_CORPUS_ROOT";

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::vector<std::string> keys = {})
      : std::runtime_error(what), keys_(std::move(keys)) {}
  /// Offending keys as dotted paths, e.g. "train.lerning_rate".
  const std::vector<std::string>& keys() const noexcept { return keys_; }

 private:
  std::vector<std::string> keys_;
};

struct IngestSettings {
  std::optional<int> n_annotators;
  /// Overrides of the MFTC subcorpus selection and Liberty coverage.
  std::optional<std::set<std::string>> mftc_include;
  std::optional<std::set<std::string>> mftc_liberty;
};

struct CleanSettings {
  std::string mention_token = "@user";
  bool strip_hashtag_words = false;
  std::optional<std::filesystem::path> emoji_table;
};

struct LlmSettings {
  baselines::LlmClientOptions client;
  /// Share of each design's test posts sent to the LLM.
  double fraction = 1.0;
  std::uint64_t seed = 42;
  std::map<Domain, std::size_t> per_domain;
  /// Default: <output_dir>/llm/cache.jsonl.
  std::optional<std::filesystem::path> cache;
};

struct BaselineSettings {
  std::optional<std::filesystem::path> lexicon;
  std::optional<std::filesystem::path> embeddings;
  baselines::ForestOptions forest;
  LlmSettings llm;
};

/// One experiment. Every field has the published default except the corpus
/// paths, which must be given.
struct ExperimentConfig {
  std::filesystem::path source;  // the YAML file, empty when built in code
  std::string experiment = "default";
  std::filesystem::path output_dir = "runs";
  std::map<Domain, std::filesystem::path> corpora;
  std::optional<std::filesystem::path> sentiment_lexicon;
  IngestSettings ingest;
  CleanSettings clean;
  corpus::SplitOptions split;
  std::vector<corpus::SplitDesign> designs = {corpus::SplitDesign::in_domain()};
  /// Labels for the non-Liberty designs.
  std::vector<MoralLabel> labels{kCoreLabels.begin(), kCoreLabels.end()};
  std::vector<MoralLabel> liberty_labels = {MoralLabel::Liberty, MoralLabel::Oppression};
  std::vector<eval::System> systems = {eval::System::MoralBert, eval::System::MoralBertAdv};
  model::TrainConfig train;
  BaselineSettings baselines;
  eval::EvalOptions evaluation;

  /// Experiment directory: output_dir / experiment.
  std::filesystem::path run_dir() const { return output_dir / experiment; }
  const std::vector<MoralLabel>& labels_for(const corpus::SplitDesign& d) const {
    return d.is_liberty() ? liberty_labels : labels;
  }
  /// Resolved configuration with absolute paths; input of the manifest.
  nlohmann::ordered_json to_json() const;
};

/// Parses YAML text. Relative paths resolve against `base_dir` (corpora:
/// against $MORAL_CORPUS_ROOT when set). Throws ConfigError listing every
/// unknown key or bad value.
ExperimentConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace moral::app
