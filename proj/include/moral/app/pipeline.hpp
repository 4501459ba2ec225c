#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "moral/app/config.hpp"
#include "moral/baselines/embed.hpp"
#include "moral/baselines/lexicon.hpp"
#include "moral/corpus/types.hpp"
#include "moral/eval/report.hpp"

namespace moral::app {

/// "<version>" or "<version>+<git hash>" when built from a checkout.
std::string version_string();

struct StageRecord {
  std::string stage;   // e.g. "train in_domain moralbert_adv care"
  std::string status;  // "ran", "skipped", "unsupported" or "failed"
  std::string key;     // input hash the artifact was checked against
  std::string detail;
};

struct RunManifest {
  std::string experiment_id;
  std::string run_id;
  std::string config_hash;
  nlohmann::ordered_json config;
  std::map<std::string, std::string> corpus_hashes;  // path -> sha256
  nlohmann::ordered_json seeds;
  std::string version;
  std::string started_at, finished_at;  // UTC, ISO 8601
  std::vector<StageRecord> stages;

  nlohmann::ordered_json to_json() const;
  /// Appends one line to `<dir>/manifest.jsonl`.
  void append_to(const std::filesystem::path& dir) const;
};

/// Reads and cleans every configured corpus (no caching, no artifacts).
std::vector<corpus::UnifiedPost> ingest_corpora(const ExperimentConfig& config);

/// A system cannot handle a label at all (e.g. no lexicon column for it).
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Staged experiment runner. Every stage writes its artifact next to a
/// `.stamp` file holding the hash of its inputs and is skipped when the stamp
/// still matches, so reruns only redo what changed.
///
/// Layout under run_dir():
///   corpus/posts.jsonl, corpus/distribution.{md,csv}
///   <design>/splits.jsonl
///   <design>/models/<system>_<label>.ckpt (+ .metrics.json)
///   <design>/predictions/<system>/<label>.json
///   <design>/report.{json,csv,md}
///   report.json, report.md, manifest.jsonl
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig config, bool force = false);

  std::filesystem::path ingest();
  std::vector<corpus::UnifiedPost> posts();
  std::filesystem::path split(const corpus::SplitDesign& design);
  /// Trains one classifier and writes its test-split predictions.
  std::filesystem::path train(const corpus::SplitDesign& design, MoralLabel label, bool adversarial);
  /// Lexicon, embed_forest or llm_zero_shot predictions on the test split.
  std::filesystem::path baseline(const corpus::SplitDesign& design, eval::System system, MoralLabel label);
  /// Produces predictions for any system (dispatching to train/baseline).
  std::filesystem::path predictions(const corpus::SplitDesign& design, eval::System system, MoralLabel label);
  /// Reports from the stored predictions; absent predictions become error cells.
  std::vector<eval::EvalReport> evaluate(const corpus::SplitDesign& design, const std::vector<eval::System>& systems);

  /// ingest -> split -> train/baseline -> evaluate for every configured
  /// design, then the experiment-level report. Returns 0 when no stage failed.
  int run();

  const ExperimentConfig& config() const noexcept { return config_; }
  RunManifest& manifest() noexcept { return manifest_; }
  /// Stamps the finish time and appends the manifest to every directory
  /// touched. Only the first call writes; run() calls it itself.
  void finish_manifest();

  std::filesystem::path design_dir(const corpus::SplitDesign& d) const { return config_.run_dir() / d.dir_name(); }
  std::filesystem::path predictions_path(const corpus::SplitDesign& d, eval::System s, MoralLabel l) const;
  std::filesystem::path checkpoint_path(const corpus::SplitDesign& d, eval::System s, MoralLabel l) const;

 private:
  bool fresh(const std::filesystem::path& artifact, const std::string& key) const;
  void stamp(const std::filesystem::path& artifact, const std::string& key) const;
  void record(std::string stage, std::string status, std::string key, std::string detail = {});
  std::vector<corpus::UnifiedPost> design_posts(const corpus::SplitDesign& design);
  std::string file_key(const std::filesystem::path& p);

  ExperimentConfig config_;
  bool force_;
  bool finished_ = false;
  RunManifest manifest_;
  std::vector<std::filesystem::path> touched_;
  std::optional<std::filesystem::path> ingested_;
  std::map<std::string, std::filesystem::path> splits_;
  std::shared_ptr<const baselines::MoralLexicon> lexicon_;
  std::shared_ptr<const baselines::WordEmbeddings> embeddings_;
};

/// Stored predictions: `{"system", "label", "post_ids", "predictions"}`.
struct PredictionFile {
  std::string system;
  MoralLabel label = MoralLabel::Care;
  std::vector<std::string> post_ids;
  std::vector<int> predictions;
  /// Only some test posts were predicted; the rest are left out, not errors.
  bool subsample = false;

  void save(const std::filesystem::path& path) const;
  static PredictionFile load(const std::filesystem::path& path);
};

}  // namespace moral::app
