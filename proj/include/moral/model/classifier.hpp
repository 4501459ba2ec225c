#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "moral/corpus/types.hpp"
#include "moral/model/heads.hpp"
#include "moral/nn/encoder.hpp"
#include "moral/text/tokenizer.hpp"

namespace moral::model {

/// Training hyperparameters. Defaults: Adam at 5e-5, batch 16, 5 epochs,
/// 150 tokens, class-weighted loss.
struct TrainConfig {
  double learning_rate = 5e-5;
  int batch_size = 16;
  int epochs = 5;
  int max_tokens = 150;
  std::uint64_t seed = 42;
  bool class_weighting = true;
  std::string optimizer = "adam";

  // Adversarial extension.
  double lambda_grl = 1.0;
  double alpha_norm = 1.0;
  double alpha_rec = 1.0;
  int head_hidden = 768;

  nn::EncoderConfig encoder;
  /// bert-style vocab.txt; when unset a vocabulary is built from the
  /// training texts.
  std::optional<std::filesystem::path> vocab_path;
  /// Pretrained encoder weights (safetensors). When unset the encoder is
  /// randomly initialized.
  std::optional<std::filesystem::path> pretrained_weights;
  int vocab_min_count = 2;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct ClassWeights {
  double negative = 0.0;  // weight of class 0
  double positive = 0.0;  // weight of class 1
  Vector as_vector() const { return Vector{{negative, positive}}; }
};

/// weight_c = N / N_c. Throws "degenerate label" when a class is absent.
ClassWeights compute_class_weights(std::span<const int> labels);

struct Prediction {
  double probability = 0.0;  // softmax mass of the positive class
  int predicted = 0;         // argmax
};

struct Checkpoint {
  MoralLabel label = MoralLabel::Care;
  bool adversarial = false;
  int epoch = 0;
  double validation_metric = 0.0;  // validation F1 Macro of the saved epoch
  std::string config_hash;
  TrainConfig config;
  HeadsOptions heads;
  std::vector<Domain> domains;  // index -> training domain of the domain head
  std::vector<std::string> vocab;
  bool lowercase = true;
  std::vector<std::pair<std::string, Matrix>> tensors;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

/// Fingerprint of everything that must agree between training and inference
/// for token ids and embeddings to mean the same thing.
std::string runtime_hash(const nn::EncoderConfig& encoder, const text::WordPiece& tokenizer, int max_tokens);

/// Encoder + heads + tokenizer assembled for inference or training.
class Classifier {
 public:
  /// Random initialization; the encoder, shared heads and domain head each
  /// draw from their own stream.
  Classifier(const TrainConfig& config, text::WordPiece tokenizer, const HeadsOptions& heads, Rng& encoder_rng,
             Rng& head_rng, Rng& domain_rng);
  static Classifier from_checkpoint(const Checkpoint& ckpt);

  std::vector<int> encode(std::string_view text) const { return tokenizer_.encode(text, max_tokens_); }
  Prediction predict_ids(std::span<const int> ids) const;
  std::vector<Prediction> predict(std::span<const std::string> texts) const;
  /// Pooled embedding e and invariant projection h = W_inv e.
  Vector embedding(std::string_view text) const;
  Vector invariant(std::string_view text) const;

  nn::ParamList params();
  const text::WordPiece& tokenizer() const noexcept { return tokenizer_; }
  nn::Encoder& encoder() noexcept { return encoder_; }
  const nn::Encoder& encoder() const noexcept { return encoder_; }
  AdversarialHeads& heads() noexcept { return heads_; }
  const AdversarialHeads& heads() const noexcept { return heads_; }
  std::string runtime_hash() const;

 private:
  text::WordPiece tokenizer_;
  int max_tokens_;
  nn::Encoder encoder_;
  AdversarialHeads heads_;
};

struct StepRecord {
  int epoch = 0;
  int step = 0;
  AdvLossBreakdown loss;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean total loss over the epoch's steps
  double validation_f1_binary = 0.0;
  double validation_f1_macro = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  ClassWeights class_weights;
  bool used_validation = true;

  nlohmann::json metrics_json() const;
};

/// Plain classifier for one label. Posts need gold[label] annotated; those
/// with split Train are fitted, Validation selects the best epoch.
TrainResult train_single_label(std::span<const corpus::UnifiedPost> posts, MoralLabel label, const TrainConfig& config);
/// Adversarial variant with a domain head over the training domains.
TrainResult train_adversarial(std::span<const corpus::UnifiedPost> posts, MoralLabel label, const TrainConfig& config);

/// Predictions from a saved checkpoint. If `expected_hash` is given it must
/// equal the checkpoint's config hash.
std::vector<Prediction> predict(const Checkpoint& ckpt, std::span<const std::string> texts,
                                const std::optional<std::string>& expected_hash = std::nullopt);

}  // namespace moral::model
