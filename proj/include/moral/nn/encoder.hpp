#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "moral/nn/core.hpp"

namespace moral::nn {

/// Shape and regularisation settings of a BERT-style encoder. The defaults
/// are the bert-base-uncased dimensions.
struct EncoderConfig {
  int vocab_size = 30522;
  int hidden_size = 768;
  int num_layers = 12;
  int num_heads = 12;
  int intermediate_size = 3072;
  int max_positions = 512;
  int type_vocab_size = 2;
  double hidden_dropout = 0.1;
  double attention_dropout = 0.1;
  double layer_norm_eps = 1e-12;
  double initializer_range = 0.02;

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Transformer encoder in the BERT layout: word + position + token-type
/// embeddings, post-LN self-attention blocks with GELU feed-forward, and a
/// tanh pooler over the first ([CLS]) position. The pooled vector is the
/// sentence embedding.
///
/// Sequences are processed one at a time, so there is no padding and results
/// do not depend on how texts are batched.
class Encoder {
 public:
  struct LayerCache;
  /// Activations kept for the backward pass of one sequence.
  struct Cache {
    std::vector<int> ids;
    LayerNorm::Cache embed_norm;
    DropoutMask embed_dropout;
    std::vector<LayerCache> layers;
    Vector cls;
    Vector pooled;

    Cache();
    ~Cache();
    Cache(Cache&&) noexcept;
    Cache& operator=(Cache&&) noexcept;
  };

  Encoder() = default;
  /// Random initialisation: N(0, initializer_range) weights, zero biases,
  /// unit LayerNorm gains.
  Encoder(const EncoderConfig& config, Rng& rng);

  const EncoderConfig& config() const noexcept { return config_; }

  /// Pooled embedding of one sequence. With `dropout_rng` null the pass is
  /// deterministic (eval mode). With `cache` set, activations are retained.
  Vector forward(std::span<const int> ids, Rng* dropout_rng, Cache* cache) const;
  Vector embed(std::span<const int> ids) const { return forward(ids, nullptr, nullptr); }

  /// Accumulate parameter gradients given dL/d(pooled).
  void backward(const Cache& cache, const Vector& d_pooled);

  ParamList params();
  std::vector<const Param*> params() const;

 private:
  struct Layer {
    Linear query, key, value, attn_out;
    LayerNorm attn_norm;
    Linear intermediate, output;
    LayerNorm out_norm;
  };

  Matrix layer_forward(const Layer& layer, const Matrix& x, Rng* rng, LayerCache* cache) const;
  Matrix layer_backward(Layer& layer, const LayerCache& cache, const Matrix& dy);

  EncoderConfig config_;
  Param word_embeddings;      // hidden x vocab
  Param position_embeddings;  // hidden x max_positions
  Param type_embeddings;      // hidden x type_vocab
  LayerNorm embed_norm_;
  std::vector<Layer> layers_;
  Linear pooler_;

  friend class EncoderWeights;
};

/// Loads bert-base-style weights from a safetensors file into an encoder of
/// matching configuration (HuggingFace `BertModel` tensor names, with or
/// without the `bert.` prefix, float32/float64).
class EncoderWeights {
 public:
  static void load_safetensors(Encoder& encoder, const std::filesystem::path& path);
};

}  // namespace moral::nn
