#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "moral/baselines/forest.hpp"
#include "moral/corpus/types.hpp"

namespace moral::baselines {

/// Static word vectors, e.g. word2vec or GloVe.
class WordEmbeddings {
 public:
  /// Text format: optional "<count> <dim>" header line, then
  /// "<word> <v1> ... <vdim>" per line.
  static WordEmbeddings load_text(const std::filesystem::path& path);
  static WordEmbeddings parse_text(std::string_view text);

  WordEmbeddings() = default;
  explicit WordEmbeddings(int dim) : dim_(dim) {}
  void add(std::string word, const Eigen::VectorXd& v);

  /// Exact match, then the lowercased form.
  const Eigen::VectorXd* find(std::string_view word) const;
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }

 private:
  int dim_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> vectors_;
};

struct DocVector {
  Eigen::VectorXd v;
  std::size_t in_vocab = 0;
  /// No token had a vector; v is zero.
  bool empty() const noexcept { return in_vocab == 0; }
};

std::vector<std::string> embed_tokens(std::string_view text);

/// Mean of the in-vocabulary token vectors.
DocVector document_vector(std::string_view text_clean, const WordEmbeddings& emb);

struct EmbedModel {
  RandomForest forest;
  /// Training documents with no in-vocabulary token.
  std::size_t empty_docs = 0;
};

/// Fits on annotated posts of `posts` (all of them; filter splits beforehand).
EmbedModel embed_classify_train(std::span<const corpus::UnifiedPost> posts, MoralLabel label,
                                const WordEmbeddings& emb, const ForestOptions& options = {});
std::vector<int> embed_classify_predict(const EmbedModel& model, std::span<const std::string> texts,
                                        const WordEmbeddings& emb);

}  // namespace moral::baselines
