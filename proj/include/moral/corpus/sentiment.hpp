#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "moral/labels.hpp"

namespace moral::corpus {

/// Anything producing a compound polarity score in [-1, +1] for a text.
class SentimentScorer {
 public:
  virtual ~SentimentScorer() = default;
  virtual double compound(std::string_view text) const = 0;
};

/// Rule-based social-media sentiment scorer in the style of VADER: lexicon
/// valences adjusted for boosters, negation, capitalisation, "but" and
/// trailing punctuation, normalised with x / sqrt(x^2 + 15).
class VaderScorer final : public SentimentScorer {
 public:
  /// Reads the VADER lexicon layout: `token<TAB>mean[<TAB>...]` per line.
  static VaderScorer from_file(const std::filesystem::path& path);

  explicit VaderScorer(std::unordered_map<std::string, double> lexicon);

  double compound(std::string_view text) const override;

  std::size_t size() const noexcept { return lexicon_.size(); }

 private:
  double valence_at(const std::vector<std::string>& words, const std::vector<std::string>& lowered,
                    std::size_t i, bool cap_differential) const;

  std::unordered_map<std::string, double> lexicon_;
};

/// Virtue pole of `foundation` when sentiment_score >= 0, vice pole otherwise.
/// Throws std::invalid_argument for a score outside [-1, 1] or NaN.
MoralLabel assign_polarity(Foundation foundation, double sentiment_score);
/// Same, for a foundation given by name; NonMoral or unknown names throw.
MoralLabel assign_polarity(std::string_view foundation, double sentiment_score);

}  // namespace moral::corpus
