#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moral/labels.hpp"

namespace moral::baselines {

/// Per-lemma foundation scores on a 1..9 valence scale: 1 is the vice pole,
/// 9 the virtue pole, 5 neutral.
class MoralLexicon {
 public:
  static constexpr double kMin = 1.0;
  static constexpr double kMax = 9.0;
  static constexpr double kMidpoint = 5.0;

  /// CSV or TSV with a `LEMMA` column and one column per foundation name
  /// (case-insensitive). Empty cells and -1 mean "no score".
  static MoralLexicon load(const std::filesystem::path& path);
  static MoralLexicon parse(std::string_view text, char delimiter = ',');

  /// Throws std::invalid_argument for a score outside [kMin, kMax].
  void add(std::string_view lemma, Foundation f, double score);

  /// Case-insensitive exact lookup.
  std::optional<double> score(std::string_view lemma, Foundation f) const;
  /// Exact lookup first, then the suffix-stripped candidates of `token`.
  std::optional<double> match(std::string_view token, Foundation f) const;
  bool covers(Foundation f) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::string, std::map<Foundation, double>, std::less<>> entries_;
};

/// Lowercased alphabetic tokens (apostrophes kept inside words).
std::vector<std::string> lexicon_tokens(std::string_view text);

/// Crude English lemma candidates for an inflected form, most specific first
/// (e.g. "cities" -> "city", "protected" -> "protect", "protecte").
std::vector<std::string> lemma_candidates(std::string_view token);

/// Mean score over tokens matching `f`, or nullopt with no match.
std::optional<double> foundation_aggregate(std::string_view text_clean, Foundation f, const MoralLexicon& lexicon);

/// 1 when the foundation aggregate falls strictly on the label's side of the
/// midpoint. NonMoral is 1 when some lemma matched but no foundation
/// aggregate leans either way. Without any match every label is 0.
int lexicon_classify(std::string_view text_clean, MoralLabel label, const MoralLexicon& lexicon);

}  // namespace moral::baselines
