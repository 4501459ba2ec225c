#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "moral/corpus/sentiment.hpp"
#include "moral/corpus/types.hpp"
#include "moral/preprocess/clean.hpp"

namespace moral::corpus {

struct IngestOptions {
  preprocess::CleanConfig clean;
  /// Required for MFRC, whose annotations carry foundations without polarity.
  std::shared_ptr<const SentimentScorer> sentiment;
  /// Subcorpora whose posts carry Liberty/Oppression annotations.
  std::set<std::string> liberty_subcorpora;
  /// Every post carries Liberty/Oppression annotations (FB).
  bool liberty_everywhere = false;
  /// Subcorpora to keep; empty keeps everything.
  std::set<std::string> include_subcorpora;
  /// Fixed annotator count per post; default is the number of distinct
  /// annotators who labelled the post.
  std::optional<int> n_annotators;
};

/// Defaults matching the three public corpora: the six large MFTC
/// collections with Liberty on BLM and Election, and Liberty on all of FB.
IngestOptions default_ingest_options(Domain family);

/// MFTC JSON: an array of `{"Corpus": name, "Tweets": [{"tweet_id", "tweet_text",
/// "annotations": [{"annotator", "annotation": "care,harm"}]}]}`.
std::vector<UnifiedPost> ingest_mftc(const std::filesystem::path& path, const IngestOptions& options);

/// MFRC CSV, one row per (text, annotator): columns `text`, `subreddit`,
/// `bucket`, `annotator`, `annotation` (comma-separated tags among Care,
/// Equality, Proportionality, Loyalty, Authority, Purity, Thin Morality,
/// Non-Moral). Polarity comes from the sentiment scorer.
std::vector<UnifiedPost> ingest_mfrc(const std::filesystem::path& path, const IngestOptions& options);

/// FB CSV, one row per (post, annotator): columns `post_id`, `text`,
/// `annotator`, `labels` (label names separated by ',' or ';') and an
/// optional `subcorpus`.
std::vector<UnifiedPost> ingest_fb(const std::filesystem::path& path, const IngestOptions& options);

std::vector<UnifiedPost> ingest(Domain family, const std::filesystem::path& path, const IngestOptions& options);

}  // namespace moral::corpus
