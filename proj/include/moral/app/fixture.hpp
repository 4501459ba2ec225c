#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "moral/corpus/types.hpp"

namespace moral::app {

/// Synthetic stand-in for the three corpora. Each moral label has a small
/// set of planted keywords; posts are filler text in a domain-specific
/// register plus the keywords of their gold labels, and raw annotator votes
/// are simulated around that gold so the adapters and aggregation run for
/// real. Care and Harm are over-represented so single-label fixtures have
/// enough positives.
struct FixtureOptions {
  std::uint64_t seed = 2024;
  int mftc_posts = 140;
  int mfrc_posts = 130;
  int fb_posts = 130;
};

struct FixtureFiles {
  std::string mftc_json;
  std::string mfrc_csv;
  std::string fb_csv;
  std::string vader_lexicon;   // token<TAB>mean<TAB>sd<TAB>ratings
  std::string moral_lexicon;   // MoralStrength-style CSV
  std::string embeddings;      // word2vec text format
};

FixtureFiles generate_fixture(const FixtureOptions& options = {});
/// Writes mftc.json, mfrc.csv, fb.csv, vader_lexicon.txt, moral_lexicon.csv,
/// embeddings.txt and config.yaml into `dir`.
void write_fixture(const std::filesystem::path& dir, const FixtureOptions& options = {});

/// Planted keywords of a label (empty for NonMoral).
const std::vector<std::string>& fixture_keywords(MoralLabel label);

/// Two-domain corpus for probing domain leakage: both domains share one
/// filler vocabulary and Care/NonMoral gold is planted with keywords, but
/// posts of the first domain carry `nuisance_token` with probability
/// `nuisance_rate` (the second with 1 - nuisance_rate). Splits are left
/// unassigned.
struct NuisanceOptions {
  std::uint64_t seed = 7;
  int posts_per_domain = 200;
  double nuisance_rate = 0.9;
  double positive_rate = 0.4;
  std::string nuisance_token = "zork";
};
std::vector<corpus::UnifiedPost> nuisance_corpus(const NuisanceOptions& options = {});

}  // namespace moral::app
