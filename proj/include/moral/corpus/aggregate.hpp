#pragma once

#include <map>
#include <set>
#include <span>
#include <string>

#include "moral/corpus/types.hpp"

namespace moral::corpus {

/// Resolve one post's gold labels from its annotators' votes.
///
/// A moral label is Present when at least half of `n_annotators` chose it
/// (2 * votes >= n, so exactly 50% counts). NonMoral is Present iff no moral
/// label reaches the threshold, regardless of how many chose NonMoral.
///
/// Throws std::invalid_argument on an empty list, annotations for different
/// posts, a duplicate annotator, an empty label set, or fewer `n_annotators`
/// than distinct annotators.
GoldLabels aggregate_votes(std::span<const RawAnnotation> annotations, int n_annotators);

/// One annotator's vote in a corpus-specific tag vocabulary (e.g. MFRC's
/// "Equality", "Proportionality", "Thin Morality").
struct SourceVote {
  std::string annotator_id;
  std::set<std::string> tags;
};

/// Same threshold rule as aggregate_votes over free-form tags. Returns the set
/// of tags reaching agreement; `ignored_tags` never count.
std::set<std::string> aggregate_source_votes(std::span<const SourceVote> votes, int n_annotators,
                                             const std::set<std::string>& ignored_tags = {});

/// Replace Proportionality/Equality by Fairness = Proportionality OR Equality.
/// Maps without either source tag pass through unchanged.
std::map<std::string, int> merge_fairness(std::map<std::string, int> labels);

}  // namespace moral::corpus
