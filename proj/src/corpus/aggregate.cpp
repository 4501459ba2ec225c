#include "moral/corpus/aggregate.hpp"

#include <stdexcept>

namespace moral::corpus {
namespace {

bool reaches_agreement(int votes, int n_annotators) { return 2 * votes >= n_annotators; }

void check_annotator_count(std::size_t distinct, int n_annotators) {
  if (n_annotators < 1) throw std::invalid_argument("n_annotators must be at least 1");
  if (static_cast<std::size_t>(n_annotators) < distinct) {
    throw std::invalid_argument("n_annotators (" + std::to_string(n_annotators) +
                                ") is smaller than the number of distinct annotators (" +
                                std::to_string(distinct) + ")");
  }
}

}  // namespace

GoldLabels aggregate_votes(std::span<const RawAnnotation> annotations, int n_annotators) {
  if (annotations.empty()) throw std::invalid_argument("no votes");

  const std::string& post_id = annotations.front().post_id;
  std::set<std::string> seen;
  std::array<int, kLabelCount> votes{};
  for (const RawAnnotation& a : annotations) {
    if (a.post_id != post_id) {
      throw std::invalid_argument("annotations mix posts '" + post_id + "' and '" + a.post_id + "'");
    }
    if (!seen.insert(a.annotator_id).second) {
      throw std::invalid_argument("duplicate annotator '" + a.annotator_id + "' for post '" + post_id + "'");
    }
    if (a.labels.empty()) {
      throw std::invalid_argument("annotator '" + a.annotator_id + "' gave no label for post '" + post_id + "'");
    }
    for (MoralLabel l : a.labels) ++votes[index(l)];
  }
  check_annotator_count(seen.size(), n_annotators);

  GoldLabels gold;
  bool any_moral = false;
  for (MoralLabel l : kMoralLabels) {
    const bool hit = reaches_agreement(votes[index(l)], n_annotators);
    gold.set(l, hit);
    any_moral = any_moral || hit;
  }
  gold.set(MoralLabel::NonMoral, !any_moral);
  return gold;
}

std::set<std::string> aggregate_source_votes(std::span<const SourceVote> votes, int n_annotators,
                                             const std::set<std::string>& ignored_tags) {
  if (votes.empty()) throw std::invalid_argument("no votes");
  std::set<std::string> seen;
  std::map<std::string, int> counts;
  for (const SourceVote& v : votes) {
    if (!seen.insert(v.annotator_id).second) {
      throw std::invalid_argument("duplicate annotator '" + v.annotator_id + "'");
    }
    if (v.tags.empty()) throw std::invalid_argument("annotator '" + v.annotator_id + "' gave no label");
    for (const std::string& t : v.tags) {
      if (!ignored_tags.contains(t)) ++counts[t];
    }
  }
  check_annotator_count(seen.size(), n_annotators);

  std::set<std::string> agreed;
  for (const auto& [tag, n] : counts) {
    if (reaches_agreement(n, n_annotators)) agreed.insert(tag);
  }
  return agreed;
}

std::map<std::string, int> merge_fairness(std::map<std::string, int> labels) {
  auto take = [&labels](const char* key) -> std::optional<int> {
    auto it = labels.find(key);
    if (it == labels.end()) return std::nullopt;
    int v = it->second;
    labels.erase(it);
    return v;
  };
  const auto proportionality = take("Proportionality");
  const auto equality = take("Equality");
  if (!proportionality && !equality) return labels;

  const int merged = (proportionality.value_or(0) != 0 || equality.value_or(0) != 0) ? 1 : 0;
  int& fairness = labels["Fairness"];
  fairness = (fairness != 0 || merged != 0) ? 1 : 0;
  return labels;
}

}  // namespace moral::corpus
