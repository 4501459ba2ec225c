#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "moral/corpus/types.hpp"

namespace moral::corpus {

/// Positive gold counts per (domain, label).
struct LabelDistribution {
  std::array<std::array<std::size_t, kLabelCount>, 3> counts{};
  /// NonMoral posts among those carrying Liberty/Oppression annotations.
  std::array<std::size_t, 3> liberty_non_moral{};

  std::size_t count(Domain d, MoralLabel l) const { return counts[index(d)][index(l)]; }
  std::size_t total(MoralLabel l) const;
  std::size_t liberty_non_moral_total() const;
};

LabelDistribution label_distribution(std::span<const UnifiedPost> posts);

/// Markdown table laid out as rows Care..Degradation, Non-Moral, then the
/// partially covered Liberty, Oppression and Non-Moral rows marked with a
/// dagger; columns MFTC, MFRC, FB, Total.
std::string render_distribution_markdown(const LabelDistribution& dist);
/// Same rows as CSV with header `label,MFTC,MFRC,FB,Total`.
std::string render_distribution_csv(const LabelDistribution& dist);

}  // namespace moral::corpus
