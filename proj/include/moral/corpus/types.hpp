#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "moral/labels.hpp"

namespace moral::corpus {

/// Gold state of one label on one post. Unannotated is distinct from Absent:
/// Liberty/Oppression are only annotated in some subcorpora.
enum class Gold : std::int8_t { Unannotated = -1, Absent = 0, Present = 1 };

class GoldLabels {
 public:
  /// All labels Absent.
  GoldLabels() { values_.fill(Gold::Absent); }

  Gold get(MoralLabel l) const noexcept { return values_[index(l)]; }
  void set(MoralLabel l, Gold g) noexcept { values_[index(l)] = g; }
  void set(MoralLabel l, bool present) noexcept { set(l, present ? Gold::Present : Gold::Absent); }

  bool present(MoralLabel l) const noexcept { return get(l) == Gold::Present; }
  bool annotated(MoralLabel l) const noexcept { return get(l) != Gold::Unannotated; }

  /// Binary target for a single-label model; precondition annotated(l).
  int target(MoralLabel l) const noexcept { return present(l) ? 1 : 0; }

  friend bool operator==(const GoldLabels&, const GoldLabels&) = default;

 private:
  std::array<Gold, kLabelCount> values_{};
};

enum class Split : std::uint8_t { Unassigned, Train, Validation, Test };

std::string_view name(Split s) noexcept;
Split split_from_string(std::string_view text);

struct RawAnnotation {
  std::string post_id;
  std::string annotator_id;
  std::set<MoralLabel> labels;
};

struct UnifiedPost {
  std::string post_id;
  std::string text_raw;
  std::string text_clean;
  Domain domain = Domain::MFTC;
  std::string subcorpus;
  GoldLabels gold;
  std::optional<double> sentiment_score;
  Split split = Split::Unassigned;

  friend bool operator==(const UnifiedPost&, const UnifiedPost&) = default;
};

/// Throws std::invalid_argument when a record breaks the gold invariants:
/// at least one Present label, NonMoral exclusive, sentiment in [-1, 1].
void validate(const UnifiedPost& post);

}  // namespace moral::corpus
