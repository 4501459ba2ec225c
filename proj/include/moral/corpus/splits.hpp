#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moral/corpus/types.hpp"

namespace moral::corpus {

/// An experiment design: how posts are divided into train/validation/test.
struct SplitDesign {
  enum class Kind : std::uint8_t { InDomain, LeaveOneOut, LibertyInDomain, LibertyCross };

  Kind kind = Kind::InDomain;
  /// Held-out domain for LeaveOneOut, test domain for LibertyCross.
  std::optional<Domain> domain;

  static SplitDesign in_domain() { return {Kind::InDomain, std::nullopt}; }
  static SplitDesign leave_one_out(Domain d) { return {Kind::LeaveOneOut, d}; }
  static SplitDesign liberty_in_domain() { return {Kind::LibertyInDomain, std::nullopt}; }
  static SplitDesign liberty_cross(Domain test) { return {Kind::LibertyCross, test}; }

  /// Accepts "in_domain", "leave_one_out:fb", "liberty_in_domain", "liberty_cross:mftc".
  static SplitDesign parse(std::string_view text);
  /// Inverse of parse(); also used as the experiment directory name.
  std::string id() const;
  /// Filesystem-friendly variant of id() (':' replaced by '_').
  std::string dir_name() const;
  bool is_liberty() const noexcept { return kind == Kind::LibertyInDomain || kind == Kind::LibertyCross; }

  friend bool operator==(const SplitDesign&, const SplitDesign&) = default;
};

struct SplitOptions {
  std::uint64_t seed = 42;
  /// Train share of the in-domain 80/20 split; must lie in (0, 1).
  double train_frac = 0.8;
  /// Share of the training portion carved out for best-epoch selection.
  double validation_frac = 0.1;
};

/// Assign splits for `design`. Liberty designs keep only posts whose Liberty
/// gold is annotated; every returned post has a split other than Unassigned.
///
/// Within each domain posts are ordered by post_id and shuffled with the
/// seed, so the assignment does not depend on input order. Throws
/// std::invalid_argument for a bad fraction, an empty held-out domain, or a
/// Liberty design touching a domain without Liberty annotations.
std::vector<UnifiedPost> make_splits(std::vector<UnifiedPost> posts, const SplitDesign& design,
                                     const SplitOptions& options = {});

}  // namespace moral::corpus
