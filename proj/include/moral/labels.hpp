#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace moral {

/// The thirteen labels a post can carry: ten virtue/vice poles of the five
/// classic foundations, the two Liberty poles, and NonMoral.
enum class MoralLabel : std::uint8_t {
  Care,
  Harm,
  Fairness,
  Cheating,
  Loyalty,
  Betrayal,
  Authority,
  Subversion,
  Purity,
  Degradation,
  Liberty,
  Oppression,
  NonMoral,
};

inline constexpr std::size_t kLabelCount = 13;

inline constexpr std::array<MoralLabel, kLabelCount> kAllLabels = {
    MoralLabel::Care,       MoralLabel::Harm,        MoralLabel::Fairness,
    MoralLabel::Cheating,   MoralLabel::Loyalty,     MoralLabel::Betrayal,
    MoralLabel::Authority,  MoralLabel::Subversion,  MoralLabel::Purity,
    MoralLabel::Degradation, MoralLabel::Liberty,    MoralLabel::Oppression,
    MoralLabel::NonMoral,
};

/// The ten labels annotated in every corpus.
inline constexpr std::array<MoralLabel, 10> kCoreLabels = {
    MoralLabel::Care,      MoralLabel::Harm,       MoralLabel::Fairness,
    MoralLabel::Cheating,  MoralLabel::Loyalty,    MoralLabel::Betrayal,
    MoralLabel::Authority, MoralLabel::Subversion, MoralLabel::Purity,
    MoralLabel::Degradation,
};

/// The twelve moral (non-neutral) labels.
inline constexpr std::array<MoralLabel, 12> kMoralLabels = {
    MoralLabel::Care,       MoralLabel::Harm,       MoralLabel::Fairness,
    MoralLabel::Cheating,   MoralLabel::Loyalty,    MoralLabel::Betrayal,
    MoralLabel::Authority,  MoralLabel::Subversion, MoralLabel::Purity,
    MoralLabel::Degradation, MoralLabel::Liberty,   MoralLabel::Oppression,
};

enum class Foundation : std::uint8_t { Care, Fairness, Loyalty, Authority, Purity, Liberty };

inline constexpr std::array<Foundation, 6> kAllFoundations = {
    Foundation::Care,      Foundation::Fairness, Foundation::Loyalty,
    Foundation::Authority, Foundation::Purity,   Foundation::Liberty,
};

enum class Polarity : std::uint8_t { Virtue, Vice };

enum class Domain : std::uint8_t { MFTC, MFRC, FB };

inline constexpr std::array<Domain, 3> kAllDomains = {Domain::MFTC, Domain::MFRC, Domain::FB};

constexpr std::size_t index(MoralLabel l) noexcept { return static_cast<std::size_t>(l); }
constexpr std::size_t index(Domain d) noexcept { return static_cast<std::size_t>(d); }

/// Liberty and Oppression are only annotated in some subcorpora.
constexpr bool is_partial_coverage(MoralLabel l) noexcept {
  return l == MoralLabel::Liberty || l == MoralLabel::Oppression;
}

/// Foundation of a moral label; nullopt for NonMoral.
std::optional<Foundation> foundation_of(MoralLabel l) noexcept;
std::optional<Polarity> polarity_of(MoralLabel l) noexcept;

/// The label carrying `polarity` for `f`.
MoralLabel pole(Foundation f, Polarity polarity) noexcept;

/// Display name, e.g. "Care", "NonMoral".
std::string_view name(MoralLabel l) noexcept;
/// Lowercase identifier used in files and on the command line, e.g. "non_moral".
std::string_view slug(MoralLabel l) noexcept;
std::string_view name(Foundation f) noexcept;
std::string_view name(Domain d) noexcept;
/// Lowercase domain identifier: "mftc", "mfrc", "fb".
std::string_view slug(Domain d) noexcept;

/// Case-insensitive parse accepting display names, slugs and the common
/// spellings "non-moral" / "nonmoral".
std::optional<MoralLabel> parse_label(std::string_view text) noexcept;
std::optional<Foundation> parse_foundation(std::string_view text) noexcept;
std::optional<Domain> parse_domain(std::string_view text) noexcept;

/// Same as parse_label but throws std::invalid_argument on failure.
MoralLabel label_from_string(std::string_view text);
Domain domain_from_string(std::string_view text);

}  // namespace moral
