#include "moral/labels.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace moral {
namespace {

constexpr std::array<std::string_view, kLabelCount> kLabelNames = {
    "Care",      "Harm",       "Fairness", "Cheating", "Loyalty",    "Betrayal", "Authority",
    "Subversion", "Purity",    "Degradation", "Liberty", "Oppression", "NonMoral",
};

constexpr std::array<std::string_view, kLabelCount> kLabelSlugs = {
    "care",      "harm",       "fairness", "cheating", "loyalty",    "betrayal", "authority",
    "subversion", "purity",    "degradation", "liberty", "oppression", "non_moral",
};

std::string fold(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (c == '-' || c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

}  // namespace

std::optional<Foundation> foundation_of(MoralLabel l) noexcept {
  if (l == MoralLabel::NonMoral) return std::nullopt;
  return static_cast<Foundation>(index(l) / 2);
}

std::optional<Polarity> polarity_of(MoralLabel l) noexcept {
  if (l == MoralLabel::NonMoral) return std::nullopt;
  return index(l) % 2 == 0 ? Polarity::Virtue : Polarity::Vice;
}

MoralLabel pole(Foundation f, Polarity polarity) noexcept {
  auto base = static_cast<std::size_t>(f) * 2;
  return static_cast<MoralLabel>(base + (polarity == Polarity::Vice ? 1 : 0));
}

std::string_view name(MoralLabel l) noexcept { return kLabelNames[index(l)]; }
std::string_view slug(MoralLabel l) noexcept { return kLabelSlugs[index(l)]; }

std::string_view name(Foundation f) noexcept {
  static constexpr std::array<std::string_view, 6> names = {"Care",      "Fairness", "Loyalty",
                                                            "Authority", "Purity",   "Liberty"};
  return names[static_cast<std::size_t>(f)];
}

std::string_view name(Domain d) noexcept {
  static constexpr std::array<std::string_view, 3> names = {"MFTC", "MFRC", "FB"};
  return names[index(d)];
}

std::string_view slug(Domain d) noexcept {
  static constexpr std::array<std::string_view, 3> names = {"mftc", "mfrc", "fb"};
  return names[index(d)];
}

std::optional<MoralLabel> parse_label(std::string_view text) noexcept {
  const std::string key = fold(text);
  for (MoralLabel l : kAllLabels) {
    if (fold(kLabelSlugs[index(l)]) == key) return l;
  }
  return std::nullopt;
}

std::optional<Foundation> parse_foundation(std::string_view text) noexcept {
  const std::string key = fold(text);
  for (Foundation f : kAllFoundations) {
    if (fold(name(f)) == key) return f;
  }
  return std::nullopt;
}

std::optional<Domain> parse_domain(std::string_view text) noexcept {
  const std::string key = fold(text);
  for (Domain d : kAllDomains) {
    if (slug(d) == key) return d;
  }
  return std::nullopt;
}

MoralLabel label_from_string(std::string_view text) {
  if (auto l = parse_label(text)) return *l;
  throw std::invalid_argument("unknown moral label '" + std::string(text) + "'");
}

Domain domain_from_string(std::string_view text) {
  if (auto d = parse_domain(text)) return *d;
  throw std::invalid_argument("unknown domain '" + std::string(text) + "'");
}

}  // namespace moral
