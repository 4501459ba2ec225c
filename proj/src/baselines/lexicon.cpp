#include "moral/baselines/lexicon.hpp"

#include <cctype>
#include <stdexcept>

#include "moral/csv.hpp"
#include "moral/hash.hpp"

namespace moral::baselines {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() + 1 && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

MoralLexicon MoralLexicon::load(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto first_line = text.substr(0, text.find('\n'));
  const char delimiter = first_line.find('\t') != std::string::npos ? '\t' : ',';
  try {
    return parse(text, delimiter);
  } catch (const std::exception& e) {
    throw std::runtime_error("lexicon " + path.string() + ": " + e.what());
  }
}

MoralLexicon MoralLexicon::parse(std::string_view text, char delimiter) {
  const CsvTable table = CsvTable::parse(text, delimiter);
  const auto c_lemma = table.require("lemma", "lexicon");
  std::vector<std::pair<std::size_t, Foundation>> columns;
  for (Foundation f : kAllFoundations) {
    if (auto c = table.column(name(f))) columns.emplace_back(*c, f);
  }
  if (columns.empty()) throw std::runtime_error("no foundation columns in lexicon header");

  MoralLexicon lex;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const std::string& lemma = table.at(r, c_lemma);
    if (lemma.empty()) continue;
    for (const auto& [c, f] : columns) {
      const std::string& cell = table.at(r, c);
      if (cell.empty()) continue;
      double v = 0.0;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw std::runtime_error("row " + std::to_string(r + 2) + ": bad score '" + cell + "'");
      }
      if (v == -1.0) continue;
      lex.add(lemma, f, v);
    }
  }
  return lex;
}

void MoralLexicon::add(std::string_view lemma, Foundation f, double score) {
  if (!(score >= kMin && score <= kMax)) {
    throw std::invalid_argument("lexicon score for '" + std::string(lemma) + "' out of range: " +
                                std::to_string(score));
  }
  entries_[lower(lemma)][f] = score;
}

std::optional<double> MoralLexicon::score(std::string_view lemma, Foundation f) const {
  auto it = entries_.find(lower(lemma));
  if (it == entries_.end()) return std::nullopt;
  auto jt = it->second.find(f);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

std::optional<double> MoralLexicon::match(std::string_view token, Foundation f) const {
  const std::string t = lower(token);
  if (entries_.contains(t)) return score(t, f);
  for (const std::string& c : lemma_candidates(t)) {
    if (entries_.contains(c)) return score(c, f);
  }
  return std::nullopt;
}

bool MoralLexicon::covers(Foundation f) const {
  for (const auto& [lemma, scores] : entries_) {
    if (scores.contains(f)) return true;
  }
  return false;
}

std::vector<std::string> lexicon_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalpha(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' && !cur.empty()) {
      cur.push_back('\'');
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::vector<std::string> lemma_candidates(std::string_view token) {
  std::vector<std::string> out;
  const std::string t(token);
  auto stem = [&](std::size_t n) { return t.substr(0, t.size() - n); };
  if (ends_with(t, "'s")) out.push_back(stem(2));
  if (ends_with(t, "ies")) out.push_back(stem(3) + "y");
  if (ends_with(t, "es")) out.push_back(stem(2));
  if (ends_with(t, "s") && !ends_with(t, "ss")) out.push_back(stem(1));
  if (ends_with(t, "ied")) out.push_back(stem(3) + "y");
  if (ends_with(t, "ed")) {
    out.push_back(stem(2));
    out.push_back(stem(1));
    const std::string s = stem(2);
    if (s.size() > 2 && s[s.size() - 1] == s[s.size() - 2]) out.push_back(s.substr(0, s.size() - 1));
  }
  if (ends_with(t, "ing")) {
    const std::string s = stem(3);
    out.push_back(s);
    out.push_back(s + "e");
    if (s.size() > 2 && s[s.size() - 1] == s[s.size() - 2]) out.push_back(s.substr(0, s.size() - 1));
  }
  if (ends_with(t, "ly")) out.push_back(stem(2));
  return out;
}

std::optional<double> foundation_aggregate(std::string_view text_clean, Foundation f, const MoralLexicon& lexicon) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const std::string& tok : lexicon_tokens(text_clean)) {
    if (auto s = lexicon.match(tok, f)) {
      sum += *s;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

int lexicon_classify(std::string_view text_clean, MoralLabel label, const MoralLexicon& lexicon) {
  if (label == MoralLabel::NonMoral) {
    bool matched = false;
    for (Foundation f : kAllFoundations) {
      auto agg = foundation_aggregate(text_clean, f, lexicon);
      if (agg && *agg != MoralLexicon::kMidpoint) return 0;
      matched = matched || agg.has_value();
    }
    return matched ? 1 : 0;
  }
  auto agg = foundation_aggregate(text_clean, *foundation_of(label), lexicon);
  if (!agg) return 0;
  return *polarity_of(label) == Polarity::Virtue ? (*agg > MoralLexicon::kMidpoint ? 1 : 0)
                                                  : (*agg < MoralLexicon::kMidpoint ? 1 : 0);
}

}  // namespace moral::baselines
