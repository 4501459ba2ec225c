#include "moral/corpus/sentiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace moral::corpus {
namespace {

constexpr double kBoostIncrease = 0.293;
constexpr double kBoostDecrease = -0.293;
constexpr double kCapsIncrease = 0.733;
constexpr double kNegationScalar = -0.74;
constexpr double kNormalisationAlpha = 15.0;

const std::unordered_set<std::string>& negations() {
  static const std::unordered_set<std::string> words = {
      "aint",     "arent",   "cannot",   "cant",     "couldnt",  "darent",  "didnt",    "doesnt",
      "ain't",    "aren't",  "can't",    "couldn't", "daren't",  "didn't",  "doesn't", "dont",
      "hadnt",    "hasnt",   "havent",   "isnt",     "mightnt",  "mustnt",  "neither", "don't",
      "hadn't",   "hasn't",  "haven't",  "isn't",    "mightn't", "mustn't", "neednt",  "needn't",
      "never",    "none",    "nope",     "nor",      "not",      "nothing", "nowhere", "oughtnt",
      "shant",    "shouldnt", "uhuh",    "wasnt",    "werent",   "oughtn't", "shan't", "shouldn't",
      "uh-uh",    "wasn't",  "weren't",  "without",  "wont",     "wouldnt", "won't",   "wouldn't",
      "rarely",   "seldom",  "despite",
  };
  return words;
}

const std::unordered_map<std::string, double>& boosters() {
  static const std::unordered_map<std::string, double> words = [] {
    std::unordered_map<std::string, double> m;
    for (const char* w :
         {"absolutely", "amazingly", "awfully", "completely", "considerable", "considerably", "decidedly",
          "deeply", "effing", "enormous", "enormously", "entirely", "especially", "exceptional",
          "exceptionally", "extreme", "extremely", "fabulously", "flipping", "flippin", "frackin", "fracking",
          "fricking", "frickin", "frigging", "friggin", "fully", "fuckin", "fucking", "fuggin", "fugging",
          "greatly", "hella", "highly", "hugely", "incredible", "incredibly", "intensely", "major", "majorly",
          "more", "most", "particularly", "purely", "quite", "really", "remarkably", "so", "substantially",
          "thoroughly", "total", "totally", "tremendous", "tremendously", "uber", "unbelievably", "unusually",
          "utter", "utterly", "very"}) {
      m.emplace(w, kBoostIncrease);
    }
    for (const char* w : {"almost", "barely", "hardly", "kinda", "kindof", "kind-of", "less", "little",
                          "marginal", "marginally", "occasional", "occasionally", "partly", "scarce",
                          "scarcely", "slight", "slightly", "somewhat", "sorta", "sortof", "sort-of"}) {
      m.emplace(w, kBoostDecrease);
    }
    return m;
  }();
  return words;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Python's str.isupper(): at least one cased character and no lowercase ones.
bool is_upper(std::string_view s) {
  bool cased = false;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (std::islower(u)) return false;
    if (std::isupper(u)) cased = true;
  }
  return cased;
}

bool negated(const std::string& word_lower) {
  return negations().contains(word_lower) || word_lower.find("n't") != std::string::npos;
}

std::string strip_punctuation_if_word(const std::string& token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(token[e - 1]))) --e;
  if (e - b <= 2) return token;
  return token.substr(b, e - b);
}

double scalar_inc_dec(const std::string& word, double valence, bool cap_differential) {
  double scalar = 0.0;
  if (auto it = boosters().find(lower(word)); it != boosters().end()) {
    scalar = it->second;
    if (valence < 0) scalar = -scalar;
    if (is_upper(word) && cap_differential) scalar += valence > 0 ? kCapsIncrease : -kCapsIncrease;
  }
  return scalar;
}

double negation_check(double valence, const std::vector<std::string>& lw, std::size_t start, std::size_t i) {
  auto in_so_this = [](const std::string& w) { return w == "so" || w == "this"; };
  if (start == 0) {
    if (negated(lw[i - 1])) valence *= kNegationScalar;
  } else if (start == 1) {
    if (lw[i - 2] == "never" && in_so_this(lw[i - 1])) {
      valence *= 1.25;
    } else if (lw[i - 2] == "without" && lw[i - 1] == "doubt") {
    } else if (negated(lw[i - 2])) {
      valence *= kNegationScalar;
    }
  } else {
    if (lw[i - 3] == "never" && (in_so_this(lw[i - 2]) || in_so_this(lw[i - 1]))) {
      valence *= 1.25;
    } else if (lw[i - 3] == "without" && (lw[i - 2] == "doubt" || lw[i - 1] == "doubt")) {
    } else if (negated(lw[i - 3])) {
      valence *= kNegationScalar;
    }
  }
  return valence;
}

}  // namespace

VaderScorer::VaderScorer(std::unordered_map<std::string, double> lexicon) : lexicon_(std::move(lexicon)) {}

VaderScorer VaderScorer::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sentiment lexicon '" + path.string() + "'");
  std::unordered_map<std::string, double> lexicon;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    const auto tab2 = line.find('\t', tab + 1);
    const std::string value = line.substr(tab + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab - 1);
    try {
      lexicon[line.substr(0, tab)] = std::stod(value);
    } catch (const std::exception&) {
      throw std::runtime_error("sentiment lexicon '" + path.string() + "' line " + std::to_string(lineno) +
                               ": bad valence '" + value + "'");
    }
  }
  return VaderScorer(std::move(lexicon));
}

double VaderScorer::valence_at(const std::vector<std::string>& words, const std::vector<std::string>& lw,
                               std::size_t i, bool cap_differential) const {
  auto it = lexicon_.find(lw[i]);
  if (it == lexicon_.end()) return 0.0;
  double valence = it->second;
  if (is_upper(words[i]) && cap_differential) valence += valence > 0 ? kCapsIncrease : -kCapsIncrease;

  for (std::size_t start = 0; start < 3; ++start) {
    if (i <= start) break;
    const std::size_t prev = i - (start + 1);
    if (lexicon_.contains(lw[prev])) continue;
    double s = scalar_inc_dec(words[prev], valence, cap_differential);
    if (start == 1 && s != 0) s *= 0.95;
    if (start == 2 && s != 0) s *= 0.9;
    valence += s;
    valence = negation_check(valence, lw, start, i);
  }
  return valence;
}

double VaderScorer::compound(std::string_view text) const {
  std::vector<std::string> words;
  {
    std::istringstream iss{std::string(text)};
    std::string tok;
    while (iss >> tok) words.push_back(strip_punctuation_if_word(tok));
  }
  if (words.empty()) return 0.0;

  std::size_t caps = 0;
  for (const auto& w : words) caps += is_upper(w) ? 1 : 0;
  const bool cap_differential = caps > 0 && caps < words.size();

  std::vector<std::string> lw(words.size());
  std::transform(words.begin(), words.end(), lw.begin(), lower);

  std::vector<double> sentiments;
  sentiments.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (boosters().contains(lw[i]) || (lw[i] == "kind" && i + 1 < words.size() && lw[i + 1] == "of")) {
      sentiments.push_back(0.0);
      continue;
    }
    sentiments.push_back(valence_at(words, lw, i, cap_differential));
  }

  for (std::size_t b = 0; b < words.size(); ++b) {
    if (lw[b] != "but") continue;
    for (std::size_t s = 0; s < sentiments.size(); ++s) {
      if (s < b) sentiments[s] *= 0.5;
      else if (s > b) sentiments[s] *= 1.5;
    }
    break;
  }

  double sum = 0.0;
  for (double s : sentiments) sum += s;
  if (sum == 0.0) return 0.0;

  const auto exclamations = std::min<std::size_t>(4, std::count(text.begin(), text.end(), '!'));
  const auto questions = static_cast<std::size_t>(std::count(text.begin(), text.end(), '?'));
  double emphasis = static_cast<double>(exclamations) * 0.292;
  if (questions > 1) emphasis += questions <= 3 ? static_cast<double>(questions) * 0.18 : 0.96;
  sum += sum > 0 ? emphasis : -emphasis;

  const double score = sum / std::sqrt(sum * sum + kNormalisationAlpha);
  return std::clamp(score, -1.0, 1.0);
}

MoralLabel assign_polarity(Foundation foundation, double sentiment_score) {
  if (!(sentiment_score >= -1.0 && sentiment_score <= 1.0)) {
    throw std::invalid_argument("sentiment score must lie in [-1, 1]");
  }
  return pole(foundation, sentiment_score >= 0.0 ? Polarity::Virtue : Polarity::Vice);
}

MoralLabel assign_polarity(std::string_view foundation, double sentiment_score) {
  auto f = parse_foundation(foundation);
  if (!f) {
    throw std::invalid_argument("'" + std::string(foundation) + "' has no virtue/vice pair");
  }
  return assign_polarity(*f, sentiment_score);
}

}  // namespace moral::corpus
