#include "moral/app/fixture.hpp"

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "moral/csv.hpp"
#include "moral/hash.hpp"
#include "moral/preprocess/clean.hpp"
#include "moral/rng.hpp"

namespace moral::app {
namespace {

const std::vector<std::string> kShared = {"the", "a",    "and",  "of",   "to",    "is",  "we",    "they",
                                          "this", "that", "about", "on", "with", "for", "it",    "was",
                                          "are", "just", "what", "more", "some",  "all", "there", "when"};

const std::array<std::vector<std::string>, 3> kFiller = {{
    {"today", "tweet", "folks", "news", "city", "watch", "update", "tonight", "morning", "live", "street", "photo"},
    {"thread", "comment", "op", "edit", "upvote", "reddit", "post", "argument", "source", "discussion", "reply",
     "karma"},
    {"vaccine", "doctor", "shot", "health", "clinic", "dose", "family", "share", "kids", "school", "nurse",
     "flu"},
}};

const std::map<MoralLabel, std::vector<std::string>>& keyword_table() {
  static const std::map<MoralLabel, std::vector<std::string>> table = {
      {MoralLabel::Care, {"compassion", "kindness", "protect", "nurture"}},
      {MoralLabel::Harm, {"cruelty", "hurt", "suffering", "abuse"}},
      {MoralLabel::Fairness, {"justice", "equality", "fairness", "rights"}},
      {MoralLabel::Cheating, {"fraud", "cheating", "rigged", "corrupt"}},
      {MoralLabel::Loyalty, {"solidarity", "loyal", "unity", "patriot"}},
      {MoralLabel::Betrayal, {"traitor", "betrayal", "treason", "deserted"}},
      {MoralLabel::Authority, {"obey", "tradition", "respect", "law"}},
      {MoralLabel::Subversion, {"rebel", "defy", "chaos", "riot"}},
      {MoralLabel::Purity, {"sacred", "pure", "holy", "decency"}},
      {MoralLabel::Degradation, {"disgusting", "filthy", "sin", "gross"}},
      {MoralLabel::Liberty, {"freedom", "liberty", "autonomy", "choice"}},
      {MoralLabel::Oppression, {"tyranny", "oppression", "coercion", "mandate"}},
  };
  return table;
}

const std::vector<std::string> kMftcCorpora = {"ALM", "Baltimore", "BLM", "Davidson", "Election", "Sandy"};
const std::vector<std::string> kMfrcBuckets = {"US politics", "French politics", "Everyday morality"};
const std::vector<std::string> kEmoji = {"\xF0\x9F\x98\x80", "\xF0\x9F\x98\xA2", "\xE2\x9D\xA4\xEF\xB8\x8F",
                                         "\xF0\x9F\x99\x8F"};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

/// Care and Harm get extra weight so they have enough positives per split.
MoralLabel sample_label(Rng& rng, bool liberty) {
  std::vector<std::pair<MoralLabel, int>> weights;
  for (MoralLabel l : kMoralLabels) {
    if (is_partial_coverage(l) && !liberty) continue;
    int w = 1;
    if (l == MoralLabel::Care) w = 6;
    if (l == MoralLabel::Harm) w = 3;
    if (is_partial_coverage(l)) w = 2;
    weights.emplace_back(l, w);
  }
  int total = 0;
  for (auto& [l, w] : weights) total += w;
  auto r = static_cast<int>(rng.below(static_cast<std::uint64_t>(total)));
  for (auto& [l, w] : weights) {
    if (r < w) return l;
    r -= w;
  }
  return weights.back().first;
}

std::set<MoralLabel> sample_gold(Rng& rng, bool liberty, bool single_polarity) {
  std::set<MoralLabel> gold;
  if (rng.uniform() < 0.35) return gold;
  const int n = rng.uniform() < 0.8 ? 1 : 2;
  while (static_cast<int>(gold.size()) < n) {
    const MoralLabel l = sample_label(rng, liberty);
    if (single_polarity && !gold.empty()) {
      // One sentiment per post keeps sentiment-derived polarity consistent.
      if (polarity_of(*gold.begin()) != polarity_of(l) || foundation_of(*gold.begin()) == foundation_of(l)) continue;
    }
    gold.insert(l);
  }
  return gold;
}

std::string make_text(Rng& rng, int domain, const std::set<MoralLabel>& gold) {
  std::vector<std::string> words;
  const int n = 8 + static_cast<int>(rng.below(8));
  for (int i = 0; i < n; ++i) words.push_back(rng.uniform() < 0.5 ? pick(kShared, rng) : pick(kFiller[domain], rng));
  for (MoralLabel l : gold) {
    const int k = 1 + static_cast<int>(rng.below(2));
    for (int i = 0; i < k; ++i) {
      const auto pos = static_cast<std::size_t>(rng.below(words.size() + 1));
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), pick(keyword_table().at(l), rng));
    }
  }
  std::string text;
  for (const std::string& w : words) text += (text.empty() ? "" : " ") + w;
  return text;
}

/// Social-media noise the cleaner has to undo.
std::string decorate(std::string text, Rng& rng) {
  if (rng.uniform() < 0.25) text = "@user" + std::to_string(rng.below(1000)) + " " + text;
  if (rng.uniform() < 0.2) text += " https://t.co/" + std::to_string(rng.below(100000));
  if (rng.uniform() < 0.2) text += " #" + pick(kFiller[0], rng);
  if (rng.uniform() < 0.15) text += " " + pick(kEmoji, rng);
  return text;
}

/// Simulated votes: each gold label gets a majority of annotators, a stray
/// single vote sometimes adds a label that stays below the threshold.
std::vector<std::set<MoralLabel>> simulate_votes(Rng& rng, const std::set<MoralLabel>& gold, int annotators,
                                                 bool liberty) {
  std::vector<std::set<MoralLabel>> votes(static_cast<std::size_t>(annotators));
  const int majority = annotators / 2 + 1;
  for (MoralLabel l : gold) {
    std::vector<int> order(static_cast<std::size_t>(annotators));
    for (int i = 0; i < annotators; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(std::span<int>(order));
    const int k = majority + static_cast<int>(rng.below(static_cast<std::uint64_t>(annotators - majority + 1)));
    for (int i = 0; i < k; ++i) votes[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].insert(l);
  }
  if (annotators >= 3 && rng.uniform() < 0.2) {
    const MoralLabel stray = sample_label(rng, liberty);
    if (!gold.contains(stray)) votes[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(annotators)))].insert(stray);
  }
  return votes;
}

std::string join_labels(const std::set<MoralLabel>& labels, const char* sep) {
  if (labels.empty()) return "non-moral";
  std::string out;
  for (MoralLabel l : labels) out += (out.empty() ? "" : sep) + std::string(slug(l));
  return out;
}

std::string mfrc_tag(Foundation f, const std::string& fairness_tag) {
  switch (f) {
    case Foundation::Care: return "Care";
    case Foundation::Fairness: return fairness_tag;
    case Foundation::Loyalty: return "Loyalty";
    case Foundation::Authority: return "Authority";
    case Foundation::Purity: return "Purity";
    case Foundation::Liberty: break;
  }
  throw std::logic_error("MFRC has no Liberty tag");
}

std::string vader_lexicon() {
  std::ostringstream out;
  for (const auto& [label, words] : keyword_table()) {
    const bool virtue = polarity_of(label) == Polarity::Virtue;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const double v = (virtue ? 1.0 : -1.0) * (1.8 + 0.2 * static_cast<double>(i));
      out << words[i] << '\t' << v << "\t0.5\t[" << std::lround(v) << ", " << std::lround(v) << "]\n";
    }
  }
  return out.str();
}

std::string moral_lexicon() {
  static const std::array<Foundation, 5> kColumns = {Foundation::Care, Foundation::Fairness, Foundation::Loyalty,
                                                     Foundation::Authority, Foundation::Purity};
  std::ostringstream out;
  out << "LEMMA,CARE,FAIRNESS,LOYALTY,AUTHORITY,PURITY\n";
  for (const auto& [label, words] : keyword_table()) {
    const auto f = *foundation_of(label);
    if (f == Foundation::Liberty) continue;
    const bool virtue = polarity_of(label) == Polarity::Virtue;
    for (std::size_t i = 0; i < words.size(); ++i) {
      out << words[i];
      for (Foundation c : kColumns) {
        out << ',';
        if (c == f) out << (virtue ? 8.0 - 0.25 * static_cast<double>(i) : 2.0 + 0.25 * static_cast<double>(i));
        else out << -1;
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string embeddings(std::uint64_t seed) {
  constexpr int kDim = 16;
  Rng rng(seed);
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (const auto& [label, words] : keyword_table()) {
    std::vector<double> centroid(kDim);
    for (double& c : centroid) c = rng.normal();
    for (const std::string& w : words) {
      std::vector<double> v(kDim);
      for (int d = 0; d < kDim; ++d) v[static_cast<std::size_t>(d)] = centroid[static_cast<std::size_t>(d)] + 0.3 * rng.normal();
      rows.emplace_back(w, std::move(v));
    }
  }
  std::set<std::string> fillers(kShared.begin(), kShared.end());
  for (const auto& f : kFiller) fillers.insert(f.begin(), f.end());
  for (const std::string& w : fillers) {
    std::vector<double> v(kDim);
    for (double& x : v) x = 0.5 * rng.normal();
    rows.emplace_back(w, std::move(v));
  }
  std::ostringstream out;
  out.precision(6);
  out << rows.size() << ' ' << kDim << '\n';
  for (const auto& [w, v] : rows) {
    out << w;
    for (double x : v) out << ' ' << std::fixed << x;
    out << '\n';
  }
  return out.str();
}

const char* kFixtureConfig = R"(# Synthetic fixture experiment. Paths are relative to this file.
experiment: fixture
output_dir: ../../runs
corpora:
  mftc: mftc.json
  mfrc: mfrc.csv
  fb: fb.csv
sentiment_lexicon: vader_lexicon.txt
designs: [in_domain, leave_one_out:fb]
labels: [care, harm]
systems: [moralbert, moralbert_adv, lexicon, embed_forest]
train:
  learning_rate: 0.002
  batch_size: 16
  epochs: 5
  max_tokens: 48
  head_hidden: 32
  vocab_min_count: 1
  encoder:
    hidden_size: 32
    num_layers: 1
    num_heads: 2
    intermediate_size: 64
    max_positions: 64
baselines:
  lexicon: moral_lexicon.csv
  embeddings: embeddings.txt
)";

}  // namespace

const std::vector<std::string>& fixture_keywords(MoralLabel label) {
  static const std::vector<std::string> kNone;
  auto it = keyword_table().find(label);
  return it == keyword_table().end() ? kNone : it->second;
}

FixtureFiles generate_fixture(const FixtureOptions& options) {
  Rng master(options.seed);
  FixtureFiles files;

  {  // MFTC: JSON grouped by collection, three annotators per tweet.
    Rng rng = master.fork(1);
    std::map<std::string, nlohmann::ordered_json> corpora;
    for (int i = 0; i < options.mftc_posts; ++i) {
      const std::string& corpus = kMftcCorpora[static_cast<std::size_t>(i) % kMftcCorpora.size()];
      const bool liberty = corpus == "BLM" || corpus == "Election";
      const auto gold = sample_gold(rng, liberty, false);
      const std::string text = decorate(make_text(rng, 0, gold), rng);
      nlohmann::ordered_json tweet{{"tweet_id", "t" + std::to_string(100000 + i)}, {"tweet_text", text}};
      tweet["annotations"] = nlohmann::ordered_json::array();
      const auto votes = simulate_votes(rng, gold, 3, liberty);
      for (std::size_t a = 0; a < votes.size(); ++a) {
        tweet["annotations"].push_back({{"annotator", "annotator0" + std::to_string(a + 1)},
                                        {"annotation", join_labels(votes[a], ",")}});
      }
      corpora[corpus].push_back(std::move(tweet));
    }
    nlohmann::ordered_json root = nlohmann::ordered_json::array();
    for (const std::string& c : kMftcCorpora) root.push_back({{"Corpus", c}, {"Tweets", corpora[c]}});
    files.mftc_json = root.dump(1) + "\n";
  }

  {  // MFRC: one row per annotator, foundation tags only.
    Rng rng = master.fork(2);
    std::ostringstream out;
    out << "text,subreddit,bucket,annotator,annotation\n";
    for (int i = 0; i < options.mfrc_posts; ++i) {
      const std::string& bucket = kMfrcBuckets[static_cast<std::size_t>(i) % kMfrcBuckets.size()];
      const auto gold = sample_gold(rng, false, true);
      // A post number keeps texts unique, since MFRC rows are grouped by text.
      const std::string text = make_text(rng, 1, gold) + " " + std::to_string(i);
      const auto votes = simulate_votes(rng, gold, 3, false);
      const std::string fairness_tag = rng.uniform() < 0.5 ? "Equality" : "Proportionality";
      for (std::size_t a = 0; a < votes.size(); ++a) {
        std::set<std::string> tags;
        for (MoralLabel l : votes[a]) tags.insert(mfrc_tag(*foundation_of(l), fairness_tag));
        std::string joined;
        for (const std::string& t : tags) joined += (joined.empty() ? "" : ",") + t;
        if (joined.empty()) joined = "Non-Moral";
        out << csv_escape(text) << ",r/" << (i % 7) << ',' << csv_escape(bucket) << ",annotator0" << (a + 1) << ','
            << csv_escape(joined) << '\n';
      }
    }
    files.mfrc_csv = out.str();
  }

  {  // FB: five annotators, Liberty annotated everywhere.
    Rng rng = master.fork(3);
    std::ostringstream out;
    out << "post_id,text,annotator,labels,subcorpus\n";
    for (int i = 0; i < options.fb_posts; ++i) {
      const auto gold = sample_gold(rng, true, false);
      const std::string text = make_text(rng, 2, gold);
      const auto votes = simulate_votes(rng, gold, 5, true);
      for (std::size_t a = 0; a < votes.size(); ++a) {
        out << "fb" << (5000 + i) << ',' << csv_escape(text) << ",coder" << (a + 1) << ','
            << csv_escape(join_labels(votes[a], ";")) << ",vaccination\n";
      }
    }
    files.fb_csv = out.str();
  }

  files.vader_lexicon = vader_lexicon();
  files.moral_lexicon = moral_lexicon();
  files.embeddings = embeddings(options.seed + 1);
  return files;
}

void write_fixture(const std::filesystem::path& dir, const FixtureOptions& options) {
  std::filesystem::create_directories(dir);
  const FixtureFiles f = generate_fixture(options);
  write_file_atomic(dir / "mftc.json", f.mftc_json);
  write_file_atomic(dir / "mfrc.csv", f.mfrc_csv);
  write_file_atomic(dir / "fb.csv", f.fb_csv);
  write_file_atomic(dir / "vader_lexicon.txt", f.vader_lexicon);
  write_file_atomic(dir / "moral_lexicon.csv", f.moral_lexicon);
  write_file_atomic(dir / "embeddings.txt", f.embeddings);
  write_file_atomic(dir / "config.yaml", kFixtureConfig);
}

std::vector<corpus::UnifiedPost> nuisance_corpus(const NuisanceOptions& options) {
  Rng rng(options.seed);
  std::vector<corpus::UnifiedPost> posts;
  const std::vector<std::string> filler = [] {
    std::vector<std::string> f = kShared;
    f.insert(f.end(), kFiller[0].begin(), kFiller[0].end());
    return f;
  }();
  for (int d = 0; d < 2; ++d) {
    const double rate = d == 0 ? options.nuisance_rate : 1.0 - options.nuisance_rate;
    for (int i = 0; i < options.posts_per_domain; ++i) {
      std::set<MoralLabel> gold;
      if (rng.uniform() < options.positive_rate) gold.insert(MoralLabel::Care);
      std::vector<std::string> words;
      const int n = 8 + static_cast<int>(rng.below(8));
      for (int k = 0; k < n; ++k) words.push_back(pick(filler, rng));
      auto insert = [&](const std::string& w) {
        const auto pos = static_cast<std::size_t>(rng.below(words.size() + 1));
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), w);
      };
      if (!gold.empty()) insert(pick(keyword_table().at(MoralLabel::Care), rng));
      if (rng.uniform() < rate) insert(options.nuisance_token);

      corpus::UnifiedPost p;
      p.post_id = (d == 0 ? "a" : "b") + std::to_string(10000 + i);
      for (const std::string& w : words) p.text_raw += (p.text_raw.empty() ? "" : " ") + w;
      p.text_clean = p.text_raw;
      p.domain = d == 0 ? Domain::MFTC : Domain::MFRC;
      p.subcorpus = d == 0 ? "domain_a" : "domain_b";
      for (MoralLabel l : kAllLabels) p.gold.set(l, gold.contains(l));
      p.gold.set(MoralLabel::NonMoral, gold.empty());
      p.gold.set(MoralLabel::Liberty, corpus::Gold::Unannotated);
      p.gold.set(MoralLabel::Oppression, corpus::Gold::Unannotated);
      posts.push_back(std::move(p));
    }
  }
  return posts;
}

}  // namespace moral::app
