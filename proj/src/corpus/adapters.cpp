#include "moral/corpus/adapters.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <stdexcept>

#include "moral/corpus/aggregate.hpp"
#include "moral/csv.hpp"
#include "moral/hash.hpp"

namespace moral::corpus {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_tags(std::string_view s, std::string_view delimiters) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find_first_of(delimiters, start);
    std::string tag = trim(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (!tag.empty()) out.push_back(std::move(tag));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

bool liberty_covered(const IngestOptions& options, const std::string& subcorpus) {
  return options.liberty_everywhere || options.liberty_subcorpora.contains(subcorpus);
}

bool included(const IngestOptions& options, const std::string& subcorpus) {
  return options.include_subcorpora.empty() || options.include_subcorpora.contains(subcorpus);
}

/// Parse one annotator's tags into labels. Liberty votes outside covered
/// subcorpora are dropped; a vote left empty that way counts as NonMoral.
std::set<MoralLabel> parse_vote(const std::vector<std::string>& tags, bool liberty, const std::string& where) {
  std::set<MoralLabel> labels;
  for (const std::string& tag : tags) {
    auto l = parse_label(tag);
    if (!l) throw std::runtime_error(where + ": unknown label '" + tag + "'");
    if (is_partial_coverage(*l) && !liberty) continue;
    labels.insert(*l);
  }
  if (labels.empty()) labels.insert(MoralLabel::NonMoral);
  return labels;
}

UnifiedPost finish_post(std::string post_id, std::string text, Domain domain, std::string subcorpus,
                        const std::vector<RawAnnotation>& votes, const IngestOptions& options) {
  UnifiedPost post;
  const int n = options.n_annotators.value_or(static_cast<int>(votes.size()));
  post.gold = aggregate_votes(votes, n);
  if (!liberty_covered(options, subcorpus)) {
    post.gold.set(MoralLabel::Liberty, Gold::Unannotated);
    post.gold.set(MoralLabel::Oppression, Gold::Unannotated);
  }
  post.post_id = std::move(post_id);
  post.text_clean = preprocess::clean_text(text, options.clean);
  post.text_raw = std::move(text);
  post.domain = domain;
  post.subcorpus = std::move(subcorpus);
  validate(post);
  return post;
}

/// Rows grouped by post key in order of first appearance.
template <typename Row>
struct Grouped {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> rows;

  void add(const std::string& key, Row row) {
    auto [it, inserted] = rows.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(std::move(row));
  }
};

}  // namespace

IngestOptions default_ingest_options(Domain family) {
  IngestOptions o;
  switch (family) {
    case Domain::MFTC:
      o.liberty_subcorpora = {"BLM", "Election"};
      o.include_subcorpora = {"ALM", "Baltimore", "BLM", "Davidson", "Election", "Sandy"};
      break;
    case Domain::MFRC:
      break;
    case Domain::FB:
      o.liberty_everywhere = true;
      break;
  }
  return o;
}

std::vector<UnifiedPost> ingest_mftc(const std::filesystem::path& path, const IngestOptions& options) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("mftc adapter: " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw std::runtime_error("mftc adapter: " + path.string() + ": expected a JSON array");

  std::vector<UnifiedPost> posts;
  for (const json& corpus : doc) {
    const std::string subcorpus = corpus.at("Corpus").get<std::string>();
    if (!included(options, subcorpus)) continue;
    const bool liberty = liberty_covered(options, subcorpus);
    for (const json& tweet : corpus.at("Tweets")) {
      const std::string id = tweet.at("tweet_id").is_string() ? tweet.at("tweet_id").get<std::string>()
                                                              : tweet.at("tweet_id").dump();
      const std::string where = "mftc adapter: tweet " + id;
      std::vector<RawAnnotation> votes;
      for (const json& a : tweet.at("annotations")) {
        RawAnnotation vote;
        vote.post_id = id;
        vote.annotator_id = a.at("annotator").get<std::string>();
        vote.labels = parse_vote(split_tags(a.at("annotation").get<std::string>(), ","), liberty, where);
        votes.push_back(std::move(vote));
      }
      if (votes.empty()) continue;
      posts.push_back(finish_post(id, tweet.at("tweet_text").get<std::string>(), Domain::MFTC, subcorpus,
                                  votes, options));
    }
  }
  return posts;
}

std::vector<UnifiedPost> ingest_mfrc(const std::filesystem::path& path, const IngestOptions& options) {
  if (!options.sentiment) {
    throw std::runtime_error("mfrc adapter: a sentiment scorer is required to assign virtue/vice polarity");
  }
  const CsvTable table = CsvTable::read(path);
  const std::string ctx = "mfrc adapter: " + path.string();
  const auto c_text = table.require("text", ctx);
  const auto c_annotator = table.require("annotator", ctx);
  const auto c_annotation = table.require("annotation", ctx);
  const auto c_bucket = table.column("bucket");
  const auto c_subreddit = table.column("subreddit");

  static const std::set<std::string> kKnown = {"Care",   "Equality",      "Proportionality", "Loyalty",
                                               "Authority", "Purity",     "Thin Morality",   "Non-Moral"};
  static const std::set<std::string> kNoFoundation = {"Thin Morality", "Non-Moral"};

  struct Row {
    std::string text, bucket;
    SourceVote vote;
  };
  Grouped<Row> grouped;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    Row row;
    row.text = table.at(r, c_text);
    row.bucket = c_bucket ? table.at(r, *c_bucket) : std::string{};
    const std::string subreddit = c_subreddit ? table.at(r, *c_subreddit) : std::string{};
    row.vote.annotator_id = table.at(r, c_annotator);
    for (std::string& tag : split_tags(table.at(r, c_annotation), ",")) {
      if (!kKnown.contains(tag)) throw std::runtime_error(ctx + " row " + std::to_string(r + 2) + ": unknown tag '" + tag + "'");
      row.vote.tags.insert(std::move(tag));
    }
    if (row.vote.tags.empty()) row.vote.tags.insert("Non-Moral");
    std::string key = row.text + '\x1f' + subreddit + '\x1f' + row.bucket;
    grouped.add(key, std::move(row));
  }

  std::vector<UnifiedPost> posts;
  for (const std::string& key : grouped.order) {
    const auto& rows = grouped.rows.at(key);
    if (!included(options, rows.front().bucket)) continue;
    std::vector<SourceVote> votes;
    for (const Row& r : rows) votes.push_back(r.vote);
    const int n = options.n_annotators.value_or(static_cast<int>(votes.size()));
    std::map<std::string, int> agreed;
    for (const std::string& tag : aggregate_source_votes(votes, n, kNoFoundation)) agreed[tag] = 1;
    agreed = merge_fairness(std::move(agreed));

    UnifiedPost post;
    post.post_id = "mfrc-" + sha256_hex(key).substr(0, 16);
    post.text_raw = rows.front().text;
    post.text_clean = preprocess::clean_text(post.text_raw, options.clean);
    post.domain = Domain::MFRC;
    post.subcorpus = rows.front().bucket;
    const double sentiment = options.sentiment->compound(post.text_raw);
    post.sentiment_score = sentiment;
    bool any = false;
    for (const auto& [tag, hit] : agreed) {
      if (hit == 0) continue;
      post.gold.set(assign_polarity(tag, sentiment), true);
      any = true;
    }
    post.gold.set(MoralLabel::NonMoral, !any);
    if (!liberty_covered(options, post.subcorpus)) {
      post.gold.set(MoralLabel::Liberty, Gold::Unannotated);
      post.gold.set(MoralLabel::Oppression, Gold::Unannotated);
    }
    validate(post);
    posts.push_back(std::move(post));
  }
  return posts;
}

std::vector<UnifiedPost> ingest_fb(const std::filesystem::path& path, const IngestOptions& options) {
  const CsvTable table = CsvTable::read(path);
  const std::string ctx = "fb adapter: " + path.string();
  const auto c_id = table.require("post_id", ctx);
  const auto c_text = table.require("text", ctx);
  const auto c_annotator = table.require("annotator", ctx);
  const auto c_labels = table.require("labels", ctx);
  const auto c_sub = table.column("subcorpus");

  struct Row {
    std::string text, subcorpus, annotator;
    std::vector<std::string> tags;
  };
  Grouped<Row> grouped;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    Row row{table.at(r, c_text), c_sub ? table.at(r, *c_sub) : std::string{"vaccination"},
            table.at(r, c_annotator), split_tags(table.at(r, c_labels), ",;")};
    grouped.add(table.at(r, c_id), std::move(row));
  }

  std::vector<UnifiedPost> posts;
  for (const std::string& id : grouped.order) {
    const auto& rows = grouped.rows.at(id);
    const std::string& subcorpus = rows.front().subcorpus;
    if (!included(options, subcorpus)) continue;
    const bool liberty = liberty_covered(options, subcorpus);
    std::vector<RawAnnotation> votes;
    for (const Row& r : rows) {
      if (r.text != rows.front().text) throw std::runtime_error(ctx + ": post '" + id + "' has conflicting texts");
      votes.push_back(RawAnnotation{id, r.annotator, parse_vote(r.tags, liberty, ctx + ": post " + id)});
    }
    posts.push_back(finish_post(id, rows.front().text, Domain::FB, subcorpus, votes, options));
  }
  return posts;
}

std::vector<UnifiedPost> ingest(Domain family, const std::filesystem::path& path, const IngestOptions& options) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error(std::string(slug(family)) + " adapter: corpus file '" + path.string() +
                             "' does not exist");
  }
  switch (family) {
    case Domain::MFTC: return ingest_mftc(path, options);
    case Domain::MFRC: return ingest_mfrc(path, options);
    case Domain::FB: return ingest_fb(path, options);
  }
  throw std::logic_error("unreachable corpus family");
}

}  // namespace moral::corpus
