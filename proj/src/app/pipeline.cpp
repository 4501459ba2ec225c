#include "moral/app/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

#include "moral/baselines/llm.hpp"
#include "moral/corpus/adapters.hpp"
#include "moral/corpus/distribution.hpp"
#include "moral/corpus/jsonl.hpp"
#include "moral/corpus/sentiment.hpp"
#include "moral/hash.hpp"
#include "moral/model/classifier.hpp"

#ifndef MORAL_VERSION
#define MORAL_VERSION "0.0.0"
#endif
#ifndef MORAL_GIT_HASH
#define MORAL_GIT_HASH ""
#endif

namespace moral::app {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using eval::System;

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string key_of(const ordered_json& j) { return sha256_hex(j.dump()); }

std::string stage_name(std::string_view verb, const corpus::SplitDesign& d, System s, MoralLabel l) {
  return std::string(verb) + " " + d.id() + " " + std::string(eval::slug(s)) + " " + std::string(slug(l));
}

std::vector<corpus::UnifiedPost> with_split(std::span<const corpus::UnifiedPost> posts,
                                            std::initializer_list<corpus::Split> splits) {
  std::vector<corpus::UnifiedPost> out;
  for (const auto& p : posts) {
    for (auto s : splits) {
      if (p.split == s) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::string version_string() {
  std::string v = MORAL_VERSION;
  const std::string git = MORAL_GIT_HASH;
  if (!git.empty()) v += "+" + git;
  return v;
}

ordered_json RunManifest::to_json() const {
  ordered_json stages_j = ordered_json::array();
  for (const auto& s : stages) {
    stages_j.push_back({{"stage", s.stage}, {"status", s.status}, {"key", s.key}, {"detail", s.detail}});
  }
  ordered_json hashes = ordered_json::object();
  for (const auto& [p, h] : corpus_hashes) hashes[p] = h;
  return {{"experiment_id", experiment_id}, {"run_id", run_id},       {"config_hash", config_hash},
          {"version", version},             {"started_at", started_at}, {"finished_at", finished_at},
          {"seeds", seeds},                 {"corpus_hashes", hashes},  {"config", config},
          {"stages", stages_j}};
}

void RunManifest::append_to(const fs::path& dir) const {
  fs::create_directories(dir);
  const std::string line = to_json().dump() + "\n";
  std::ofstream out(dir / "manifest.jsonl", std::ios::app | std::ios::binary);
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (!out.flush()) throw std::runtime_error("cannot append manifest in " + dir.string());
}

void PredictionFile::save(const fs::path& path) const {
  ordered_json j = {{"system", system},   {"label", slug(label)},          {"subsample", subsample},
                    {"post_ids", post_ids}, {"predictions", predictions}};
  fs::create_directories(path.parent_path());
  write_file_atomic(path, j.dump(1) + "\n");
}

PredictionFile PredictionFile::load(const fs::path& path) {
  const json j = json::parse(read_file(path));
  PredictionFile f;
  f.system = j.at("system").get<std::string>();
  f.label = label_from_string(j.at("label").get<std::string>());
  f.subsample = j.value("subsample", false);
  j.at("post_ids").get_to(f.post_ids);
  j.at("predictions").get_to(f.predictions);
  if (f.post_ids.size() != f.predictions.size()) throw std::runtime_error(path.string() + ": length mismatch");
  return f;
}

Pipeline::Pipeline(ExperimentConfig config, bool force) : config_(std::move(config)), force_(force) {
  manifest_.experiment_id = config_.experiment;
  manifest_.run_id = now_utc() + "-" + sha256_hex(now_utc() + std::to_string(std::chrono::steady_clock::now()
                                                                                 .time_since_epoch()
                                                                                 .count()))
                                           .substr(0, 8);
  manifest_.config = config_.to_json();
  manifest_.config_hash = key_of(manifest_.config);
  manifest_.version = version_string();
  manifest_.started_at = now_utc();
  manifest_.seeds = {{"split", config_.split.seed},
                     {"train", config_.train.seed},
                     {"forest", config_.baselines.forest.seed},
                     {"llm_subsample", config_.baselines.llm.seed},
                     {"bootstrap", config_.evaluation.seed}};
  touched_.push_back(config_.run_dir());
}

bool Pipeline::fresh(const fs::path& artifact, const std::string& key) const {
  if (force_ || !fs::exists(artifact)) return false;
  const fs::path s = artifact.string() + ".stamp";
  return fs::exists(s) && read_file(s) == key;
}

void Pipeline::stamp(const fs::path& artifact, const std::string& key) const {
  write_file_atomic(artifact.string() + ".stamp", key);
}

void Pipeline::record(std::string stage, std::string status, std::string key, std::string detail) {
  if (status == "failed") {
    spdlog::error("{}: {}", stage, detail);
  } else if (status == "unsupported") {
    spdlog::warn("{}: {}", stage, detail);
  } else {
    spdlog::info("{}: {}", stage, status);
  }
  manifest_.stages.push_back({std::move(stage), std::move(status), std::move(key), std::move(detail)});
}

std::string Pipeline::file_key(const fs::path& p) { return sha256_file(p); }

std::vector<corpus::UnifiedPost> ingest_corpora(const ExperimentConfig& config) {
  preprocess::CleanConfig clean;
  clean.mention_token = config.clean.mention_token;
  clean.strip_hashtag_words = config.clean.strip_hashtag_words;
  if (config.clean.emoji_table) clean.emoji = preprocess::EmojiMap::from_tsv(*config.clean.emoji_table);
  std::shared_ptr<const corpus::SentimentScorer> sentiment;
  if (config.sentiment_lexicon) {
    sentiment = std::make_shared<corpus::VaderScorer>(corpus::VaderScorer::from_file(*config.sentiment_lexicon));
  }

  std::vector<corpus::UnifiedPost> all;
  std::set<std::string> ids;
  for (const auto& [d, path] : config.corpora) {
    corpus::IngestOptions opt = corpus::default_ingest_options(d);
    opt.clean = clean;
    opt.sentiment = sentiment;
    opt.n_annotators = config.ingest.n_annotators;
    if (d == Domain::MFTC) {
      if (config.ingest.mftc_include) opt.include_subcorpora = *config.ingest.mftc_include;
      if (config.ingest.mftc_liberty) opt.liberty_subcorpora = *config.ingest.mftc_liberty;
    }
    auto posts = corpus::ingest(d, path, opt);
    spdlog::info("ingested {} {} posts from {}", posts.size(), name(d), path.string());
    for (auto& p : posts) {
      if (!ids.insert(p.post_id).second) throw std::runtime_error("duplicate post id '" + p.post_id + "'");
      all.push_back(std::move(p));
    }
  }
  return all;
}

fs::path Pipeline::ingest() {
  if (ingested_) return *ingested_;
  const fs::path dir = config_.run_dir() / "corpus";
  const fs::path out = dir / "posts.jsonl";
  if (std::find(touched_.begin(), touched_.end(), dir) == touched_.end()) touched_.push_back(dir);

  ordered_json inputs = ordered_json::object();
  for (const auto& [d, path] : config_.corpora) {
    if (!fs::exists(path)) {
      throw std::runtime_error(std::string(slug(d)) + " adapter: corpus file '" + path.string() +
                               "' does not exist (set corpora." + std::string(slug(d)) + " or " + kCorpusRootEnv + ")");
    }
    const std::string h = file_key(path);
    manifest_.corpus_hashes[path.string()] = h;
    inputs[std::string(slug(d))] = h;
  }
  const bool need_sentiment = config_.corpora.contains(Domain::MFRC);
  if (need_sentiment && !config_.sentiment_lexicon) {
    throw std::runtime_error("mfrc adapter: sentiment_lexicon must be configured to assign virtue/vice polarity");
  }
  if (config_.sentiment_lexicon) inputs["sentiment_lexicon"] = file_key(*config_.sentiment_lexicon);
  if (config_.clean.emoji_table) inputs["emoji_table"] = file_key(*config_.clean.emoji_table);
  inputs["ingest"] = manifest_.config.at("ingest");
  inputs["clean"] = {{"mention_token", config_.clean.mention_token},
                     {"strip_hashtag_words", config_.clean.strip_hashtag_words}};
  const std::string key = key_of(inputs);
  if (fresh(out, key)) {
    record("ingest", "skipped", key);
    ingested_ = out;
    return out;
  }

  const auto all = ingest_corpora(config_);
  fs::create_directories(dir);
  corpus::write_jsonl(out, all);
  const auto dist = corpus::label_distribution(all);
  write_file_atomic(dir / "distribution.md", corpus::render_distribution_markdown(dist));
  write_file_atomic(dir / "distribution.csv", corpus::render_distribution_csv(dist));
  stamp(out, key);
  record("ingest", "ran", key, std::to_string(all.size()) + " posts");
  ingested_ = out;
  return out;
}

std::vector<corpus::UnifiedPost> Pipeline::posts() { return corpus::read_jsonl(ingest()); }

fs::path Pipeline::split(const corpus::SplitDesign& design) {
  if (auto it = splits_.find(design.id()); it != splits_.end()) return it->second;
  const fs::path posts_path = ingest();
  const fs::path dir = design_dir(design);
  if (std::find(touched_.begin(), touched_.end(), dir) == touched_.end()) touched_.push_back(dir);
  const fs::path out = dir / "splits.jsonl";
  const std::string key = key_of({{"posts", file_key(posts_path)},
                                  {"design", design.id()},
                                  {"split", manifest_.config.at("split")}});
  if (fresh(out, key)) {
    record("split " + design.id(), "skipped", key);
    splits_[design.id()] = out;
    return out;
  }
  auto posts = corpus::make_splits(corpus::read_jsonl(posts_path), design, config_.split);
  fs::create_directories(dir);
  corpus::write_jsonl(out, posts);
  stamp(out, key);
  record("split " + design.id(), "ran", key, std::to_string(posts.size()) + " posts");
  splits_[design.id()] = out;
  return out;
}

std::vector<corpus::UnifiedPost> Pipeline::design_posts(const corpus::SplitDesign& design) {
  return corpus::read_jsonl(split(design));
}

fs::path Pipeline::predictions_path(const corpus::SplitDesign& d, System s, MoralLabel l) const {
  return design_dir(d) / "predictions" / std::string(eval::slug(s)) / (std::string(slug(l)) + ".json");
}

fs::path Pipeline::checkpoint_path(const corpus::SplitDesign& d, System s, MoralLabel l) const {
  return design_dir(d) / "models" / (std::string(eval::slug(s)) + "_" + std::string(slug(l)) + ".ckpt");
}

fs::path Pipeline::train(const corpus::SplitDesign& design, MoralLabel label, bool adversarial) {
  const System system = adversarial ? System::MoralBertAdv : System::MoralBert;
  const fs::path splits = split(design);
  const fs::path out = predictions_path(design, system, label);
  const fs::path ckpt = checkpoint_path(design, system, label);
  ordered_json inputs = {{"splits", file_key(splits)},
                         {"label", slug(label)},
                         {"adversarial", adversarial},
                         {"train", manifest_.config.at("train")}};
  if (config_.train.vocab_path) inputs["vocab"] = file_key(*config_.train.vocab_path);
  if (config_.train.pretrained_weights) inputs["weights"] = file_key(*config_.train.pretrained_weights);
  const std::string key = key_of(inputs);
  const std::string stage = stage_name("train", design, system, label);
  if (fresh(out, key) && fs::exists(ckpt)) {
    record(stage, "skipped", key);
    return out;
  }

  const auto posts = corpus::read_jsonl(splits);
  const auto result = adversarial ? model::train_adversarial(posts, label, config_.train)
                                  : model::train_single_label(posts, label, config_.train);
  fs::create_directories(ckpt.parent_path());
  result.checkpoint.save(ckpt);
  write_file_atomic(ckpt.string() + ".metrics.json", result.metrics_json().dump(1) + "\n");

  PredictionFile pf{std::string(eval::slug(system)), label, {}, {}, false};
  std::vector<std::string> texts;
  for (const auto& p : with_split(posts, {corpus::Split::Test})) {
    pf.post_ids.push_back(p.post_id);
    texts.push_back(p.text_clean);
  }
  for (const auto& pr : model::predict(result.checkpoint, texts, result.checkpoint.config_hash)) {
    pf.predictions.push_back(pr.predicted);
  }
  pf.save(out);
  stamp(out, key);
  record(stage, "ran", key,
         "best epoch " + std::to_string(result.checkpoint.epoch) + ", validation F1 macro " +
             std::to_string(result.checkpoint.validation_metric));
  return out;
}

fs::path Pipeline::baseline(const corpus::SplitDesign& design, System system, MoralLabel label) {
  const fs::path splits = split(design);
  const fs::path out = predictions_path(design, system, label);
  const std::string stage = stage_name("baseline", design, system, label);
  ordered_json inputs = {{"splits", file_key(splits)}, {"label", slug(label)}, {"system", eval::slug(system)}};
  const auto& b = manifest_.config.at("baselines");

  switch (system) {
    case System::Lexicon:
      if (!config_.baselines.lexicon) throw std::runtime_error("baselines.lexicon is not configured");
      inputs["lexicon"] = file_key(*config_.baselines.lexicon);
      break;
    case System::EmbedForest:
      if (!config_.baselines.embeddings) throw std::runtime_error("baselines.embeddings is not configured");
      inputs["embeddings"] = file_key(*config_.baselines.embeddings);
      inputs["forest"] = b.at("forest");
      break;
    case System::LlmZeroShot: {
      const auto& llm = b.at("llm");
      inputs["llm"] = {{"model", llm.at("model")},
                       {"fraction", llm.at("fraction")},
                       {"seed", llm.at("seed")},
                       {"per_domain", llm.at("per_domain")},
                       {"temperature", llm.at("temperature")},
                       {"prompt", sha256_hex(baselines::PromptTemplate::standard().instructions())}};
      break;
    }
    default:
      throw std::invalid_argument(std::string(eval::slug(system)) + " is not a baseline");
  }
  const std::string key = key_of(inputs);
  if (fresh(out, key)) {
    record(stage, "skipped", key);
    return out;
  }

  const auto posts = corpus::read_jsonl(splits);
  const auto test = with_split(posts, {corpus::Split::Test});
  PredictionFile pf{std::string(eval::slug(system)), label, {}, {}, false};
  std::string detail;

  if (system == System::Lexicon) {
    if (!lexicon_) lexicon_ = std::make_shared<baselines::MoralLexicon>(baselines::MoralLexicon::load(*config_.baselines.lexicon));
    if (label != MoralLabel::NonMoral && !lexicon_->covers(*foundation_of(label))) {
      throw Unsupported("lexicon has no " + std::string(name(*foundation_of(label))) + " scores");
    }
    for (const auto& p : test) {
      pf.post_ids.push_back(p.post_id);
      pf.predictions.push_back(baselines::lexicon_classify(p.text_clean, label, *lexicon_));
    }
  } else if (system == System::EmbedForest) {
    if (!embeddings_) {
      embeddings_ = std::make_shared<baselines::WordEmbeddings>(
          baselines::WordEmbeddings::load_text(*config_.baselines.embeddings));
    }
    const auto train = with_split(posts, {corpus::Split::Train, corpus::Split::Validation});
    const auto m = baselines::embed_classify_train(train, label, *embeddings_, config_.baselines.forest);
    std::vector<std::string> texts;
    for (const auto& p : test) {
      pf.post_ids.push_back(p.post_id);
      texts.push_back(p.text_clean);
    }
    pf.predictions = baselines::embed_classify_predict(m, texts, *embeddings_);
    detail = std::to_string(m.empty_docs) + " training posts without in-vocabulary tokens";
  } else {
    const auto& s = config_.baselines.llm;
    const auto sample = baselines::llm_subsample(test, s.fraction, s.seed, s.per_domain);
    baselines::LlmCache cache(s.cache.value_or(config_.output_dir / "llm" / "cache.jsonl"));
    baselines::Transport http;
    baselines::Transport lazy = [&](const std::string& body) {
      if (!http) http = baselines::http_transport(s.client);
      return http(body);
    };
    baselines::LlmRunStats stats;
    const auto tmpl = baselines::PromptTemplate::standard();
    const auto responses = baselines::llm_classify(sample, tmpl, s.client, lazy, cache, &stats);
    pf.subsample = sample.size() < test.size();
    for (const auto& p : sample) {
      pf.post_ids.push_back(p.post_id);
      pf.predictions.push_back(baselines::llm_prediction(responses.at(p.post_id), label));
    }
    detail = std::to_string(stats.cached) + " cached, " + std::to_string(stats.requested) + " requested, " +
             std::to_string(stats.parse_failures) + " unparsed";
  }
  pf.save(out);
  stamp(out, key);
  record(stage, "ran", key, detail);
  return out;
}

fs::path Pipeline::predictions(const corpus::SplitDesign& design, System system, MoralLabel label) {
  switch (system) {
    case System::MoralBert: return train(design, label, false);
    case System::MoralBertAdv: return train(design, label, true);
    default: return baseline(design, system, label);
  }
}

std::vector<eval::EvalReport> Pipeline::evaluate(const corpus::SplitDesign& design, const std::vector<System>& systems) {
  const fs::path splits = split(design);
  const fs::path dir = design_dir(design);
  const fs::path out = dir / "report.json";
  const auto& labels = config_.labels_for(design);

  ordered_json inputs = {{"splits", file_key(splits)}, {"evaluation", manifest_.config.at("evaluation")}};
  ordered_json preds = ordered_json::array();
  for (System s : systems) {
    for (MoralLabel l : labels) {
      const fs::path p = predictions_path(design, s, l);
      preds.push_back({{"system", eval::slug(s)}, {"label", slug(l)}, {"hash", fs::exists(p) ? file_key(p) : ""}});
    }
  }
  inputs["predictions"] = preds;
  const std::string key = key_of(inputs);
  if (fresh(out, key)) {
    record("evaluate " + design.id(), "skipped", key);
    return eval::reports_from_json(json::parse(read_file(out)).at("reports"));
  }

  const auto posts = corpus::read_jsonl(splits);
  auto provider = [&](System s, MoralLabel l, std::span<const corpus::UnifiedPost> test) {
    const fs::path p = predictions_path(design, s, l);
    if (!fs::exists(p)) throw std::runtime_error("no predictions (" + p.string() + ")");
    const auto pf = PredictionFile::load(p);
    std::map<std::string, int> by_id;
    for (std::size_t i = 0; i < pf.post_ids.size(); ++i) by_id[pf.post_ids[i]] = pf.predictions[i];
    std::vector<int> pred;
    for (const auto& post : test) {
      auto it = by_id.find(post.post_id);
      if (it != by_id.end()) {
        pred.push_back(it->second);
      } else if (pf.subsample) {
        pred.push_back(-1);
      } else {
        throw std::runtime_error("predictions lack test post " + post.post_id);
      }
    }
    return pred;
  };
  auto reports = eval::run_experiment(design.id(), systems, labels, posts, provider, config_.evaluation);

  ordered_json doc = {{"design", design.id()},
                      {"config_hash", manifest_.config_hash},
                      {"reports", eval::reports_to_json(reports)}};
  write_file_atomic(dir / "report.csv", eval::reports_to_csv(reports));
  std::string md = "# " + design.id() + "\n\n";
  if (design.is_liberty()) {
    auto lib = reports;
    for (auto& r : lib) std::erase_if(r.per_label, [](const auto& kv) { return !is_partial_coverage(kv.first); });
    md += eval::export_table(lib, eval::TableStyle::Table5);
  } else {
    auto core = reports;
    for (auto& r : core) {
      std::erase_if(r.per_label, [](const auto& kv) {
        return std::find(kCoreLabels.begin(), kCoreLabels.end(), kv.first) == kCoreLabels.end();
      });
      r.finalize();
    }
    md += eval::export_table(core, eval::TableStyle::Table2);
  }
  write_file_atomic(dir / "report.md", md);
  write_file_atomic(out, doc.dump(1) + "\n");
  stamp(out, key);
  record("evaluate " + design.id(), "ran", key);
  return reports;
}

int Pipeline::run() {
  bool failed = false;
  try {
    ingest();
  } catch (const std::exception& e) {
    record("ingest", "failed", "", e.what());
    finish_manifest();
    return 1;
  }

  std::vector<eval::EvalReport> all;
  for (const auto& design : config_.designs) {
    try {
      split(design);
    } catch (const std::exception& e) {
      record("split " + design.id(), "failed", "", e.what());
      failed = true;
      continue;
    }
    for (MoralLabel label : config_.labels_for(design)) {
      for (System s : config_.systems) {
        try {
          predictions(design, s, label);
        } catch (const Unsupported& e) {
          record(stage_name("predict", design, s, label), "unsupported", "", e.what());
        } catch (const std::exception& e) {
          record(stage_name("predict", design, s, label), "failed", "", e.what());
          failed = true;
        }
      }
    }
    try {
      auto reports = evaluate(design, config_.systems);
      all.insert(all.end(), reports.begin(), reports.end());
    } catch (const std::exception& e) {
      record("evaluate " + design.id(), "failed", "", e.what());
      failed = true;
    }
  }

  try {
    const fs::path dir = config_.run_dir();
    ordered_json doc = {{"experiment", config_.experiment},
                        {"config_hash", manifest_.config_hash},
                        {"reports", eval::reports_to_json(all)}};
    write_file_atomic(dir / "report.json", doc.dump(1) + "\n");
    write_file_atomic(dir / "report.csv", eval::reports_to_csv(all));
    std::string md;
    std::vector<eval::EvalReport> loo, lib;
    for (const auto& design : config_.designs) {
      std::vector<eval::EvalReport> mine;
      for (const auto& r : all) {
        if (r.design == design.id()) mine.push_back(r);
      }
      if (design.kind == corpus::SplitDesign::Kind::LeaveOneOut) loo.insert(loo.end(), mine.begin(), mine.end());
      for (auto r : mine) {
        std::erase_if(r.per_label, [](const auto& kv) { return !is_partial_coverage(kv.first); });
        if (!r.per_label.empty() && (design.is_liberty() || design.kind == corpus::SplitDesign::Kind::LeaveOneOut)) {
          lib.push_back(std::move(r));
        }
      }
      if (!design.is_liberty()) {
        for (auto& r : mine) {
          std::erase_if(r.per_label, [](const auto& kv) {
            return std::find(kCoreLabels.begin(), kCoreLabels.end(), kv.first) == kCoreLabels.end();
          });
          r.finalize();
        }
        md += "## " + design.id() + "\n\n" + eval::export_table(mine, eval::TableStyle::Table2) + "\n";
      }
    }
    if (!lib.empty()) md += "## Liberty / Oppression\n\n" + eval::export_table(lib, eval::TableStyle::Table5) + "\n";
    if (!loo.empty()) write_file_atomic(dir / "report_bars.csv", eval::export_table(loo, eval::TableStyle::Table3BarsCsv));
    write_file_atomic(dir / "report.md", md);
  } catch (const std::exception& e) {
    record("report", "failed", "", e.what());
    failed = true;
  }
  finish_manifest();
  return failed ? 1 : 0;
}

void Pipeline::finish_manifest() {
  if (finished_) return;
  finished_ = true;
  manifest_.finished_at = now_utc();
  for (const auto& dir : touched_) manifest_.append_to(dir);
}

}  // namespace moral::app
