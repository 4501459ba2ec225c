#include "moral/app/config.hpp"

#include <algorithm>

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <set>

#include "moral/hash.hpp"

namespace moral::app {
namespace fs = std::filesystem;
namespace {

/// A YAML mapping whose keys are checked off as they are read; whatever is
/// left over at the end is reported as unknown.
class Section {
 public:
  Section(YAML::Node node, std::string path, std::vector<std::string>& errors, std::vector<std::string>& unknown)
      : node_(std::move(node)), path_(std::move(path)), errors_(errors), unknown_(unknown) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      errors_.push_back(where() + ": expected a mapping");
      node_ = YAML::Node();
    }
  }
  Section(const Section&) = delete;
  ~Section() {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.contains(key)) unknown_.push_back(path_.empty() ? key : path_ + "." + key);
    }
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    if (!node_ || !node_.IsMap()) return YAML::Node();
    return node_[key];
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    YAML::Node n = raw(key);
    if (!n || n.IsNull()) return;
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      errors_.push_back(child_path(key) + ": bad value '" + YAML::Dump(n) + "'");
    }
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    T v{};
    YAML::Node n = raw(key);
    if (!n || n.IsNull()) return;
    get(key, v);
    out = v;
  }

  /// Parses a scalar or list with `parse`, recording its exceptions.
  template <typename T, typename F>
  void list(const std::string& key, std::vector<T>& out, F parse) {
    YAML::Node n = raw(key);
    if (!n || n.IsNull()) return;
    std::vector<T> items;
    auto one = [&](const YAML::Node& e) {
      try {
        items.push_back(parse(e.as<std::string>()));
      } catch (const std::exception& ex) {
        errors_.push_back(child_path(key) + ": " + ex.what());
      }
    };
    if (n.IsSequence()) {
      for (const auto& e : n) one(e);
    } else {
      one(n);
    }
    out = std::move(items);
  }

  Section child(const std::string& key) { return Section(raw(key), child_path(key), errors_, unknown_); }
  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }
  std::vector<std::string>& errors() { return errors_; }
  const YAML::Node& node() const { return node_; }

 private:
  YAML::Node node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::vector<std::string>& unknown_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.is_absolute()) return p.lexically_normal();
  return (base / p).lexically_normal();
}

void read_path(Section& s, const std::string& key, std::optional<fs::path>& out, const fs::path& base) {
  std::optional<std::string> v;
  s.get(key, v);
  if (v) out = resolve(base, *v);
}

void read_encoder(Section s, nn::EncoderConfig& e) {
  s.get("vocab_size", e.vocab_size);
  s.get("hidden_size", e.hidden_size);
  s.get("num_layers", e.num_layers);
  s.get("num_heads", e.num_heads);
  s.get("intermediate_size", e.intermediate_size);
  s.get("max_positions", e.max_positions);
  s.get("type_vocab_size", e.type_vocab_size);
  s.get("hidden_dropout", e.hidden_dropout);
  s.get("attention_dropout", e.attention_dropout);
  s.get("layer_norm_eps", e.layer_norm_eps);
  s.get("initializer_range", e.initializer_range);
}

void read_train(Section s, model::TrainConfig& t, const fs::path& base) {
  s.get("learning_rate", t.learning_rate);
  s.get("batch_size", t.batch_size);
  s.get("epochs", t.epochs);
  s.get("max_tokens", t.max_tokens);
  s.get("seed", t.seed);
  s.get("class_weighting", t.class_weighting);
  s.get("optimizer", t.optimizer);
  s.get("lambda_grl", t.lambda_grl);
  s.get("alpha_norm", t.alpha_norm);
  s.get("alpha_rec", t.alpha_rec);
  s.get("head_hidden", t.head_hidden);
  s.get("vocab_min_count", t.vocab_min_count);
  read_path(s, "vocab", t.vocab_path, base);
  read_path(s, "pretrained_weights", t.pretrained_weights, base);
  read_encoder(s.child("encoder"), t.encoder);
}

void read_llm(Section s, LlmSettings& l, const fs::path& base) {
  s.get("model", l.client.model);
  s.get("base_url", l.client.base_url);
  s.get("path", l.client.path);
  s.get("api_key_env", l.client.api_key_env);
  s.get("temperature", l.client.temperature);
  s.get("max_retries", l.client.max_retries);
  s.get("concurrency", l.client.concurrency);
  s.get("timeout_seconds", l.client.timeout_seconds);
  int backoff = static_cast<int>(l.client.initial_backoff.count());
  s.get("initial_backoff_ms", backoff);
  l.client.initial_backoff = std::chrono::milliseconds(backoff);
  int max_backoff = static_cast<int>(l.client.max_backoff.count());
  s.get("max_backoff_ms", max_backoff);
  l.client.max_backoff = std::chrono::milliseconds(max_backoff);
  s.get("fraction", l.fraction);
  s.get("seed", l.seed);
  read_path(s, "cache", l.cache, base);
  Section pd = s.child("per_domain");
  for (Domain d : kAllDomains) {
    std::optional<std::size_t> n;
    pd.get(std::string(slug(d)), n);
    if (n) l.per_domain[d] = *n;
  }
}

void check(bool ok, std::vector<std::string>& errors, const std::string& msg) {
  if (!ok) errors.push_back(msg);
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  std::vector<std::string> errors, unknown;
  ExperimentConfig c;
  {
    Section s(root, "", errors, unknown);
    s.get("experiment", c.experiment);
    std::optional<std::string> out;
    s.get("output_dir", out);
    c.output_dir = resolve(base_dir, out.value_or("runs"));

    const char* env_root = std::getenv(kCorpusRootEnv);
    const fs::path corpus_base = env_root && *env_root ? fs::path(env_root) : base_dir;
    {
      Section corpora = s.child("corpora");
      for (Domain d : kAllDomains) {
        std::optional<std::string> p;
        corpora.get(std::string(slug(d)), p);
        if (p) c.corpora[d] = resolve(corpus_base, *p);
      }
    }
    read_path(s, "sentiment_lexicon", c.sentiment_lexicon, base_dir);
    {
      Section in = s.child("ingest");
      in.get("n_annotators", c.ingest.n_annotators);
      std::optional<std::vector<std::string>> v;
      in.get("mftc_include", v);
      if (v) c.ingest.mftc_include = std::set<std::string>(v->begin(), v->end());
      v.reset();
      in.get("mftc_liberty", v);
      if (v) c.ingest.mftc_liberty = std::set<std::string>(v->begin(), v->end());
    }
    {
      Section cl = s.child("clean");
      cl.get("mention_token", c.clean.mention_token);
      cl.get("strip_hashtag_words", c.clean.strip_hashtag_words);
      read_path(cl, "emoji_table", c.clean.emoji_table, base_dir);
    }
    {
      Section sp = s.child("split");
      sp.get("seed", c.split.seed);
      sp.get("train_frac", c.split.train_frac);
      sp.get("validation_frac", c.split.validation_frac);
    }
    s.list("designs", c.designs, [](const std::string& t) { return corpus::SplitDesign::parse(t); });
    s.list("labels", c.labels, [](const std::string& t) { return label_from_string(t); });
    s.list("liberty_labels", c.liberty_labels, [](const std::string& t) { return label_from_string(t); });
    s.list("systems", c.systems, [](const std::string& t) { return eval::system_from_string(t); });
    read_train(s.child("train"), c.train, base_dir);
    {
      Section b = s.child("baselines");
      read_path(b, "lexicon", c.baselines.lexicon, base_dir);
      read_path(b, "embeddings", c.baselines.embeddings, base_dir);
      {
        Section f = b.child("forest");
        f.get("n_trees", c.baselines.forest.n_trees);
        f.get("max_depth", c.baselines.forest.max_depth);
        f.get("min_samples_split", c.baselines.forest.min_samples_split);
        f.get("min_samples_leaf", c.baselines.forest.min_samples_leaf);
        f.get("max_features", c.baselines.forest.max_features);
        f.get("bootstrap", c.baselines.forest.bootstrap);
        f.get("seed", c.baselines.forest.seed);
      }
      read_llm(b.child("llm"), c.baselines.llm, base_dir);
    }
    {
      Section ev = s.child("evaluation");
      ev.get("n_bootstrap", c.evaluation.n_bootstrap);
      ev.get("seed", c.evaluation.seed);
    }
  }

  check(!c.experiment.empty() && c.experiment.find('/') == std::string::npos, errors,
        "experiment: must be a non-empty name without '/'");
  check(!c.corpora.empty(), errors, "corpora: at least one of mftc, mfrc, fb is required");
  check(!c.designs.empty(), errors, "designs: at least one design is required");
  check(!c.systems.empty(), errors, "systems: at least one system is required");
  check(c.evaluation.n_bootstrap >= 1, errors, "evaluation.n_bootstrap: must be positive");
  check(c.baselines.llm.fraction > 0.0 && c.baselines.llm.fraction <= 1.0, errors,
        "baselines.llm.fraction: must lie in (0, 1]");
  check(c.baselines.forest.n_trees >= 1, errors, "baselines.forest.n_trees: must be positive");
  for (MoralLabel l : c.labels) {
    check(l != MoralLabel::NonMoral, errors, "labels: non_moral is the negative class, not a target");
  }
  try {
    c.train.validate();
  } catch (const std::exception& e) {
    errors.push_back(std::string("train: ") + e.what());
  }

  if (!unknown.empty() || !errors.empty()) {
    std::string msg = "invalid config";
    if (!unknown.empty()) {
      msg += "; unknown keys:";
      for (const auto& k : unknown) msg += " " + k;
    }
    for (const auto& e : errors) msg += "; " + e;
    std::vector<std::string> keys = unknown;
    // Every error message starts with its dotted key.
    for (const auto& e : errors) {
      std::string key = e.substr(0, e.find(": "));
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(std::move(key));
    }
    throw ConfigError(msg, keys);
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  const fs::path abs = fs::absolute(path).lexically_normal();
  try {
    ExperimentConfig c = parse_config(read_file(abs), abs.parent_path());
    c.source = abs;
    return c;
  } catch (const ConfigError& e) {
    throw ConfigError(abs.string() + ": " + e.what(), e.keys());
  }
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  using nlohmann::ordered_json;
  auto opt_path = [](const std::optional<fs::path>& p) { return p ? ordered_json(p->string()) : ordered_json(); };
  ordered_json corpora_j = ordered_json::object();
  for (const auto& [d, p] : corpora) corpora_j[std::string(slug(d))] = p.string();
  ordered_json designs_j = ordered_json::array();
  for (const auto& d : designs) designs_j.push_back(d.id());
  auto labels_j = [](const std::vector<MoralLabel>& ls) {
    ordered_json a = ordered_json::array();
    for (MoralLabel l : ls) a.push_back(slug(l));
    return a;
  };
  ordered_json systems_j = ordered_json::array();
  for (auto s : systems) systems_j.push_back(eval::slug(s));
  auto set_j = [](const std::optional<std::set<std::string>>& s) {
    return s ? ordered_json(std::vector<std::string>(s->begin(), s->end())) : ordered_json();
  };
  ordered_json per_domain = ordered_json::object();
  for (const auto& [d, n] : baselines.llm.per_domain) per_domain[std::string(slug(d))] = n;
  const auto& l = baselines.llm;
  const auto& f = baselines.forest;
  return {
      {"experiment", experiment},
      {"output_dir", output_dir.string()},
      {"corpora", corpora_j},
      {"sentiment_lexicon", opt_path(sentiment_lexicon)},
      {"ingest",
       {{"n_annotators", ingest.n_annotators ? ordered_json(*ingest.n_annotators) : ordered_json()},
        {"mftc_include", set_j(ingest.mftc_include)},
        {"mftc_liberty", set_j(ingest.mftc_liberty)}}},
      {"clean",
       {{"mention_token", clean.mention_token},
        {"strip_hashtag_words", clean.strip_hashtag_words},
        {"emoji_table", opt_path(clean.emoji_table)}}},
      {"split", {{"seed", split.seed}, {"train_frac", split.train_frac}, {"validation_frac", split.validation_frac}}},
      {"designs", designs_j},
      {"labels", labels_j(labels)},
      {"liberty_labels", labels_j(liberty_labels)},
      {"systems", systems_j},
      {"train", ordered_json::parse(train.to_json().dump())},
      {"baselines",
       {{"lexicon", opt_path(baselines.lexicon)},
        {"embeddings", opt_path(baselines.embeddings)},
        {"forest",
         {{"n_trees", f.n_trees},
          {"max_depth", f.max_depth},
          {"min_samples_split", f.min_samples_split},
          {"min_samples_leaf", f.min_samples_leaf},
          {"max_features", f.max_features},
          {"bootstrap", f.bootstrap},
          {"seed", f.seed}}},
        {"llm",
         {{"model", l.client.model},
          {"base_url", l.client.base_url},
          {"path", l.client.path},
          {"api_key_env", l.client.api_key_env},
          {"temperature", l.client.temperature},
          {"max_retries", l.client.max_retries},
          {"concurrency", l.client.concurrency},
          {"timeout_seconds", l.client.timeout_seconds},
          {"initial_backoff_ms", l.client.initial_backoff.count()},
          {"max_backoff_ms", l.client.max_backoff.count()},
          {"fraction", l.fraction},
          {"seed", l.seed},
          {"per_domain", per_domain},
          {"cache", opt_path(l.cache)}}}}},
      {"evaluation", {{"n_bootstrap", evaluation.n_bootstrap}, {"seed", evaluation.seed}}},
  };
}

}  // namespace moral::app
