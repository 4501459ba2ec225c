#include "moral/model/classifier.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstring>
#include <numeric>
#include <set>
#include <stdexcept>

#include "moral/eval/metrics.hpp"
#include "moral/hash.hpp"

namespace moral::model {
namespace {

constexpr char kMagic[8] = {'M', 'O', 'R', 'A', 'L', 'C', 'K', '1'};

nlohmann::json heads_to_json(const HeadsOptions& h) {
  return {{"dim", h.dim},
          {"hidden", h.hidden},
          {"num_domains", h.num_domains},
          {"lambda_grl", h.lambda_grl},
          {"alpha_norm", h.alpha_norm},
          {"alpha_rec", h.alpha_rec}};
}

HeadsOptions heads_from_json(const nlohmann::json& j) {
  HeadsOptions h;
  h.dim = j.at("dim");
  h.hidden = j.at("hidden");
  h.num_domains = j.at("num_domains");
  h.lambda_grl = j.at("lambda_grl");
  h.alpha_norm = j.at("alpha_norm");
  h.alpha_rec = j.at("alpha_rec");
  return h;
}

struct Example {
  std::vector<int> ids;
  int target = 0;
  int domain = 0;
};

std::vector<std::pair<std::string, Matrix>> snapshot(const nn::ParamList& params) {
  std::vector<std::pair<std::string, Matrix>> out;
  out.reserve(params.size());
  for (const nn::Param* p : params) out.emplace_back(p->name, p->value);
  return out;
}

TrainResult train_impl(std::span<const corpus::UnifiedPost> posts, MoralLabel label, const TrainConfig& config,
                       bool adversarial) {
  config.validate();
  std::vector<const corpus::UnifiedPost*> train_posts, val_posts;
  for (const corpus::UnifiedPost& p : posts) {
    if (!p.gold.annotated(label)) continue;
    if (p.split == corpus::Split::Train) train_posts.push_back(&p);
    else if (p.split == corpus::Split::Validation) val_posts.push_back(&p);
  }
  if (train_posts.empty()) throw std::invalid_argument("no training posts annotated for " + std::string(name(label)));

  std::vector<int> train_targets;
  for (const auto* p : train_posts) train_targets.push_back(p->gold.target(label));
  TrainResult result;
  result.class_weights = compute_class_weights(train_targets);
  const Vector class_weights = config.class_weighting ? result.class_weights.as_vector() : Vector::Ones(2);

  std::vector<Domain> domains;
  if (adversarial) {
    std::set<Domain> seen;
    for (const auto* p : train_posts) seen.insert(p->domain);
    domains.assign(seen.begin(), seen.end());
    if (domains.size() < 2) throw std::invalid_argument("adversarial training requires multiple domains");
  }
  auto domain_index = [&](Domain d) {
    return static_cast<int>(std::find(domains.begin(), domains.end(), d) - domains.begin());
  };

  text::WordPiece tokenizer;
  TrainConfig cfg = config;
  if (config.vocab_path) {
    tokenizer = text::WordPiece::from_file(*config.vocab_path);
    if (static_cast<std::size_t>(cfg.encoder.vocab_size) != tokenizer.size()) {
      throw std::invalid_argument("encoder.vocab_size " + std::to_string(cfg.encoder.vocab_size) +
                                  " does not match vocabulary file with " + std::to_string(tokenizer.size()) +
                                  " entries");
    }
  } else {
    std::vector<std::string> texts;
    for (const auto* p : train_posts) texts.push_back(p->text_clean);
    tokenizer = text::WordPiece::build(texts, config.vocab_min_count);
    cfg.encoder.vocab_size = static_cast<int>(tokenizer.size());
  }

  HeadsOptions heads;
  heads.dim = cfg.encoder.hidden_size;
  heads.hidden = cfg.head_hidden;
  heads.num_domains = adversarial ? static_cast<int>(domains.size()) : 0;
  heads.lambda_grl = cfg.lambda_grl;
  heads.alpha_norm = cfg.alpha_norm;
  heads.alpha_rec = cfg.alpha_rec;

  Rng master(cfg.seed);
  Rng encoder_rng = master.fork(1);
  Rng head_rng = master.fork(2);
  Rng domain_rng = master.fork(3);
  Rng order_rng = master.fork(4);
  Rng dropout_rng = master.fork(5);
  Classifier model(cfg, tokenizer, heads, encoder_rng, head_rng, domain_rng);
  if (cfg.pretrained_weights) nn::EncoderWeights::load_safetensors(model.encoder(), *cfg.pretrained_weights);

  auto make_examples = [&](const std::vector<const corpus::UnifiedPost*>& src) {
    std::vector<Example> out;
    out.reserve(src.size());
    for (const auto* p : src) {
      out.push_back({model.encode(p->text_clean), p->gold.target(label), adversarial ? domain_index(p->domain) : 0});
    }
    return out;
  };
  const std::vector<Example> train = make_examples(train_posts);
  const std::vector<Example> val = make_examples(val_posts);
  result.used_validation = !val.empty();
  if (val.empty()) spdlog::warn("{}: validation split is empty, keeping the last epoch", name(label));

  nn::ParamList params = model.params();
  nn::zero_grads(params);
  nn::Adam adam(params, {.learning_rate = cfg.learning_rate});
  const int dim = cfg.encoder.hidden_size;

  std::vector<std::size_t> order(train.size());
  double best = -1.0;
  int best_epoch = 0;
  std::vector<std::pair<std::string, Matrix>> best_tensors;
  int step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    int steps_in_epoch = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      // Embeddings are recomputed with identical dropout masks in the
      // backward sweep, so only one sequence's activations live at a time.
      std::vector<std::uint64_t> seeds(b);
      Matrix e(dim, static_cast<Eigen::Index>(b));
      std::vector<int> targets(b), doms(b);
      for (std::size_t j = 0; j < b; ++j) {
        const Example& ex = train[order[start + j]];
        seeds[j] = dropout_rng.next();
        Rng r(seeds[j]);
        e.col(static_cast<Eigen::Index>(j)) = model.encoder().forward(ex.ids, &r, nullptr);
        targets[j] = ex.target;
        doms[j] = ex.domain;
      }
      Matrix de;
      const AdvLossBreakdown loss = model.heads().forward_backward(e, targets, doms, class_weights, &de);
      for (std::size_t j = 0; j < b; ++j) {
        Rng r(seeds[j]);
        nn::Encoder::Cache cache;
        model.encoder().forward(train[order[start + j]].ids, &r, &cache);
        model.encoder().backward(cache, de.col(static_cast<Eigen::Index>(j)));
      }
      adam.step();
      nn::zero_grads(params);
      result.steps.push_back({epoch, ++step, loss});
      loss_sum += loss.total;
      ++steps_in_epoch;
    }

    EpochRecord record{epoch, loss_sum / std::max(1, steps_in_epoch), 0.0, 0.0};
    if (!val.empty()) {
      std::vector<int> gold, pred;
      for (const Example& ex : val) {
        gold.push_back(ex.target);
        pred.push_back(model.predict_ids(ex.ids).predicted);
      }
      const auto counts = eval::ConfusionCounts::from(gold, pred);
      record.validation_f1_binary = eval::f1_binary(counts);
      record.validation_f1_macro = eval::f1_macro(counts);
    }
    spdlog::debug("{} epoch {}: loss {:.5f} val F1 macro {:.4f}", name(label), epoch, record.train_loss,
                  record.validation_f1_macro);
    result.epochs.push_back(record);
    if (val.empty() || record.validation_f1_macro > best) {
      best = record.validation_f1_macro;
      best_epoch = epoch;
      best_tensors = snapshot(params);
    }
  }

  Checkpoint& ck = result.checkpoint;
  ck.label = label;
  ck.adversarial = adversarial;
  ck.epoch = best_epoch;
  ck.validation_metric = best;
  ck.config = cfg;
  ck.heads = heads;
  ck.domains = domains;
  ck.vocab = tokenizer.vocab();
  ck.lowercase = tokenizer.lowercase();
  ck.tensors = std::move(best_tensors);
  ck.config_hash = runtime_hash(cfg.encoder, tokenizer, cfg.max_tokens);
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (max_tokens < 2) throw std::invalid_argument("max_tokens must be at least 2");
  if (optimizer != "adam") throw std::invalid_argument("unsupported optimizer '" + optimizer + "' (only adam)");
  if (!(lambda_grl >= 0.0)) throw std::invalid_argument("lambda_grl must be non-negative");
  if (!(alpha_norm >= 0.0) || !(alpha_rec >= 0.0)) throw std::invalid_argument("regularizer coefficients must be non-negative");
  if (head_hidden < 1) throw std::invalid_argument("head_hidden must be positive");
  if (max_tokens > encoder.max_positions) throw std::invalid_argument("max_tokens exceeds encoder.max_positions");
  encoder.validate();
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j{{"learning_rate", learning_rate},
                   {"batch_size", batch_size},
                   {"epochs", epochs},
                   {"max_tokens", max_tokens},
                   {"seed", seed},
                   {"class_weighting", class_weighting},
                   {"optimizer", optimizer},
                   {"lambda_grl", lambda_grl},
                   {"alpha_norm", alpha_norm},
                   {"alpha_rec", alpha_rec},
                   {"head_hidden", head_hidden},
                   {"encoder", encoder.to_json()},
                   {"vocab_min_count", vocab_min_count}};
  j["vocab_path"] = vocab_path ? nlohmann::json(vocab_path->string()) : nlohmann::json();
  j["pretrained_weights"] = pretrained_weights ? nlohmann::json(pretrained_weights->string()) : nlohmann::json();
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate");
  c.batch_size = j.at("batch_size");
  c.epochs = j.at("epochs");
  c.max_tokens = j.at("max_tokens");
  c.seed = j.at("seed");
  c.class_weighting = j.at("class_weighting");
  c.optimizer = j.at("optimizer");
  c.lambda_grl = j.at("lambda_grl");
  c.alpha_norm = j.at("alpha_norm");
  c.alpha_rec = j.at("alpha_rec");
  c.head_hidden = j.at("head_hidden");
  c.encoder = nn::EncoderConfig::from_json(j.at("encoder"));
  c.vocab_min_count = j.at("vocab_min_count");
  if (!j.at("vocab_path").is_null()) c.vocab_path = j.at("vocab_path").get<std::string>();
  if (!j.at("pretrained_weights").is_null()) c.pretrained_weights = j.at("pretrained_weights").get<std::string>();
  return c;
}

ClassWeights compute_class_weights(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("class labels must be 0 or 1");
    pos += static_cast<std::size_t>(y);
  }
  const std::size_t n = labels.size();
  if (pos == 0 || pos == n) throw std::invalid_argument("degenerate label: training data has a single class");
  return {static_cast<double>(n) / static_cast<double>(n - pos), static_cast<double>(n) / static_cast<double>(pos)};
}

std::string runtime_hash(const nn::EncoderConfig& encoder, const text::WordPiece& tokenizer, int max_tokens) {
  const nlohmann::json j{{"encoder", encoder.to_json()}, {"tokenizer", tokenizer.fingerprint()}, {"max_tokens", max_tokens}};
  return sha256_hex(j.dump());
}

Classifier::Classifier(const TrainConfig& config, text::WordPiece tokenizer, const HeadsOptions& heads,
                       Rng& encoder_rng, Rng& head_rng, Rng& domain_rng)
    : tokenizer_(std::move(tokenizer)),
      max_tokens_(config.max_tokens),
      encoder_(config.encoder, encoder_rng),
      heads_(heads, head_rng, domain_rng) {
  if (heads.dim != config.encoder.hidden_size) throw std::invalid_argument("head dim must equal encoder hidden size");
}

Classifier Classifier::from_checkpoint(const Checkpoint& ckpt) {
  Rng dummy(0), dummy_heads(0), dummy_domain(0);
  Classifier c(ckpt.config, text::WordPiece(ckpt.vocab, ckpt.lowercase), ckpt.heads, dummy, dummy_heads, dummy_domain);
  nn::ParamList params = c.params();
  if (params.size() != ckpt.tensors.size()) throw std::runtime_error("checkpoint tensor count does not match model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, value] = ckpt.tensors[i];
    if (params[i]->name != name || params[i]->value.rows() != value.rows() || params[i]->value.cols() != value.cols()) {
      throw std::runtime_error("checkpoint tensor " + name + " does not match model parameter " + params[i]->name);
    }
    params[i]->value = value;
  }
  if (c.runtime_hash() != ckpt.config_hash) throw std::runtime_error("checkpoint config_hash does not match its contents");
  return c;
}

Prediction Classifier::predict_ids(std::span<const int> ids) const {
  const Matrix p = heads_.predict(encoder_.embed(ids));
  return {p(1, 0), p(1, 0) > p(0, 0) ? 1 : 0};
}

std::vector<Prediction> Classifier::predict(std::span<const std::string> texts) const {
  std::vector<Prediction> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(predict_ids(encode(t)));
  return out;
}

Vector Classifier::embedding(std::string_view text) const { return encoder_.embed(encode(text)); }

Vector Classifier::invariant(std::string_view text) const { return project_invariant(heads_.w_inv.value, embedding(text)); }

nn::ParamList Classifier::params() {
  nn::ParamList out = encoder_.params();
  for (nn::Param* p : heads_.params()) out.push_back(p);
  return out;
}

std::string Classifier::runtime_hash() const { return model::runtime_hash(encoder_.config(), tokenizer_, max_tokens_); }

void Checkpoint::save(const std::filesystem::path& path) const {
  nlohmann::json header{{"label", slug(label)},
                        {"adversarial", adversarial},
                        {"epoch", epoch},
                        {"validation_metric", validation_metric},
                        {"config_hash", config_hash},
                        {"config", config.to_json()},
                        {"heads", heads_to_json(heads)},
                        {"vocab", vocab},
                        {"lowercase", lowercase}};
  header["domains"] = nlohmann::json::array();
  for (Domain d : domains) header["domains"].push_back(slug(d));
  header["tensors"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, m] : tensors) {
    header["tensors"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += static_cast<std::size_t>(m.size()) * sizeof(double);
  }
  const std::string h = header.dump();
  std::string blob(kMagic, sizeof kMagic);
  std::uint64_t len = h.size();
  for (int i = 0; i < 8; ++i) blob.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
  blob += h;
  blob.reserve(blob.size() + offset);
  for (const auto& [name, m] : tensors) {
    blob.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  write_file_atomic(path, blob);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  const std::string blob = read_file(path);
  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error(path.string() + ": not a checkpoint file");
  }
  std::uint64_t len = 0;
  for (int i = 7; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(blob[8 + static_cast<std::size_t>(i)]);
  if (16 + len > blob.size()) throw std::runtime_error(path.string() + ": truncated checkpoint header");
  const auto header = nlohmann::json::parse(blob.substr(16, len));
  const char* data = blob.data() + 16 + len;
  const std::size_t data_len = blob.size() - 16 - len;

  Checkpoint ck;
  ck.label = label_from_string(header.at("label").get<std::string>());
  ck.adversarial = header.at("adversarial");
  ck.epoch = header.at("epoch");
  ck.validation_metric = header.at("validation_metric");
  ck.config_hash = header.at("config_hash");
  ck.config = TrainConfig::from_json(header.at("config"));
  ck.heads = heads_from_json(header.at("heads"));
  ck.vocab = header.at("vocab").get<std::vector<std::string>>();
  ck.lowercase = header.at("lowercase");
  for (const auto& d : header.at("domains")) ck.domains.push_back(domain_from_string(d.get<std::string>()));
  for (const auto& t : header.at("tensors")) {
    const Eigen::Index rows = t.at("rows"), cols = t.at("cols");
    const std::size_t offset = t.at("offset");
    const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
    if (offset + bytes > data_len) throw std::runtime_error(path.string() + ": tensor data out of range");
    Matrix m(rows, cols);
    std::memcpy(m.data(), data + offset, bytes);
    ck.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
  }
  return ck;
}

nlohmann::json TrainResult::metrics_json() const {
  nlohmann::json j{{"label", slug(checkpoint.label)},
                   {"adversarial", checkpoint.adversarial},
                   {"best_epoch", checkpoint.epoch},
                   {"validation_f1_macro", checkpoint.validation_metric},
                   {"used_validation", used_validation},
                   {"class_weights", {{"0", class_weights.negative}, {"1", class_weights.positive}}}};
  j["epochs"] = nlohmann::json::array();
  for (const EpochRecord& e : epochs) {
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"validation_f1_binary", e.validation_f1_binary},
                           {"validation_f1_macro", e.validation_f1_macro}});
  }
  j["steps"] = nlohmann::json::array();
  for (const StepRecord& s : steps) {
    j["steps"].push_back({{"epoch", s.epoch},
                          {"step", s.step},
                          {"moral_loss", s.loss.moral_loss},
                          {"domain_loss", s.loss.domain_loss},
                          {"l_norm", s.loss.l_norm},
                          {"l_rec", s.loss.l_rec},
                          {"total", s.loss.total}});
  }
  return j;
}

TrainResult train_single_label(std::span<const corpus::UnifiedPost> posts, MoralLabel label, const TrainConfig& config) {
  return train_impl(posts, label, config, false);
}

TrainResult train_adversarial(std::span<const corpus::UnifiedPost> posts, MoralLabel label, const TrainConfig& config) {
  return train_impl(posts, label, config, true);
}

std::vector<Prediction> predict(const Checkpoint& ckpt, std::span<const std::string> texts,
                                const std::optional<std::string>& expected_hash) {
  if (expected_hash && *expected_hash != ckpt.config_hash) {
    throw std::runtime_error("config_hash mismatch: checkpoint " + ckpt.config_hash + " vs runtime " + *expected_hash);
  }
  return Classifier::from_checkpoint(ckpt).predict(texts);
}

}  // namespace moral::model
