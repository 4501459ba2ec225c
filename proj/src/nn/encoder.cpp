#include "moral/nn/encoder.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "moral/hash.hpp"

namespace moral::nn {

struct Encoder::LayerCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> probs;
  std::vector<DropoutMask> prob_dropout;
  Matrix context;
  DropoutMask attn_dropout;
  LayerNorm::Cache attn_norm;
  Matrix attn_normed;
  Matrix inter_pre;
  Matrix inter_act;
  DropoutMask out_dropout;
  LayerNorm::Cache out_norm;
};

Encoder::Cache::Cache() = default;
Encoder::Cache::~Cache() = default;
Encoder::Cache::Cache(Cache&&) noexcept = default;
Encoder::Cache& Encoder::Cache::operator=(Cache&&) noexcept = default;

void EncoderConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw std::invalid_argument(std::string("encoder.") + what + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(hidden_size, "hidden_size");
  positive(num_layers, "num_layers");
  positive(num_heads, "num_heads");
  positive(intermediate_size, "intermediate_size");
  positive(max_positions, "max_positions");
  positive(type_vocab_size, "type_vocab_size");
  if (hidden_size % num_heads != 0) throw std::invalid_argument("encoder.hidden_size must be divisible by num_heads");
  for (double p : {hidden_dropout, attention_dropout}) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("encoder dropout must lie in [0, 1)");
  }
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"vocab_size", vocab_size},
          {"hidden_size", hidden_size},
          {"num_layers", num_layers},
          {"num_heads", num_heads},
          {"intermediate_size", intermediate_size},
          {"max_positions", max_positions},
          {"type_vocab_size", type_vocab_size},
          {"hidden_dropout", hidden_dropout},
          {"attention_dropout", attention_dropout},
          {"layer_norm_eps", layer_norm_eps},
          {"initializer_range", initializer_range}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.hidden_size = j.at("hidden_size").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.intermediate_size = j.at("intermediate_size").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.type_vocab_size = j.at("type_vocab_size").get<int>();
  c.hidden_dropout = j.at("hidden_dropout").get<double>();
  c.attention_dropout = j.at("attention_dropout").get<double>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  c.initializer_range = j.at("initializer_range").get<double>();
  c.validate();
  return c;
}

Encoder::Encoder(const EncoderConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const Eigen::Index h = config.hidden_size;
  const double sd = config.initializer_range;
  word_embeddings = Param("embeddings.word", random_normal(h, config.vocab_size, sd, rng));
  position_embeddings = Param("embeddings.position", random_normal(h, config.max_positions, sd, rng));
  type_embeddings = Param("embeddings.token_type", random_normal(h, config.type_vocab_size, sd, rng));
  embed_norm_ = LayerNorm("embeddings.norm", h, config.layer_norm_eps);

  auto linear = [&](const std::string& name, Eigen::Index in, Eigen::Index out) {
    Linear l(name, in, out, true);
    l.weight.value = random_normal(out, in, sd, rng);
    return l;
  };
  for (int i = 0; i < config.num_layers; ++i) {
    const std::string p = "layer." + std::to_string(i) + ".";
    Layer layer;
    layer.query = linear(p + "query", h, h);
    layer.key = linear(p + "key", h, h);
    layer.value = linear(p + "value", h, h);
    layer.attn_out = linear(p + "attn_out", h, h);
    layer.attn_norm = LayerNorm(p + "attn_norm", h, config.layer_norm_eps);
    layer.intermediate = linear(p + "intermediate", h, config.intermediate_size);
    layer.output = linear(p + "output", config.intermediate_size, h);
    layer.out_norm = LayerNorm(p + "out_norm", h, config.layer_norm_eps);
    layers_.push_back(std::move(layer));
  }
  pooler_ = linear("pooler", h, h);
}

Matrix Encoder::layer_forward(const Layer& layer, const Matrix& x, Rng* rng, LayerCache* cache) const {
  const Eigen::Index t = x.cols();
  const int heads = config_.num_heads;
  const Eigen::Index dh = config_.hidden_size / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix q = layer.query.forward(x);
  Matrix k = layer.key.forward(x);
  Matrix v = layer.value.forward(x);
  Matrix context(x.rows(), t);
  std::vector<Matrix> probs;
  std::vector<DropoutMask> prob_masks;
  for (int a = 0; a < heads; ++a) {
    const auto rows = Eigen::seqN(a * dh, dh);
    Matrix p = softmax_rows(scale * (q(rows, Eigen::all).transpose() * k(rows, Eigen::all)));
    DropoutMask mask = DropoutMask::sample(t, t, config_.attention_dropout, rng);
    context(rows, Eigen::all).noalias() = v(rows, Eigen::all) * mask.apply(p).transpose();
    if (cache) {
      probs.push_back(std::move(p));
      prob_masks.push_back(std::move(mask));
    }
  }
  DropoutMask attn_mask = DropoutMask::sample(x.rows(), t, config_.hidden_dropout, rng);
  LayerNorm::Cache attn_norm_cache;
  Matrix y = layer.attn_norm.forward(attn_mask.apply(layer.attn_out.forward(context)) + x,
                                     cache ? &attn_norm_cache : nullptr);

  Matrix pre = layer.intermediate.forward(y);
  Matrix act = gelu(pre);
  DropoutMask out_mask = DropoutMask::sample(x.rows(), t, config_.hidden_dropout, rng);
  LayerNorm::Cache out_norm_cache;
  Matrix z = layer.out_norm.forward(out_mask.apply(layer.output.forward(act)) + y, cache ? &out_norm_cache : nullptr);

  if (cache) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->prob_dropout = std::move(prob_masks);
    cache->context = std::move(context);
    cache->attn_dropout = std::move(attn_mask);
    cache->attn_norm = std::move(attn_norm_cache);
    cache->attn_normed = std::move(y);
    cache->inter_pre = std::move(pre);
    cache->inter_act = std::move(act);
    cache->out_dropout = std::move(out_mask);
    cache->out_norm = std::move(out_norm_cache);
  }
  return z;
}

Matrix Encoder::layer_backward(Layer& layer, const LayerCache& c, const Matrix& dz) {
  const int heads = config_.num_heads;
  const Eigen::Index dh = config_.hidden_size / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Feed-forward block.
  const Matrix d_res2 = layer.out_norm.backward(c.out_norm, dz);
  const Matrix d_act = layer.output.backward(c.inter_act, c.out_dropout.apply(d_res2));
  const Matrix d_pre = d_act.cwiseProduct(gelu_grad(c.inter_pre));
  Matrix dy = d_res2 + layer.intermediate.backward(c.attn_normed, d_pre);

  // Attention block.
  const Matrix d_res1 = layer.attn_norm.backward(c.attn_norm, dy);
  const Matrix d_context = layer.attn_out.backward(c.context, c.attn_dropout.apply(d_res1));
  Matrix dq(c.q.rows(), c.q.cols());
  Matrix dk(c.k.rows(), c.k.cols());
  Matrix dv(c.v.rows(), c.v.cols());
  for (int a = 0; a < heads; ++a) {
    const auto rows = Eigen::seqN(a * dh, dh);
    const Matrix& p = c.probs[a];
    const Matrix dc = d_context(rows, Eigen::all);
    dv(rows, Eigen::all).noalias() = dc * c.prob_dropout[a].apply(p);
    const Matrix dp = c.prob_dropout[a].apply(dc.transpose() * c.v(rows, Eigen::all));
    // Row-wise softmax backward.
    const Vector row_dot = dp.cwiseProduct(p).rowwise().sum();
    const Matrix ds = p.cwiseProduct(dp.colwise() - row_dot);
    dq(rows, Eigen::all).noalias() = scale * (c.k(rows, Eigen::all) * ds.transpose());
    dk(rows, Eigen::all).noalias() = scale * (c.q(rows, Eigen::all) * ds);
  }
  Matrix dx = d_res1;
  dx += layer.query.backward(c.input, dq);
  dx += layer.key.backward(c.input, dk);
  dx += layer.value.backward(c.input, dv);
  return dx;
}

Vector Encoder::forward(std::span<const int> ids, Rng* dropout_rng, Cache* cache) const {
  const auto t = static_cast<Eigen::Index>(ids.size());
  if (t == 0) throw std::invalid_argument("encoder: empty id sequence");
  if (t > config_.max_positions) {
    throw std::invalid_argument("encoder: sequence of " + std::to_string(t) + " ids exceeds max_positions " +
                                std::to_string(config_.max_positions));
  }
  Matrix x(config_.hidden_size, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    const int id = ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= config_.vocab_size) throw std::out_of_range("encoder: token id " + std::to_string(id));
    x.col(i) = word_embeddings.value.col(id) + position_embeddings.value.col(i) + type_embeddings.value.col(0);
  }
  LayerNorm::Cache norm_cache;
  x = embed_norm_.forward(x, cache ? &norm_cache : nullptr);
  DropoutMask embed_mask = DropoutMask::sample(x.rows(), t, config_.hidden_dropout, dropout_rng);
  x = embed_mask.apply(x);

  if (cache) {
    cache->ids.assign(ids.begin(), ids.end());
    cache->embed_norm = std::move(norm_cache);
    cache->embed_dropout = std::move(embed_mask);
    cache->layers.clear();
    cache->layers.resize(layers_.size());
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    x = layer_forward(layers_[l], x, dropout_rng, cache ? &cache->layers[l] : nullptr);
  }
  Vector cls = x.col(0);
  Vector pooled = pooler_.forward(cls).col(0).array().tanh();
  if (cache) {
    cache->cls = cls;
    cache->pooled = pooled;
  }
  return pooled;
}

void Encoder::backward(const Cache& cache, const Vector& d_pooled) {
  const Vector d_pre = d_pooled.array() * (1.0 - cache.pooled.array().square());
  const Matrix d_cls = pooler_.backward(cache.cls, d_pre);
  Matrix dx = Matrix::Zero(config_.hidden_size, static_cast<Eigen::Index>(cache.ids.size()));
  dx.col(0) = d_cls.col(0);
  for (std::size_t l = layers_.size(); l-- > 0;) dx = layer_backward(layers_[l], cache.layers[l], dx);

  const Matrix d_embed = embed_norm_.backward(cache.embed_norm, cache.embed_dropout.apply(dx));
  for (Eigen::Index i = 0; i < d_embed.cols(); ++i) {
    word_embeddings.grad.col(cache.ids[static_cast<std::size_t>(i)]) += d_embed.col(i);
    position_embeddings.grad.col(i) += d_embed.col(i);
  }
  type_embeddings.grad.col(0) += d_embed.rowwise().sum();
}

ParamList Encoder::params() {
  ParamList out{&word_embeddings, &position_embeddings, &type_embeddings};
  embed_norm_.collect(out);
  for (Layer& l : layers_) {
    l.query.collect(out);
    l.key.collect(out);
    l.value.collect(out);
    l.attn_out.collect(out);
    l.attn_norm.collect(out);
    l.intermediate.collect(out);
    l.output.collect(out);
    l.out_norm.collect(out);
  }
  pooler_.collect(out);
  return out;
}

std::vector<const Param*> Encoder::params() const {
  ParamList mutable_params = const_cast<Encoder*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

namespace {

struct TensorView {
  std::string dtype;
  std::vector<std::int64_t> shape;
  const char* data = nullptr;
  std::size_t bytes = 0;
};

double element(const TensorView& t, std::size_t i) {
  if (t.dtype == "F32") {
    float f;
    std::memcpy(&f, t.data + i * sizeof(float), sizeof(float));
    return static_cast<double>(f);
  }
  double d;
  std::memcpy(&d, t.data + i * sizeof(double), sizeof(double));
  return d;
}

}  // namespace

void EncoderWeights::load_safetensors(Encoder& encoder, const std::filesystem::path& path) {
  const std::string blob = read_file(path);
  if (blob.size() < 8) throw std::runtime_error(path.string() + ": not a safetensors file");
  std::uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | static_cast<unsigned char>(blob[static_cast<std::size_t>(i)]);
  if (8 + header_len > blob.size()) throw std::runtime_error(path.string() + ": truncated safetensors header");
  const auto header = nlohmann::json::parse(blob.substr(8, header_len));
  const char* data = blob.data() + 8 + header_len;
  const std::size_t data_len = blob.size() - 8 - header_len;

  auto find = [&](const std::string& name) -> TensorView {
    for (const std::string& candidate : {name, "bert." + name}) {
      auto it = header.find(candidate);
      if (it == header.end()) continue;
      TensorView t;
      t.dtype = it->at("dtype").get<std::string>();
      if (t.dtype != "F32" && t.dtype != "F64") throw std::runtime_error(path.string() + ": " + candidate + " has unsupported dtype " + t.dtype);
      t.shape = it->at("shape").get<std::vector<std::int64_t>>();
      const auto offsets = it->at("data_offsets").get<std::vector<std::size_t>>();
      if (offsets.size() != 2 || offsets[1] > data_len || offsets[0] > offsets[1]) {
        throw std::runtime_error(path.string() + ": bad offsets for " + candidate);
      }
      t.data = data + offsets[0];
      t.bytes = offsets[1] - offsets[0];
      return t;
    }
    throw std::runtime_error(path.string() + ": missing tensor " + name);
  };
  auto find_any = [&](const std::string& a, const std::string& b) {
    try {
      return find(a);
    } catch (const std::runtime_error&) {
      return find(b);
    }
  };
  auto check_shape = [&](const TensorView& t, std::vector<std::int64_t> want, const std::string& name) {
    if (t.shape != want) throw std::runtime_error(path.string() + ": shape mismatch for " + name);
    std::size_t n = 1;
    for (auto d : want) n *= static_cast<std::size_t>(d);
    const std::size_t width = t.dtype == "F32" ? 4 : 8;
    if (t.bytes != n * width) throw std::runtime_error(path.string() + ": byte size mismatch for " + name);
  };
  // [rows, cols] row-major tensor into a rows x cols matrix.
  auto load_matrix = [&](Param& p, const std::string& name, bool transpose_to_columns) {
    const TensorView t = find(name);
    const auto r = p.value.rows();
    const auto c = p.value.cols();
    if (transpose_to_columns) {
      check_shape(t, {c, r}, name);
      for (Eigen::Index i = 0; i < c; ++i)
        for (Eigen::Index j = 0; j < r; ++j) p.value(j, i) = element(t, static_cast<std::size_t>(i * r + j));
    } else {
      check_shape(t, {r, c}, name);
      for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) p.value(i, j) = element(t, static_cast<std::size_t>(i * c + j));
    }
  };
  auto load_vector = [&](Param& p, const TensorView& t, const std::string& name) {
    check_shape(t, {p.value.rows()}, name);
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) p.value(i, 0) = element(t, static_cast<std::size_t>(i));
  };
  auto load_linear = [&](Linear& l, const std::string& prefix) {
    load_matrix(l.weight, prefix + ".weight", false);
    load_vector(l.bias, find(prefix + ".bias"), prefix + ".bias");
  };
  auto load_norm = [&](LayerNorm& n, const std::string& prefix) {
    load_vector(n.gamma, find_any(prefix + ".weight", prefix + ".gamma"), prefix + ".weight");
    load_vector(n.beta, find_any(prefix + ".bias", prefix + ".beta"), prefix + ".bias");
  };

  load_matrix(encoder.word_embeddings, "embeddings.word_embeddings.weight", true);
  load_matrix(encoder.position_embeddings, "embeddings.position_embeddings.weight", true);
  load_matrix(encoder.type_embeddings, "embeddings.token_type_embeddings.weight", true);
  load_norm(encoder.embed_norm_, "embeddings.LayerNorm");
  for (std::size_t i = 0; i < encoder.layers_.size(); ++i) {
    const std::string p = "encoder.layer." + std::to_string(i) + ".";
    Encoder::Layer& layer = encoder.layers_[i];
    load_linear(layer.query, p + "attention.self.query");
    load_linear(layer.key, p + "attention.self.key");
    load_linear(layer.value, p + "attention.self.value");
    load_linear(layer.attn_out, p + "attention.output.dense");
    load_norm(layer.attn_norm, p + "attention.output.LayerNorm");
    load_linear(layer.intermediate, p + "intermediate.dense");
    load_linear(layer.output, p + "output.dense");
    load_norm(layer.out_norm, p + "output.LayerNorm");
  }
  load_linear(encoder.pooler_, "pooler.dense");
}

}  // namespace moral::nn
