#include <doctest.h>

#include <cmath>
#include <vector>

#include "moral/hash.hpp"
#include "moral/nn/core.hpp"
#include "moral/nn/encoder.hpp"

using namespace moral;
using namespace moral::nn;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig c;
  c.vocab_size = 20;
  c.hidden_size = 8;
  c.num_layers = 2;
  c.num_heads = 2;
  c.intermediate_size = 12;
  c.max_positions = 16;
  return c;
}

// Loss = r . pooled with a fixed dropout stream, so forward passes for the
// finite differences see the same masks as the backward pass.
double probe_loss(const Encoder& enc, const std::vector<int>& ids, const Vector& r, std::uint64_t seed) {
  Rng rng(seed);
  return r.dot(enc.forward(ids, &rng, nullptr));
}

}  // namespace

TEST_CASE("encoder backward matches central differences") {
  Rng init(7);
  EncoderConfig cfg = tiny_config();
  cfg.initializer_range = 0.3;
  Encoder enc(cfg, init);
  const std::vector<int> ids{2, 5, 9, 5, 17, 3};
  Vector r(cfg.hidden_size);
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = init.normal();

  for (std::uint64_t seed : {11ull, 12ull}) {
    ParamList params = enc.params();
    zero_grads(params);
    Rng rng(seed);
    Encoder::Cache cache;
    enc.forward(ids, &rng, &cache);
    enc.backward(cache, r);

    const double h = 1e-5;
    int checked = 0;
    for (Param* p : params) {
      // A handful of entries per tensor, spread across it.
      for (Eigen::Index k = 0; k < p->size(); k += std::max<Eigen::Index>(1, p->size() / 5)) {
        const double orig = p->value(k);
        p->value(k) = orig + h;
        const double up = probe_loss(enc, ids, r, seed);
        p->value(k) = orig - h;
        const double down = probe_loss(enc, ids, r, seed);
        p->value(k) = orig;
        const double fd = (up - down) / (2 * h);
        const double an = p->grad(k);
        INFO(p->name << "[" << k << "] fd=" << fd << " an=" << an);
        CHECK(std::abs(fd - an) <= 1e-6 + 1e-4 * std::abs(fd));
        ++checked;
      }
    }
    CHECK(checked > 100);
  }
}

TEST_CASE("encoder eval mode is deterministic and sequence-local") {
  Rng init(3);
  Encoder enc(tiny_config(), init);
  const std::vector<int> a{2, 4, 6, 3};
  const Vector e1 = enc.embed(a);
  const Vector e2 = enc.embed(a);
  CHECK((e1 - e2).norm() == 0.0);
  CHECK(e1.size() == 8);
  CHECK(e1.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("encoder rejects bad ids and lengths") {
  Rng init(3);
  Encoder enc(tiny_config(), init);
  const std::vector<int> bad{2, 25};
  CHECK_THROWS(enc.embed(bad));
  const std::vector<int> empty;
  CHECK_THROWS(enc.embed(empty));
  const std::vector<int> too_long(17, 2);
  CHECK_THROWS(enc.embed(too_long));
}

TEST_CASE("layer norm and linear backward") {
  Rng rng(5);
  LayerNorm ln("ln", 4, 1e-5);
  ln.gamma.value = random_normal(4, 1, 1.0, rng);
  Matrix x = random_normal(4, 3, 1.0, rng);
  Matrix w = random_normal(4, 3, 1.0, rng);
  LayerNorm::Cache c;
  ln.forward(x, &c);
  const Matrix dx = ln.backward(c, w);
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Matrix xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    const double fd = (ln.forward(xp, nullptr).cwiseProduct(w).sum() - ln.forward(xm, nullptr).cwiseProduct(w).sum()) / (2 * h);
    CHECK(dx(k) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("adam first step moves each weight by lr against the gradient sign") {
  Param p("p", Matrix::Constant(2, 1, 1.0));
  p.grad << 0.5, -3.0;
  Adam adam({&p}, {.learning_rate = 0.1});
  adam.step();
  CHECK(p.value(0) == doctest::Approx(0.9));
  CHECK(p.value(1) == doctest::Approx(1.1));
}

TEST_CASE("safetensors weights reproduce the reference BERT pooled output") {
  const auto expected = nlohmann::json::parse(read_file(std::string(MORAL_TEST_DATA) + "/tiny_bert_expected.json"));
  EncoderConfig cfg;
  const auto& jc = expected.at("config");
  cfg.vocab_size = jc.at("vocab_size");
  cfg.hidden_size = jc.at("hidden_size");
  cfg.num_layers = jc.at("num_layers");
  cfg.num_heads = jc.at("num_heads");
  cfg.intermediate_size = jc.at("intermediate_size");
  cfg.max_positions = jc.at("max_positions");
  Rng init(1);
  Encoder enc(cfg, init);
  EncoderWeights::load_safetensors(enc, std::string(MORAL_TEST_DATA) + "/tiny_bert.safetensors");
  for (const auto& c : expected.at("cases")) {
    const auto ids = c.at("ids").get<std::vector<int>>();
    const auto want = c.at("pooled").get<std::vector<double>>();
    const Vector got = enc.embed(ids);
    REQUIRE(got.size() == static_cast<Eigen::Index>(want.size()));
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got(static_cast<Eigen::Index>(i)) == doctest::Approx(want[i]).epsilon(1e-5));
  }
}

TEST_CASE("safetensors loader reports missing tensors") {
  EncoderConfig cfg = tiny_config();
  Rng init(1);
  Encoder enc(cfg, init);
  CHECK_THROWS_AS(EncoderWeights::load_safetensors(enc, std::string(MORAL_TEST_DATA) + "/tiny_bert.safetensors"),
                  std::runtime_error);
}
