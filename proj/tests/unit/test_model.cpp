#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <cstring>

#include "checks.hpp"
#include "moral/corpus/splits.hpp"
#include "moral/hash.hpp"
#include "moral/model/classifier.hpp"
#include "moral/model/heads.hpp"
#include "temp_dir.hpp"

using namespace moral;
using namespace moral::model;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<corpus::UnifiedPost> fixture_split() {
  return corpus::make_splits(checks::fixture_posts(), corpus::SplitDesign::in_domain(), checks::fixture_config().split);
}

TrainConfig quick_config() {
  TrainConfig c = checks::fixture_config().train;
  c.epochs = 2;
  return c;
}

bool bitwise_equal(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("class weights are N / N_c") {
  const std::vector<int> y = {1, 0, 0, 0};
  const auto w = compute_class_weights(y);
  CHECK(w.positive == doctest::Approx(4.0));
  CHECK(w.negative == doctest::Approx(4.0 / 3.0));
  CHECK(w.as_vector()(1) == w.positive);
  const std::vector<int> one_class = {1, 1};
  CHECK_THROWS_WITH(compute_class_weights(one_class), doctest::Contains("degenerate"));
}

TEST_CASE("class weight worked examples") {
  std::vector<int> y(100, 0);
  std::fill(y.begin(), y.begin() + 25, 1);
  auto w = compute_class_weights(y);
  CHECK(w.positive == doctest::Approx(4.0));
  CHECK(w.negative == doctest::Approx(4.0 / 3.0));
  std::vector<int> balanced = {0, 1, 0, 1, 1, 0};
  w = compute_class_weights(balanced);
  CHECK(w.positive == 2.0);
  CHECK(w.negative == 2.0);
}

TEST_CASE("projection, head and regularizer identities") {
  const MatrixXd e = MatrixXd::Random(7, 3);
  CHECK(project_invariant(MatrixXd::Identity(7, 7), e.col(0)) == e.col(0));
  CHECK(project_invariant(MatrixXd::Zero(7, 7), e.col(0)).isZero());
  CHECK_THROWS(project_invariant(MatrixXd::Identity(6, 6), e.col(0)));

  const MatrixXd w2 = MatrixXd::Random(5, 7);
  const VectorXd uniform = moral_head_forward(MatrixXd::Zero(2, 5), w2, e.col(0));
  CHECK(uniform(0) == doctest::Approx(0.5));
  CHECK(uniform(1) == doctest::Approx(0.5));
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const MatrixXd w1 = nn::random_normal(2, 5, 3.0, rng);
    const VectorXd p = moral_head_forward(w1, w2, nn::random_normal(7, 1, 2.0, rng).col(0));
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p.minCoeff() >= 0.0);
  }

  const MatrixXd eye = MatrixXd::Identity(7, 7);
  const auto r = regularizers(eye, eye, e, e);
  CHECK(r.l_norm == 0.0);
  CHECK(r.l_rec == 0.0);
}

TEST_CASE("loss breakdown adds up") {
  HeadsOptions o;
  o.dim = 6;
  o.hidden = 4;
  o.num_domains = 2;
  o.alpha_norm = 0.3;
  o.alpha_rec = 2.0;
  Rng a(1), b(2), c(3);
  AdversarialHeads h(o, a, b);
  h.w_inv.value += nn::random_normal(6, 6, 0.1, c);
  const MatrixXd e = nn::random_normal(6, 4, 1.0, c);
  const std::vector<int> y = {0, 1, 1, 0}, d = {0, 1, 0, 1};
  const auto l = h.forward_backward(e, y, d, VectorXd::Ones(2), nullptr);
  CHECK(l.total == doctest::Approx(l.moral_loss + l.domain_loss + 0.3 * l.l_norm + 2.0 * l.l_rec));
  CHECK(l.l_norm > 0.0);
}

TEST_CASE("argmax is invariant to positive rescaling of the logits") {
  HeadsOptions o;
  o.dim = 6;
  o.hidden = 4;
  Rng a(1), b(2), c(5);
  AdversarialHeads h(o, a, b);
  const MatrixXd e = nn::random_normal(6, 50, 1.0, c);
  const MatrixXd p = h.predict(e);
  for (double scale : {0.01, 0.5, 3.0, 100.0}) {
    AdversarialHeads s = h;
    s.moral_w1.weight.value *= scale;
    const MatrixXd q = s.predict(e);
    for (Eigen::Index i = 0; i < e.cols(); ++i) {
      if (std::abs(p(1, i) - p(0, i)) < 1e-12) continue;
      CHECK((p(1, i) > p(0, i)) == (q(1, i) > q(0, i)));
    }
  }
}

TEST_CASE("weighted cross-entropy uses a weighted mean") {
  MatrixXd logits(2, 2);
  logits << 0.0, 1.0, 0.0, -1.0;
  const std::vector<int> y = {1, 0};
  const VectorXd w = (VectorXd(2) << 1.0, 3.0).finished();
  MatrixXd d;
  const double l = weighted_cross_entropy(logits, y, w, &d);
  const double l0 = std::log(2.0);                              // column 0, class 1
  const double l1 = -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0)));  // column 1, class 0
  CHECK(l == doctest::Approx((3.0 * l0 + 1.0 * l1) / 4.0));
  CHECK(d.rows() == 2);
}

TEST_CASE("gradient reversal multiplies by -lambda") {
  const MatrixXd g = MatrixXd::Random(3, 4);
  CHECK(grad_reverse(g, 0.7).isApprox(-0.7 * g));
  CHECK(grad_reverse(g, 0.0).isZero());
}

TEST_CASE("heads start from the identity projection") {
  HeadsOptions o;
  o.dim = 6;
  o.hidden = 5;
  o.num_domains = 3;
  Rng a(1), b(2);
  AdversarialHeads h(o, a, b);
  CHECK(h.w_inv.value.isIdentity());
  CHECK(h.w_rec.value.isIdentity());
  CHECK_FALSE(h.moral_w2.has_bias);
  CHECK(h.domain_w1.weight.value.rows() == 3);
  const MatrixXd e = MatrixXd::Random(6, 4);
  const MatrixXd p = h.predict(e);
  CHECK(p.colwise().sum().isApprox(Eigen::RowVectorXd::Ones(4)));

  // The shared parameters do not depend on whether a domain branch exists.
  o.num_domains = 0;
  Rng a2(1), b2(2);
  AdversarialHeads plain(o, a2, b2);
  CHECK(bitwise_equal(plain.moral_w2.weight.value, h.moral_w2.weight.value));
  CHECK(bitwise_equal(plain.predict(e), p));
}

TEST_CASE("finite-difference gradients of the adversarial heads") {
  const auto o = checks::gradient_reversal();
  INFO(o.detail);
  CHECK(o.passed);
}

TEST_CASE("math oracles") {
  const auto o = checks::math_oracles(1000, 1);
  INFO(o.detail);
  CHECK(o.passed);
}

TEST_CASE("lambda = 0, alpha = 0 reduces to the plain classifier") {
  const auto o = checks::reduction_property();
  INFO(o.detail);
  CHECK(o.passed);
}

TEST_CASE("fixture learning reaches validation F1 0.95") {
  const auto o = checks::fixture_learning();
  INFO(o.detail);
  CHECK(o.passed);
}

TEST_CASE("training is deterministic and checkpoints round-trip bitwise") {
  const auto posts = fixture_split();
  const auto cfg = quick_config();
  const auto a = train_adversarial(posts, MoralLabel::Care, cfg);
  const auto b = train_adversarial(posts, MoralLabel::Care, cfg);
  REQUIRE(a.checkpoint.tensors.size() == b.checkpoint.tensors.size());
  for (std::size_t i = 0; i < a.checkpoint.tensors.size(); ++i) {
    CHECK(bitwise_equal(a.checkpoint.tensors[i].second, b.checkpoint.tensors[i].second));
  }

  testing::TempDir dir;
  const auto path = dir.path() / "care.ckpt";
  a.checkpoint.save(path);
  const auto loaded = Checkpoint::load(path);
  CHECK(loaded.label == MoralLabel::Care);
  CHECK(loaded.adversarial);
  CHECK(loaded.config_hash == a.checkpoint.config_hash);
  CHECK(loaded.vocab == a.checkpoint.vocab);
  CHECK(loaded.domains == a.checkpoint.domains);
  REQUIRE(loaded.tensors.size() == a.checkpoint.tensors.size());
  for (std::size_t i = 0; i < loaded.tensors.size(); ++i) {
    CHECK(loaded.tensors[i].first == a.checkpoint.tensors[i].first);
    CHECK(bitwise_equal(loaded.tensors[i].second, a.checkpoint.tensors[i].second));
  }

  const std::vector<std::string> texts = {posts[0].text_clean, posts[1].text_clean, "completely unseen words"};
  const auto pa = predict(a.checkpoint, texts);
  const auto pb = predict(loaded, texts, loaded.config_hash);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    CHECK(std::memcmp(&pa[i].probability, &pb[i].probability, sizeof(double)) == 0);
    CHECK(pa[i].predicted == (pa[i].probability > 0.5 ? 1 : 0));
  }
  CHECK_THROWS_WITH(predict(loaded, texts, std::string("deadbeef")), doctest::Contains("config_hash mismatch"));

  // Corrupt the file.
  std::string blob = read_file(path);
  blob.resize(blob.size() / 2);
  write_file_atomic(path, blob);
  CHECK_THROWS(Checkpoint::load(path));
  write_file_atomic(path, "not a checkpoint");
  CHECK_THROWS(Checkpoint::load(path));
}

TEST_CASE("single-epoch training and fixture predictions") {
  const auto posts = fixture_split();
  TrainConfig one = quick_config();
  one.epochs = 1;
  const auto r = train_single_label(posts, MoralLabel::Care, one);
  CHECK(r.checkpoint.epoch == 1);
  CHECK(r.epochs.size() == 1);

  const auto full = train_single_label(posts, MoralLabel::Care, checks::fixture_config().train);
  const auto again = train_single_label(posts, MoralLabel::Care, checks::fixture_config().train);
  REQUIRE(full.epochs.size() == again.epochs.size());
  for (std::size_t i = 0; i < full.epochs.size(); ++i) {
    CHECK(full.epochs[i].validation_f1_macro == again.epochs[i].validation_f1_macro);
    CHECK(full.epochs[i].train_loss == again.epochs[i].train_loss);
  }
  // Loss trends down, allowing one noisy epoch.
  int rises = 0;
  for (std::size_t i = 1; i < full.epochs.size(); ++i) rises += full.epochs[i].train_loss > full.epochs[i - 1].train_loss;
  CHECK(rises <= 1);
  CHECK(full.epochs.back().train_loss < full.epochs.front().train_loss);

  // Re-predicting the training posts recovers the planted labels.
  std::vector<std::string> texts;
  std::vector<int> gold;
  for (const auto& p : posts) {
    if (p.split != corpus::Split::Train) continue;
    texts.push_back(p.text_clean);
    gold.push_back(p.gold.target(MoralLabel::Care));
  }
  const auto pred = predict(full.checkpoint, texts);
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    tp += gold[i] && pred[i].predicted;
    fp += !gold[i] && pred[i].predicted;
    fn += gold[i] && !pred[i].predicted;
  }
  CHECK(2.0 * tp / (2.0 * tp + fp + fn) >= 0.95);
}

TEST_CASE("predictions do not depend on batching") {
  const auto posts = fixture_split();
  const auto r = train_single_label(posts, MoralLabel::Harm, quick_config());
  const auto clf = Classifier::from_checkpoint(r.checkpoint);
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < 16; ++i) texts.push_back(posts[i].text_clean);
  const auto together = clf.predict(texts);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto alone = clf.predict(std::span(texts).subspan(i, 1));
    CHECK(alone[0].probability == together[i].probability);
  }
  CHECK(clf.invariant(texts[0]).isApprox(clf.heads().w_inv.value * clf.embedding(texts[0])));
}

TEST_CASE("training errors") {
  auto posts = fixture_split();
  const auto cfg = quick_config();
  SUBCASE("degenerate label") {
    for (auto& p : posts) {
      p.gold.set(MoralLabel::Care, false);
      p.gold.set(MoralLabel::NonMoral, true);
    }
    CHECK_THROWS_WITH(train_single_label(posts, MoralLabel::Care, cfg), doctest::Contains("degenerate"));
  }
  SUBCASE("adversarial training needs two domains") {
    std::erase_if(posts, [](const corpus::UnifiedPost& p) { return p.domain != Domain::FB; });
    CHECK_THROWS_WITH(train_adversarial(posts, MoralLabel::Care, cfg), doctest::Contains("multiple domains"));
    CHECK_NOTHROW(train_single_label(posts, MoralLabel::Care, cfg));
  }
  SUBCASE("unannotated label") {
    std::erase_if(posts, [](const corpus::UnifiedPost& p) { return p.domain != Domain::MFRC; });
    CHECK_THROWS_WITH(train_single_label(posts, MoralLabel::Liberty, cfg), doctest::Contains("no training posts"));
  }
  SUBCASE("bad hyperparameters") {
    TrainConfig bad = cfg;
    bad.optimizer = "sgd";
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.max_tokens = bad.encoder.max_positions + 1;
    CHECK_THROWS(bad.validate());
  }
}

TEST_CASE("train config json round-trip") {
  TrainConfig c = quick_config();
  c.lambda_grl = 0.25;
  c.vocab_path = "/tmp/vocab.txt";
  const auto back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}
