#include "moral/model/heads.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace moral::model {
namespace {

nn::Linear head_layer(const std::string& name, int in, int out, Rng& rng) {
  nn::Linear l(name, in, out, false);
  l.weight.value = nn::random_uniform(out, in, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  return l;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

struct TwoLayer {
  Matrix pre;     // W_2 h
  Matrix hidden;  // ReLU(pre)
  Matrix logits;  // W_1 hidden
};

TwoLayer two_layer_forward(const nn::Linear& w2, const nn::Linear& w1, const Matrix& h) {
  TwoLayer t;
  t.pre = w2.forward(h);
  t.hidden = relu(t.pre);
  t.logits = w1.forward(t.hidden);
  return t;
}

Matrix two_layer_backward(nn::Linear& w2, nn::Linear& w1, const Matrix& h, const TwoLayer& t, const Matrix& d_logits) {
  Matrix d_hidden = w1.backward(t.hidden, d_logits);
  d_hidden = d_hidden.cwiseProduct((t.pre.array() > 0.0).cast<double>().matrix());
  return w2.backward(h, d_hidden);
}

}  // namespace

Vector project_invariant(const Matrix& w_inv, const Vector& e) {
  if (w_inv.cols() != e.size()) {
    throw std::invalid_argument("project_invariant: W_inv has " + std::to_string(w_inv.cols()) +
                                " columns but e has dimension " + std::to_string(e.size()));
  }
  return w_inv * e;
}

Vector moral_head_forward(const Matrix& w1, const Matrix& w2, const Vector& h) {
  if (w2.cols() != h.size() || w1.cols() != w2.rows()) throw std::invalid_argument("moral_head_forward: shape mismatch");
  return nn::softmax(w1 * (w2 * h).cwiseMax(0.0));
}

Matrix grad_reverse(const Matrix& upstream, double lambda_grl) {
  if (!(lambda_grl >= 0.0)) throw std::invalid_argument("lambda_grl must be non-negative");
  return -lambda_grl * upstream;
}

Regularizers regularizers(const Matrix& w_inv, const Matrix& w_rec, const Matrix& h, const Matrix& e) {
  Regularizers r;
  r.l_norm = (w_inv - Matrix::Identity(w_inv.rows(), w_inv.cols())).squaredNorm();
  if (e.cols() > 0) r.l_rec = (w_rec * h - e).colwise().squaredNorm().sum() / static_cast<double>(e.cols());
  return r;
}

double weighted_cross_entropy(const Matrix& logits, std::span<const int> labels, const Vector& class_weights,
                              Matrix* d_logits) {
  const Eigen::Index b = logits.cols();
  if (static_cast<std::size_t>(b) != labels.size()) throw std::invalid_argument("label count does not match batch");
  if (d_logits) d_logits->setZero(logits.rows(), b);
  double weight_sum = 0.0, loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.rows()) throw std::out_of_range("class label " + std::to_string(y));
    const Vector p = nn::softmax(logits.col(i));
    const double w = class_weights(y);
    weight_sum += w;
    loss += -w * std::log(p(y));
    if (d_logits) {
      d_logits->col(i) = w * p;
      (*d_logits)(y, i) -= w;
    }
  }
  if (d_logits) *d_logits /= weight_sum;
  return loss / weight_sum;
}

AdversarialHeads::AdversarialHeads(const HeadsOptions& options, Rng& rng, Rng& domain_rng) : options_(options) {
  if (options.dim <= 0 || options.hidden <= 0) throw std::invalid_argument("head dimensions must be positive");
  if (options.num_domains == 1) throw std::invalid_argument("adversarial training requires multiple domains");
  if (!(options.lambda_grl >= 0.0)) throw std::invalid_argument("lambda_grl must be non-negative");
  if (!(options.alpha_norm >= 0.0 && options.alpha_rec >= 0.0)) {
    throw std::invalid_argument("regularizer coefficients must be non-negative");
  }
  w_inv = nn::Param("heads.w_inv", Matrix::Identity(options.dim, options.dim));
  moral_w2 = head_layer("heads.moral.w2", options.dim, options.hidden, rng);
  moral_w1 = head_layer("heads.moral.w1", options.hidden, 2, rng);
  if (adversarial()) {
    w_rec = nn::Param("heads.w_rec", Matrix::Identity(options.dim, options.dim));
    domain_w2 = head_layer("heads.domain.w2", options.dim, options.hidden, domain_rng);
    domain_w1 = head_layer("heads.domain.w1", options.hidden, options.num_domains, domain_rng);
  }
}

Matrix AdversarialHeads::predict(const Matrix& e) const {
  const Matrix logits = two_layer_forward(moral_w2, moral_w1, w_inv.value * e).logits;
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.cols(); ++i) p.col(i) = nn::softmax(logits.col(i));
  return p;
}

AdvLossBreakdown AdversarialHeads::forward_backward(const Matrix& e, std::span<const int> moral_labels,
                                                    std::span<const int> domain_labels, const Vector& class_weights,
                                                    Matrix* d_embeddings) {
  if (e.rows() != options_.dim) throw std::invalid_argument("embedding dimension does not match heads");
  AdvLossBreakdown out;
  const Matrix h = w_inv.value * e;

  const TwoLayer moral = two_layer_forward(moral_w2, moral_w1, h);
  Matrix d_logits;
  out.moral_loss = weighted_cross_entropy(moral.logits, moral_labels, class_weights, &d_logits);
  Matrix dh = two_layer_backward(moral_w2, moral_w1, h, moral, d_logits);
  Matrix de = Matrix::Zero(e.rows(), e.cols());

  if (adversarial()) {
    const TwoLayer domain = two_layer_forward(domain_w2, domain_w1, h);
    Matrix d_domain_logits;
    out.domain_loss = weighted_cross_entropy(domain.logits, domain_labels, Vector::Ones(options_.num_domains),
                                             &d_domain_logits);
    dh += grad_reverse(two_layer_backward(domain_w2, domain_w1, h, domain, d_domain_logits), options_.lambda_grl);

    const Regularizers reg = regularizers(w_inv.value, w_rec.value, h, e);
    out.l_norm = reg.l_norm;
    out.l_rec = reg.l_rec;
    w_inv.grad += 2.0 * options_.alpha_norm * (w_inv.value - Matrix::Identity(options_.dim, options_.dim));
    const Matrix diff = w_rec.value * h - e;
    const double scale = 2.0 * options_.alpha_rec / static_cast<double>(e.cols());
    w_rec.grad.noalias() += scale * diff * h.transpose();
    dh.noalias() += scale * w_rec.value.transpose() * diff;
    de -= scale * diff;
  }
  out.total = out.moral_loss + out.domain_loss + options_.alpha_norm * out.l_norm + options_.alpha_rec * out.l_rec;

  w_inv.grad.noalias() += dh * e.transpose();
  if (d_embeddings) {
    de.noalias() += w_inv.value.transpose() * dh;
    *d_embeddings = std::move(de);
  }
  return out;
}

nn::ParamList AdversarialHeads::params() {
  nn::ParamList out{&w_inv};
  moral_w2.collect(out);
  moral_w1.collect(out);
  if (adversarial()) {
    out.push_back(&w_rec);
    domain_w2.collect(out);
    domain_w1.collect(out);
  }
  return out;
}

}  // namespace moral::model
