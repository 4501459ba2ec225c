#include "moral/nn/core.hpp"

#include <cmath>

namespace moral::nn {

void zero_grads(const ParamList& params) {
  for (Param* p : params) p->zero_grad();
}

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = stddev * rng.normal();
  }
  return m;
}

Matrix random_uniform(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

Linear::Linear(std::string name, Eigen::Index in, Eigen::Index out, bool bias)
    : weight(name + ".weight", Matrix::Zero(out, in)), has_bias(bias) {
  if (bias) this->bias = Param(name + ".bias", Matrix::Zero(out, 1));
}

Matrix Linear::forward(const Matrix& x) const {
  Matrix y = weight.value * x;
  if (has_bias) y.colwise() += bias.value.col(0);
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
  weight.grad.noalias() += dy * x.transpose();
  if (has_bias) bias.grad.col(0) += dy.rowwise().sum();
  return weight.value.transpose() * dy;
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight);
  if (has_bias) out.push_back(&bias);
}

LayerNorm::LayerNorm(std::string name, Eigen::Index dim, double eps)
    : gamma(name + ".gamma", Matrix::Ones(dim, 1)), beta(name + ".beta", Matrix::Zero(dim, 1)), eps(eps) {}

Matrix LayerNorm::forward(const Matrix& x, Cache* cache) const {
  const auto n = static_cast<double>(x.rows());
  Matrix normalized(x.rows(), x.cols());
  Vector inv_std(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const double var = (x.col(c).array() - mean).square().sum() / n;
    inv_std(c) = 1.0 / std::sqrt(var + eps);
    normalized.col(c) = (x.col(c).array() - mean) * inv_std(c);
  }
  Matrix y = (normalized.array().colwise() * gamma.value.col(0).array()).colwise() + beta.value.col(0).array();
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix LayerNorm::backward(const Cache& cache, const Matrix& dy) {
  const auto n = static_cast<double>(dy.rows());
  gamma.grad.col(0) += dy.cwiseProduct(cache.normalized).rowwise().sum();
  beta.grad.col(0) += dy.rowwise().sum();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index c = 0; c < dy.cols(); ++c) {
    const Vector dxhat = dy.col(c).cwiseProduct(gamma.value.col(0));
    const double sum = dxhat.sum();
    const double dot = dxhat.dot(cache.normalized.col(c));
    dx.col(c) = (cache.inv_std(c) / n) * (n * dxhat.array() - sum - cache.normalized.col(c).array() * dot).matrix();
  }
  return dx;
}

void LayerNorm::collect(ParamList& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

DropoutMask DropoutMask::sample(Eigen::Index rows, Eigen::Index cols, double p, Rng* rng) {
  DropoutMask mask;
  if (rng == nullptr || p <= 0.0) return mask;
  const double keep = 1.0 / (1.0 - p);
  mask.scale.resize(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) mask.scale(r, c) = rng->uniform() < p ? 0.0 : keep;
  }
  return mask;
}

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)); });
}

Matrix gelu_grad(const Matrix& x) {
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * M_PI);
  return x.unaryExpr([](double v) {
    return 0.5 * (1.0 + std::erf(v * M_SQRT1_2)) + v * std::exp(-0.5 * v * v) * kInvSqrt2Pi;
  });
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double m = scores.row(r).maxCoeff();
    out.row(r) = (scores.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Adam::Adam(ParamList params, Options options) : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Param* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const double step_size = options_.learning_rate / bc1;
  const double sqrt_bc2 = std::sqrt(bc2);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * p.grad;
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * p.grad.cwiseAbs2();
    const auto denom = (v_[i].array().sqrt() / sqrt_bc2) + options_.eps;
    p.value.array() -= step_size * m_[i].array() / denom;
  }
}

}  // namespace moral::nn
