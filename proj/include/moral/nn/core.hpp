#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "moral/rng.hpp"

namespace moral::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A trainable tensor and its accumulated gradient. Vectors are n x 1.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

using ParamList = std::vector<Param*>;

void zero_grads(const ParamList& params);

/// Normal(0, std) entries.
Matrix random_normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);
/// Uniform(-bound, bound) entries.
Matrix random_uniform(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng);

/// y = W x + b applied column-wise. W is out x in, b is out x 1 (optional).
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, Eigen::Index in, Eigen::Index out, bool bias);

  Matrix forward(const Matrix& x) const;
  /// Accumulates dW, db; returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy);

  void collect(ParamList& out);
  Param weight;
  Param bias;
  bool has_bias = false;
};

/// Layer normalisation over the rows of each column.
class LayerNorm {
 public:
  struct Cache {
    Matrix normalized;
    Vector inv_std;
  };

  LayerNorm() = default;
  LayerNorm(std::string name, Eigen::Index dim, double eps);

  Matrix forward(const Matrix& x, Cache* cache) const;
  Matrix backward(const Cache& cache, const Matrix& dy);

  void collect(ParamList& out);
  Param gamma;
  Param beta;
  double eps = 1e-12;
};

/// Inverted dropout. An empty mask means identity (eval mode or p == 0).
struct DropoutMask {
  Matrix scale;

  static DropoutMask sample(Eigen::Index rows, Eigen::Index cols, double p, Rng* rng);
  Matrix apply(const Matrix& x) const { return scale.size() == 0 ? x : Matrix(x.cwiseProduct(scale)); }
};

/// Exact (erf-based) GELU and its derivative.
Matrix gelu(const Matrix& x);
Matrix gelu_grad(const Matrix& x);

/// Softmax of a vector, max-shifted.
Vector softmax(const Vector& logits);
/// Row-wise softmax.
Matrix softmax_rows(const Matrix& scores);

/// Adam with bias correction; no weight decay.
class Adam {
 public:
  struct Options {
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(ParamList params, Options options);

  void step();
  long steps() const noexcept { return t_; }
  const Options& options() const noexcept { return options_; }

 private:
  ParamList params_;
  Options options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

}  // namespace moral::nn
