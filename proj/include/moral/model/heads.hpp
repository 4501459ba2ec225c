#pragma once

#include <span>
#include <utility>

#include "moral/nn/core.hpp"

namespace moral::model {

using nn::Matrix;
using nn::Vector;

/// h = W_inv e. No bias.
Vector project_invariant(const Matrix& w_inv, const Vector& e);
/// Softmax(W_1 ReLU(W_2 h)) for weight matrices W_2 (hidden x dim) and
/// W_1 (classes x hidden).
Vector moral_head_forward(const Matrix& w1, const Matrix& w2, const Vector& h);
/// Backward of the gradient reversal layer: -lambda * upstream.
Matrix grad_reverse(const Matrix& upstream, double lambda_grl);

struct Regularizers {
  double l_norm = 0.0;  // ||W_inv - I||_F^2
  double l_rec = 0.0;   // mean over columns of ||W_rec h - e||^2
};
/// H and E hold one example per column.
Regularizers regularizers(const Matrix& w_inv, const Matrix& w_rec, const Matrix& h, const Matrix& e);

struct AdvLossBreakdown {
  double moral_loss = 0.0;
  double domain_loss = 0.0;
  double l_norm = 0.0;
  double l_rec = 0.0;
  double total = 0.0;
};

struct HeadsOptions {
  int dim = 768;
  int hidden = 768;
  int num_domains = 0;  // 0 disables the domain branch
  double lambda_grl = 1.0;
  double alpha_norm = 1.0;
  double alpha_rec = 1.0;
};

/// Classification path on top of the pooled embedding e:
///
///   h = W_inv e,  y_m = softmax(W_1 ReLU(W_2 h))
///
/// With a domain branch, the domain head (same two-layer shape, d outputs)
/// reads h through gradient reversal, and W_rec, L_norm, L_rec are added.
/// W_inv and W_rec start at the identity; head weights use the usual
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
class AdversarialHeads {
 public:
  AdversarialHeads() = default;
  /// The domain head draws from `domain_rng` so the shared parameters get the
  /// same values whether or not the branch exists.
  AdversarialHeads(const HeadsOptions& options, Rng& rng, Rng& domain_rng);

  const HeadsOptions& options() const noexcept { return options_; }
  bool adversarial() const noexcept { return options_.num_domains > 0; }

  /// Moral class probabilities (2 x B) for embeddings E (dim x B).
  Matrix predict(const Matrix& e) const;

  /// Loss on a batch and its gradients. Parameter gradients are accumulated;
  /// dL/dE is returned through `d_embeddings` when non-null.
  /// `class_weights` has one entry per moral class.
  AdvLossBreakdown forward_backward(const Matrix& e, std::span<const int> moral_labels,
                                    std::span<const int> domain_labels, const Vector& class_weights,
                                    Matrix* d_embeddings);

  nn::ParamList params();

  nn::Param w_inv;
  nn::Param w_rec;
  nn::Linear moral_w2, moral_w1;
  nn::Linear domain_w2, domain_w1;

 private:
  HeadsOptions options_;
};

/// Weighted cross-entropy with weighted-mean reduction:
/// sum_i w[y_i] * -log p[y_i, i] / sum_i w[y_i]. Writes dL/dlogits.
double weighted_cross_entropy(const Matrix& logits, std::span<const int> labels, const Vector& class_weights,
                              Matrix* d_logits);

}  // namespace moral::model
