// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ZOMOPT_OBJECTIVES_HPP
#define ZOMOPT_OBJECTIVES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "zomopt/estimator.hpp"
#include "zomopt/linalg.hpp"

namespace zomopt {

// Batch ids below zero select the noise-free / held-out view of an objective.
inline constexpr std::int64_t kEvalBatch = -1;

/// f(x; b) = 1/2 || h^{1/2} (x - x_star - jitter_b) ||_F^2 where jitter_b is
/// a seeded per-batch offset of scale batch_noise (zero for eval batches).
/// h must be symmetric positive definite; the smoothness constant is
/// lambda_max(h).
class MatrixQuadratic {
 public:
  MatrixQuadratic(Matrix x_star, Matrix h_left, double batch_noise = 0.0,
                  std::uint64_t noise_seed = 0);

  // Identity curvature, the plain 1/2 ||x - x_star||^2 objective.
  static MatrixQuadratic isotropic(Matrix x_star, double batch_noise = 0.0,
                                   std::uint64_t noise_seed = 0);

  double loss(const Matrix& x, std::int64_t batch) const;
  Matrix gradient(const Matrix& x, std::int64_t batch) const;

  double smoothness_constant() const { return l_smooth_; }
  const Matrix& optimum() const { return x_star_; }
  const Matrix& curvature() const { return h_; }
  Index rows() const { return x_star_.rows(); }
  Index cols() const { return x_star_.cols(); }

 private:
  Matrix batch_offset(std::int64_t batch) const;

  Matrix x_star_;
  Matrix h_;
  Matrix h_sqrt_;
  double l_smooth_ = 0.0;
  double batch_noise_ = 0.0;
  std::uint64_t noise_seed_ = 0;
};

struct LabeledDataset {
  Matrix features;          // n_examples x d
  std::vector<int> labels;  // values in [0, num_classes)
  int num_classes = 0;
};

/// Whitespace-separated numeric text, one example per line: label first,
/// then the feature values. Every line must have the same width.
LabeledDataset load_dataset(const std::string& path);

/// Multinomial logistic regression with a d x C weight matrix: mean
/// cross-entropy over the mini-batch plus l2/2 * ||w||_F^2. Batch ids map to
/// contiguous wrap-around slices of the training set; kEvalBatch scores the
/// held-out set in full.
class LogisticTask {
 public:
  LogisticTask(LabeledDataset train, LabeledDataset heldout, int batch_size,
               double l2 = 0.0);

  // Seeded synthetic task: Gaussian features, labels sampled from a softmax
  // teacher so the problem is learnable but not separable.
  static LogisticTask synthetic(int d, int num_classes, int n_train,
                                int n_heldout, int batch_size, double l2,
                                std::uint64_t seed);

  double loss(const Matrix& w, std::int64_t batch) const;
  Matrix gradient(const Matrix& w, std::int64_t batch) const;

  Index weight_rows() const { return train_.features.cols(); }
  Index weight_cols() const { return train_.num_classes; }
  int batch_size() const { return batch_size_; }

 private:
  std::vector<int> batch_indices(std::int64_t batch) const;

  LabeledDataset train_;
  LabeledDataset heldout_;
  int batch_size_;
  double l2_;
};

/// Two-layer tanh network over a labeled dataset. Each layer is a separate
/// matrix parameter; loss/gradient act on one layer at a time with the other
/// held at its stored value, so independent optimizer instances can drive
/// the two layers.
class TinyMlp {
 public:
  enum class Layer { kFirst, kSecond };

  TinyMlp(LabeledDataset train, LabeledDataset heldout, int hidden,
          int batch_size, std::uint64_t init_seed);

  double loss(Layer which, const Matrix& params, std::int64_t batch) const;
  Matrix gradient(Layer which, const Matrix& params, std::int64_t batch) const;

  const Matrix& w1() const { return w1_; }
  const Matrix& w2() const { return w2_; }
  void set_w1(Matrix w) { w1_ = std::move(w); }
  void set_w2(Matrix w) { w2_ = std::move(w); }

 private:
  std::vector<int> batch_indices(std::int64_t batch) const;

  LabeledDataset train_;
  LabeledDataset heldout_;
  int batch_size_;
  Matrix w1_;  // d x hidden
  Matrix w2_;  // hidden x C
};

/// Central finite differences per entry, 2 * size(x) evaluations. Oracle for
/// validating analytic gradients; throws NonFiniteLoss on a bad evaluation.
Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& f,
                            const Matrix& x, double h);

}  // namespace zomopt

#endif  // ZOMOPT_OBJECTIVES_HPP
