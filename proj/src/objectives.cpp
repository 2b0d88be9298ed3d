// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "zomopt/objectives.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace zomopt {
namespace {

// Row-wise softmax cross-entropy pieces shared by the logistic task and MLP.
Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (Index i = 0; i < p.rows(); ++i) {
    const double shift = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - shift).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                     const std::vector<int>& idx) {
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    const double log_z =
        shift + std::log((logits.row(i).array() - shift).exp().sum());
    total += log_z - logits(i, labels[static_cast<size_t>(idx[i])]);
  }
  return total / static_cast<double>(logits.rows());
}

std::vector<int> contiguous_batch(std::int64_t batch, int batch_size,
                                  Index n_examples) {
  std::vector<int> idx(static_cast<size_t>(batch_size));
  const std::int64_t start = batch * batch_size;
  for (int j = 0; j < batch_size; ++j) {
    idx[static_cast<size_t>(j)] =
        static_cast<int>((start + j) % n_examples);
  }
  return idx;
}

std::vector<int> all_indices(Index n) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = static_cast<int>(i);
  return idx;
}

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<Index>(idx.size()), m.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(idx[i]);
  return out;
}

}  // namespace

MatrixQuadratic::MatrixQuadratic(Matrix x_star, Matrix h_left,
                                 double batch_noise, std::uint64_t noise_seed)
    : x_star_(std::move(x_star)),
      h_(std::move(h_left)),
      batch_noise_(batch_noise),
      noise_seed_(noise_seed) {
  if (h_.rows() != h_.cols() || h_.rows() != x_star_.rows()) {
    throw DimensionMismatch("MatrixQuadratic: h_left must be m x m");
  }
  if ((h_ - h_.transpose()).norm() > 1e-10 * (1.0 + h_.norm())) {
    throw DimensionMismatch("MatrixQuadratic: h_left must be symmetric");
  }
  // SPD iff symmetric, no zero singular value, and the polar factor u v^T is
  // the identity (a negative eigenvalue flips the sign of one u column).
  const SvdFactors f = svd_oracle(h_);
  const Index m = h_.rows();
  if (f.sigma(f.sigma.size() - 1) <= 0.0 ||
      (f.u * f.v.transpose() - Matrix::Identity(m, m)).norm() > 1e-8) {
    throw DimensionMismatch("MatrixQuadratic: h_left must be positive definite");
  }
  l_smooth_ = f.sigma(0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h_);
  h_sqrt_ = eig.operatorSqrt();
}

MatrixQuadratic MatrixQuadratic::isotropic(Matrix x_star, double batch_noise,
                                           std::uint64_t noise_seed) {
  const Index m = x_star.rows();
  return MatrixQuadratic(std::move(x_star), Matrix::Identity(m, m),
                         batch_noise, noise_seed);
}

Matrix MatrixQuadratic::batch_offset(std::int64_t batch) const {
  if (batch_noise_ <= 0.0 || batch < 0) {
    return Matrix::Zero(x_star_.rows(), x_star_.cols());
  }
  RngStream rng{noise_seed_, static_cast<std::uint64_t>(batch) + 1, 0};
  return batch_noise_ * gaussian_matrix(rng, x_star_.rows(), x_star_.cols());
}

double MatrixQuadratic::loss(const Matrix& x, std::int64_t batch) const {
  if (x.rows() != x_star_.rows() || x.cols() != x_star_.cols()) {
    throw DimensionMismatch("MatrixQuadratic::loss: parameter shape mismatch");
  }
  const Matrix residual = x - x_star_ - batch_offset(batch);
  return 0.5 * (h_sqrt_ * residual).squaredNorm();
}

Matrix MatrixQuadratic::gradient(const Matrix& x, std::int64_t batch) const {
  if (x.rows() != x_star_.rows() || x.cols() != x_star_.cols()) {
    throw DimensionMismatch(
        "MatrixQuadratic::gradient: parameter shape mismatch");
  }
  return h_ * (x - x_star_ - batch_offset(batch));
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    double label;
    if (!(fields >> label)) continue;  // blank line
    std::vector<double> feat;
    double value;
    while (fields >> value) feat.push_back(value);
    if (!rows.empty() && feat.size() != rows.front().size()) {
      throw std::runtime_error("load_dataset: ragged line in " + path);
    }
    labels.push_back(static_cast<int>(label));
    rows.push_back(std::move(feat));
  }
  if (rows.empty()) throw std::runtime_error("load_dataset: empty file " + path);
  LabeledDataset data;
  data.features.resize(static_cast<Index>(rows.size()),
                       static_cast<Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      data.features(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  data.labels = std::move(labels);
  data.num_classes = 0;
  for (const int label : data.labels) {
    if (label < 0) throw std::runtime_error("load_dataset: negative label");
    data.num_classes = std::max(data.num_classes, label + 1);
  }
  return data;
}

LogisticTask::LogisticTask(LabeledDataset train, LabeledDataset heldout,
                           int batch_size, double l2)
    : train_(std::move(train)),
      heldout_(std::move(heldout)),
      batch_size_(batch_size),
      l2_(l2) {
  if (batch_size_ < 1 || batch_size_ > train_.features.rows()) {
    throw DimensionMismatch("LogisticTask: bad batch size");
  }
  for (const int label : train_.labels) {
    if (label >= train_.num_classes) {
      throw DimensionMismatch("LogisticTask: label out of range");
    }
  }
  if (!train_.features.allFinite()) {
    throw DimensionMismatch("LogisticTask: non-finite features");
  }
}

LogisticTask LogisticTask::synthetic(int d, int num_classes, int n_train,
                                     int n_heldout, int batch_size, double l2,
                                     std::uint64_t seed) {
  RngStream rng{seed, 0x10915, 0};
  const Matrix teacher = gaussian_matrix(rng, d, num_classes);
  auto make = [&](int n) {
    LabeledDataset data;
    data.features = gaussian_matrix(rng, n, d);
    data.num_classes = num_classes;
    data.labels.resize(static_cast<size_t>(n));
    const Matrix p = softmax_rows(data.features * teacher);
    for (int i = 0; i < n; ++i) {
      double mass = rng.next_uniform();
      int label = num_classes - 1;
      for (int c = 0; c < num_classes; ++c) {
        mass -= p(i, c);
        if (mass <= 0.0) {
          label = c;
          break;
        }
      }
      data.labels[static_cast<size_t>(i)] = label;
    }
    return data;
  };
  LabeledDataset train = make(n_train);
  LabeledDataset heldout = make(n_heldout);
  return LogisticTask(std::move(train), std::move(heldout), batch_size, l2);
}

std::vector<int> LogisticTask::batch_indices(std::int64_t batch) const {
  if (batch < 0) return all_indices(heldout_.features.rows());
  return contiguous_batch(batch, batch_size_, train_.features.rows());
}

double LogisticTask::loss(const Matrix& w, std::int64_t batch) const {
  if (w.rows() != weight_rows() || w.cols() != weight_cols()) {
    throw DimensionMismatch("LogisticTask::loss: weight shape mismatch");
  }
  const LabeledDataset& data = batch < 0 ? heldout_ : train_;
  const std::vector<int> idx = batch_indices(batch);
  const Matrix x = gather_rows(data.features, idx);
  return cross_entropy(x * w, data.labels, idx) + 0.5 * l2_ * w.squaredNorm();
}

Matrix LogisticTask::gradient(const Matrix& w, std::int64_t batch) const {
  if (w.rows() != weight_rows() || w.cols() != weight_cols()) {
    throw DimensionMismatch("LogisticTask::gradient: weight shape mismatch");
  }
  const LabeledDataset& data = batch < 0 ? heldout_ : train_;
  const std::vector<int> idx = batch_indices(batch);
  const Matrix x = gather_rows(data.features, idx);
  Matrix delta = softmax_rows(x * w);
  for (Index i = 0; i < delta.rows(); ++i) {
    delta(i, data.labels[static_cast<size_t>(idx[static_cast<size_t>(i)])]) -= 1.0;
  }
  return x.transpose() * delta / static_cast<double>(idx.size()) + l2_ * w;
}

TinyMlp::TinyMlp(LabeledDataset train, LabeledDataset heldout, int hidden,
                 int batch_size, std::uint64_t init_seed)
    : train_(std::move(train)),
      heldout_(std::move(heldout)),
      batch_size_(batch_size) {
  const Index d = train_.features.cols();
  RngStream rng{init_seed, 0x310b, 0};
  w1_ = gaussian_matrix(rng, d, hidden) / std::sqrt(static_cast<double>(d));
  w2_ = gaussian_matrix(rng, hidden, train_.num_classes) /
        std::sqrt(static_cast<double>(hidden));
  if (!std::isfinite(loss(Layer::kFirst, w1_, 0))) {
    throw DimensionMismatch("TinyMlp: loss not finite at initialization");
  }
}

std::vector<int> TinyMlp::batch_indices(std::int64_t batch) const {
  if (batch < 0) return all_indices(heldout_.features.rows());
  return contiguous_batch(batch, batch_size_, train_.features.rows());
}

double TinyMlp::loss(Layer which, const Matrix& params,
                     std::int64_t batch) const {
  const Matrix& w1 = which == Layer::kFirst ? params : w1_;
  const Matrix& w2 = which == Layer::kSecond ? params : w2_;
  if (w1.rows() != w1_.rows() || w1.cols() != w1_.cols() ||
      w2.rows() != w2_.rows() || w2.cols() != w2_.cols()) {
    throw DimensionMismatch("TinyMlp::loss: layer shape mismatch");
  }
  const LabeledDataset& data = batch < 0 ? heldout_ : train_;
  const std::vector<int> idx = batch_indices(batch);
  const Matrix x = gather_rows(data.features, idx);
  const Matrix hidden = (x * w1).array().tanh();
  return cross_entropy(hidden * w2, data.labels, idx);
}

Matrix TinyMlp::gradient(Layer which, const Matrix& params,
                         std::int64_t batch) const {
  const Matrix& w1 = which == Layer::kFirst ? params : w1_;
  const Matrix& w2 = which == Layer::kSecond ? params : w2_;
  const LabeledDataset& data = batch < 0 ? heldout_ : train_;
  const std::vector<int> idx = batch_indices(batch);
  const Matrix x = gather_rows(data.features, idx);
  const Matrix hidden = (x * w1).array().tanh();
  Matrix delta = softmax_rows(hidden * w2);
  for (Index i = 0; i < delta.rows(); ++i) {
    delta(i, data.labels[static_cast<size_t>(idx[static_cast<size_t>(i)])]) -= 1.0;
  }
  const double scale = 1.0 / static_cast<double>(idx.size());
  if (which == Layer::kSecond) {
    return hidden.transpose() * delta * scale;
  }
  const Matrix back = (delta * w2.transpose()).array() *
                      (1.0 - hidden.array().square());
  return x.transpose() * back * scale;
}

Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& f,
                            const Matrix& x, double h) {
  if (!(h > 0.0)) throw DimensionMismatch("finite_diff_gradient: need h > 0");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      probe(i, j) = x(i, j) + h;
      const double plus = f(probe);
      probe(i, j) = x(i, j) - h;
      const double minus = f(probe);
      probe(i, j) = x(i, j);
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NonFiniteLoss("finite_diff_gradient: non-finite evaluation");
      }
      grad(i, j) = (plus - minus) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace zomopt
