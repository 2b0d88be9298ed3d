// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "zomopt/objectives.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "support.hpp"

using namespace zomopt;

namespace {

// Max per-entry difference scaled by 1 + |entry|.
double relative_entry_gap(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) /
                                  (1.0 + std::abs(a(i, j))));
    }
  }
  return worst;
}

MatrixQuadratic make_conditioned_quadratic(RngStream& rng, Index m, Index n,
                                           double cond, double noise = 0.0) {
  const Matrix x_star = gaussian_matrix(rng, m, n);
  Vector lambda(m);
  for (Index i = 0; i < m; ++i) {
    lambda(i) = std::pow(cond, static_cast<double>(i) / (m - 1.0));
  }
  const Matrix q = testing::random_orthonormal(rng, m, m);
  Matrix h = q * lambda.asDiagonal() * q.transpose();
  h = 0.5 * (h + h.transpose());
  return MatrixQuadratic(x_star, h, noise, 99);
}

}  // namespace

TEST_CASE("quadratic vanishes at the optimum and is deterministic") {
  RngStream rng{1, 0, 0};
  const Matrix x_star = gaussian_matrix(rng, 4, 3);
  const MatrixQuadratic obj = MatrixQuadratic::isotropic(x_star);
  CHECK(obj.loss(x_star, 0) == 0.0);
  CHECK(obj.loss(x_star, kEvalBatch) == 0.0);

  const Matrix x = x_star + gaussian_matrix(rng, 4, 3);
  CHECK(obj.loss(x, 5) == obj.loss(x, 5));
  CHECK(obj.loss(x, 0) == doctest::Approx(0.5 * (x - x_star).squaredNorm()));
}

TEST_CASE("quadratic gradient is h (x - x_star)") {
  RngStream rng{2, 0, 0};
  const MatrixQuadratic obj = make_conditioned_quadratic(rng, 5, 4, 8.0);
  const Matrix x = obj.optimum() + gaussian_matrix(rng, 5, 4);
  const Matrix expected = obj.curvature() * (x - obj.optimum());
  CHECK((obj.gradient(x, 0) - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("quadratic batch noise perturbs train batches only") {
  RngStream rng{3, 0, 0};
  const Matrix x_star = gaussian_matrix(rng, 4, 4);
  const MatrixQuadratic obj = MatrixQuadratic::isotropic(x_star, 0.5, 7);
  CHECK(obj.loss(x_star, kEvalBatch) == 0.0);
  CHECK(obj.loss(x_star, 0) != obj.loss(x_star, 1));
  CHECK(obj.loss(x_star, 0) == obj.loss(x_star, 0));
}

TEST_CASE("quadratic rejects asymmetric or indefinite curvature") {
  RngStream rng{4, 0, 0};
  const Matrix x_star = gaussian_matrix(rng, 3, 2);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(MatrixQuadratic(x_star, asym), DimensionMismatch);

  Matrix indefinite = Matrix::Identity(3, 3);
  indefinite(2, 2) = -1.0;
  CHECK_THROWS_AS(MatrixQuadratic(x_star, indefinite), DimensionMismatch);
}

TEST_CASE("quadratic smoothness certificate with achievable equality") {
  RngStream rng{5, 0, 0};
  const MatrixQuadratic obj = make_conditioned_quadratic(rng, 6, 4, 10.0);
  const double l_smooth = obj.smoothness_constant();
  for (int pair = 0; pair < 100; ++pair) {
    const Matrix x = gaussian_matrix(rng, 6, 4);
    const Matrix y = gaussian_matrix(rng, 6, 4);
    const double lhs = (obj.gradient(x, 0) - obj.gradient(y, 0)).norm();
    CHECK(lhs <= l_smooth * (x - y).norm() * (1.0 + 1e-12));
  }

  // Equality along the top curvature direction.
  const SvdFactors f = svd_oracle(obj.curvature());
  Matrix direction = Matrix::Zero(6, 4);
  direction.col(0) = f.u.col(0);
  const Matrix x = obj.optimum();
  const Matrix y = x + direction;
  const double ratio =
      (obj.gradient(y, 0) - obj.gradient(x, 0)).norm() / (y - x).norm();
  CHECK(ratio == doctest::Approx(l_smooth).epsilon(1e-10));
}

TEST_CASE("finite differences are exact on the quadratic") {
  RngStream rng{6, 0, 0};
  const MatrixQuadratic obj = make_conditioned_quadratic(rng, 3, 3, 5.0);
  const Matrix x = obj.optimum() + gaussian_matrix(rng, 3, 3);
  const Matrix analytic = obj.gradient(x, 2);
  const auto f = [&](const Matrix& p) { return obj.loss(p, 2); };
  // Central differences have no truncation term on a quadratic, so both step
  // sizes agree with the analytic gradient down to rounding.
  CHECK((finite_diff_gradient(f, x, 1e-3) - analytic).norm() <= 1e-9);
  CHECK((finite_diff_gradient(f, x, 1e-4) - analytic).norm() <= 1e-8);
}

TEST_CASE("finite differences on a constant objective are zero") {
  const auto f = [](const Matrix&) { return 4.0; };
  CHECK(finite_diff_gradient(f, Matrix::Zero(3, 2), 1e-4).norm() == 0.0);
}

TEST_CASE("finite difference truncation shrinks as h^2 on the mlp") {
  LabeledDataset train;
  RngStream rng{12, 0, 0};
  train.features = gaussian_matrix(rng, 64, 6);
  train.num_classes = 3;
  for (int i = 0; i < 64; ++i) {
    train.labels.push_back(i % 3);
  }
  LabeledDataset heldout = train;
  TinyMlp mlp(train, heldout, 4, 8, 13);

  const Matrix w1 = mlp.w1();
  const auto f = [&](const Matrix& p) {
    return mlp.loss(TinyMlp::Layer::kFirst, p, 0);
  };
  const Matrix analytic = mlp.gradient(TinyMlp::Layer::kFirst, w1, 0);
  const double err_big = (finite_diff_gradient(f, w1, 1e-2) - analytic).norm();
  const double err_small =
      (finite_diff_gradient(f, w1, 1e-3) - analytic).norm();
  const double ratio = err_big / err_small;
  CHECK(ratio > 30.0);
  CHECK(ratio < 300.0);
}

TEST_CASE("logistic loss at zero weights is log C") {
  const LogisticTask task = LogisticTask::synthetic(16, 5, 128, 32, 8, 0.0, 21);
  const Matrix zero = Matrix::Zero(16, 5);
  CHECK(task.loss(zero, 0) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(task.loss(zero, kEvalBatch) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("logistic gradient columns sum to zero at zero weights") {
  const LogisticTask task = LogisticTask::synthetic(12, 4, 64, 16, 8, 0.0, 22);
  const Matrix g = task.gradient(Matrix::Zero(12, 4), 3);
  const Vector column_sum = g.rowwise().sum();
  CHECK(column_sum.norm() <= 1e-12);
}

TEST_CASE("ridge term shifts loss and gradient") {
  const LogisticTask plain = LogisticTask::synthetic(8, 3, 64, 16, 8, 0.0, 23);
  const LogisticTask ridged = LogisticTask::synthetic(8, 3, 64, 16, 8, 0.1, 23);
  RngStream rng{24, 0, 0};
  const Matrix w = gaussian_matrix(rng, 8, 3);
  CHECK(ridged.loss(w, 0) ==
        doctest::Approx(plain.loss(w, 0) + 0.05 * w.squaredNorm()));
  CHECK((ridged.gradient(w, 0) - plain.gradient(w, 0) - 0.1 * w).norm() <=
        1e-12);
}

TEST_CASE("gradient oracle consistency across all objectives") {
  RngStream rng{25, 0, 0};
  const MatrixQuadratic quad = make_conditioned_quadratic(rng, 4, 3, 6.0);
  const LogisticTask logistic =
      LogisticTask::synthetic(8, 4, 64, 16, 8, 0.01, 26);

  LabeledDataset train;
  train.features = gaussian_matrix(rng, 48, 8);
  train.num_classes = 3;
  for (int i = 0; i < 48; ++i) train.labels.push_back((i * 5 + 1) % 3);
  TinyMlp mlp(train, train, 4, 8, 27);

  for (int point = 0; point < 5; ++point) {
    const std::int64_t batch = point;

    const Matrix xq = quad.optimum() + gaussian_matrix(rng, 4, 3);
    const auto fq = [&](const Matrix& p) { return quad.loss(p, batch); };
    CHECK(relative_entry_gap(quad.gradient(xq, batch),
                             finite_diff_gradient(fq, xq, 1e-5)) <= 1e-4);

    const Matrix wl = 0.3 * gaussian_matrix(rng, 8, 4);
    const auto fl = [&](const Matrix& p) { return logistic.loss(p, batch); };
    CHECK(relative_entry_gap(logistic.gradient(wl, batch),
                             finite_diff_gradient(fl, wl, 1e-5)) <= 1e-4);

    const Matrix w1 = 0.3 * gaussian_matrix(rng, 8, 4);
    const auto f1 = [&](const Matrix& p) {
      return mlp.loss(TinyMlp::Layer::kFirst, p, batch);
    };
    CHECK(relative_entry_gap(mlp.gradient(TinyMlp::Layer::kFirst, w1, batch),
                             finite_diff_gradient(f1, w1, 1e-5)) <= 1e-4);

    const Matrix w2 = 0.3 * gaussian_matrix(rng, 4, 3);
    const auto f2 = [&](const Matrix& p) {
      return mlp.loss(TinyMlp::Layer::kSecond, p, batch);
    };
    CHECK(relative_entry_gap(mlp.gradient(TinyMlp::Layer::kSecond, w2, batch),
                             finite_diff_gradient(f2, w2, 1e-5)) <= 1e-4);
  }
}

TEST_CASE("mlp gradients match finite differences at the 8x4x3 size") {
  RngStream rng{28, 0, 0};
  LabeledDataset train;
  train.features = gaussian_matrix(rng, 40, 8);
  train.num_classes = 3;
  for (int i = 0; i < 40; ++i) train.labels.push_back((i * 7 + 2) % 3);
  TinyMlp mlp(train, train, 4, 10, 29);

  const auto f1 = [&](const Matrix& p) {
    return mlp.loss(TinyMlp::Layer::kFirst, p, 1);
  };
  const auto f2 = [&](const Matrix& p) {
    return mlp.loss(TinyMlp::Layer::kSecond, p, 1);
  };
  CHECK((mlp.gradient(TinyMlp::Layer::kFirst, mlp.w1(), 1) -
         finite_diff_gradient(f1, mlp.w1(), 1e-4))
            .cwiseAbs()
            .maxCoeff() <= 1e-4);
  CHECK((mlp.gradient(TinyMlp::Layer::kSecond, mlp.w2(), 1) -
         finite_diff_gradient(f2, mlp.w2(), 1e-4))
            .cwiseAbs()
            .maxCoeff() <= 1e-4);
}

TEST_CASE("batch mapping is a pure function of the batch id") {
  const LogisticTask task = LogisticTask::synthetic(8, 3, 32, 8, 4, 0.0, 30);
  RngStream rng{31, 0, 0};
  const Matrix w = gaussian_matrix(rng, 8, 3);
  CHECK(task.loss(w, 2) == task.loss(w, 2));
  CHECK(task.gradient(w, 2) == task.gradient(w, 2));
  // Wrap-around: 32 examples at batch size 4 repeat with period 8.
  CHECK(task.loss(w, 1) == task.loss(w, 9));
  CHECK(task.loss(w, 1) != task.loss(w, 2));
}

TEST_CASE("dataset loader round-trips a text file") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "zomopt_dataset_test.txt";
  {
    std::ofstream out(path);
    out << "1 0.5 -1.25 3.0\n";
    out << "0 2.5  0.75 -0.5\n";
    out << "2 -1.0 1.0  2.25\n";
  }
  const LabeledDataset data = load_dataset(path.string());
  CHECK(data.features.rows() == 3);
  CHECK(data.features.cols() == 3);
  CHECK(data.num_classes == 3);
  CHECK(data.labels == std::vector<int>{1, 0, 2});
  CHECK(data.features(0, 1) == -1.25);
  CHECK(data.features(2, 2) == 2.25);

  {
    std::ofstream out(path);
    out << "1 0.5 2.0\n0 1.0\n";  // ragged
  }
  CHECK_THROWS(load_dataset(path.string()));
  fs::remove(path);
}

TEST_CASE("objectives reject mismatched parameter shapes") {
  RngStream rng{32, 0, 0};
  const MatrixQuadratic quad =
      MatrixQuadratic::isotropic(gaussian_matrix(rng, 3, 3));
  CHECK_THROWS_AS(quad.loss(Matrix::Zero(2, 3), 0), DimensionMismatch);
  const LogisticTask task = LogisticTask::synthetic(8, 3, 32, 8, 4, 0.0, 33);
  CHECK_THROWS_AS(task.gradient(Matrix::Zero(7, 3), 0), DimensionMismatch);
}
