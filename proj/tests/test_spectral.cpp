// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "zomopt/spectral.hpp"

#include <cmath>
#include <limits>

#include <doctest.h>

#include "support.hpp"

using namespace zomopt;

namespace {

// Plane rotation of columns a and b by angle theta, applied in place.
void rotate_columns(Matrix& v, Index a, Index b, double theta) {
  const Vector va = v.col(a);
  const Vector vb = v.col(b);
  v.col(a) = std::cos(theta) * va + std::sin(theta) * vb;
  v.col(b) = -std::sin(theta) * va + std::cos(theta) * vb;
}

}  // namespace

TEST_CASE("msign oracle leaves orthogonal matrices fixed") {
  RngStream rng{1, 0, 0};
  const Matrix q = testing::random_orthonormal(rng, 5, 5);
  CHECK((msign_oracle(q) - q).norm() <= 1e-10);
}

TEST_CASE("msign oracle on diagonal input") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 5.0;
  d(1, 1) = 0.1;
  CHECK((msign_oracle(d) - Matrix::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("msign oracle output has unit singular values") {
  RngStream rng{2, 0, 0};
  const Matrix g = gaussian_matrix(rng, 5, 3);
  const SvdFactors f = svd_oracle(msign_oracle(g));
  for (Index i = 0; i < f.sigma.size(); ++i) {
    CHECK(f.sigma(i) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("msign_k oracle truncates a diagonal spectrum") {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 5.0;
  d(1, 1) = 3.0;
  d(2, 2) = 1.0;
  Matrix expected = Matrix::Zero(3, 3);
  expected(0, 0) = 1.0;
  expected(1, 1) = 1.0;
  CHECK((msign_k_oracle(d, 2) - expected).norm() <= 1e-12);
}

TEST_CASE("msign_k at full rank reduces to msign") {
  RngStream rng{3, 0, 0};
  Vector sigma(3);
  sigma << 4.0, 2.0, 0.5;
  const Matrix g = testing::planted_spectrum(rng, 6, 3, sigma);
  CHECK((msign_k_oracle(g, 3) - msign_oracle(g)).norm() <= 1e-9);
}

TEST_CASE("msign_k matches the planted top-k factors") {
  RngStream rng{4, 0, 0};
  Vector sigma(6);
  sigma << 10.0, 5.0, 1.0, 0.5, 0.1, 0.01;
  const Matrix u = testing::random_orthonormal(rng, 8, 6);
  const Matrix v = testing::random_orthonormal(rng, 6, 6);
  const Matrix g = u * sigma.asDiagonal() * v.transpose();
  const Matrix expected = u.leftCols(2) * v.leftCols(2).transpose();
  CHECK((msign_k_oracle(g, 2) - expected).norm() <= 1e-8);
}

TEST_CASE("msign_k refuses a degenerate gap") {
  RngStream rng{5, 0, 0};
  Vector sigma(4);
  sigma << 7.0, 3.0, 3.0, 1.0;  // tie exactly at the k = 2 boundary
  const Matrix g = testing::planted_spectrum(rng, 6, 5, sigma);
  CHECK_THROWS_AS(msign_k_oracle(g, 2), DegenerateGap);
  CHECK_THROWS_AS(msign_k_oracle(Matrix::Zero(3, 3), 1), DegenerateGap);
  CHECK_THROWS_AS(msign_k_oracle(g, 9), DimensionMismatch);
}

TEST_CASE("msign_k is idempotent on its own output") {
  RngStream rng{6, 0, 0};
  Vector sigma(5);
  sigma << 6.0, 3.0, 1.5, 0.7, 0.3;
  const Matrix g = testing::planted_spectrum(rng, 9, 7, sigma);
  const Matrix once = msign_k_oracle(g, 3);
  CHECK((msign_k_oracle(once, 3) - once).norm() <= 1e-8);
}

TEST_CASE("newton-schulz fixes orthogonal inputs at any iteration count") {
  RngStream rng{7, 0, 0};
  const Matrix q = testing::random_orthonormal(rng, 4, 4);
  for (const int iters : {1, 2, 5, 12}) {
    CHECK((newton_schulz(q, iters) - q).norm() <= 1e-6);
  }
}

TEST_CASE("newton-schulz on diag(2, 0.5)") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 0.5;
  const Matrix out = newton_schulz(d, 5);
  const Matrix target = msign_oracle(d);
  CHECK(std::abs(out(0, 0) - target(0, 0)) <= 0.05);
  CHECK(std::abs(out(1, 1) - target(1, 1)) <= 0.05);
  CHECK(std::abs(out(0, 1)) <= 0.05);
}

TEST_CASE("newton-schulz tracks the oracle on well-conditioned input") {
  RngStream rng{8, 0, 0};
  Vector sigma(64);
  for (Index i = 0; i < 64; ++i) {
    sigma(i) = 10.0 * std::pow(0.1, static_cast<double>(i) / 63.0);
  }
  const Matrix g = testing::planted_spectrum(rng, 64, 64, sigma);
  const Matrix target = msign_oracle(g);
  CHECK((newton_schulz(g, 5) - target).norm() <= 0.05 * std::sqrt(64.0));
}

TEST_CASE("newton-schulz distance to the oracle is monotone in iterations") {
  RngStream rng{9, 0, 0};
  Vector sigma(16);
  for (Index i = 0; i < 16; ++i) {
    sigma(i) = 8.0 * std::pow(0.125, static_cast<double>(i) / 15.0);
  }
  const Matrix g = testing::planted_spectrum(rng, 16, 16, sigma);
  const Matrix target = msign_oracle(g);
  double previous = std::numeric_limits<double>::infinity();
  for (const int iters : {1, 3, 5, 10}) {
    const double distance = (newton_schulz(g, iters) - target).norm();
    CHECK(distance <= previous + 1e-12);
    previous = distance;
  }
}

TEST_CASE("newton-schulz of a zero matrix is zero") {
  CHECK(newton_schulz(Matrix::Zero(3, 5), 5).norm() == 0.0);
}

TEST_CASE("spi step on an axis-aligned matrix") {
  Matrix m(2, 3);
  m << 3.0, 0.0, 0.0,
       0.0, 1.0, 0.0;
  SpiCache cache;
  cache.k = 1;
  cache.v = Matrix::Zero(3, 1);
  cache.v(0, 0) = 1.0;
  cache.rng = RngStream{1, 1, 0};

  const PartialOrthogonalization po = spi_step(m, cache);
  Matrix expected_o = Matrix::Zero(2, 3);
  expected_o(0, 0) = 1.0;
  CHECK((po.v - cache.v).norm() == 0.0);
  CHECK(po.u(0, 0) == doctest::Approx(1.0));
  CHECK(std::abs(po.u(1, 0)) <= 1e-15);
  CHECK((po.o - expected_o).norm() <= 1e-15);
  CHECK(cache.age == 1);
}

TEST_CASE("spi step fixes the true dominant subspace") {
  RngStream rng{10, 0, 0};
  Vector sigma(6);
  sigma << 9.0, 7.0, 3.0, 2.0, 1.0, 0.5;
  const Matrix m = testing::planted_spectrum(rng, 8, 10, sigma);
  const SvdFactors f = svd_oracle(m);

  SpiCache cache;
  cache.k = 2;
  cache.v = f.v.leftCols(2);
  cache.rng = RngStream{11, 0, 0};
  const PartialOrthogonalization po = spi_step(m, cache);

  // Same span: the projector onto the tracked subspace is unchanged.
  const Matrix p_before = f.v.leftCols(2) * f.v.leftCols(2).transpose();
  const Matrix p_after = po.v * po.v.transpose();
  CHECK((p_before - p_after).norm() <= 1e-10);
}

TEST_CASE("spi converges to the rank-k oracle on a static matrix") {
  RngStream rng{12, 0, 0};
  Vector sigma(8);
  sigma << 8.0, 4.0, 2.0, 1.0, 0.6, 0.4, 0.25, 0.15;  // gap 0.25 at k = 2
  const Matrix m = testing::planted_spectrum(rng, 16, 20, sigma);
  const Matrix target = msign_k_oracle(m, 2);

  SpiCache cache = SpiCache::cold_start(20, 2, RngStream{13, 0, 0});
  PartialOrthogonalization po;
  for (int step = 0; step < 50; ++step) po = spi_step(m, cache);
  CHECK((po.o - target).norm() <= 1e-6);
  CHECK(cache.age == 50);
}

TEST_CASE("spi output norm is sqrt(k) with no degenerate columns") {
  RngStream rng{14, 0, 0};
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = gaussian_matrix(rng, 7, 11);
    SpiCache cache = SpiCache::cold_start(11, 3, rng.split(trial));
    const PartialOrthogonalization po = spi_step(m, cache);
    CHECK(std::abs(po.o.norm() - std::sqrt(3.0)) <= 1e-8);
    CHECK((po.o - po.u * po.v.transpose()).norm() <= 1e-14);
    CHECK((po.v.transpose() * po.v - Matrix::Identity(3, 3)).norm() <= 1e-10);
  }
}

TEST_CASE("spi cold-restarts once and then reports a loop") {
  // Rank-one input cannot support a rank-2 subspace: the first pass and the
  // restarted pass both hit rank deficiency.
  RngStream rng{15, 0, 0};
  const Matrix u = gaussian_matrix(rng, 6, 1);
  const Matrix v = gaussian_matrix(rng, 9, 1);
  const Matrix m = u * v.transpose();
  SpiCache cache = SpiCache::cold_start(9, 2, rng.split(1));
  CHECK_THROWS_AS(spi_step(m, cache), ColdRestartLoop);

  SpiCache zero_cache = SpiCache::cold_start(4, 1, rng.split(2));
  CHECK_THROWS_AS(spi_step(Matrix::Zero(3, 4), zero_cache), ColdRestartLoop);
}

TEST_CASE("tracking error tangent on exact and orthogonal subspaces") {
  RngStream rng{16, 0, 0};
  const Matrix basis = testing::random_orthonormal(rng, 6, 6);
  const Matrix v_star = basis.leftCols(2);
  const Matrix v_perp = basis.rightCols(4);
  CHECK(tracking_error_tangent(v_star, v_star, v_perp) <= 1e-12);
  CHECK(std::isinf(
      tracking_error_tangent(v_perp.leftCols(2), v_star, v_perp)));
}

TEST_CASE("tracking error tangent of a planar rotation") {
  Matrix v_star(2, 1), v_perp(2, 1), v(2, 1);
  v_star << 1.0, 0.0;
  v_perp << 0.0, 1.0;
  const double theta = M_PI / 6.0;
  v << std::cos(theta), std::sin(theta);
  CHECK(tracking_error_tangent(v, v_star, v_perp) ==
        doctest::Approx(std::tan(theta)).epsilon(1e-12));
}

TEST_CASE("spi contraction on a static matrix") {
  RngStream rng{17, 0, 0};
  Vector sigma(8);
  sigma << 8.0, 4.0, 2.0, 1.0, 0.5, 0.4, 0.3, 0.2;  // gamma = 0.25 at k = 4
  const double gamma = 0.25;
  const Matrix m = testing::planted_spectrum(rng, 12, 14, sigma);

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Matrix v_star = svd.matrixV().leftCols(4);
  const Matrix v_perp = svd.matrixV().rightCols(10);

  for (int start = 0; start < 20; ++start) {
    SpiCache cache = SpiCache::cold_start(14, 4, rng.split(100 + start));
    double error = tracking_error_tangent(cache.v, v_star, v_perp);
    for (int step = 0; step < 30; ++step) {
      spi_step(m, cache);
      const double next = tracking_error_tangent(cache.v, v_star, v_perp);
      if (std::isfinite(error)) {
        CHECK(next <= gamma * error + 1e-9);
      }
      error = next;
    }
  }
}

TEST_CASE("spi tracks a slowly rotating subspace") {
  const Index r = 12, n = 16, p = 12, k = 4;
  const double gamma = 0.25;
  const double delta = 0.01;
  const double theta = std::asin(delta);
  const double bound = 2.0 * gamma * delta / (1.0 - gamma);

  Vector sigma(p);
  sigma << 8.0, 7.0, 6.5, 6.0, 3.0, 2.5, 2.0, 1.5, 1.2, 1.0, 0.8, 0.6;
  REQUIRE(sigma(k) / sigma(k - 1) == doctest::Approx(std::sqrt(gamma)));

  for (int seed = 0; seed < 10; ++seed) {
    RngStream rng{static_cast<std::uint64_t>(200 + seed), 0, 0};
    const Matrix u = testing::random_orthonormal(rng, r, p);
    Matrix v = testing::random_orthonormal(rng, n, n);
    SpiCache cache = SpiCache::cold_start(n, k, rng.split(1));

    for (int step = 0; step < 120; ++step) {
      rotate_columns(v, k - 1, k, theta);  // drift one top direction
      const Matrix m = u * sigma.asDiagonal() * v.leftCols(p).transpose();
      spi_step(m, cache);
      if (step >= 100) {
        const double err = tracking_error_tangent(
            cache.v, v.leftCols(k), v.rightCols(n - k));
        CHECK(err <= bound);
      }
    }
  }
}
