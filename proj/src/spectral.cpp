// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "zomopt/spectral.hpp"

#include <cmath>
#include <limits>

namespace zomopt {
namespace {

constexpr double kRelSpectrumTol = 1e-10;

}  // namespace

Matrix msign_oracle(const Matrix& g) {
  const SvdFactors f = svd_oracle(g);
  const double cutoff = f.sigma.size() > 0 ? kRelSpectrumTol * f.sigma(0) : 0.0;
  Index keep = 0;
  while (keep < f.sigma.size() && f.sigma(keep) > cutoff) ++keep;
  if (keep == 0) return Matrix::Zero(g.rows(), g.cols());
  return f.u.leftCols(keep) * f.v.leftCols(keep).transpose();
}

Matrix msign_k_oracle(const Matrix& g, Index k) {
  if (k < 1 || k > std::min(g.rows(), g.cols())) {
    throw DimensionMismatch("msign_k_oracle: k = " + std::to_string(k) +
                            " out of range for " + std::to_string(g.rows()) +
                            "x" + std::to_string(g.cols()));
  }
  const SvdFactors f = svd_oracle(g);
  if (f.sigma(0) <= 0.0) {
    throw DegenerateGap("msign_k_oracle: zero matrix has no dominant subspace");
  }
  const double next = k < f.sigma.size() ? f.sigma(k) : 0.0;
  if (f.sigma(k - 1) - next < kRelSpectrumTol * f.sigma(0)) {
    throw DegenerateGap("msign_k_oracle: sigma_k tied with sigma_{k+1}");
  }
  return f.u.leftCols(k) * f.v.leftCols(k).transpose();
}

double spectral_norm_estimate(const Matrix& g, int power_steps) {
  // Fixed-seed start keeps the estimate a pure function of g.
  RngStream rng{0x5eedULL, 0x0ddba11ULL, 0};
  Vector v = Vector::Zero(g.cols());
  for (int attempt = 0; attempt < 4; ++attempt) {
    for (Index i = 0; i < v.size(); ++i) v(i) = rng.next_normal();
    v.normalize();
    bool alive = true;
    for (int step = 0; step < power_steps; ++step) {
      Vector w = g.transpose() * (g * v);
      const double norm = w.norm();
      if (norm <= kColumnCollapseTol * kColumnCollapseTol) {
        alive = false;  // start vector fell into the null space; redraw
        break;
      }
      v = w / norm;
    }
    if (alive) return (g * v).norm();
  }
  return 0.0;
}

Matrix newton_schulz(const Matrix& g, int iters) {
  const double scale = spectral_norm_estimate(g);
  if (scale <= kColumnCollapseTol) return Matrix::Zero(g.rows(), g.cols());

  const bool transposed = g.rows() > g.cols();
  Matrix x = transposed ? Matrix(g.transpose() / scale) : Matrix(g / scale);
  const auto [a, b, c] = kNewtonSchulzQuintic;
  for (int i = 0; i < iters; ++i) {
    const Matrix gram = x * x.transpose();
    x = a * x + (b * gram + c * gram * gram) * x;
  }
  return transposed ? Matrix(x.transpose()) : x;
}

SpiCache SpiCache::cold_start(Index n, Index k, RngStream rng) {
  SpiCache cache;
  cache.k = k;
  cache.rng = rng;
  cache.v = qr_decompose(gaussian_matrix(cache.rng, n, k)).q;
  cache.age = 0;
  return cache;
}

PartialOrthogonalization spi_step(const Matrix& m, SpiCache& cache) {
  if (cache.k > std::min(m.rows(), m.cols()) || cache.v.rows() != m.cols()) {
    throw DimensionMismatch("spi_step: cache rank/shape inconsistent with m");
  }
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      const Matrix q = m.transpose() * (m * cache.v);
      Matrix v_next = qr_decompose(q).q;
      PartialOrthogonalization out;
      out.u = normalize_columns(m * v_next);
      out.v = std::move(v_next);
      out.o = out.u * out.v.transpose();
      cache.v = out.v;
      ++cache.age;
      return out;
    } catch (const RankDeficient&) {
      // m nearly annihilates the cached subspace; restart from a fresh draw.
      cache = SpiCache::cold_start(m.cols(), cache.k, cache.rng);
    }
  }
  throw ColdRestartLoop(
      "spi_step: two consecutive rank-deficient passes (degenerate input)");
}

double tracking_error_tangent(const Matrix& v, const Matrix& v_star,
                              const Matrix& v_perp) {
  if (v.rows() != v_star.rows() || v.cols() != v_star.cols() ||
      v_perp.rows() != v.rows() || v_star.cols() + v_perp.cols() != v.rows()) {
    throw DimensionMismatch("tracking_error_tangent: basis shapes mismatch");
  }
  const Matrix c = v_star.transpose() * v;
  const Matrix d = v_perp.transpose() * v;
  const Eigen::JacobiSVD<Matrix> c_svd(c, Eigen::ComputeThinU |
                                              Eigen::ComputeThinV);
  if (c_svd.singularValues().minCoeff() <= kColumnCollapseTol) {
    return std::numeric_limits<double>::infinity();
  }
  const Matrix t =
      c.transpose().partialPivLu().solve(d.transpose()).transpose();
  return Eigen::JacobiSVD<Matrix>(t).singularValues()(0);
}

}  // namespace zomopt
