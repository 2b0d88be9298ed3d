// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "zomopt/estimator.hpp"

#include <cmath>

namespace zomopt {
namespace {

double checked_eval(const LossFn& loss, const Matrix& x, std::int64_t batch) {
  const double value = loss(x, batch);
  if (!std::isfinite(value)) {
    throw NonFiniteLoss("objective returned a non-finite value at batch " +
                        std::to_string(batch));
  }
  return value;
}

}  // namespace

SubspaceState SubspaceState::init(Index m, Index r, long nu, RngStream rng) {
  if (r < 1 || r > m) {
    throw DimensionMismatch("SubspaceState: need 1 <= r <= m");
  }
  if (nu < 1) throw DimensionMismatch("SubspaceState: need nu >= 1");
  SubspaceState sub;
  sub.r = r;
  sub.nu = nu;
  sub.rng = rng;
  sub.a = qr_decompose(gaussian_matrix(sub.rng, m, r)).q;
  return sub;
}

Matrix rge_full(const LossFn& loss, const Matrix& x, const RgeConfig& cfg,
                std::int64_t batch, RngStream& rng, QueryLedger& ledger) {
  cfg.validate();
  Matrix estimate = Matrix::Zero(x.rows(), x.cols());
  for (int i = 0; i < cfg.n_queries; ++i) {
    const Matrix z = gaussian_matrix(rng, x.rows(), x.cols());
    const double plus = checked_eval(loss, x + cfg.mu * z, batch);
    const double minus = checked_eval(loss, x - cfg.mu * z, batch);
    ledger.add("rge_full", 2);
    estimate += ((plus - minus) / (2.0 * cfg.mu)) * z;
  }
  return estimate / cfg.n_queries;
}

Matrix rge_subspace(const LossFn& loss, const Matrix& x,
                    const SubspaceState& sub, const RgeConfig& cfg,
                    std::int64_t batch, RngStream& rng, QueryLedger& ledger) {
  cfg.validate();
  if (sub.a.rows() != x.rows()) {
    throw DimensionMismatch("rge_subspace: subspace rows != parameter rows");
  }
  Matrix estimate = Matrix::Zero(sub.r, x.cols());
  for (int i = 0; i < cfg.n_queries; ++i) {
    const Matrix b = gaussian_matrix(rng, sub.r, x.cols());
    const Matrix direction = sub.a * b;
    const double plus = checked_eval(loss, x + cfg.mu * direction, batch);
    const double minus = checked_eval(loss, x - cfg.mu * direction, batch);
    ledger.add("rge_subspace", 2);
    estimate += ((plus - minus) / (2.0 * cfg.mu)) * b;
  }
  return estimate / cfg.n_queries;
}

Matrix refresh_subspace(SubspaceState& sub) {
  Matrix a_old = std::move(sub.a);
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      sub.a = qr_decompose(gaussian_matrix(sub.rng, a_old.rows(), sub.r)).q;
      sub.steps_since_refresh = 0;
      return a_old;
    } catch (const RankDeficient&) {
      // Probability-zero at these dimensions; one resample is enough.
    }
  }
  throw RankDeficient("refresh_subspace: repeated rank-deficient draws");
}

McEstimate smoothed_loss_mc(const LossFn& loss, const Matrix& x, double mu,
                            int samples, RngStream& rng, SmoothingLaw law) {
  if (samples < 2) {
    throw DimensionMismatch("smoothed_loss_mc: need samples >= 2");
  }
  const double d = static_cast<double>(x.size());
  // Welford accumulation: a constant sample sequence (e.g. mu = 0) yields
  // the exact mean and exactly zero variance.
  double mean = 0.0;
  double m2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    Matrix u = gaussian_matrix(rng, x.rows(), x.cols());
    if (law == SmoothingLaw::kUnitBall) {
      const double norm = u.norm();
      const double radius = std::pow(rng.next_uniform(), 1.0 / d);
      u *= norm > kColumnCollapseTol ? radius / norm : 0.0;
    }
    const double value = checked_eval(loss, x + mu * u, 0);
    const double delta = value - mean;
    mean += delta / (s + 1);
    m2 += delta * (value - mean);
  }
  McEstimate out;
  out.mean = mean;
  out.std_error = std::sqrt(std::max(0.0, m2 / (samples - 1)) / samples);
  return out;
}

}  // namespace zomopt
