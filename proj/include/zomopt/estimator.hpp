// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ZOMOPT_ESTIMATOR_HPP
#define ZOMOPT_ESTIMATOR_HPP

#include <cstdint>
#include <functional>

#include "zomopt/linalg.hpp"
#include "zomopt/query_ledger.hpp"

namespace zomopt {

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pointwise objective evaluation: (parameters, batch id) -> scalar loss.
/// Must be deterministic for a fixed (params, batch) pair.
using LossFn = std::function<double(const Matrix&, std::int64_t)>;

struct RgeConfig {
  double mu = 1e-3;   // smoothing radius, parameter-space units
  int n_queries = 1;  // perturbations per estimate

  void validate() const {
    if (!(mu > 0.0)) throw DimensionMismatch("RgeConfig: mu must be > 0");
    if (n_queries < 1)
      throw DimensionMismatch("RgeConfig: n_queries must be >= 1");
  }
};

/// Orthonormal sampling subspace with its lazy refresh schedule. The stream
/// in here owns every draw used to resample the basis.
struct SubspaceState {
  Matrix a;  // m x r, orthonormal columns
  Index r = 0;
  long nu = 1;  // refresh interval in steps
  long steps_since_refresh = 0;
  RngStream rng;

  static SubspaceState init(Index m, Index r, long nu, RngStream rng);
};

/// Two-point randomized gradient estimate over full-space Gaussian
/// perturbations:
///   (1/N) sum_i [(F(x + mu Z_i) - F(x - mu Z_i)) / (2 mu)] Z_i.
/// Both evaluations of a pair use the same batch id. Consumes exactly
/// 2 * n_queries ledger queries; throws NonFiniteLoss if an evaluation
/// escapes the objective's domain.
Matrix rge_full(const LossFn& loss, const Matrix& x, const RgeConfig& cfg,
                std::int64_t batch, RngStream& rng, QueryLedger& ledger);

/// Subspace variant with rank-r perturbations a * B_i, B_i Gaussian r x n.
/// The estimate lives in the reduced r x n space; perturbation matrices are
/// regenerated from the stream one at a time, never stored in bulk.
Matrix rge_subspace(const LossFn& loss, const Matrix& x,
                    const SubspaceState& sub, const RgeConfig& cfg,
                    std::int64_t batch, RngStream& rng, QueryLedger& ledger);

/// Resamples the basis as QR of a fresh Gaussian draw and resets the refresh
/// counter. Returns the previous basis so the caller can project momentum.
/// Retries the draw once if QR reports rank deficiency.
Matrix refresh_subspace(SubspaceState& sub);

enum class SmoothingLaw {
  kGaussian,  // u with i.i.d. N(0,1) entries
  kUnitBall,  // u uniform in the unit Frobenius ball
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of the smoothed objective E[f(x + mu u)] together
/// with its standard error. Requires samples >= 2.
McEstimate smoothed_loss_mc(const LossFn& loss, const Matrix& x, double mu,
                            int samples, RngStream& rng,
                            SmoothingLaw law = SmoothingLaw::kGaussian);

}  // namespace zomopt

#endif  // ZOMOPT_ESTIMATOR_HPP
