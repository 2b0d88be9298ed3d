// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ZOMOPT_SPECTRAL_HPP
#define ZOMOPT_SPECTRAL_HPP

#include "zomopt/linalg.hpp"

namespace zomopt {

struct DegenerateGap : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ColdRestartLoop : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact polar factor U V^T from the compact SVD; singular values below
/// 1e-10 * sigma_1 are treated as zero and their directions dropped.
/// Oracle for tests and baselines, not for optimizer hot paths.
Matrix msign_oracle(const Matrix& g);

/// Rank-k partial orthogonalization U_k V_k^T from the compact SVD.
/// Throws DegenerateGap when sigma_k - sigma_{k+1} < 1e-10 * sigma_1: a tied
/// gap makes the dominant subspace non-unique and the oracle refuses to pick
/// an arbitrary basis.
Matrix msign_k_oracle(const Matrix& g, Index k);

/// Quintic Newton-Schulz polynomial x <- a*x + b*x^3 + c*x^5 applied to the
/// singular values. The triple is chosen so that 1 is an attracting fixed
/// point (a+b+c = 1, f'(1) = 0) with the steepest slope at the origin whose
/// overshoot hump still lies inside the basin of attraction.
struct NewtonSchulzCoefficients {
  double a;
  double b;
  double c;
};
inline constexpr NewtonSchulzCoefficients kNewtonSchulzQuintic{2.5, -2.5, 1.0};

/// Newton-Schulz approximation of msign_oracle(g). The input is scaled by a
/// deterministic power-iteration estimate of its spectral norm before
/// iterating. Always returns; accuracy degrades as sigma_1/sigma_r grows.
/// A zero input short-circuits to a zero matrix.
Matrix newton_schulz(const Matrix& g, int iters);

/// Largest singular value of g, estimated with a fixed number of Gram-matrix
/// power iterations from a deterministic start vector.
double spectral_norm_estimate(const Matrix& g, int power_steps = 30);

/// Warm-start cache for streaming power iteration: the rank-k right singular
/// subspace carried between optimizer steps.
struct SpiCache {
  Matrix v;       // n x k, orthonormal columns
  Index k = 0;
  long age = 0;   // steps since the last cold start
  RngStream rng;  // owns the cold-start sampling

  static SpiCache cold_start(Index n, Index k, RngStream rng);
};

struct PartialOrthogonalization {
  Matrix o;  // r x n, equals u * v^T
  Matrix u;  // r x k, column-normalized
  Matrix v;  // n x k, orthonormal
};

/// One streaming power-iteration pass on m (r x n):
///   q = m^T (m v);  v' = QR(q);  u = normalize_columns(m v');  o = u v'^T.
/// Convergence is amortized across optimizer steps via the warm start, so a
/// single pass per step is intentional. If QR reports rank deficiency the
/// cache is cold-restarted from a Gaussian draw and the pass retried once;
/// a second failure throws ColdRestartLoop (e.g. zero momentum).
PartialOrthogonalization spi_step(const Matrix& m, SpiCache& cache);

/// Spectral norm of (v_perp^T v)(v_star^T v)^{-1}, the tangent of the
/// principal angles between span(v) and span(v_star). Returns +infinity when
/// v_star^T v is singular (the subspaces are orthogonal).
double tracking_error_tangent(const Matrix& v, const Matrix& v_star,
                              const Matrix& v_perp);

}  // namespace zomopt

#endif  // ZOMOPT_SPECTRAL_HPP
