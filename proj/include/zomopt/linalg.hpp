// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ZOMOPT_LINALG_HPP
#define ZOMOPT_LINALG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace zomopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Absolute tolerance below which a column norm counts as collapsed. One
// global constant guards every division by a column norm in the library.
inline constexpr double kColumnCollapseTol = 1e-12;

struct RankDeficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Counter-based splittable random stream. A draw is a pure function of
/// (seed, stream_id, counter), so streams can be split freely, replayed by
/// copying the struct, and interleaved without affecting each other.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t counter = 0;

  // Derives an independent stream; children with distinct ids never collide.
  RngStream split(std::uint64_t child_id) const;

  std::uint64_t next_u64();  // advances counter by exactly 1
  double next_uniform();     // strictly inside (0, 1), one counter tick
  double next_normal();      // N(0, 1) via Box-Muller, one counter tick
};

/// m-by-n matrix of i.i.d. standard normal draws, filled in row-major entry
/// order. Advances rng.counter by exactly m*n.
Matrix gaussian_matrix(RngStream& rng, Index m, Index n);

struct QrFactors {
  Matrix q;  // orthonormal columns, same shape as input
  Matrix r;  // upper triangular with positive diagonal
};

/// Thin Householder QR with the sign convention diag(r) > 0, which makes the
/// factorization unique and bit-reproducible. Requires rows >= cols.
/// Throws RankDeficient when an orthogonalized column collapses below
/// kColumnCollapseTol; callers are expected to resample and retry.
QrFactors qr_decompose(const Matrix& m);

/// Rescales every column to unit Euclidean norm. Columns with norm at or
/// below kColumnCollapseTol are set to zero instead of being divided.
Matrix normalize_columns(const Matrix& m);

struct SvdFactors {
  Matrix u;      // m x p, orthonormal columns
  Vector sigma;  // length p, nonincreasing, nonnegative
  Matrix v;      // n x p, orthonormal columns
};

/// Full compact SVD through an iterative dense Jacobi method. Intended for
/// tests and diagnostics only; optimizer hot paths never call it.
/// Throws ConvergenceFailure if the iteration does not converge.
SvdFactors svd_oracle(const Matrix& m);

template <typename Derived>
double frobenius_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.norm();
}

}  // namespace zomopt

#endif  // ZOMOPT_LINALG_HPP
