// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ZOMOPT_TESTS_SUPPORT_HPP
#define ZOMOPT_TESTS_SUPPORT_HPP

#include "zomopt/linalg.hpp"

namespace zomopt::testing {

// m-by-n matrix with the given singular values and random orthonormal
// factors. Values must be positive and nonincreasing for the factors to be
// the compact SVD.
inline Matrix planted_spectrum(RngStream& rng, Index m, Index n,
                               const Vector& sigma) {
  const Index p = sigma.size();
  const Matrix u = qr_decompose(gaussian_matrix(rng, m, p)).q;
  const Matrix v = qr_decompose(gaussian_matrix(rng, n, p)).q;
  return u * sigma.asDiagonal() * v.transpose();
}

inline Matrix random_orthonormal(RngStream& rng, Index m, Index p) {
  return qr_decompose(gaussian_matrix(rng, m, p)).q;
}

}  // namespace zomopt::testing

#endif  // ZOMOPT_TESTS_SUPPORT_HPP
