// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "zomopt/linalg.hpp"

#include <cmath>

namespace zomopt {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Stateless word derivation: every draw hashes the full stream identity, so
// identical (seed, stream_id, counter) gives identical output on any platform.
std::uint64_t word_at(const RngStream& s, std::uint64_t salt) {
  std::uint64_t h = mix64(s.seed + kGolden);
  h = mix64(h ^ (s.stream_id + kGolden));
  h = mix64(h ^ (s.counter + kGolden));
  h = mix64(h ^ (salt + kGolden));
  return h;
}

double to_open_unit(std::uint64_t w) {
  // 53 mantissa bits, offset by half an ulp so 0 and 1 are unreachable.
  return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

RngStream RngStream::split(std::uint64_t child_id) const {
  return RngStream{seed, mix64(stream_id + kGolden * (child_id + 1)), 0};
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t w = word_at(*this, 0);
  ++counter;
  return w;
}

double RngStream::next_uniform() {
  const double u = to_open_unit(word_at(*this, 0));
  ++counter;
  return u;
}

double RngStream::next_normal() {
  const double u1 = to_open_unit(word_at(*this, 1));
  const double u2 = to_open_unit(word_at(*this, 2));
  ++counter;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Matrix gaussian_matrix(RngStream& rng, Index m, Index n) {
  Matrix out(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      out(i, j) = rng.next_normal();
    }
  }
  return out;
}

QrFactors qr_decompose(const Matrix& m) {
  if (m.rows() < m.cols()) {
    throw DimensionMismatch("qr_decompose: need rows >= cols, got " +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
  const Index n = m.cols();
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), n);
  Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    if (std::abs(r(j, j)) <= kColumnCollapseTol) {
      throw RankDeficient("qr_decompose: column " + std::to_string(j) +
                          " collapsed below tolerance");
    }
    if (r(j, j) < 0.0) {
      q.col(j) = -q.col(j);
      r.row(j) = -r.row(j);
    }
  }
  return QrFactors{std::move(q), std::move(r)};
}

Matrix normalize_columns(const Matrix& m) {
  Matrix out = m;
  for (Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (norm > kColumnCollapseTol) {
      out.col(j) /= norm;
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

SvdFactors svd_oracle(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw ConvergenceFailure("svd_oracle: Jacobi sweeps did not converge");
  }
  return SvdFactors{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace zomopt
