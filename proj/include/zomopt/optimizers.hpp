// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ZOMOPT_OPTIMIZERS_HPP
#define ZOMOPT_OPTIMIZERS_HPP

#include <map>
#include <string>

#include "zomopt/estimator.hpp"
#include "zomopt/spectral.hpp"

namespace zomopt {

/// Exponential-average gradient state kept in the reduced r x n space.
struct MomentumState {
  Matrix m;           // r x n
  double beta = 0.0;  // decay in [0, 1)
};

/// Scale applied when momentum is re-expressed in a refreshed basis.
/// kAsWrittenOneOverM multiplies by 1/m_rows; kIdentity applies the bare
/// basis-change product a_new^T a_old m.
enum class ProjectionScale {
  kAsWrittenOneOverM,
  kIdentity,
};

struct ZoMopiConfig {
  double eta = 1e-2;   // learning rate
  double beta = 0.9;   // momentum decay
  double mu = 1e-3;    // smoothing radius
  Index r = 64;        // subspace rank
  Index k = 32;        // spectral rank tracked by SPI
  long nu = 500;       // subspace refresh interval
  int n_queries = 4;   // perturbations per estimate
  ProjectionScale projection_scale = ProjectionScale::kAsWrittenOneOverM;

  void validate(Index m_rows) const;
};

struct OptimizerStep {
  Matrix x;  // updated parameters
  double update_norm = 0.0;
  std::uint64_t queries_used = 0;
  std::map<std::string, double> diagnostics;
};

/// Full optimizer state for one matrix parameter. The SPI cache lives in
/// column space, which a subspace refresh does not touch, so it survives
/// refreshes unchanged and keeps its warm start.
struct ZoMopiState {
  SubspaceState sub;
  MomentumState mom;  // zero-initialized
  SpiCache cache;
};

ZoMopiState init_zo_mopi(Index m, Index n, const ZoMopiConfig& cfg,
                         const RngStream& rng);

/// Test seam: replaces the streaming power iteration inside zo_mopi_step.
using OrthogonalizeHook =
    std::function<PartialOrthogonalization(const Matrix&, SpiCache&)>;

/// One step of the subspace-momentum optimizer with partial spectral
/// orthogonalization. In order: (i) refresh the basis and project momentum
/// when the lazy interval is due, (ii) estimate the subspace gradient,
/// (iii) update momentum, (iv) one SPI pass, (v) x' = x - eta * a * o.
/// With no degenerate SPI column the update norm is exactly eta * sqrt(k).
OptimizerStep zo_mopi_step(const Matrix& x, ZoMopiState& state,
                           const ZoMopiConfig& cfg, const LossFn& loss,
                           std::int64_t batch, RngStream& rng,
                           QueryLedger& ledger,
                           const OrthogonalizeHook& orthogonalize = {});

/// Momentum basis change on subspace refresh: m' = s * a_new^T a_old * m.
MomentumState project_momentum(const MomentumState& mom, const Matrix& a_new,
                               const Matrix& a_old, Index m_rows,
                               ProjectionScale scale);

struct MezoConfig {
  double eta = 1e-4;
  RgeConfig rge;
};

/// Plain zeroth-order SGD: x' = x - eta * full-space RGE.
OptimizerStep mezo_step(const Matrix& x, const MezoConfig& cfg,
                        const LossFn& loss, std::int64_t batch, RngStream& rng,
                        QueryLedger& ledger);

struct ZoMuonConfig {
  double eta = 1e-2;
  double mu = 1e-3;
  Index r = 64;
  long nu = 100;
  int n_queries = 4;
  int ns_iters = 5;

  void validate(Index m_rows) const;
};

/// Subspace RGE followed by full Newton-Schulz orthogonalization of the raw
/// estimate (no momentum): x' = x - eta * a * NS(g_hat). Shares the lazy
/// refresh mechanics with zo_mopi but keeps its own interval.
OptimizerStep zo_muon_step(const Matrix& x, SubspaceState& sub,
                           const ZoMuonConfig& cfg, const LossFn& loss,
                           std::int64_t batch, RngStream& rng,
                           QueryLedger& ledger);

struct FoMuonResult {
  Matrix x;
  Matrix momentum;
};

/// First-order reference for spectral diagnostics only: momentum EMA of the
/// analytic gradient followed by Newton-Schulz orthogonalization. Zero
/// momentum short-circuits to a zero update.
FoMuonResult fo_muon_step(const Matrix& x, const Matrix& grad, double eta,
                          double beta, const Matrix& mom_full,
                          int ns_iters = 5);

}  // namespace zomopt

#endif  // ZOMOPT_OPTIMIZERS_HPP
