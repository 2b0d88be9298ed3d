// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "zomopt/optimizers.hpp"

#include <cmath>

namespace zomopt {

void ZoMopiConfig::validate(Index m_rows) const {
  if (!(eta >= 0.0)) throw DimensionMismatch("ZoMopiConfig: eta must be >= 0");
  if (beta < 0.0 || beta >= 1.0) {
    throw DimensionMismatch("ZoMopiConfig: beta must be in [0, 1)");
  }
  if (!(mu > 0.0)) throw DimensionMismatch("ZoMopiConfig: mu must be > 0");
  if (k < 1 || k > r) throw DimensionMismatch("ZoMopiConfig: need 1 <= k <= r");
  if (r > m_rows) throw DimensionMismatch("ZoMopiConfig: need r <= m");
  if (nu < 1) throw DimensionMismatch("ZoMopiConfig: need nu >= 1");
  if (n_queries < 1) throw DimensionMismatch("ZoMopiConfig: need N >= 1");
}

void ZoMuonConfig::validate(Index m_rows) const {
  if (!(eta >= 0.0)) throw DimensionMismatch("ZoMuonConfig: eta must be >= 0");
  if (!(mu > 0.0)) throw DimensionMismatch("ZoMuonConfig: mu must be > 0");
  if (r < 1 || r > m_rows) throw DimensionMismatch("ZoMuonConfig: bad rank");
  if (nu < 1) throw DimensionMismatch("ZoMuonConfig: need nu >= 1");
  if (n_queries < 1) throw DimensionMismatch("ZoMuonConfig: need N >= 1");
}

ZoMopiState init_zo_mopi(Index m, Index n, const ZoMopiConfig& cfg,
                         const RngStream& rng) {
  cfg.validate(m);
  if (cfg.k > n) throw DimensionMismatch("init_zo_mopi: need k <= n");
  ZoMopiState state;
  state.sub = SubspaceState::init(m, cfg.r, cfg.nu, rng.split(1));
  state.mom = MomentumState{Matrix::Zero(cfg.r, n), cfg.beta};
  state.cache = SpiCache::cold_start(n, cfg.k, rng.split(2));
  return state;
}

MomentumState project_momentum(const MomentumState& mom, const Matrix& a_new,
                               const Matrix& a_old, Index m_rows,
                               ProjectionScale scale) {
  if (a_new.rows() != a_old.rows() || a_new.cols() != a_old.cols() ||
      a_old.cols() != mom.m.rows()) {
    throw DimensionMismatch("project_momentum: basis/momentum shape mismatch");
  }
  const double s = scale == ProjectionScale::kAsWrittenOneOverM
                       ? 1.0 / static_cast<double>(m_rows)
                       : 1.0;
  return MomentumState{s * (a_new.transpose() * (a_old * mom.m)), mom.beta};
}

OptimizerStep zo_mopi_step(const Matrix& x, ZoMopiState& state,
                           const ZoMopiConfig& cfg, const LossFn& loss,
                           std::int64_t batch, RngStream& rng,
                           QueryLedger& ledger,
                           const OrthogonalizeHook& orthogonalize) {
  cfg.validate(x.rows());
  if (state.sub.a.rows() != x.rows() || state.mom.m.rows() != state.sub.r ||
      state.mom.m.cols() != x.cols() || state.cache.v.rows() != x.cols()) {
    throw DimensionMismatch("zo_mopi_step: state inconsistent with parameters");
  }

  if (state.sub.steps_since_refresh >= state.sub.nu) {
    const Matrix a_old = refresh_subspace(state.sub);
    state.mom = project_momentum(state.mom, state.sub.a, a_old, x.rows(),
                                 cfg.projection_scale);
  }

  const std::uint64_t queries_before = ledger.total();
  const RgeConfig rge{cfg.mu, cfg.n_queries};
  const Matrix g_hat =
      rge_subspace(loss, x, state.sub, rge, batch, rng, ledger);

  state.mom.beta = cfg.beta;
  state.mom.m = cfg.beta * state.mom.m + (1.0 - cfg.beta) * g_hat;

  const PartialOrthogonalization po =
      orthogonalize ? orthogonalize(state.mom.m, state.cache)
                    : spi_step(state.mom.m, state.cache);

  OptimizerStep out;
  out.x = x - cfg.eta * (state.sub.a * po.o);
  out.update_norm = (out.x - x).norm();
  out.queries_used = ledger.total() - queries_before;
  out.diagnostics["ghat_norm"] = g_hat.norm();
  out.diagnostics["momentum_norm"] = state.mom.m.norm();
  out.diagnostics["ortho_norm"] = po.o.norm();
  out.diagnostics["spi_age"] = static_cast<double>(state.cache.age);

  ++state.sub.steps_since_refresh;
  return out;
}

OptimizerStep mezo_step(const Matrix& x, const MezoConfig& cfg,
                        const LossFn& loss, std::int64_t batch, RngStream& rng,
                        QueryLedger& ledger) {
  const std::uint64_t queries_before = ledger.total();
  const Matrix g = rge_full(loss, x, cfg.rge, batch, rng, ledger);
  OptimizerStep out;
  out.x = x - cfg.eta * g;
  out.update_norm = (out.x - x).norm();
  out.queries_used = ledger.total() - queries_before;
  out.diagnostics["ghat_norm"] = g.norm();
  return out;
}

OptimizerStep zo_muon_step(const Matrix& x, SubspaceState& sub,
                           const ZoMuonConfig& cfg, const LossFn& loss,
                           std::int64_t batch, RngStream& rng,
                           QueryLedger& ledger) {
  cfg.validate(x.rows());
  if (sub.a.rows() != x.rows()) {
    throw DimensionMismatch("zo_muon_step: subspace inconsistent with x");
  }
  if (sub.steps_since_refresh >= sub.nu) {
    refresh_subspace(sub);
  }
  const std::uint64_t queries_before = ledger.total();
  const RgeConfig rge{cfg.mu, cfg.n_queries};
  const Matrix g_hat = rge_subspace(loss, x, sub, rge, batch, rng, ledger);
  const Matrix o = newton_schulz(g_hat, cfg.ns_iters);

  OptimizerStep out;
  out.x = x - cfg.eta * (sub.a * o);
  out.update_norm = (out.x - x).norm();
  out.queries_used = ledger.total() - queries_before;
  out.diagnostics["ghat_norm"] = g_hat.norm();

  ++sub.steps_since_refresh;
  return out;
}

FoMuonResult fo_muon_step(const Matrix& x, const Matrix& grad, double eta,
                          double beta, const Matrix& mom_full, int ns_iters) {
  if (grad.rows() != x.rows() || grad.cols() != x.cols() ||
      mom_full.rows() != x.rows() || mom_full.cols() != x.cols()) {
    throw DimensionMismatch("fo_muon_step: shape mismatch");
  }
  FoMuonResult out;
  out.momentum = beta * mom_full + (1.0 - beta) * grad;
  if (out.momentum.norm() <= kColumnCollapseTol) {
    out.x = x;  // zero momentum short-circuits to a zero update
    return out;
  }
  out.x = x - eta * newton_schulz(out.momentum, ns_iters);
  return out;
}

}  // namespace zomopt
