// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ZOMOPT_HARNESS_HPP
#define ZOMOPT_HARNESS_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zomopt/objectives.hpp"
#include "zomopt/optimizers.hpp"

namespace zomopt {

struct ConfigInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ObjectiveSpec {
  std::string kind = "quadratic";  // quadratic | logistic
  std::uint64_t seed = 1;          // shared across trials for fairness
  // quadratic
  Index m = 64;
  Index n = 64;
  double cond = 1.0;       // curvature spectrum log-spaced in [1, cond]
  double noise = 0.0;      // per-batch optimum jitter scale
  double x0_scale = 0.125; // Gaussian offset of the initial point
  // logistic
  int d = 128;
  int classes = 8;
  int n_train = 1024;
  int n_heldout = 256;
  int batch = 16;
  double l2 = 0.0;
};

struct OptimizerSpec {
  std::string kind;  // zo-mopi | mezo | zo-muon | fo-muon
  ZoMopiConfig mopi;
  MezoConfig mezo;
  ZoMuonConfig muon;
  double fo_eta = 1e-2;
  double fo_beta = 0.9;
  int fo_ns_iters = 5;
};

struct ExperimentConfig {
  ObjectiveSpec objective;
  OptimizerSpec optimizer;
  std::uint64_t budget = 0;  // total objective evaluations per trial
  std::vector<std::uint64_t> seeds;
  long eval_every = 10;
  std::string output = ".";

  void validate() const;  // throws ConfigInvalid with a field-level message
};

/// Parses a JSON experiment description; unknown keys are rejected so typos
/// in config files fail loudly.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Stable 8-hex-digit digest of the canonicalized config, used in output
/// file names.
std::string config_hash8(const ExperimentConfig& cfg);

struct TrajectoryRecord {
  long step = 0;
  std::uint64_t queries = 0;  // strictly increasing across records
  double train_loss = 0.0;
  double eval_loss = 0.0;  // held-out batch
  double update_norm = 0.0;
  double wall_ms = 0.0;
  double spi_tracking_error = 0.0;  // NaN when not applicable
};

struct TrialResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when the optimizer aborted the trial
  std::vector<TrajectoryRecord> records;
  QueryLedger ledger;             // optimization queries (capped by budget)
  std::uint64_t eval_queries = 0; // diagnostic evaluations, outside budget
};

/// Millisecond timestamps for trajectory records. Injectable so tests can
/// pin wall_ms and assert byte-identical CSV output.
using ClockFn = std::function<double()>;

/// Runs one trial per seed: initializes all state deterministically from the
/// seed, steps the optimizer until the ledger reaches the budget (never
/// past it), and records every eval_every steps plus the first and last
/// step. Optimizer errors mark the trial failed instead of aborting the
/// sweep.
std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg,
                                        const ClockFn& clock = {});

/// Writes header plus one row per record; floats with 17 significant digits
/// so parse_csv(emit_csv(r)) == r exactly.
void emit_csv(const std::vector<TrajectoryRecord>& records,
              const std::string& path);
std::vector<TrajectoryRecord> parse_csv(const std::string& path);

struct SpectrumReport {
  Vector fo_sigma;
  Vector zo_sigma;
  double tail_mass_fo = 0.0;
  double tail_mass_zo = 0.0;
  bool degenerate = false;  // both spectra vanish at this point
};

using GradientFn = std::function<Matrix(const Matrix&, std::int64_t)>;

/// Singular-value spectra of the analytic mini-batch gradient and of a
/// zeroth-order estimate at the same point on the same batch. With a
/// subspace present the estimate is the reconstruction a * g_hat (a
/// full-space view for logging, not part of any update path); otherwise the
/// full-space estimator is used. Tail mass sums sigma_i beyond
/// k0 = ceil(0.1 * min(m, n)), as a fraction of the total.
SpectrumReport spectrum_report(const LossFn& loss, const GradientFn& grad,
                               const Matrix& params, std::int64_t batch,
                               const SubspaceState* sub, const RgeConfig& cfg,
                               RngStream& rng);
SpectrumReport spectrum_report(const LogisticTask& obj, const Matrix& params,
                               std::int64_t batch, const SubspaceState* sub,
                               const RgeConfig& cfg, RngStream& rng);

struct MethodRuns {
  std::string method;
  std::vector<std::vector<TrajectoryRecord>> per_seed;
};

struct TargetQueries {
  std::string method;
  bool reached = false;      // false renders as N/A
  double median_queries = 0; // meaningful only when reached
};

/// First cumulative-query count at which each method's eval loss falls to
/// the target, median across seeds. Rejects mismatched query budgets: every
/// trajectory in one table must end at the same cumulative count.
std::vector<TargetQueries> compare_budget_to_target(
    const std::vector<MethodRuns>& methods, double target);

std::string render_target_table(const std::vector<TargetQueries>& rows,
                                double target);
void write_target_csv(const std::vector<TargetQueries>& rows, double target,
                      const std::string& path);

/// Compact invariant battery behind the `selftest` CLI verb. Prints one
/// pass/fail line per check; returns true when everything passed.
bool run_selftest(std::ostream& out);

}  // namespace zomopt

#endif  // ZOMOPT_HARNESS_HPP
