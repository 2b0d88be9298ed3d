// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "zomopt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace zomopt {
namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                 const std::string& where) {
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* key) {
          return item.key() == key;
        }) == allowed.end()) {
      throw ConfigInvalid(where + ": unknown key '" + item.key() + "'");
    }
  }
}

// One matrix-parameter problem: loss/gradient callables plus a seeded
// initial point. Objectives are shared across trials; only x0 varies.
struct Problem {
  LossFn loss;
  std::function<Matrix(const Matrix&, std::int64_t)> gradient;
  std::function<Matrix(RngStream&)> make_x0;
  Index rows = 0;
  Index cols = 0;
};

Problem build_problem(const ObjectiveSpec& spec) {
  Problem problem;
  if (spec.kind == "quadratic") {
    RngStream rng{spec.seed, 0x0b1ec7, 0};
    const Matrix x_star = gaussian_matrix(rng, spec.m, spec.n);
    Matrix h;
    if (spec.cond <= 1.0) {
      h = Matrix::Identity(spec.m, spec.m);
    } else {
      Vector lambda(spec.m);
      for (Index i = 0; i < spec.m; ++i) {
        lambda(i) = std::pow(
            spec.cond, static_cast<double>(i) / static_cast<double>(spec.m - 1));
      }
      const Matrix q = qr_decompose(gaussian_matrix(rng, spec.m, spec.m)).q;
      h = q * lambda.asDiagonal() * q.transpose();
      h = 0.5 * (h + h.transpose());
    }
    auto obj = std::make_shared<MatrixQuadratic>(x_star, h, spec.noise,
                                                 spec.seed ^ 0x9015eULL);
    problem.loss = [obj](const Matrix& x, std::int64_t b) {
      return obj->loss(x, b);
    };
    problem.gradient = [obj](const Matrix& x, std::int64_t b) {
      return obj->gradient(x, b);
    };
    const double scale = spec.x0_scale;
    problem.make_x0 = [obj, scale](RngStream& rng_x0) {
      return Matrix(obj->optimum() +
                    scale * gaussian_matrix(rng_x0, obj->rows(), obj->cols()));
    };
    problem.rows = spec.m;
    problem.cols = spec.n;
  } else if (spec.kind == "logistic") {
    auto obj = std::make_shared<LogisticTask>(LogisticTask::synthetic(
        spec.d, spec.classes, spec.n_train, spec.n_heldout, spec.batch,
        spec.l2, spec.seed));
    problem.loss = [obj](const Matrix& w, std::int64_t b) {
      return obj->loss(w, b);
    };
    problem.gradient = [obj](const Matrix& w, std::int64_t b) {
      return obj->gradient(w, b);
    };
    const Index rows = obj->weight_rows();
    const Index cols = obj->weight_cols();
    const double scale = spec.x0_scale;
    problem.make_x0 = [rows, cols, scale](RngStream& rng_x0) {
      return Matrix(scale * gaussian_matrix(rng_x0, rows, cols));
    };
    problem.rows = rows;
    problem.cols = cols;
  } else {
    throw ConfigInvalid("objective.kind: expected quadratic|logistic, got '" +
                        spec.kind + "'");
  }
  return problem;
}

double spi_tracking_diagnostic(const ZoMopiState& state, Index k) {
  const Matrix& m = state.mom.m;
  if (m.norm() <= kColumnCollapseTol) return kNan;
  if (k >= m.cols()) return 0.0;  // no complement to drift into
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Matrix v_star = svd.matrixV().leftCols(k);
  const Matrix v_perp = svd.matrixV().rightCols(m.cols() - k);
  return tracking_error_tangent(state.cache.v, v_star, v_perp);
}

std::uint64_t queries_per_step(const OptimizerSpec& spec) {
  if (spec.kind == "zo-mopi") return 2ULL * spec.mopi.n_queries;
  if (spec.kind == "mezo") return 2ULL * spec.mezo.rge.n_queries;
  if (spec.kind == "zo-muon") return 2ULL * spec.muon.n_queries;
  return 1;  // fo-muon: one gradient evaluation per step
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string format_row(const TrajectoryRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%ld,%" PRIu64 ",%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step,
                r.queries, r.train_loss, r.eval_loss, r.update_norm, r.wall_ms,
                r.spi_tracking_error);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (objective.kind != "quadratic" && objective.kind != "logistic") {
    throw ConfigInvalid("objective.kind: expected quadratic|logistic, got '" +
                        objective.kind + "'");
  }
  if (objective.kind == "quadratic") {
    if (objective.m < 1 || objective.n < 1) {
      throw ConfigInvalid("objective.m/n: must be positive");
    }
    if (objective.cond < 1.0) {
      throw ConfigInvalid("objective.cond: must be >= 1");
    }
  } else {
    if (objective.d < 1 || objective.classes < 2) {
      throw ConfigInvalid("objective.d/classes: need d >= 1, classes >= 2");
    }
    if (objective.batch < 1 || objective.batch > objective.n_train) {
      throw ConfigInvalid("objective.batch: must be in [1, n_train]");
    }
  }
  if (seeds.empty()) throw ConfigInvalid("seeds: must be nonempty");
  if (eval_every < 1) throw ConfigInvalid("eval_every: must be >= 1");

  const Index rows = objective.kind == "quadratic"
                         ? objective.m
                         : static_cast<Index>(objective.d);
  const Index cols = objective.kind == "quadratic"
                         ? objective.n
                         : static_cast<Index>(objective.classes);
  const std::string& kind = optimizer.kind;
  try {
    if (kind == "zo-mopi") {
      optimizer.mopi.validate(rows);
      if (optimizer.mopi.k > cols) {
        throw ConfigInvalid("optimizer.k: must be <= parameter columns");
      }
    } else if (kind == "mezo") {
      optimizer.mezo.rge.validate();
    } else if (kind == "zo-muon") {
      optimizer.muon.validate(rows);
    } else if (kind == "fo-muon") {
      if (!(optimizer.fo_eta >= 0.0)) throw ConfigInvalid("optimizer.eta < 0");
    } else {
      throw ConfigInvalid(
          "optimizer.kind: expected zo-mopi|mezo|zo-muon|fo-muon, got '" +
          kind + "'");
    }
  } catch (const DimensionMismatch& e) {
    throw ConfigInvalid(std::string("optimizer: ") + e.what());
  }
  const std::uint64_t per_step = queries_per_step(optimizer);
  if (budget % per_step != 0) {
    throw ConfigInvalid("budget: must be divisible by " +
                        std::to_string(per_step) +
                        " queries per step for this optimizer");
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigInvalid(std::string("config: invalid JSON: ") + e.what());
  }
  expect_keys(j, {"objective", "optimizer", "budget", "seeds", "eval_every",
                  "output"},
              "config");
  ExperimentConfig cfg;

  const json& obj = j.at("objective");
  expect_keys(obj,
              {"kind", "seed", "m", "n", "cond", "noise", "x0_scale", "d",
               "classes", "n_train", "n_heldout", "batch", "l2"},
              "objective");
  cfg.objective.kind = obj.value("kind", "quadratic");
  cfg.objective.seed = obj.value("seed", std::uint64_t{1});
  cfg.objective.m = obj.value("m", Index{64});
  cfg.objective.n = obj.value("n", Index{64});
  cfg.objective.cond = obj.value("cond", 1.0);
  cfg.objective.noise = obj.value("noise", 0.0);
  cfg.objective.x0_scale =
      obj.value("x0_scale", cfg.objective.kind == "logistic" ? 0.05 : 0.125);
  cfg.objective.d = obj.value("d", 128);
  cfg.objective.classes = obj.value("classes", 8);
  cfg.objective.n_train = obj.value("n_train", 1024);
  cfg.objective.n_heldout = obj.value("n_heldout", 256);
  cfg.objective.batch = obj.value("batch", 16);
  cfg.objective.l2 = obj.value("l2", 0.0);

  const json& opt = j.at("optimizer");
  expect_keys(opt,
              {"kind", "eta", "beta", "mu", "r", "k", "nu", "n_queries",
               "projection_scale", "ns_iters"},
              "optimizer");
  cfg.optimizer.kind = opt.value("kind", "");
  const double eta = opt.value("eta", 1e-2);
  const double beta = opt.value("beta", 0.9);
  const double mu = opt.value("mu", 1e-3);
  const Index r = opt.value("r", Index{64});
  const Index k = opt.value("k", Index{32});
  const long nu = opt.value("nu", long{500});
  const int n_queries = opt.value("n_queries", 4);
  const int ns_iters = opt.value("ns_iters", 5);
  const std::string proj = opt.value("projection_scale", "as_written_1_over_m");
  if (proj != "as_written_1_over_m" && proj != "identity") {
    throw ConfigInvalid(
        "optimizer.projection_scale: expected as_written_1_over_m|identity");
  }
  cfg.optimizer.mopi = ZoMopiConfig{eta,
                                    beta,
                                    mu,
                                    r,
                                    k,
                                    nu,
                                    n_queries,
                                    proj == "identity"
                                        ? ProjectionScale::kIdentity
                                        : ProjectionScale::kAsWrittenOneOverM};
  cfg.optimizer.mezo = MezoConfig{eta, RgeConfig{mu, n_queries}};
  cfg.optimizer.muon = ZoMuonConfig{eta, mu, r, nu, n_queries, ns_iters};
  cfg.optimizer.fo_eta = eta;
  cfg.optimizer.fo_beta = beta;
  cfg.optimizer.fo_ns_iters = ns_iters;

  cfg.budget = j.value("budget", std::uint64_t{0});
  cfg.seeds = j.value("seeds", std::vector<std::uint64_t>{});
  cfg.eval_every = j.value("eval_every", long{10});
  cfg.output = j.value("output", ".");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

std::string config_hash8(const ExperimentConfig& cfg) {
  json j;
  j["objective"] = {{"kind", cfg.objective.kind},
                    {"seed", cfg.objective.seed},
                    {"m", cfg.objective.m},
                    {"n", cfg.objective.n},
                    {"cond", cfg.objective.cond},
                    {"noise", cfg.objective.noise},
                    {"x0_scale", cfg.objective.x0_scale},
                    {"d", cfg.objective.d},
                    {"classes", cfg.objective.classes},
                    {"n_train", cfg.objective.n_train},
                    {"n_heldout", cfg.objective.n_heldout},
                    {"batch", cfg.objective.batch},
                    {"l2", cfg.objective.l2}};
  j["optimizer"] = {{"kind", cfg.optimizer.kind},
                    {"eta", cfg.optimizer.mopi.eta},
                    {"beta", cfg.optimizer.mopi.beta},
                    {"mu", cfg.optimizer.mopi.mu},
                    {"r", cfg.optimizer.mopi.r},
                    {"k", cfg.optimizer.mopi.k},
                    {"nu", cfg.optimizer.mopi.nu},
                    {"n_queries", cfg.optimizer.mopi.n_queries},
                    {"projection_scale",
                     cfg.optimizer.mopi.projection_scale ==
                             ProjectionScale::kIdentity
                         ? "identity"
                         : "as_written_1_over_m"},
                    {"ns_iters", cfg.optimizer.muon.ns_iters}};
  j["budget"] = cfg.budget;
  j["eval_every"] = cfg.eval_every;
  const std::string canon = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const char c : canon) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%08" PRIx64, h & 0xffffffffULL);
  return buf;
}

std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg,
                                        const ClockFn& clock) {
  cfg.validate();
  const Problem problem = build_problem(cfg.objective);
  const std::uint64_t per_step = queries_per_step(cfg.optimizer);
  const std::string& kind = cfg.optimizer.kind;

  std::vector<TrialResult> results;
  results.reserve(cfg.seeds.size());
  for (const std::uint64_t seed : cfg.seeds) {
    TrialResult trial;
    trial.seed = seed;
    ClockFn now = clock;
    if (!now) {
      const auto start = std::chrono::steady_clock::now();
      now = [start]() {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start)
            .count();
      };
    }

    try {
      RngStream root{seed, 0, 0};
      RngStream x0_rng = root.split(10);
      RngStream est_rng = root.split(12);
      Matrix x = problem.make_x0(x0_rng);

      ZoMopiState mopi_state;
      SubspaceState muon_sub;
      Matrix fo_momentum;
      if (kind == "zo-mopi") {
        mopi_state =
            init_zo_mopi(problem.rows, problem.cols, cfg.optimizer.mopi,
                         root.split(11));
      } else if (kind == "zo-muon") {
        muon_sub = SubspaceState::init(problem.rows, cfg.optimizer.muon.r,
                                       cfg.optimizer.muon.nu, root.split(11));
      } else if (kind == "fo-muon") {
        fo_momentum = Matrix::Zero(problem.rows, problem.cols);
      }

      long step = 0;
      double last_update_norm = 0.0;
      auto record = [&]() {
        TrajectoryRecord rec;
        rec.step = step;
        rec.queries = trial.ledger.total();
        rec.train_loss = problem.loss(x, step);
        rec.eval_loss = problem.loss(x, kEvalBatch);
        trial.eval_queries += 2;
        rec.update_norm = last_update_norm;
        rec.wall_ms = now();
        rec.spi_tracking_error =
            kind == "zo-mopi"
                ? spi_tracking_diagnostic(mopi_state, cfg.optimizer.mopi.k)
                : kNan;
        trial.records.push_back(rec);
      };

      record();  // step 0, zero queries
      while (trial.ledger.total() + per_step <= cfg.budget) {
        const std::int64_t batch = step;
        if (kind == "zo-mopi") {
          OptimizerStep s = zo_mopi_step(x, mopi_state, cfg.optimizer.mopi,
                                         problem.loss, batch, est_rng,
                                         trial.ledger);
          x = std::move(s.x);
          last_update_norm = s.update_norm;
        } else if (kind == "mezo") {
          OptimizerStep s = mezo_step(x, cfg.optimizer.mezo, problem.loss,
                                      batch, est_rng, trial.ledger);
          x = std::move(s.x);
          last_update_norm = s.update_norm;
        } else if (kind == "zo-muon") {
          OptimizerStep s = zo_muon_step(x, muon_sub, cfg.optimizer.muon,
                                         problem.loss, batch, est_rng,
                                         trial.ledger);
          x = std::move(s.x);
          last_update_norm = s.update_norm;
        } else {  // fo-muon
          const Matrix grad = problem.gradient(x, batch);
          trial.ledger.add("fo_gradient", 1);
          FoMuonResult s =
              fo_muon_step(x, grad, cfg.optimizer.fo_eta, cfg.optimizer.fo_beta,
                           fo_momentum, cfg.optimizer.fo_ns_iters);
          last_update_norm = (s.x - x).norm();
          x = std::move(s.x);
          fo_momentum = std::move(s.momentum);
        }
        ++step;
        const bool budget_exhausted =
            trial.ledger.total() + per_step > cfg.budget;
        if (step % cfg.eval_every == 0 || budget_exhausted) record();
      }
      trial.ok = true;
    } catch (const std::exception& e) {
      trial.ok = false;
      trial.error = e.what();
    }
    results.push_back(std::move(trial));
  }
  return results;
}

void emit_csv(const std::vector<TrajectoryRecord>& records,
              const std::string& path) {
  if (records.empty()) throw ConfigInvalid("emit_csv: no records to write");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
  out << "step,queries,train_loss,eval_loss,update_norm,wall_ms,"
         "spi_tracking_error\n";
  for (const TrajectoryRecord& r : records) out << format_row(r);
  out.flush();
  if (!out.good()) throw std::runtime_error("emit_csv: write failed: " + path);
}

std::vector<TrajectoryRecord> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line !=
          "step,queries,train_loss,eval_loss,update_norm,wall_ms,"
          "spi_tracking_error") {
    throw std::runtime_error("parse_csv: bad header in " + path);
  }
  std::vector<TrajectoryRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) {
      throw std::runtime_error("parse_csv: bad row in " + path);
    }
    TrajectoryRecord r;
    r.step = std::stol(fields[0]);
    r.queries = std::stoull(fields[1]);
    r.train_loss = std::strtod(fields[2].c_str(), nullptr);
    r.eval_loss = std::strtod(fields[3].c_str(), nullptr);
    r.update_norm = std::strtod(fields[4].c_str(), nullptr);
    r.wall_ms = std::strtod(fields[5].c_str(), nullptr);
    r.spi_tracking_error = std::strtod(fields[6].c_str(), nullptr);
    records.push_back(r);
  }
  return records;
}

SpectrumReport spectrum_report(const LossFn& loss, const GradientFn& grad,
                               const Matrix& params, std::int64_t batch,
                               const SubspaceState* sub, const RgeConfig& cfg,
                               RngStream& rng) {
  const Matrix fo = grad(params, batch);
  QueryLedger ledger;  // diagnostic-only accounting
  Matrix zo;
  if (sub != nullptr) {
    zo = sub->a * rge_subspace(loss, params, *sub, cfg, batch, rng, ledger);
  } else {
    zo = rge_full(loss, params, cfg, batch, rng, ledger);
  }

  SpectrumReport report;
  report.fo_sigma = svd_oracle(fo).sigma;
  report.zo_sigma = svd_oracle(zo).sigma;
  const Index k0 = static_cast<Index>(std::ceil(
      0.1 * static_cast<double>(std::min(params.rows(), params.cols()))));
  const auto tail_mass = [k0](const Vector& sigma) {
    const double total = sigma.sum();
    if (total <= kColumnCollapseTol) return 0.0;
    double tail = 0.0;
    for (Index i = k0; i < sigma.size(); ++i) tail += sigma(i);
    return tail / total;
  };
  report.tail_mass_fo = tail_mass(report.fo_sigma);
  report.tail_mass_zo = tail_mass(report.zo_sigma);
  report.degenerate = report.fo_sigma.sum() <= kColumnCollapseTol &&
                      report.zo_sigma.sum() <= kColumnCollapseTol;
  return report;
}

SpectrumReport spectrum_report(const LogisticTask& obj, const Matrix& params,
                               std::int64_t batch, const SubspaceState* sub,
                               const RgeConfig& cfg, RngStream& rng) {
  const LossFn loss = [&obj](const Matrix& w, std::int64_t b) {
    return obj.loss(w, b);
  };
  const GradientFn grad = [&obj](const Matrix& w, std::int64_t b) {
    return obj.gradient(w, b);
  };
  return spectrum_report(loss, grad, params, batch, sub, cfg, rng);
}

std::vector<TargetQueries> compare_budget_to_target(
    const std::vector<MethodRuns>& methods, double target) {
  std::optional<std::uint64_t> shared_budget;
  for (const MethodRuns& method : methods) {
    for (const auto& records : method.per_seed) {
      if (records.empty()) {
        throw ConfigInvalid("compare: empty trajectory for " + method.method);
      }
      const std::uint64_t final_queries = records.back().queries;
      if (!shared_budget) shared_budget = final_queries;
      if (final_queries != *shared_budget) {
        throw ConfigInvalid("compare: mismatched query budgets (" +
                            std::to_string(final_queries) + " vs " +
                            std::to_string(*shared_budget) + ")");
      }
    }
  }

  std::vector<TargetQueries> rows;
  for (const MethodRuns& method : methods) {
    std::vector<double> per_seed;
    for (const auto& records : method.per_seed) {
      double value = std::numeric_limits<double>::infinity();
      for (const TrajectoryRecord& r : records) {
        if (r.eval_loss <= target) {
          value = static_cast<double>(r.queries);
          break;
        }
      }
      per_seed.push_back(value);
    }
    TargetQueries row;
    row.method = method.method;
    row.median_queries = median_of(std::move(per_seed));
    row.reached = std::isfinite(row.median_queries);
    rows.push_back(row);
  }
  return rows;
}

std::string render_target_table(const std::vector<TargetQueries>& rows,
                                double target) {
  std::ostringstream out;
  char head[128];
  std::snprintf(head, sizeof(head), "target eval loss: %.6g\n", target);
  out << head;
  size_t width = 8;
  for (const TargetQueries& row : rows) {
    width = std::max(width, row.method.size());
  }
  out << "method";
  out << std::string(width - 5, ' ') << "queries-to-target\n";
  for (const TargetQueries& row : rows) {
    out << row.method << std::string(width - row.method.size() + 1, ' ');
    if (row.reached) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.0f", row.median_queries);
      out << buf << "\n";
    } else {
      out << "N/A\n";
    }
  }
  return out.str();
}

void write_target_csv(const std::vector<TargetQueries>& rows, double target,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_target_csv: cannot open " + path);
  out << "method,target,queries_to_target\n";
  for (const TargetQueries& row : rows) {
    char buf[160];
    if (row.reached) {
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%.0f\n", row.method.c_str(),
                    target, row.median_queries);
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%.17g,N/A\n", row.method.c_str(),
                    target);
    }
    out << buf;
  }
}

bool run_selftest(std::ostream& out) {
  bool all_ok = true;
  const auto check = [&](const std::string& name, bool ok) {
    out << (ok ? "[ ok ] " : "[FAIL] ") << name << "\n";
    all_ok = all_ok && ok;
  };

  {
    RngStream rng{7, 0, 0};
    const Matrix a = gaussian_matrix(rng, 12, 5);
    const QrFactors f1 = qr_decompose(a);
    const QrFactors f2 = qr_decompose(a);
    const bool ortho =
        (f1.q.transpose() * f1.q - Matrix::Identity(5, 5)).norm() <= 1e-10;
    const bool recon = (f1.q * f1.r - a).norm() <= 1e-10 * a.norm();
    const bool deterministic = f1.q == f2.q && f1.r == f2.r;
    bool positive = true;
    for (Index i = 0; i < 5; ++i) positive = positive && f1.r(i, i) > 0.0;
    check("qr orthonormality, reconstruction, determinism", ortho && recon &&
                                                                deterministic &&
                                                                positive);
  }
  {
    RngStream rng{8, 0, 0};
    const Matrix a = gaussian_matrix(rng, 6, 4);
    const SvdFactors f = svd_oracle(a);
    const Matrix recon = f.u * f.sigma.asDiagonal() * f.v.transpose();
    check("svd oracle reconstruction", (recon - a).norm() <= 1e-8 * a.norm());
  }
  {
    RngStream base{11, 0, 0};
    RngStream s1 = base.split(1);
    RngStream s2 = base.split(2);
    RngStream s1_alone = base.split(1);
    double interleaved1 = 0.0;
    for (int i = 0; i < 8; ++i) {
      interleaved1 += s1.next_normal();
      (void)s2.next_normal();
    }
    double alone1 = 0.0;
    for (int i = 0; i < 8; ++i) alone1 += s1_alone.next_normal();
    check("rng stream isolation", interleaved1 == alone1);
  }
  {
    RngStream rng{13, 0, 0};
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      const Matrix a = qr_decompose(gaussian_matrix(rng, 32, 8)).q;
      const Matrix m_tilde = gaussian_matrix(rng, 8, 24);
      const Matrix lhs = a * msign_k_oracle(a.transpose() * a * m_tilde, 4);
      const Matrix rhs = msign_k_oracle(a * m_tilde, 4);
      ok = (lhs - rhs).norm() <= 1e-8;
    }
    check("rank-k orthogonalization lossless under orthonormal lift", ok);
  }
  {
    RngStream rng{17, 0, 0};
    const Matrix m = gaussian_matrix(rng, 10, 14);
    SpiCache cache = SpiCache::cold_start(14, 3, rng.split(1));
    PartialOrthogonalization po = spi_step(m, cache);
    const bool norm_law = std::abs(po.o.norm() - std::sqrt(3.0)) <= 1e-8;
    const bool consistent = (po.o - po.u * po.v.transpose()).norm() <= 1e-12;
    check("spi output norm law", norm_law && consistent);
  }
  {
    ExperimentConfig cfg;
    cfg.objective.kind = "quadratic";
    cfg.objective.m = 24;
    cfg.objective.n = 24;
    cfg.objective.x0_scale = 0.25;
    cfg.optimizer.kind = "zo-mopi";
    cfg.optimizer.mopi = ZoMopiConfig{1e-2, 0.9, 1e-3, 8, 4, 50, 2};
    cfg.budget = 400;
    cfg.seeds = {5};
    cfg.eval_every = 10;
    const ClockFn fake_clock = []() { return 0.0; };
    const auto trials = run_experiment(cfg, fake_clock);
    const auto trials_again = run_experiment(cfg, fake_clock);
    bool ok = trials.size() == 1 && trials[0].ok;
    if (ok) {
      ok = trials[0].ledger.total() == cfg.budget;
      const double expected = 1e-2 * std::sqrt(4.0);
      for (size_t i = 1; i < trials[0].records.size(); ++i) {
        ok = ok && std::abs(trials[0].records[i].update_norm - expected) <=
                       1e-8;
      }
      ok = ok && trials_again[0].records.size() == trials[0].records.size();
      for (size_t i = 0; ok && i < trials[0].records.size(); ++i) {
        const auto& a = trials[0].records[i];
        const auto& b = trials_again[0].records[i];
        ok = a.step == b.step && a.queries == b.queries &&
             a.train_loss == b.train_loss && a.eval_loss == b.eval_loss &&
             a.update_norm == b.update_norm;
      }
    }
    check("update-norm law, budget exactness, trajectory determinism", ok);
  }
  {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "zomopt_selftest.csv";
    std::vector<TrajectoryRecord> records;
    for (int i = 0; i < 5; ++i) {
      TrajectoryRecord r;
      r.step = i;
      r.queries = static_cast<std::uint64_t>(8 * i);
      r.train_loss = 1.0 / (i + 1.0);
      r.eval_loss = 2.0 / (i + 1.5);
      r.update_norm = 0.01 * i;
      r.wall_ms = 0.5 * i;
      r.spi_tracking_error = i == 0 ? kNan : 1e-3 * i;
      records.push_back(r);
    }
    emit_csv(records, path.string());
    const auto parsed = parse_csv(path.string());
    bool ok = parsed.size() == records.size();
    for (size_t i = 0; ok && i < records.size(); ++i) {
      const auto& a = records[i];
      const auto& b = parsed[i];
      const bool spi_same =
          (std::isnan(a.spi_tracking_error) &&
           std::isnan(b.spi_tracking_error)) ||
          a.spi_tracking_error == b.spi_tracking_error;
      ok = a.step == b.step && a.queries == b.queries &&
           a.train_loss == b.train_loss && a.eval_loss == b.eval_loss &&
           a.update_norm == b.update_norm && a.wall_ms == b.wall_ms && spi_same;
    }
    fs::remove(path);
    check("csv round-trip exactness", ok);
  }
  return all_ok;
}

}  // namespace zomopt
