// SPDX-FileCopyrightText: 2026 The zomopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zomopt/harness.hpp"

namespace fs = std::filesystem;

namespace {

fs::path resolve_output_dir(const std::string& configured) {
  fs::path dir = configured;
  if (const char* root = std::getenv("ZOMOPT_OUTPUT_ROOT")) {
    if (root[0] != '\0' && dir.is_relative()) dir = fs::path(root) / dir;
  }
  fs::create_directories(dir);
  return dir;
}

void apply_overrides(zomopt::ExperimentConfig& cfg, long budget,
                     long eval_every, const std::string& output,
                     const std::vector<std::uint64_t>& seeds) {
  if (budget >= 0) cfg.budget = static_cast<std::uint64_t>(budget);
  if (eval_every > 0) cfg.eval_every = eval_every;
  if (!output.empty()) cfg.output = output;
  if (!seeds.empty()) cfg.seeds = seeds;
  cfg.validate();
}

int cmd_run(const std::string& config_path, long budget, long eval_every,
            const std::string& output, const std::vector<std::uint64_t>& seeds) {
  zomopt::ExperimentConfig cfg = zomopt::load_experiment_config(config_path);
  apply_overrides(cfg, budget, eval_every, output, seeds);
  const fs::path dir = resolve_output_dir(cfg.output);
  const std::string hash = zomopt::config_hash8(cfg);

  const auto trials = zomopt::run_experiment(cfg);
  bool all_ok = true;
  for (const auto& trial : trials) {
    if (!trial.ok) {
      all_ok = false;
      std::cerr << "seed " << trial.seed << ": FAILED: " << trial.error
                << "\n";
      continue;
    }
    const fs::path path =
        dir / (cfg.optimizer.kind + "-" + hash + "-seed" +
               std::to_string(trial.seed) + ".csv");
    zomopt::emit_csv(trial.records, path.string());
    std::cout << "seed " << trial.seed << ": " << trial.records.size()
              << " records, " << trial.ledger.total() << " queries -> "
              << path.string() << "\n";
  }
  return all_ok ? 0 : 1;
}

int cmd_spectrum(const std::string& config_path, const std::string& output) {
  zomopt::ExperimentConfig cfg = zomopt::load_experiment_config(config_path);
  if (!output.empty()) cfg.output = output;
  if (cfg.objective.kind != "logistic") {
    std::cerr << "spectrum: objective.kind must be logistic\n";
    return 1;
  }
  const fs::path dir = resolve_output_dir(cfg.output);
  const auto task = zomopt::LogisticTask::synthetic(
      cfg.objective.d, cfg.objective.classes, cfg.objective.n_train,
      cfg.objective.n_heldout, cfg.objective.batch, cfg.objective.l2,
      cfg.objective.seed);

  const bool use_subspace = cfg.optimizer.kind == "zo-mopi" ||
                            cfg.optimizer.kind == "zo-muon";
  const zomopt::RgeConfig rge{cfg.optimizer.mopi.mu,
                              cfg.optimizer.mopi.n_queries};

  std::FILE* summary = nullptr;
  const fs::path summary_path = dir / "spectrum-summary.csv";
  summary = std::fopen(summary_path.string().c_str(), "wb");
  if (summary == nullptr) {
    std::cerr << "spectrum: cannot open " << summary_path << "\n";
    return 1;
  }
  std::fprintf(summary, "seed,tail_mass_fo,tail_mass_zo,degenerate\n");

  for (const std::uint64_t seed : cfg.seeds) {
    zomopt::RngStream root{seed, 0, 0};
    zomopt::RngStream x0_rng = root.split(10);
    zomopt::RngStream est_rng = root.split(12);
    const zomopt::Matrix params =
        cfg.objective.x0_scale * zomopt::gaussian_matrix(x0_rng,
                                                         task.weight_rows(),
                                                         task.weight_cols());
    zomopt::SubspaceState sub;
    const zomopt::SubspaceState* sub_ptr = nullptr;
    if (use_subspace) {
      sub = zomopt::SubspaceState::init(task.weight_rows(),
                                        cfg.optimizer.mopi.r,
                                        cfg.optimizer.mopi.nu, root.split(11));
      sub_ptr = &sub;
    }
    const auto report =
        zomopt::spectrum_report(task, params, 0, sub_ptr, rge, est_rng);

    const fs::path path = dir / ("spectrum-seed" + std::to_string(seed) +
                                 ".csv");
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (f == nullptr) {
      std::cerr << "spectrum: cannot open " << path << "\n";
      std::fclose(summary);
      return 1;
    }
    std::fprintf(f, "index,fo_sigma,zo_sigma\n");
    const auto count =
        std::max(report.fo_sigma.size(), report.zo_sigma.size());
    for (Eigen::Index i = 0; i < count; ++i) {
      const double fo = i < report.fo_sigma.size() ? report.fo_sigma(i) : 0.0;
      const double zo = i < report.zo_sigma.size() ? report.zo_sigma(i) : 0.0;
      std::fprintf(f, "%td,%.17g,%.17g\n", i, fo, zo);
    }
    std::fclose(f);
    std::fprintf(summary, "%llu,%.17g,%.17g,%d\n",
                 static_cast<unsigned long long>(seed), report.tail_mass_fo,
                 report.tail_mass_zo, report.degenerate ? 1 : 0);
    std::cout << "seed " << seed << ": tail_mass_fo=" << report.tail_mass_fo
              << " tail_mass_zo=" << report.tail_mass_zo
              << (report.degenerate ? " (degenerate)" : "") << "\n";
  }
  std::fclose(summary);
  std::cout << "summary -> " << summary_path.string() << "\n";
  return 0;
}

int cmd_compare(const std::string& dir_arg, double target,
                const std::string& out_csv) {
  const fs::path dir = dir_arg;
  if (!fs::is_directory(dir)) {
    std::cerr << "compare: not a directory: " << dir << "\n";
    return 1;
  }
  // Trajectories are grouped by the method prefix of "<method>-<hash>-seedN.csv".
  std::map<std::string, zomopt::MethodRuns> methods;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".csv") continue;
    const auto dash = name.find('-');
    if (dash == std::string::npos || name.find("-seed") == std::string::npos) {
      continue;
    }
    std::string method = name.substr(0, name.find("-seed"));
    const auto hash_dash = method.rfind('-');
    if (hash_dash != std::string::npos) method = method.substr(0, hash_dash);
    auto& runs = methods[method];
    runs.method = method;
    runs.per_seed.push_back(zomopt::parse_csv(entry.path().string()));
  }
  if (methods.empty()) {
    std::cerr << "compare: no trajectory CSVs found in " << dir << "\n";
    return 1;
  }
  std::vector<zomopt::MethodRuns> list;
  for (auto& [_, runs] : methods) list.push_back(std::move(runs));
  const auto rows = zomopt::compare_budget_to_target(list, target);
  std::cout << zomopt::render_target_table(rows, target);
  if (!out_csv.empty()) {
    zomopt::write_target_csv(rows, target, out_csv);
    std::cout << "table -> " << out_csv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zeroth-order matrix optimization benchmark harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  long budget = -1;
  long eval_every = -1;
  std::vector<std::uint64_t> seeds;

  auto* run = app.add_subcommand("run", "execute an experiment, write CSVs");
  run->add_option("config", config_path, "experiment JSON")->required();
  run->add_option("--budget", budget, "override total query budget");
  run->add_option("--eval-every", eval_every, "override recording interval");
  run->add_option("--output", output, "override output directory");
  run->add_option("--seeds", seeds, "override seed list");

  auto* spectrum = app.add_subcommand(
      "spectrum", "emit gradient-estimate singular-value CSVs");
  spectrum->add_option("config", config_path, "experiment JSON")->required();
  spectrum->add_option("--output", output, "override output directory");

  std::string compare_dir;
  double target = 0.0;
  std::string compare_csv;
  auto* compare =
      app.add_subcommand("compare", "queries-to-target table from run CSVs");
  compare->add_option("dir", compare_dir, "directory of trajectory CSVs")
      ->required();
  compare->add_option("--target", target, "eval-loss target")->required();
  compare->add_option("--csv", compare_csv, "also write the table as CSV");

  auto* selftest =
      app.add_subcommand("selftest", "run the invariant self-check suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, budget, eval_every, output, seeds);
    }
    if (spectrum->parsed()) return cmd_spectrum(config_path, output);
    if (compare->parsed()) {
      return cmd_compare(compare_dir, target, compare_csv);
    }
    if (selftest->parsed()) {
      return zomopt::run_selftest(std::cout) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
