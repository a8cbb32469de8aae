#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sensibound/config.hpp"
#include "sensibound/datastore.hpp"

namespace sensibound {

/// Calls fn(i) for i in [0, n) on up to `workers` threads. Exceptions are
/// rethrown (lowest index first) after all workers finish.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);
int default_workers();

/// Per-DGP stream seeds derived from the master seed.
std::uint64_t scm_seed(std::uint64_t master, std::int64_t dgp_id);
std::uint64_t dataset_seed(std::uint64_t master, std::int64_t dgp_id);
std::uint64_t query_seed(std::uint64_t master, std::int64_t dgp_id);

struct PriorJob {
  int n_dgps = 64;
  int n_query_rows = 128;
  std::uint64_t seed = 0;
  PriorConfig prior;
  std::filesystem::path out_dir;
  bool overwrite = false;
  int workers = 1;
};

/// Writes dataset_{id}.csv and queries_{id}.csv for ids 0..n_dgps-1.
std::vector<std::filesystem::path> generate_prior(const PriorJob& job);

struct LabelJob {
  enum class Model { MsmAnalytic, KlSweep };
  Model model = Model::KlSweep;
  std::filesystem::path prior_dir;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  PriorConfig prior;
  SweepConfig sweep;
  LambdaGrid grid;
  double gamma_min = 1.0, gamma_max = 5.0;  // MSM grid range
  int msm_draws = 4096;
  bool overwrite = false;
  bool write_logs = true;
  int workers = 1;
};

/// Log-uniform random sensitivity levels on [lo, hi], sorted ascending.
std::vector<double> random_gamma_grid(double lo, double hi, int n, std::uint64_t seed);

/// Labels every queries_{id}.csv in prior_dir; returns the frontier files written.
std::vector<std::filesystem::path> label(const LabelJob& job);

/// Records for one DGP (no file I/O).
std::vector<LabelRecord> label_dgp(const LabelJob& job, std::int64_t dgp_id, const StructuralCausalModel& scm,
                                   const std::vector<QueryPoint>& queries, std::ostream* log = nullptr);

inline SweepConfig ablation_sweep_defaults() {
  SweepConfig c;
  c.n_bins = 8;
  c.k_eval = 1024;
  return c;
}

struct AblationJob {
  int n_dgps = 16;
  int query_rows = 16;  // each row expands to both arms
  std::uint64_t seed = 0;
  PriorConfig prior;
  SweepConfig sweep = ablation_sweep_defaults();  // warm_start and early_stop are set per condition
  LambdaGrid grid;
  // reference: full step schedule without early stopping on a larger training bank
  int reference_base_steps = 250;
  int reference_k_train = 512;
  bool both_bounds = false;
  int workers = 1;
};

struct AblationCondition {
  std::string name;
  long total_steps = 0;
  double seconds = 0.0;
  std::vector<double> mean_regret;  // per lambda
  std::vector<double> regret_se;    // per lambda, across sweeps
  double overall_regret = 0.0;
  double overall_regret_se = 0.0;
};

struct AblationReport {
  std::vector<double> lambdas;
  AblationCondition warm, cold, reference;
  int n_sweeps = 0;
  double mc_se = 0.0;               // mean per-point objective standard error
  double step_reduction = 0.0;      // 1 - warm / cold
  double regret_gap = 0.0;          // mean(warm regret - cold regret)
  double min_regret_z = 0.0;        // smallest regret / objective s.e. across all points
  bool steps_ok() const { return step_reduction >= 0.30; }
  bool regret_ok() const { return regret_gap <= mc_se; }
};

AblationReport ablate_warmstart(const AblationJob& job);
/// CSV with one row per (condition, lambda); per-condition totals go to
/// <stem>_totals.csv next to it.
void write_ablation_report(const AblationReport& r, const std::filesystem::path& path);

}  // namespace sensibound
