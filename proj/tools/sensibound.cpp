// sensibound command-line entry point.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "sensibound/aggregate.hpp"
#include "sensibound/config.hpp"
#include "sensibound/errors.hpp"
#include "sensibound/pipeline.hpp"
#include "sensibound/verify.hpp"

namespace {

using namespace sensibound;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int workers = default_workers();

  void add(CLI::App* app) {
    app->add_option("--config", config, "key = value settings file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "master seed (overrides SENSIBOUND_SEED and the config file)");
    app->add_option("--workers", workers, "parallel DGP workers")->check(CLI::PositiveNumber);
  }
  Settings settings(Settings base = {}) const { return config.empty() ? base : load_settings(config, base); }
};

int run_verify(const std::string& suite, std::uint64_t seed, const std::string& fault) {
  VerifyOptions opt;
  opt.seed = seed;
  if (fault == "cate-sign") opt.cate = cate_bounds_sign_fault;
  bool ok = true;
  for (const auto& c : run_verify_suite(suite, opt)) {
    std::printf("%s  %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensitivity frontiers for conditional potential outcomes under latent confounding"};
  app.require_subcommand(1);

  // generate-prior
  auto* gen = app.add_subcommand("generate-prior", "sample synthetic DGPs and write dataset/query files");
  Common gen_common;
  gen_common.add(gen);
  int n_dgps = 64, n_query_rows = 128;
  std::optional<int> n_obs, d_x;
  std::string gen_out = "prior";
  bool gen_overwrite = false;
  gen->add_option("--n-dgps", n_dgps, "number of DGPs")->check(CLI::PositiveNumber);
  gen->add_option("--n-obs", n_obs, "observational rows per DGP");
  gen->add_option("--d-x", d_x, "covariate dimension");
  gen->add_option("--n-query-rows", n_query_rows, "query rows per DGP (each row gives both arms)")
      ->check(CLI::PositiveNumber);
  gen->add_option("--out-dir", gen_out, "output directory");
  gen->add_flag("--overwrite", gen_overwrite, "replace existing files");

  // label
  auto* lab = app.add_subcommand("label", "write frontier_points files for a generated prior");
  Common lab_common;
  lab_common.add(lab);
  std::string model = "kl-sweep", prior_dir = "prior", lab_out;
  std::optional<double> lambda_max, lambda_min;
  std::optional<int> grid_size;
  std::optional<bool> warm_start;
  bool lab_overwrite = false, no_logs = false;
  lab->add_option("--model", model, "labelling model")->check(CLI::IsMember({"msm-analytic", "kl-sweep"}));
  lab->add_option("--lambda-max", lambda_max, "largest multiplier (kl-sweep)");
  lab->add_option("--lambda-min", lambda_min, "smallest multiplier (kl-sweep)");
  lab->add_option("--grid-size", grid_size, "multipliers (kl-sweep) or sensitivity levels (msm-analytic)");
  lab->add_option("--warm-start", warm_start, "reuse the previous solution between multipliers (true/false)");
  lab->add_option("--prior-dir", prior_dir, "directory written by generate-prior");
  lab->add_option("--out-dir", lab_out, "output directory (default: the prior directory)");
  lab->add_flag("--overwrite", lab_overwrite, "replace existing files");
  lab->add_flag("--no-logs", no_logs, "skip per-DGP sweep logs");

  // ablate-warmstart
  auto* abl = app.add_subcommand("ablate-warmstart", "compare warm, cold and reference sweeps");
  Common abl_common;
  abl_common.add(abl);
  int abl_dgps = 16, abl_rows = 16;
  std::string report = "ablation.csv";
  bool both = false;
  abl->add_option("--n-dgps", abl_dgps, "number of DGPs")->check(CLI::PositiveNumber);
  abl->add_option("--query-rows", abl_rows, "query rows per DGP (each row gives both arms)")
      ->check(CLI::PositiveNumber);
  abl->add_option("--report", report, "per-lambda regret table; totals go next to it");
  abl->add_flag("--both-bounds", both, "sweep lower bounds too");

  // verify
  auto* ver = app.add_subcommand("verify", "run an invariant suite");
  std::string suite;
  std::optional<std::uint64_t> ver_seed;
  std::string fault;
  ver->add_option("--suite", suite, "oracles | frontier | flow")->required();
  ver->add_option("--seed", ver_seed, "master seed");
  ver->add_option("--inject-fault", fault)->check(CLI::IsMember({"cate-sign"}))->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) {
      Settings s = gen_common.settings();
      if (n_obs) s.prior.n_obs = *n_obs;
      if (d_x) s.prior.d_x = *d_x;
      PriorJob job;
      job.n_dgps = n_dgps;
      job.n_query_rows = n_query_rows;
      job.seed = resolve_seed(gen_common.seed, s, 0);
      job.prior = s.prior;
      job.out_dir = gen_out;
      job.overwrite = gen_overwrite;
      job.workers = gen_common.workers;
      const auto files = generate_prior(job);
      std::printf("wrote %zu files to %s\n", files.size(), gen_out.c_str());
      return kOk;
    }
    if (*lab) {
      Settings s = lab_common.settings();
      if (lambda_max) s.grid.lambda_max = *lambda_max;
      if (lambda_min) s.grid.lambda_min = *lambda_min;
      if (grid_size) s.grid.n_points = *grid_size;
      if (warm_start) s.sweep.warm_start = *warm_start;
      LabelJob job;
      job.model = model == "msm-analytic" ? LabelJob::Model::MsmAnalytic : LabelJob::Model::KlSweep;
      job.prior_dir = prior_dir;
      job.out_dir = lab_out.empty() ? prior_dir : lab_out;
      job.seed = resolve_seed(lab_common.seed, s, 0);
      job.prior = s.prior;
      job.sweep = s.sweep;
      job.grid = s.grid;
      job.overwrite = lab_overwrite;
      job.write_logs = !no_logs;
      job.workers = lab_common.workers;
      const auto files = label(job);
      std::printf("wrote %zu frontier files to %s\n", files.size(), job.out_dir.string().c_str());
      return kOk;
    }
    if (*abl) {
      Settings base;
      base.sweep = ablation_sweep_defaults();
      Settings s = abl_common.settings(base);
      AblationJob job;
      job.n_dgps = abl_dgps;
      job.query_rows = abl_rows;
      job.seed = resolve_seed(abl_common.seed, s, 0);
      job.prior = s.prior;
      job.sweep = s.sweep;
      job.grid = s.grid;
      job.both_bounds = both;
      job.workers = abl_common.workers;
      const auto r = ablate_warmstart(job);
      write_ablation_report(r, report);
      std::printf("sweeps %d  steps warm %ld cold %ld reference %ld  reduction %.3f\n", r.n_sweeps,
                  r.warm.total_steps, r.cold.total_steps, r.reference.total_steps, r.step_reduction);
      std::printf("mean regret warm %.5f cold %.5f  gap %.5f  mc s.e. %.5f\n", r.warm.overall_regret,
                  r.cold.overall_regret, r.regret_gap, r.mc_se);
      return kOk;
    }
    if (*ver) {
      if (!is_verify_suite(suite)) {
        std::fprintf(stderr, "unknown suite '%s' (expected oracles, frontier or flow)\n", suite.c_str());
        return kUsage;
      }
      return run_verify(suite, resolve_seed(ver_seed, Settings{}, 0), fault);
    }
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const FileExistsError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
