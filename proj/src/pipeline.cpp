#include "sensibound/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <regex>
#include <thread>

#include "sensibound/errors.hpp"

namespace sensibound {

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::clamp(workers, 1, std::max(n, 1));
  std::vector<std::exception_ptr> errors(std::max(n, 0));
  std::atomic<int> next{0};
  auto run = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::uint64_t scm_seed(std::uint64_t master, std::int64_t id) { return derive_seed(master, id, "scm"); }
std::uint64_t dataset_seed(std::uint64_t master, std::int64_t id) { return derive_seed(master, id, "dataset"); }
std::uint64_t query_seed(std::uint64_t master, std::int64_t id) { return derive_seed(master, id, "queries"); }

std::vector<std::filesystem::path> generate_prior(const PriorJob& job) {
  if (job.n_dgps < 1) throw InputError("n_dgps must be >= 1");
  if (job.n_query_rows < 1) throw InputError("n_query_rows must be >= 1");
  job.prior.validate();
  std::filesystem::create_directories(job.out_dir);
  std::vector<std::filesystem::path> out(2 * static_cast<std::size_t>(job.n_dgps));
  parallel_for(job.n_dgps, job.workers, [&](int id) {
    const auto scm = sample_scm(job.prior, scm_seed(job.seed, id));
    const auto data = sample_dataset(scm, job.prior.n_obs, dataset_seed(job.seed, id));
    const auto queries = sample_queries(scm, data, job.n_query_rows, query_seed(job.seed, id));
    out[2 * id] = emit_dataset(job.out_dir, id, data, job.overwrite, job.prior.d_x);
    out[2 * id + 1] = emit_queries(job.out_dir, id, queries, job.overwrite, job.prior.d_x);
  });
  return out;
}

std::vector<double> random_gamma_grid(double lo, double hi, int n, std::uint64_t seed) {
  if (!(lo >= 1.0 && hi > lo) || n < 1) throw InputError("gamma grid needs 1 <= lo < hi and n >= 1");
  Rng rng(seed);
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (auto& v : g) v = std::exp(a + (b - a) * ((static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53));
  std::sort(g.begin(), g.end());
  return g;
}

std::vector<LabelRecord> label_dgp(const LabelJob& job, std::int64_t dgp_id, const StructuralCausalModel& scm,
                                   const std::vector<QueryPoint>& queries, std::ostream* log) {
  std::vector<LabelRecord> records;
  records.reserve(queries.size() * 2 * job.grid.n_points);
  if (job.model == LabelJob::Model::MsmAnalytic) {
    const auto gammas = random_gamma_grid(job.gamma_min, job.gamma_max, job.grid.n_points,
                                          derive_seed(job.seed, dgp_id, "gamma-grid"));
    const LatentSampler sampler{LatentSampler::Kind::Sobol, job.sweep.sampler_seed};
    for (const auto& q : queries) {
      QueryContext ctx;
      ctx.query_id = q.query_id;
      ctx.pi = propensity(scm, q.x, q.a);
      ctx.curve = scm.outcome_curve(q.x, q.a);
      const MsmClosedForm table(ctx, job.msm_draws, sampler);
      for (double g : gammas) {
        const Bounds b = table(g);
        records.push_back({q.query_id, BoundType::Lower, g, b.lower});
        records.push_back({q.query_id, BoundType::Upper, g, b.upper});
      }
    }
    return records;
  }
  const GtsmSpec spec{GtsmSpec::Kind::F_KL};
  SweepOptions opts;
  opts.log = log;
  for (const auto& q : queries) {
    const QueryContext ctx = query_context(scm, q);
    for (BoundType b : {BoundType::Lower, BoundType::Upper}) {
      const auto curve = sweep(ctx, spec, b, job.grid, job.sweep, opts);
      const auto recs = to_records(curve);
      records.insert(records.end(), recs.begin(), recs.end());
    }
  }
  return records;
}

std::vector<std::filesystem::path> label(const LabelJob& job) {
  job.prior.validate();
  job.sweep.validate();
  job.grid.validate();
  if (!std::filesystem::is_directory(job.prior_dir)) {
    throw InputError("prior directory " + job.prior_dir.string() + " does not exist");
  }
  std::vector<std::int64_t> ids;
  const std::regex pattern(R"(queries_(\d+)\.csv)");
  for (const auto& entry : std::filesystem::directory_iterator(job.prior_dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) ids.push_back(std::stoll(m[1].str()));
  }
  if (ids.empty()) throw InputError("no queries_{id}.csv files in " + job.prior_dir.string());
  std::sort(ids.begin(), ids.end());
  std::filesystem::create_directories(job.out_dir);

  std::vector<std::filesystem::path> out(ids.size());
  parallel_for(static_cast<int>(ids.size()), job.workers, [&](int i) {
    const std::int64_t id = ids[i];
    if (!std::filesystem::exists(dataset_path(job.prior_dir, id))) {
      throw InputError("missing " + dataset_path(job.prior_dir, id).string());
    }
    const auto queries = load_queries(queries_path(job.prior_dir, id));
    // covariate dimension and dataset size come from the stored files
    const auto stored = load_dataset(dataset_path(job.prior_dir, id));
    PriorConfig prior = job.prior;
    prior.n_obs = static_cast<int>(stored.rows.size());
    if (!stored.rows.empty()) prior.d_x = static_cast<int>(stored.rows.front().x.size());
    prior.validate();
    const auto scm = sample_scm(prior, scm_seed(job.seed, id));
    // The SCM is regenerated from (seed, config); confirm it is the one that
    // produced the stored queries.
    const int rows = static_cast<int>(queries.size() / 2);
    if (rows >= 1) {
      const auto data = sample_dataset(scm, prior.n_obs, dataset_seed(job.seed, id));
      const auto expected = sample_queries(scm, data, rows, query_seed(job.seed, id));
      bool same = expected.size() == queries.size();
      for (std::size_t j = 0; same && j < queries.size(); ++j) {
        same = expected[j].query_id == queries[j].query_id && expected[j].a == queries[j].a &&
               expected[j].x == queries[j].x;
      }
      if (!same) {
        throw InputError(queries_path(job.prior_dir, id).string() +
                         " was not generated with this seed and prior configuration");
      }
    }
    std::ofstream log;
    if (job.write_logs && job.model == LabelJob::Model::KlSweep) {
      log.open(job.out_dir / ("sweep_log_" + std::to_string(id) + ".jsonl"), std::ios::trunc);
    }
    const auto records = label_dgp(job, id, scm, queries, log.is_open() ? &log : nullptr);
    out[i] = emit_frontier_points(job.out_dir, id, records, job.overwrite);
  });
  return out;
}

namespace {

struct AblationTask {
  int dgp;
  QueryContext ctx;
  BoundType bound;
};

struct AblationResult {
  FrontierCurve warm, cold, reference;
  double t_warm = 0, t_cold = 0, t_ref = 0;
};

void summarize(AblationCondition& c, const std::vector<std::vector<double>>& regrets, std::size_t n_lambda) {
  c.mean_regret.assign(n_lambda, 0.0);
  c.regret_se.assign(n_lambda, 0.0);
  const double n = static_cast<double>(regrets.size());
  std::vector<double> all;
  for (std::size_t l = 0; l < n_lambda; ++l) {
    double s = 0.0, ss = 0.0;
    for (const auto& r : regrets) s += r[l];
    const double m = s / n;
    for (const auto& r : regrets) ss += (r[l] - m) * (r[l] - m);
    c.mean_regret[l] = m;
    c.regret_se[l] = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  }
  for (const auto& r : regrets) {
    double s = 0.0;
    for (double v : r) s += v;
    all.push_back(s / static_cast<double>(n_lambda));
  }
  double s = 0.0, ss = 0.0;
  for (double v : all) s += v;
  c.overall_regret = s / n;
  for (double v : all) ss += (v - c.overall_regret) * (v - c.overall_regret);
  c.overall_regret_se = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
}

}  // namespace

AblationReport ablate_warmstart(const AblationJob& job) {
  if (job.n_dgps < 1 || job.query_rows < 1) throw InputError("ablation needs at least one DGP and one query row");
  std::vector<AblationTask> tasks;
  for (int d = 0; d < job.n_dgps; ++d) {
    const auto scm = sample_scm(job.prior, scm_seed(job.seed, d));
    const auto data = sample_dataset(scm, job.prior.n_obs, dataset_seed(job.seed, d));
    for (const auto& q : sample_queries(scm, data, job.query_rows, query_seed(job.seed, d))) {
      const QueryContext ctx = query_context(scm, q);
      tasks.push_back({d, ctx, BoundType::Upper});
      if (job.both_bounds) tasks.push_back({d, ctx, BoundType::Lower});
    }
  }

  SweepConfig warm = job.sweep;
  warm.warm_start = true;
  warm.early_stop.enabled = true;
  SweepConfig cold = warm;
  cold.warm_start = false;
  SweepConfig ref = warm;
  ref.early_stop.enabled = false;
  ref.base_max_steps = job.reference_base_steps;
  ref.k_train = job.reference_k_train;
  const GtsmSpec spec{GtsmSpec::Kind::F_KL};

  using clock = std::chrono::steady_clock;
  auto timed = [&](const QueryContext& ctx, BoundType b, const SweepConfig& c, double& secs) {
    const auto t0 = clock::now();
    auto curve = sweep(ctx, spec, b, job.grid, c);
    secs = std::chrono::duration<double>(clock::now() - t0).count();
    curve.checkpoints.clear();
    return curve;
  };
  std::vector<AblationResult> results(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), job.workers, [&](int i) {
    auto& r = results[i];
    r.warm = timed(tasks[i].ctx, tasks[i].bound, warm, r.t_warm);
    r.cold = timed(tasks[i].ctx, tasks[i].bound, cold, r.t_cold);
    r.reference = timed(tasks[i].ctx, tasks[i].bound, ref, r.t_ref);
  });

  AblationReport rep;
  rep.lambdas = job.grid.values();
  rep.n_sweeps = static_cast<int>(results.size());
  rep.warm.name = "warm";
  rep.cold.name = "cold";
  rep.reference.name = "reference";
  std::vector<std::vector<double>> rw, rc, rr;
  double se_sum = 0.0, gap_sum = 0.0;
  long n_points = 0;
  rep.min_regret_z = std::numeric_limits<double>::infinity();
  for (const auto& r : results) {
    rw.push_back(regret_vs_reference(r.warm, r.reference));
    rc.push_back(regret_vs_reference(r.cold, r.reference));
    rr.push_back(regret_vs_reference(r.reference, r.reference));
    rep.warm.total_steps += r.warm.total_steps();
    rep.cold.total_steps += r.cold.total_steps();
    rep.reference.total_steps += r.reference.total_steps();
    rep.warm.seconds += r.t_warm;
    rep.cold.seconds += r.t_cold;
    rep.reference.seconds += r.t_ref;
    for (std::size_t l = 0; l < rep.lambdas.size(); ++l) {
      const double se = 0.5 * (r.warm.points[l].objective_se + r.cold.points[l].objective_se);
      se_sum += se;
      gap_sum += rw.back()[l] - rc.back()[l];
      ++n_points;
      const double ref_se = r.reference.points[l].objective_se;
      rep.min_regret_z = std::min({rep.min_regret_z, rw.back()[l] / ref_se, rc.back()[l] / ref_se});
    }
  }
  summarize(rep.warm, rw, rep.lambdas.size());
  summarize(rep.cold, rc, rep.lambdas.size());
  summarize(rep.reference, rr, rep.lambdas.size());
  rep.mc_se = se_sum / static_cast<double>(n_points);
  rep.regret_gap = gap_sum / static_cast<double>(n_points);
  rep.step_reduction = 1.0 - static_cast<double>(rep.warm.total_steps) / static_cast<double>(rep.cold.total_steps);
  return rep;
}

void write_ablation_report(const AblationReport& r, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << "condition,lambda_index,lambda,mean_regret,regret_se\n";
  for (const auto* c : {&r.warm, &r.cold, &r.reference}) {
    for (std::size_t l = 0; l < r.lambdas.size(); ++l) {
      out << c->name << ',' << l << ',' << format_real(r.lambdas[l]) << ',' << format_real(c->mean_regret[l]) << ','
          << format_real(c->regret_se[l]) << '\n';
    }
  }
  auto totals = path;
  totals.replace_filename(path.stem().string() + "_totals.csv");
  std::ofstream t(totals, std::ios::trunc);
  if (!t) throw InputError("cannot write " + totals.string());
  t << "condition,total_steps,seconds,mean_regret,regret_se\n";
  for (const auto* c : {&r.warm, &r.cold, &r.reference}) {
    t << c->name << ',' << c->total_steps << ',' << format_real(c->seconds) << ',' << format_real(c->overall_regret)
      << ',' << format_real(c->overall_regret_se) << '\n';
  }
}

}  // namespace sensibound
