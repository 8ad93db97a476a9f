// Experiment runner: configuration-driven simulations and verification
// reports for the stable-jump branching models, with CSV artifacts.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "alphacir/analytics.hpp"
#include "alphacir/cir_engine.hpp"
#include "alphacir/config.hpp"
#include "alphacir/csv.hpp"
#include "alphacir/gfv_verify.hpp"
#include "alphacir/kernel_verify.hpp"
#include "alphacir/mbi_engine.hpp"
#include "alphacir/parallel.hpp"
#include "alphacir/samplers.hpp"
#include "alphacir/stats.hpp"
#include "alphacir/version.hpp"

namespace fs = std::filesystem;
using namespace alphacir;

namespace {

struct RunContext {
  ConfigFile cfg;
  fs::path out_dir;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed_override;
  std::vector<std::string> report;
  bool all_pass = true;

  std::uint64_t seed() const {
    if (seed_override) return *seed_override;
    return cfg.get_u64("seed", 1);
  }

  void line(const std::string& s) {
    report.push_back(s);
    std::cout << s << "\n";
  }

  void check(bool ok, const std::string& what) {
    line(std::string(ok ? "[PASS] " : "[FAIL] ") + what);
    if (!ok) all_pass = false;
  }

  void write_summary(const std::string& experiment) {
    std::ofstream out(out_dir / "summary.txt", std::ios::binary);
    out << "alphacir " << kVersion << "\n";
    out << "experiment: " << experiment << "\n";
    out << "resolved config (" << cfg.name() << "):\n";
    for (const auto& [k, e] : cfg.entries())
      out << "  " << k << " = " << e.value << "\n";
    out << "seed: " << seed() << "\n";
    out << "threads: " << threads << "\n";
    for (const auto& s : report) out << s << "\n";
    out << (all_pass ? "RESULT: PASS" : "RESULT: FAIL") << "\n";
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------

int run_stationary(RunContext& ctx) {
  const ModelParams p = load_model_params(ctx.cfg);
  p.require_ergodic();
  const long n = ctx.cfg.get_long("samples", 1000000);
  const auto lambdas = ctx.cfg.get_doubles("lambda_grid", {0.5, 1.0, 2.0});
  const std::uint64_t seed = ctx.seed();
  const std::size_t K = p.num_types();

  const std::size_t block = 4096;
  const std::size_t n_blocks = (static_cast<std::size_t>(n) + block - 1) / block;
  struct Acc {
    std::vector<double> s, s2;
  };
  std::vector<Acc> acc(n_blocks);
  parallel_for(n_blocks, ctx.threads, [&](std::size_t bi) {
    Acc& a = acc[bi];
    a.s.assign(lambdas.size(), 0.0);
    a.s2.assign(lambdas.size(), 0.0);
    const long lo = static_cast<long>(bi * block);
    const long hi = std::min<long>(n, lo + block);
    for (long i = lo; i < hi; ++i) {
      RngStream rng(seed, static_cast<std::uint64_t>(i));
      const auto eta = sample_linnik_measure(rng, p);
      double total = 0.0;
      for (double v : eta) total += v;
      for (std::size_t li = 0; li < lambdas.size(); ++li) {
        const double v = std::exp(-lambdas[li] * total);
        a.s[li] += v;
        a.s2[li] += v * v;
      }
    }
  });

  std::vector<CsvRow> rows;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    double s = 0.0, s2 = 0.0;
    for (const auto& a : acc) {
      s += a.s[li];
      s2 += a.s2[li];
    }
    const auto est = mc_from_sums(s, s2, n);
    const std::vector<double> f(K, lambdas[li]);
    const double target = std::exp(-stationary_log_laplace(p, f));
    rows.push_back({lambdas[li], est.value, est.std_error, target,
                    (est.value - target) / est.std_error});
    ctx.check(est.within(target, 3.0),
              "stationary Laplace at lambda=" + fmt(lambdas[li]) + ": emp=" +
                  fmt(est.value) + " exact=" + fmt(target) + " (" +
                  fmt((est.value - target) / est.std_error) + " se)");
  }
  emit_csv({"lambda", "empirical", "std_error", "closed_form", "z_score"}, rows,
           (ctx.out_dir / "stationary_laplace.csv").string());
  return 0;
}

int run_simulate(RunContext& ctx) {
  const ModelParams p = load_model_params(ctx.cfg);
  SimConfig sim = load_sim_config(ctx.cfg);
  sim.seed = ctx.seed();
  const auto t_grid = ctx.cfg.get_doubles("t_grid", {0.5, 1.0, 2.0});
  const auto lambda_grid = ctx.cfg.get_doubles("lambda_grid", {0.5, 1.0, 2.0});
  sim.horizon = t_grid.back();
  const std::size_t K = p.num_types();
  const auto eta0 =
      ctx.cfg.has("z0") ? ctx.cfg.get_per_type("z0", K) : std::vector<double>(K, 1.0);
  const std::vector<double> f_dir(K, 1.0);
  const double bias_c = ctx.cfg.get_double("bias_budget_c", 0.05);
  const double budget =
      bias_c * (sim.h + std::pow(sim.delta_b, 1.0 - p.alpha) +
                std::pow(sim.delta_i, 1.0 - p.alpha));

  LaplaceDeathPolicy death;
  death.enabled = true;
  const auto panel = run_measure_laplace_panel(p, sim, eta0, f_dir, t_grid,
                                               lambda_grid, ctx.threads, death);

  std::vector<CsvRow> rows;
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
      std::vector<double> f(K);
      for (std::size_t r = 0; r < K; ++r) f[r] = lambda_grid[li] * f_dir[r];
      const double target = laplace_semigroup(p, eta0, f, t_grid[ti]);
      const auto& c = panel.cell(ti, li);
      rows.push_back({t_grid[ti], lambda_grid[li], c.mean, c.std_error, target,
                      c.mean - target});
      ctx.check(std::fabs(c.mean - target) <= 3.0 * c.std_error + budget,
                "semigroup t=" + fmt(t_grid[ti]) + " lambda=" +
                    fmt(lambda_grid[li]) + ": emp=" + fmt(c.mean) + " exact=" +
                    fmt(target) + " diff=" + fmt(c.mean - target));
    }
  }
  emit_csv({"t", "lambda", "empirical", "std_error", "closed_form", "diff"},
           rows, (ctx.out_dir / "semigroup_panel.csv").string());
  ctx.line("clamp events: " + std::to_string(panel.clamp_events) +
           ", frozen paths: " + std::to_string(panel.frozen_paths) +
           " (value bound " + fmt(panel.frozen_value_bound) + ")");

  if (ctx.cfg.get_long("dump_paths", 0) > 0) {
    const long n_dump = std::min<long>(ctx.cfg.get_long("dump_paths", 0), 64);
    std::vector<CsvRow> path_rows;
    for (long i = 0; i < n_dump; ++i) {
      RngStream rng(sim.seed, static_cast<std::uint64_t>(1) << 62 | i);
      const auto rec = simulate_measure_path(p, sim, eta0, rng);
      for (std::size_t k = 0; k < rec.times.size(); ++k) {
        CsvRow row{static_cast<long>(i), rec.times[k]};
        for (std::size_t r = 0; r < K; ++r) row.push_back(rec.states[k][r]);
        path_rows.push_back(std::move(row));
      }
    }
    std::vector<std::string> header{"replica", "t"};
    for (std::size_t r = 0; r < K; ++r)
      header.push_back("state_" + std::to_string(r));
    emit_csv(header, path_rows, (ctx.out_dir / "paths.csv").string());
  }
  return 0;
}

int run_verify_kernels(RunContext& ctx) {
  const auto alphas = ctx.cfg.get_doubles(
      "alpha_grid", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  const long grids_per_alpha = ctx.cfg.get_long("grids", 20);
  const long grid_points = ctx.cfg.get_long("grid_points", 32);
  const double s_max = ctx.cfg.get_double("s_max", 50.0);
  const double tol = ctx.cfg.get_double("psd_tolerance", 1e-8);
  const std::uint64_t seed = ctx.seed();

  std::vector<CsvRow> rows;
  double worst = 0.0;
  for (double alpha : alphas) {
    for (long g = 0; g < grids_per_alpha; ++g) {
      RngStream rng(seed, static_cast<std::uint64_t>(g) |
                              (static_cast<std::uint64_t>(alpha * 1000) << 32));
      std::vector<double> grid(grid_points);
      for (auto& s : grid) {
        // log-spaced random points probing both the near-origin
        // singularity and the tail
        const double u = rng.u01();
        s = s_max * std::exp(std::log(1e-4) * (1.0 - u));
      }
      std::sort(grid.begin(), grid.end());
      const double ev = gram_min_eigenvalue(
          [alpha](double s, double t) { return remainder_kernel(alpha, s, t); },
          grid);
      worst = std::min(worst, ev);
      rows.push_back({alpha, g, ev});
    }
  }
  emit_csv({"alpha", "grid", "min_eigenvalue"}, rows,
           (ctx.out_dir / "gram_eigenvalues.csv").string());
  ctx.check(worst >= -tol, "min Gram eigenvalue of the remainder kernel = " +
                               fmt(worst) + " >= " + fmt(-tol));

  // dual-formula agreement panel
  RngStream rng(seed, 0xA11CE);
  double worst_k = 0.0, worst_rem = 0.0, worst_kt = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double alpha = 0.05 + 0.9 * rng.u01();
    const double s = 50.0 * std::pow(rng.u01(), 2.0) + 1e-3;
    const double t = 50.0 * std::pow(rng.u01(), 2.0) + 1e-3;
    const double k1 = kernel_k(alpha, s, t), k2 = kernel_k_direct(alpha, s, t);
    worst_k = std::max(worst_k, std::fabs(k1 - k2) / std::max(1e-300, std::fabs(k1)));
    const double r1 = remainder_kernel(alpha, s, t);
    const double r2 = remainder_kernel_decomposed(alpha, s, t);
    worst_rem =
        std::max(worst_rem, std::fabs(r1 - r2) / std::max(1e-300, std::fabs(r1)));
    const double h = 1e-4;
    const double fd = (kernel_k(alpha, s + h, t + h) - kernel_k(alpha, s + h, t - h) -
                       kernel_k(alpha, s - h, t + h) + kernel_k(alpha, s - h, t - h)) /
                      (4.0 * h * h);
    worst_kt = std::max(
        worst_kt, std::fabs(kernel_ktilde(alpha, s, t) - fd) /
                      std::max(1e-12, std::fabs(fd)));
  }
  ctx.check(worst_k <= 1e-12, "kernel dual-formula agreement: " + fmt(worst_k));
  ctx.check(worst_rem <= 1e-10,
            "remainder dual-formula agreement: " + fmt(worst_rem));
  ctx.check(worst_kt <= 1e-5,
            "mixed-derivative kernel vs finite differences: " + fmt(worst_kt));

  // randomized 2V >= U panel
  long violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const double alpha = 0.05 + 0.9 * rng.u01();
    ScalarExpFunctional f;
    const int terms = 1 + static_cast<int>(rng.u01() * 6);
    for (int j = 0; j < terms; ++j)
      f.terms.push_back({4.0 * rng.u01() - 2.0, 0.05 + 19.95 * rng.u01()});
    const auto [u, v] = check_uv_inequality(alpha, f);
    if (2.0 * v < u - 1e-10 * std::fabs(u)) ++violations;
  }
  ctx.check(violations == 0, "2V >= U randomized panel: " +
                                 std::to_string(violations) + " violations");
  return 0;
}

int run_verify_gap(RunContext& ctx) {
  GapTestConfig gcfg;
  gcfg.params.alpha = ctx.cfg.get_double("alpha", 0.5);
  gcfg.params.a = ctx.cfg.get_double("a", 1.0);
  gcfg.params.b = ctx.cfg.get_double("b", 1.0);
  gcfg.params.m = ctx.cfg.get_double("m", 1.0);
  gcfg.mc_outer_base = ctx.cfg.get_long("outer", 100000);
  gcfg.mc_inner = ctx.cfg.get_long("inner", 8);
  gcfg.seed = ctx.seed();
  gcfg.threads = ctx.threads;
  const auto rep = gap_acceptance_test(gcfg);

  std::vector<CsvRow> rows;
  for (const auto& pt : rep.points)
    rows.push_back(
        {pt.t, pt.var_closed_form, pt.var_mc, pt.mc_std_error, pt.n_outer});
  emit_csv({"t", "var_closed_form", "var_mc", "mc_std_error", "n_outer"}, rows,
           (ctx.out_dir / "gap_variance.csv").string());

  ctx.check(rep.pass_gap_exact,
            "gap_exact = " + fmt(rep.gap_exact_value) + " (b/2)");
  ctx.check(rep.pass_closed_form,
            "closed-form slope " + fmt(rep.cf_fit.slope) + " within 5% of " +
                fmt(rep.expected_slope));
  ctx.check(rep.pass_consistency,
            "MC points agree with the closed-form curve within error bars");
  ctx.check(rep.pass_mc, "MC slope " + fmt(rep.mc_fit.slope) + " +- " +
                             fmt(rep.mc_fit.half_width) + " within 15% of " +
                             fmt(rep.expected_slope));
  return 0;
}

int run_gfv(RunContext& ctx) {
  const ModelParams p = load_model_params(ctx.cfg);
  GfvConfig gfv = load_gfv_config(ctx.cfg);
  gfv.seed = ctx.seed();
  const auto s_grid = ctx.cfg.get_doubles("s_grid", {0.5, 1.0});
  gfv.horizon = s_grid.back();
  const std::size_t K = p.num_types();
  const auto eta0 =
      ctx.cfg.has("z0") ? ctx.cfg.get_per_type("z0", K) : std::vector<double>(K, 1.0);
  std::vector<double> f =
      ctx.cfg.has("f") ? ctx.cfg.get_per_type("f", K) : std::vector<double>(K, 0.0);
  if (!ctx.cfg.has("f")) f[0] = 1.0;  // default: first-type weight
  double tot0 = 0.0;
  for (double v : eta0) tot0 += v;
  ProbState mu0(K);
  for (std::size_t r = 0; r < K; ++r) mu0[r] = eta0[r] / tot0;

  const std::string route = ctx.cfg.get_string("route", "direct");
  std::vector<CsvRow> rows;
  std::vector<GfvPanelCell> direct, tc;
  if (route == "direct" || route == "both") {
    direct = gfv_direct_panel(p, gfv, mu0, s_grid, f, ctx.threads,
                              static_cast<std::uint64_t>(3) << 56);
    for (std::size_t k = 0; k < s_grid.size(); ++k)
      rows.push_back({std::string("direct"), s_grid[k], direct[k].mean,
                      direct[k].mean_se, direct[k].variance,
                      direct[k].variance_se});
  }
  if (route == "time-change" || route == "both") {
    SimConfig sim = load_sim_config(ctx.cfg);
    sim.seed = gfv.seed;
    sim.n_paths = gfv.n_paths;
    sim.horizon = 2.0 * s_grid.back() + 2.0;
    tc = gfv_timechange_panel(p, sim, eta0, s_grid, f, ctx.threads,
                              static_cast<std::uint64_t>(4) << 56);
    for (std::size_t k = 0; k < s_grid.size(); ++k)
      rows.push_back({std::string("time-change"), s_grid[k], tc[k].mean,
                      tc[k].mean_se, tc[k].variance, tc[k].variance_se});
  }
  emit_csv({"route", "s", "mean", "mean_se", "variance", "variance_se"}, rows,
           (ctx.out_dir / "gfv_functionals.csv").string());

  if (route == "both") {
    const double mean_budget = ctx.cfg.get_double("mean_bias_budget", 2e-3);
    const double var_budget = ctx.cfg.get_double("var_bias_budget", 2e-3);
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
      const double dm = direct[k].mean - tc[k].mean;
      const double se_m =
          std::sqrt(direct[k].mean_se * direct[k].mean_se +
                    tc[k].mean_se * tc[k].mean_se);
      ctx.check(std::fabs(dm) <= 3.0 * se_m + mean_budget,
                "route means at s=" + fmt(s_grid[k]) + ": " +
                    fmt(direct[k].mean) + " vs " + fmt(tc[k].mean));
      const double dv = direct[k].variance - tc[k].variance;
      const double se_v =
          std::sqrt(direct[k].variance_se * direct[k].variance_se +
                    tc[k].variance_se * tc[k].variance_se);
      ctx.check(std::fabs(dv) <= 3.0 * se_v + var_budget,
                "route variances at s=" + fmt(s_grid[k]) + ": " +
                    fmt(direct[k].variance) + " vs " + fmt(tc[k].variance));
    }
  }
  return 0;
}

int run_gfv_decay(RunContext& ctx) {
  const ModelParams p = load_model_params(ctx.cfg);
  for (std::size_t r = 0; r < p.num_types(); ++r)
    if (p.a[r] != 1.0 || p.b[r] != 1.0)
      ctx.cfg.fail_key("a", "decay experiment requires the unit model a=b=1");
  if (p.m_total() <= 1.0)
    ctx.cfg.fail_key("m", "stationary ratio law requires m(E) > 1");
  GfvConfig gfv = load_gfv_config(ctx.cfg);
  gfv.seed = ctx.seed();
  const auto t_grid = ctx.cfg.get_doubles("decay_t_grid", {0.25, 0.5, 1.0, 2.0, 4.0});
  gfv.horizon = t_grid.back();
  const long n_outer = ctx.cfg.get_long("outer", 256);
  const long n_inner = ctx.cfg.get_long("inner", 256);

  const auto curve = gfv_variance_decay(
      p, [](const ProbState& mu) { return mu[0]; }, gfv, t_grid, n_outer,
      n_inner, ctx.threads);

  std::vector<CsvRow> rows;
  for (const auto& pt : curve.points)
    rows.push_back({pt.t, pt.variance, pt.std_error, pt.mean_inner_variance});
  emit_csv({"t", "variance", "std_error", "mean_inner_variance"}, rows,
           (ctx.out_dir / "gfv_decay.csv").string());

  ctx.line("importance weights: mean " + fmt(curve.weight_mean) + " +- " +
           fmt(curve.weight_mean_se) + ", ESS " + fmt(curve.ess) + " of " +
           std::to_string(n_outer));
  ctx.check(curve.ess > n_outer / 10.0, "effective sample size above n/10");

  bool monotone = true;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    if (b.variance > a.variance + 2.0 * (a.std_error + b.std_error))
      monotone = false;
  }
  ctx.check(monotone, "variance curve monotone nonincreasing within error bars");

  // terminal log-log slope over the last decade
  std::vector<double> lt, lv;
  const double t_hi = curve.points.back().t;
  for (const auto& pt : curve.points)
    if (pt.t >= t_hi / 10.0 && pt.variance > 0.0) {
      lt.push_back(std::log(pt.t));
      lv.push_back(std::log(pt.variance));
    }
  if (lt.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
      sx += lt[i];
      sy += lv[i];
      sxx += lt[i] * lt[i];
      sxy += lt[i] * lv[i];
    }
    const double n = static_cast<double>(lt.size());
    const double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
    const double max_slope = ctx.cfg.get_double("max_loglog_slope", -0.5);
    ctx.check(slope <= max_slope, "terminal log-log slope " + fmt(slope) +
                                      " <= " + fmt(max_slope));
  } else {
    ctx.check(false, "decay slope: not enough positive variance points");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stable-jump branching process simulation and verification"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  long threads = -1;
  std::optional<std::uint64_t> seed_override;
  std::uint64_t seed_val = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file")
        ->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads");
    sub->add_option("--seed", seed_val, "seed override")
        ->each([&](const std::string&) { seed_set = true; });
  };

  const std::vector<std::string> kinds = {"simulate",      "stationary",
                                          "verify-kernels", "verify-gap",
                                          "gfv",           "gfv-decay"};
  for (const auto& k : kinds) add_common(app.add_subcommand(k));

  CLI11_PARSE(app, argc, argv);
  const std::string kind = app.get_subcommands().front()->get_name();

  try {
    RunContext ctx{ConfigFile::parse_file(config_path)};
    const std::string cfg_kind = ctx.cfg.get_string("experiment", kind);
    if (cfg_kind != kind) {
      std::cerr << "config declares experiment '" << cfg_kind
                << "' but subcommand is '" << kind << "'\n";
      return 2;
    }
    ctx.out_dir = out_dir;
    fs::create_directories(ctx.out_dir);
    ctx.threads = threads > 0 ? static_cast<unsigned>(threads)
                              : default_threads();
    if (seed_set) ctx.seed_override = seed_val;

    const auto t0 = std::chrono::steady_clock::now();
    if (kind == "simulate") run_simulate(ctx);
    else if (kind == "stationary") run_stationary(ctx);
    else if (kind == "verify-kernels") run_verify_kernels(ctx);
    else if (kind == "verify-gap") run_verify_gap(ctx);
    else if (kind == "gfv") run_gfv(ctx);
    else if (kind == "gfv-decay") run_gfv_decay(ctx);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    ctx.line("runtime: " + fmt(secs) + " s");
    ctx.write_summary(kind);
    return ctx.all_pass ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
