#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "alphacir/gfv_engine.hpp"
#include "alphacir/stats.hpp"

namespace alphacir {

// ---------------------------------------------------------------------------
// Functional panel: mean and variance of <mu_s, f> at the requested times,
// by either route, with per-path counter streams (thread-count invariant).

struct GfvPanelCell {
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  long n = 0;
};

inline GfvPanelCell gfv_panel_cell_from_values(const std::vector<double>& x) {
  GfvPanelCell c;
  const long n = static_cast<long>(x.size());
  c.n = n;
  double s = 0.0;
  for (double v : x) s += v;
  const double mean = s / n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  c.mean = mean;
  c.mean_se = std::sqrt(m2 / n);
  c.variance = m2 * n / (n - 1.0);
  // standard error of the sample variance from the fourth central moment
  c.variance_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  return c;
}

// Direct route from a fixed initial composition.
inline std::vector<GfvPanelCell> gfv_direct_panel(
    const ModelParams& p, const GfvConfig& cfg, const ProbState& mu0,
    const std::vector<double>& s_grid, const std::vector<double>& f,
    unsigned threads, std::uint64_t stream_offset = 0) {
  require(f.size() == p.num_types(), "gfv panel: dimension mismatch");
  GfvDirectEngine engine(p, cfg);
  const long n = cfg.n_paths;
  std::vector<std::vector<double>> values(s_grid.size(),
                                          std::vector<double>(n));
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    RngStream rng(cfg.seed, stream_offset + i);
    const auto states = engine.run(mu0, s_grid, rng);
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
      double dot = 0.0;
      for (std::size_t r = 0; r < f.size(); ++r) dot += states[k][r] * f[r];
      values[k][i] = dot;
    }
  });
  std::vector<GfvPanelCell> out(s_grid.size());
  for (std::size_t k = 0; k < s_grid.size(); ++k)
    out[k] = gfv_panel_cell_from_values(values[k]);
  return out;
}

// Time-change route from a fixed initial measure (same law when
// mu0 = eta0 / eta0(E); requires the unit model a == 1 == b).
inline std::vector<GfvPanelCell> gfv_timechange_panel(
    const ModelParams& p, const SimConfig& sim_cfg, const MeasureState& eta0,
    const std::vector<double>& s_grid, const std::vector<double>& f,
    unsigned threads, std::uint64_t stream_offset = 0) {
  require(f.size() == p.num_types(), "gfv panel: dimension mismatch");
  const long n = sim_cfg.n_paths;
  std::vector<std::vector<double>> values(s_grid.size(),
                                          std::vector<double>(n));
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    RngStream rng(sim_cfg.seed, stream_offset + i);
    const auto states = simulate_gfv_timechange(p, sim_cfg, eta0, s_grid, rng);
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
      double dot = 0.0;
      for (std::size_t r = 0; r < f.size(); ++r) dot += states[k][r] * f[r];
      values[k][i] = dot;
    }
  });
  std::vector<GfvPanelCell> out(s_grid.size());
  for (std::size_t k = 0; k < s_grid.size(); ++k)
    out[k] = gfv_panel_cell_from_values(values[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Variance-decay curve of the stationary process: nested Monte Carlo with
// importance-weighted outer draws from the stationary law and inner
// event-driven paths; per grid time the unbiased weighted nested
// estimator with delete-one jackknife error bars. At t = 0 the inner
// expectation is degenerate and the estimate reduces to the weighted
// sample variance of phi itself.

struct DecayPoint {
  double t = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  double mean_inner_variance = 0.0;
};

struct DecayCurve {
  std::vector<DecayPoint> points;
  double ess = 0.0;
  long n_outer = 0;
  long n_inner = 0;
  double weight_mean = 0.0;
  double weight_mean_se = 0.0;
};

inline DecayCurve gfv_variance_decay(
    const ModelParams& p, const std::function<double(const ProbState&)>& phi,
    const GfvConfig& cfg, const std::vector<double>& t_grid, long n_outer,
    long n_inner, unsigned threads) {
  require(!t_grid.empty(), "decay curve: empty grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    require(t_grid[i] > t_grid[i - 1], "decay curve: grid must increase");
  GfvDirectEngine engine(p, cfg);

  const auto outer = stationary_gfv_sample(p, n_outer, cfg.seed,
                                           static_cast<std::uint64_t>(1) << 56);
  std::vector<double> weights(n_outer);
  for (long i = 0; i < n_outer; ++i) weights[i] = outer[i].weight;

  const std::size_t nt = t_grid.size();
  std::vector<std::vector<double>> inner_mean(nt, std::vector<double>(n_outer));
  std::vector<std::vector<double>> inner_var(nt, std::vector<double>(n_outer));
  parallel_for(static_cast<std::size_t>(n_outer), threads, [&](std::size_t i) {
    std::vector<double> s(nt, 0.0), s2(nt, 0.0);
    for (long j = 0; j < n_inner; ++j) {
      RngStream rng(cfg.seed,
                    (static_cast<std::uint64_t>(2) << 56) +
                        i * static_cast<std::uint64_t>(n_inner) + j);
      const auto states = engine.run(outer[i].state, t_grid, rng);
      for (std::size_t k = 0; k < nt; ++k) {
        const double v = phi(states[k]);
        s[k] += v;
        s2[k] += v * v;
      }
    }
    for (std::size_t k = 0; k < nt; ++k) {
      const double m = s[k] / n_inner;
      inner_mean[k][i] = m;
      inner_var[k][i] =
          std::max(0.0, (s2[k] - n_inner * m * m) / (n_inner - 1.0));
    }
  }, 4);

  DecayCurve out;
  out.n_outer = n_outer;
  out.n_inner = n_inner;
  out.ess = effective_sample_size(outer);
  {
    double s = 0.0, s2 = 0.0;
    for (double w : weights) {
      s += w;
      s2 += w * w;
    }
    out.weight_mean = s / n_outer;
    const double var = std::max(0.0, s2 / n_outer - out.weight_mean * out.weight_mean);
    out.weight_mean_se = std::sqrt(var / n_outer);
  }
  for (std::size_t k = 0; k < nt; ++k) {
    const auto nested =
        nested_variance_weighted(inner_mean[k], inner_var[k], weights, n_inner);
    DecayPoint pt;
    pt.t = t_grid[k];
    pt.variance = nested.variance;
    pt.std_error = nested.std_error;
    pt.mean_inner_variance = nested.mean_inner_variance;
    out.points.push_back(pt);
  }
  return out;
}

}  // namespace alphacir
