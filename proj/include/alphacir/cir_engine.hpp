#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "alphacir/analytics.hpp"
#include "alphacir/parallel.hpp"
#include "alphacir/rng.hpp"
#include "alphacir/samplers.hpp"
#include "alphacir/types.hpp"

namespace alphacir {

namespace detail {

// u^{-1/3} for u in (0,1]: exponent-trick seed plus four division-free
// Newton steps, full double accuracy. The hot loop spends most of its
// time on Pareto(3/2) jump sizes delta * u^{-2/3}; this shaves the
// transcendental off that path.
inline double inv_cbrt(double u) {
  std::uint64_t i;
  std::memcpy(&i, &u, sizeof i);
  const std::uint64_t bias = 0x3FF0000000000000ull;
  std::uint64_t j = bias + (bias - i) / 3;
  double r;
  std::memcpy(&r, &j, sizeof r);
  for (int it = 0; it < 4; ++it) {
    r = r * (4.0 - u * r * r * r) * (1.0 / 3.0);
  }
  return r;
}

}  // namespace detail

// Scalar model coefficients (one-type space).
struct CirParams {
  double alpha = 0.5;
  double a = 1.0;
  double b = 1.0;
  double m = 1.0;

  void validate() const {
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    require(a > 0.0, "a must be positive");
    require(m >= 0.0, "m must be nonnegative");
  }
};

struct PathRecord {
  std::vector<double> times;
  std::vector<double> states;
  long branch_jumps = 0;
  long imm_jumps = 0;
  long clamp_events = 0;
};

struct StepCounters {
  long branch_jumps = 0;
  long imm_jumps = 0;
  long clamp_events = 0;
  long steps = 0;
};

// Euler scheme with Poisson thinning of the two truncated stable jump
// intensities. Per step of length h from state z:
//   * multiplicative drift  -(b/alpha) z h,
//   * compensator of the retained branching jumps (y > delta_b),
//     -z a (alpha+1) / (alpha Gamma(1-alpha)) delta_b^{-alpha} h,
//   * Poisson(z a delta_b^{-(1+alpha)} / Gamma(1-alpha) h) branching jumps
//     with Pareto(1+alpha, delta_b) sizes,
//   * Poisson(m delta_i^{-alpha} / Gamma(1-alpha) h) immigration jumps
//     with Pareto(alpha, delta_i) sizes,
//   * mean of the dropped small immigration jumps,
//     +m alpha delta_i^{1-alpha} / ((1-alpha) Gamma(1-alpha)) h.
// Rates are frozen at the step start; the result is clamped at zero and
// clamp events are counted. Branching jumps below delta_b are dropped
// together with their compensator, so criticality is mean-exact.
class CirEngine {
 public:
  CirEngine(const CirParams& p, const SimConfig& cfg) : p_(p), cfg_(cfg) {
    p.validate();
    cfg.validate();
    const double g1ma = std::tgamma(1.0 - p.alpha);
    branch_rate_per_z_ =
        p.a * std::pow(cfg.delta_b, -(1.0 + p.alpha)) / g1ma;
    branch_comp_per_z_ = p.a * (p.alpha + 1.0) / (p.alpha * g1ma) *
                         std::pow(cfg.delta_b, -p.alpha);
    imm_rate_ = p.m * std::pow(cfg.delta_i, -p.alpha) / g1ma;
    imm_drift_rate_ = p.m * p.alpha * std::pow(cfg.delta_i, 1.0 - p.alpha) /
                      ((1.0 - p.alpha) * g1ma);
    drift_factor_ = 1.0 - cfg.h * (p.b / p.alpha + branch_comp_per_z_);
    inv_exp_branch_ = -1.0 / (1.0 + p.alpha);
    inv_exp_imm_ = -1.0 / p.alpha;
    half_alpha_ = p.alpha == 0.5;
    gamma_1ma_ = g1ma;
  }

  const CirParams& params() const { return p_; }
  const SimConfig& config() const { return cfg_; }
  double branch_rate_per_z() const { return branch_rate_per_z_; }
  double branch_comp_per_z() const { return branch_comp_per_z_; }
  double imm_rate() const { return imm_rate_; }
  double imm_drift_rate() const { return imm_drift_rate_; }

  double step(double z, RngStream& rng, StepCounters& counters) const {
    double next = z * drift_factor_ + cfg_.h * imm_drift_rate_;
    if (z > 0.0) {
      double rate_per_z = branch_rate_per_z_;
      double cutoff = cfg_.delta_b;
      double comp = branch_comp_per_z_;
      if (cfg_.coarsen_above_mass > 0.0 && z > cfg_.coarsen_above_mass) {
        // widen the truncation in proportion to the mass; rates and the
        // compensator are recomputed so the scheme stays mean-exact
        const double scale = z / cfg_.coarsen_above_mass;
        cutoff = cfg_.delta_b * scale;
        rate_per_z = p_.a * std::pow(cutoff, -(1.0 + p_.alpha)) / gamma_1ma_;
        comp = p_.a * (p_.alpha + 1.0) / (p_.alpha * gamma_1ma_) *
               std::pow(cutoff, -p_.alpha);
        next = z * (1.0 - cfg_.h * (p_.b / p_.alpha + comp)) +
               cfg_.h * imm_drift_rate_;
      }
      const long nb = rng.poisson(z * rate_per_z * cfg_.h);
      counters.branch_jumps += nb;
      if (half_alpha_) {
        for (long k = 0; k < nb; ++k) {
          const double r = detail::inv_cbrt(rng.u01());
          next += cutoff * r * r;
        }
      } else {
        for (long k = 0; k < nb; ++k)
          next += cutoff * std::pow(rng.u01(), inv_exp_branch_);
      }
    }
    if (imm_rate_ > 0.0) {
      const long ni = rng.poisson(imm_rate_ * cfg_.h);
      counters.imm_jumps += ni;
      if (half_alpha_) {
        for (long k = 0; k < ni; ++k) {
          const double u = rng.u01();
          next += cfg_.delta_i / (u * u);
        }
      } else {
        for (long k = 0; k < ni; ++k)
          next += cfg_.delta_i * std::pow(rng.u01(), inv_exp_imm_);
      }
    }
    ++counters.steps;
    if (next < 0.0) {
      ++counters.clamp_events;
      next = 0.0;
    }
    return next;
  }

  PathRecord simulate_path(double z0, RngStream& rng) const {
    require(z0 >= 0.0, "initial state must be nonnegative");
    const long n_steps = static_cast<long>(std::llround(cfg_.horizon / cfg_.h));
    PathRecord rec;
    rec.times.reserve(n_steps + 1);
    rec.states.reserve(n_steps + 1);
    StepCounters c;
    double z = z0;
    rec.times.push_back(0.0);
    rec.states.push_back(z);
    for (long k = 1; k <= n_steps; ++k) {
      z = step(z, rng, c);
      rec.times.push_back(static_cast<double>(k) * cfg_.h);
      rec.states.push_back(z);
    }
    rec.branch_jumps = c.branch_jumps;
    rec.imm_jumps = c.imm_jumps;
    rec.clamp_events = c.clamp_events;
    return rec;
  }

 private:
  CirParams p_;
  SimConfig cfg_;
  double branch_rate_per_z_ = 0.0;
  double branch_comp_per_z_ = 0.0;
  double imm_rate_ = 0.0;
  double imm_drift_rate_ = 0.0;
  double drift_factor_ = 1.0;
  double inv_exp_branch_ = 0.0;
  double inv_exp_imm_ = 0.0;
  double gamma_1ma_ = 1.0;
  bool half_alpha_ = false;
};

// ---------------------------------------------------------------------------
// Laplace-panel driver: estimates E[exp(-lambda Z_t)] over a (t, lambda)
// grid from n_paths independent paths, one counter stream per path, so
// the result is bit-identical for any thread count.
//
// A path whose mass is so large that every remaining recording is
// provably below value_floor (mass decays at least at rate b/alpha up to
// a fluctuation margin; jumps only add mass) is frozen: its remaining
// recordings are written as 0 and a per-path upper bound on the discarded
// values is accumulated into frozen_value_bound, which callers can audit
// against their Monte Carlo resolution.

struct LaplaceDeathPolicy {
  bool enabled = false;
  double value_floor = 5e-5;  // freeze when all remaining values are below this
  double margin = 4.0;        // pathwise decay shortfall allowance
};

struct PanelCell {
  double mean = 0.0;
  double std_error = 0.0;
};

struct LaplacePanel {
  std::vector<double> t_grid;
  std::vector<double> lambda_grid;
  std::vector<PanelCell> cells;  // row-major t x lambda
  long n_paths = 0;
  long clamp_events = 0;
  long total_steps = 0;
  long frozen_paths = 0;
  double frozen_value_bound = 0.0;  // sum of per-path bounds / n_paths
  long branch_jumps = 0;
  long imm_jumps = 0;

  const PanelCell& cell(std::size_t ti, std::size_t li) const {
    return cells[ti * lambda_grid.size() + li];
  }
};

inline LaplacePanel run_laplace_panel(
    const CirParams& p, const SimConfig& cfg, double z0,
    const std::vector<double>& t_grid, const std::vector<double>& lambda_grid,
    unsigned threads, LaplaceDeathPolicy death = {},
    std::uint64_t stream_offset = 0,
    const std::function<double(RngStream&)>& z0_sampler = {}) {
  require(!t_grid.empty() && !lambda_grid.empty(), "empty panel grid");
  CirEngine engine(p, cfg);
  const std::size_t nt = t_grid.size(), nl = lambda_grid.size();
  std::vector<long> record_step(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    record_step[i] = static_cast<long>(std::llround(t_grid[i] / cfg.h));
    require(std::fabs(record_step[i] * cfg.h - t_grid[i]) < 1e-9,
            "recording times must align with the step grid");
    if (i > 0) require(record_step[i] > record_step[i - 1], "t grid must increase");
  }
  double lambda_min = lambda_grid[0];
  for (double l : lambda_grid) lambda_min = std::min(lambda_min, l);

  const long n_paths = cfg.n_paths;
  const std::size_t block = 256;
  const std::size_t n_blocks = (static_cast<std::size_t>(n_paths) + block - 1) / block;

  struct BlockAcc {
    std::vector<double> sum, sumsq;
    long clamps = 0, steps = 0, frozen = 0, branch = 0, imm = 0;
    double frozen_bound = 0.0;
  };
  std::vector<BlockAcc> acc(n_blocks);

  const double death_logfloor =
      death.enabled ? -std::log(death.value_floor) : 0.0;
  const double decay_rate = p.b / p.alpha;
  const double t_last = t_grid.back();

  parallel_for(n_blocks, threads, [&](std::size_t bi) {
    BlockAcc& A = acc[bi];
    A.sum.assign(nt * nl, 0.0);
    A.sumsq.assign(nt * nl, 0.0);
    const long lo = static_cast<long>(bi * block);
    const long hi = std::min<long>(n_paths, lo + block);
    std::vector<double> values(nt * nl);
    for (long path = lo; path < hi; ++path) {
      RngStream rng(cfg.seed, stream_offset + static_cast<std::uint64_t>(path));
      StepCounters c;
      double z = z0_sampler ? z0_sampler(rng) : z0;
      long step_idx = 0;
      bool frozen = false;
      // freeze threshold on z, shrinking as the last recording approaches
      double freeze_thr = std::numeric_limits<double>::infinity();
      double freeze_decay = 1.0;
      if (death.enabled && p.b > 0.0) {
        const double expo = std::min(decay_rate * t_last, 600.0);
        freeze_thr = death_logfloor * death.margin / lambda_min * std::exp(expo);
        freeze_decay = std::exp(-decay_rate * cfg.h);
      }
      for (std::size_t rec = 0; rec < nt && !frozen; ++rec) {
        while (step_idx < record_step[rec]) {
          z = engine.step(z, rng, c);
          ++step_idx;
          freeze_thr *= freeze_decay;
          if (z > freeze_thr && z > 256.0) {
            frozen = true;
            ++A.frozen;
            A.frozen_bound +=
                std::exp(-lambda_min * z *
                         std::exp(-decay_rate * (t_last - step_idx * cfg.h)) /
                         death.margin);
            break;
          }
        }
        if (frozen) {
          for (std::size_t r2 = rec; r2 < nt; ++r2)
            for (std::size_t li = 0; li < nl; ++li) values[r2 * nl + li] = 0.0;
          break;
        }
        for (std::size_t li = 0; li < nl; ++li)
          values[rec * nl + li] = std::exp(-lambda_grid[li] * z);
      }
      for (std::size_t k = 0; k < nt * nl; ++k) {
        A.sum[k] += values[k];
        A.sumsq[k] += values[k] * values[k];
      }
      A.clamps += c.clamp_events;
      A.steps += c.steps;
      A.branch += c.branch_jumps;
      A.imm += c.imm_jumps;
    }
  });

  LaplacePanel out;
  out.t_grid = t_grid;
  out.lambda_grid = lambda_grid;
  out.n_paths = n_paths;
  out.cells.resize(nt * nl);
  std::vector<double> sum(nt * nl, 0.0), sumsq(nt * nl, 0.0);
  for (const auto& A : acc) {
    for (std::size_t k = 0; k < nt * nl; ++k) {
      sum[k] += A.sum[k];
      sumsq[k] += A.sumsq[k];
    }
    out.clamp_events += A.clamps;
    out.total_steps += A.steps;
    out.frozen_paths += A.frozen;
    out.frozen_value_bound += A.frozen_bound;
    out.branch_jumps += A.branch;
    out.imm_jumps += A.imm;
  }
  const double n = static_cast<double>(n_paths);
  for (std::size_t k = 0; k < nt * nl; ++k) {
    const double mean = sum[k] / n;
    const double var = std::max(0.0, sumsq[k] / n - mean * mean);
    out.cells[k] = {mean, std::sqrt(var / n)};
  }
  out.frozen_value_bound /= n;
  return out;
}

// ---------------------------------------------------------------------------
// Fixed-time draw by the N-fold convolution construction:
//   q_t^(N) = p_t(eta0, .) * conv_{k=1..N} p_{t k/N, alpha}((t/N) m, .),
// where p_{s,alpha}(theta, .) first replaces theta by a stable random
// measure and then runs the immigration-free kernel p_s. The kernel p_s
// itself has no exact sampler here; it is approximated by the
// Euler-thinning engine at a finer sub-configuration (h/4, delta_b/4),
// so the draw is exact for its finite-N target modulo that sub-sampler.

inline double sample_fixed_time_convolution(const CirParams& p,
                                            const SimConfig& cfg, double eta0,
                                            double t, int n_conv,
                                            RngStream& rng) {
  p.validate();
  cfg.validate();
  require(eta0 >= 0.0, "initial mass must be nonnegative");
  require(n_conv >= 1, "need at least one convolution factor");
  if (t == 0.0) return eta0;
  SimConfig sub = cfg;
  sub.h = cfg.h / 4.0;
  sub.delta_b = cfg.delta_b / 4.0;
  if (sub.h > t / n_conv) {
    throw std::invalid_argument(
        "convolution scheme: sub-sampler step exceeds the shortest kernel "
        "horizon; refine h or lower N");
  }
  CirParams no_imm = p;
  no_imm.m = 0.0;

  auto run_p = [&](double start, double horizon) {
    SimConfig one = sub;
    one.horizon = horizon;
    CirEngine engine(no_imm, one);
    StepCounters c;
    const long n_steps = static_cast<long>(std::llround(horizon / one.h));
    double z = start;
    for (long k = 0; k < n_steps; ++k) z = engine.step(z, rng, c);
    return z;
  };

  double total = run_p(eta0, t);
  const double theta = t / n_conv * p.m;
  for (int k = 1; k <= n_conv; ++k) {
    const double stable_mass =
        theta > 0.0
            ? std::pow(theta, 1.0 / p.alpha) * rng.positive_stable(p.alpha)
            : 0.0;
    total += run_p(stable_mass, t * k / n_conv);
  }
  return total;
}

}  // namespace alphacir
