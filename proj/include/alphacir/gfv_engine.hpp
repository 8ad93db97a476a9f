#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "alphacir/analytics.hpp"
#include "alphacir/mbi_engine.hpp"
#include "alphacir/parallel.hpp"
#include "alphacir/quadrature.hpp"
#include "alphacir/rng.hpp"
#include "alphacir/samplers.hpp"
#include "alphacir/types.hpp"

namespace alphacir {

struct AssumptionError : std::domain_error {
  using std::domain_error::domain_error;
};

struct DegenerateStateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Truncated jump rates of the measure-valued resampling process: the two
// Beta-tail intensities restricted to u in [eps, 1],
//   resampling  = int_eps^1 u^{-2-alpha} (1-u)^alpha du / B(1-alpha, 1+alpha)
//   immigration = m(E) int_eps^1 u^{-1-alpha} (1-u)^{alpha-1} du
//                 / ((alpha+1) B(1-alpha, alpha)).
// Both by adaptive quadrature at abs tol 1e-10; the immigration integrand
// is mapped through w = (1-u)^alpha first so its u = 1 endpoint is tame.

struct GfvJumpRates {
  double resampling = 0.0;
  double immigration = 0.0;
};

// int_lo^hi u^{-2-a} (1-u)^a du. The left part is mapped through
// u = lo e^x (steep power becomes a decaying exponential), the part near
// u = 1 through w = (1-u)^{1+a} (the fractional-power endpoint becomes a
// smooth integrand); both pieces are then fully regular for the adaptive
// rule, and the 1e-10 tolerance is honest.
inline double gfv_resampling_integral(double alpha, double lo,
                                      double hi = 1.0) {
  if (hi <= lo) return 0.0;
  double total = 0.0;
  const double mid = std::min(hi, 0.5);
  if (mid > lo) {
    const double scale = std::pow(lo, -1.0 - alpha);
    total += integrate_gk(
        [alpha, lo, scale](double x) {
          return scale * std::exp(-(1.0 + alpha) * x) *
                 std::pow(1.0 - lo * std::exp(x), alpha);
        },
        0.0, std::log(mid / lo), 1e-10);
  }
  if (hi > 0.5) {
    // v = 1-u = y^k with k alpha >= 4, so the fractional endpoint power
    // v^alpha becomes at least C^3 in y
    const double k = std::ceil(4.0 / alpha);
    const double y_lo = std::pow(1.0 - hi, 1.0 / k);
    const double y_hi = std::pow(0.5, 1.0 / k);
    total += integrate_gk(
        [alpha, k](double y) {
          const double v = std::pow(y, k);
          return k * std::pow(y, k * alpha + k - 1.0) *
                 std::pow(1.0 - v, -2.0 - alpha);
        },
        y_lo, y_hi, 1e-10);
  }
  return total;
}

// int_lo^hi u^{-1-a} (1-u)^{a-1} du, same treatment with w = (1-u)^a on
// the right so the integrable singularity at u = 1 disappears.
inline double gfv_immigration_integral(double alpha, double lo,
                                       double hi = 1.0) {
  if (hi <= lo) return 0.0;
  double total = 0.0;
  const double mid = std::min(hi, 0.5);
  if (mid > lo) {
    const double scale = std::pow(lo, -alpha);
    total += integrate_gk(
        [alpha, lo, scale](double x) {
          return scale * std::exp(-alpha * x) *
                 std::pow(1.0 - lo * std::exp(x), alpha - 1.0);
        },
        0.0, std::log(mid / lo), 1e-10);
  }
  if (hi > 0.5) {
    const double k = std::ceil(4.0 / alpha);
    const double y_lo = std::pow(1.0 - hi, 1.0 / k);
    const double y_hi = std::pow(0.5, 1.0 / k);
    total += integrate_gk(
        [alpha, k](double y) {
          const double v = std::pow(y, k);
          return k * std::pow(y, k * alpha - 1.0) *
                 std::pow(1.0 - v, -1.0 - alpha);
        },
        y_lo, y_hi, 1e-10);
  }
  return total;
}

inline GfvJumpRates gfv_jump_rates(double alpha, double m_total, double eps) {
  require(alpha > 0.0 && alpha < 1.0, "gfv rates: alpha in (0,1)");
  require(eps > 0.0 && eps < 1.0, "gfv rates: eps in (0,1)");
  require(m_total > 0.0, "gfv rates: m(E) > 0");
  const double beta_res =
      std::exp(std::lgamma(1.0 - alpha) + std::lgamma(1.0 + alpha));
  const double beta_imm = std::exp(std::lgamma(1.0 - alpha) +
                                   std::lgamma(alpha));  // Gamma(1)=1 denominators
  GfvJumpRates r;
  r.resampling = gfv_resampling_integral(alpha, eps) / beta_res;
  r.immigration = m_total * gfv_immigration_integral(alpha, eps) /
                  ((alpha + 1.0) * beta_imm);
  return r;
}

// ---------------------------------------------------------------------------
// Jump-size sampler for a truncated Beta-tail density u^{p}(1-u)^{q} on
// [eps, 1]: inverse CDF tabulated on a log-spaced grid with monotone
// linear interpolation. The cumulative integral is accumulated per cell
// with Gauss-Legendre nodes; cells touching the u = 1 endpoint use the
// (1-u)^{alpha} substitution when q < 0 so the singular tail is integrated
// accurately.

class BetaTailSampler {
 public:
  BetaTailSampler(double p, double q, double eps, std::size_t n_knots = 4096)
      : p_(p), q_(q), eps_(eps) {
    require(eps > 0.0 && eps < 1.0, "beta tail: eps in (0,1)");
    require(n_knots >= 16, "beta tail: too few knots");
    knots_.resize(n_knots);
    const double log_eps = std::log(eps);
    for (std::size_t k = 0; k < n_knots; ++k) {
      const double frac =
          static_cast<double>(k) / static_cast<double>(n_knots - 1);
      knots_[k] = std::exp(log_eps * (1.0 - frac));
    }
    knots_.front() = eps;
    knots_.back() = 1.0;
    cdf_.assign(n_knots, 0.0);
    for (std::size_t k = 0; k + 1 < n_knots; ++k) {
      cdf_[k + 1] = cdf_[k] + cell_mass(knots_[k], knots_[k + 1]);
    }
    total_ = cdf_.back();
  }

  double total_mass() const { return total_; }

  double density_unnorm(double u) const {
    return std::pow(u, p_) * std::pow(1.0 - u, q_);
  }

  double sample(RngStream& rng) const {
    const double target = rng.u01() * total_;
    std::size_t lo = 0, hi = cdf_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (cdf_[mid] <= target)
        lo = mid;
      else
        hi = mid;
    }
    const double span = cdf_[hi] - cdf_[lo];
    const double frac = span > 0.0 ? (target - cdf_[lo]) / span : 0.5;
    double u = knots_[lo] + frac * (knots_[hi] - knots_[lo]);
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    return u;
  }

 private:
  double cell_mass(double lo, double hi) const {
    if (q_ < 0.0 && hi > 0.5) {
      // w = (1-u)^{-q} would not be monotone-friendly; use (1-u)^{|q|+1}?
      // Simpler and exact enough: substitute v = 1-u and integrate
      // v^{q} (1-v)^{p} dv with the singular endpoint at v=0 handled by
      // the closed-form primitive of v^{q} times a Gauss-Legendre
      // correction for the smooth factor.
      return singular_cell_mass(lo, hi);
    }
    return gl16(lo, hi, [this](double u) { return density_unnorm(u); });
  }

  // integral over [lo,hi] of u^p (1-u)^q with q in (-1,0) and hi near 1:
  // in v = 1-u, integrate v^q g(v), g(v) = (1-v)^p smooth. Expand g about
  // each sub-cell midpoint is overkill; instead use the weighted primitive
  //   int v^q g(v) dv = [v^{q+1}/(q+1)] g - int v^{q+1}/(q+1) g'(v) dv,
  // one integration by parts, after which the remaining integrand is
  // bounded and Gauss-Legendre applies.
  double singular_cell_mass(double lo, double hi) const {
    const double v_lo = 1.0 - hi, v_hi = 1.0 - lo;
    auto g = [this](double v) { return std::pow(1.0 - v, p_); };
    auto gp = [this](double v) { return -p_ * std::pow(1.0 - v, p_ - 1.0); };
    const double q1 = q_ + 1.0;
    const double boundary = (std::pow(v_hi, q1) * g(v_hi) -
                             (v_lo > 0.0 ? std::pow(v_lo, q1) * g(v_lo) : 0.0)) /
                            q1;
    const double correction =
        gl16(v_lo, v_hi,
             [&](double v) { return std::pow(v, q1) / q1 * gp(v); });
    return boundary - correction;
  }

  template <typename F>
  static double gl16(double lo, double hi, F&& f) {
    // 8-point Gauss-Legendre nodes/weights on [-1,1], symmetric halves.
    static constexpr double x[4] = {0.1834346424956498, 0.5255324099163290,
                                    0.7966664774136267, 0.9602898564975363};
    static constexpr double w[4] = {0.3626837833783620, 0.3137066458778873,
                                    0.2223810344533745, 0.1012285362903763};
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
      s += w[i] * (f(c + h * x[i]) + f(c - h * x[i]));
    }
    return s * h;
  }

  double p_, q_, eps_;
  std::vector<double> knots_;
  std::vector<double> cdf_;
  double total_ = 0.0;
};

// ---------------------------------------------------------------------------
// Direct event-driven simulation of the probability-valued jump process:
// exponential waiting times at the total truncated rate; a resampling
// event draws u from the u^{-2-alpha}(1-u)^alpha tail and a type r from
// the current weights, an immigration event draws u from the
// u^{-1-alpha}(1-u)^{alpha-1} tail and r from m / m(E); the state moves
// to (1-u) mu + u delta_r.

class GfvDirectEngine {
 public:
  GfvDirectEngine(const ModelParams& p, const GfvConfig& cfg)
      : p_(p),
        cfg_(cfg),
        res_sampler_(-2.0 - p.alpha, p.alpha, cfg.epsilon),
        imm_sampler_(-1.0 - p.alpha, p.alpha - 1.0, cfg.epsilon) {
    p.validate();
    cfg.validate();
    rates_ = gfv_jump_rates(p.alpha, p.m_total(), cfg.epsilon);
    total_rate_ = rates_.resampling + rates_.immigration;
    m_cdf_.resize(p.num_types());
    double acc = 0.0;
    for (std::size_t r = 0; r < p.num_types(); ++r) {
      acc += p.m[r];
      m_cdf_[r] = acc / p.m_total();
    }
  }

  const GfvJumpRates& rates() const { return rates_; }

  double max_renormalization() const { return max_renorm_; }

  // Runs to cfg.horizon recording the state at the requested times
  // (sorted, within [0, horizon]). The path is piecewise constant, so the
  // state at s is the state after the last event at or before s.
  std::vector<ProbState> run(const ProbState& mu0,
                             const std::vector<double>& record_times,
                             RngStream& rng) const {
    validate_prob_state(mu0, p_.num_types(), 1e-9);
    std::vector<ProbState> out;
    out.reserve(record_times.size());
    ProbState mu = mu0;
    double t = 0.0;
    std::size_t rec = 0;
    double drift_err = 0.0;
    while (rec < record_times.size()) {
      const double wait =
          total_rate_ > 0.0 ? rng.exponential() / total_rate_
                            : std::numeric_limits<double>::infinity();
      const double t_next = t + wait;
      while (rec < record_times.size() && record_times[rec] <= t_next) {
        out.push_back(mu);
        ++rec;
      }
      if (rec >= record_times.size()) break;
      t = t_next;
      const bool resampling = rng.u01() * total_rate_ < rates_.resampling;
      const double u = resampling ? res_sampler_.sample(rng)
                                  : imm_sampler_.sample(rng);
      std::size_t r;
      if (resampling) {
        double target = rng.u01();
        double acc = 0.0;
        r = mu.size() - 1;
        for (std::size_t i = 0; i < mu.size(); ++i) {
          acc += mu[i];
          if (target <= acc) {
            r = i;
            break;
          }
        }
      } else {
        const double target = rng.u01();
        r = m_cdf_.size() - 1;
        for (std::size_t i = 0; i < m_cdf_.size(); ++i) {
          if (target <= m_cdf_[i]) {
            r = i;
            break;
          }
        }
      }
      const double keep = 1.0 - u;
      for (double& w : mu) w *= keep;
      mu[r] += u;
      double s = 0.0;
      for (double w : mu) s += w;
      drift_err = std::fabs(s - 1.0);
      if (drift_err > 1e-13) {
        for (double& w : mu) w /= s;
        if (drift_err > max_renorm_) max_renorm_ = drift_err;
      }
    }
    return out;
  }

 private:
  ModelParams p_;
  GfvConfig cfg_;
  BetaTailSampler res_sampler_;
  BetaTailSampler imm_sampler_;
  GfvJumpRates rates_;
  double total_rate_ = 0.0;
  std::vector<double> m_cdf_;
  mutable double max_renorm_ = 0.0;
};

// ---------------------------------------------------------------------------
// Time-change route: run the measure-valued engine with a == 1 == b,
// accumulate the clock s(t) = Gamma(alpha+2) int_0^t eta_u(E)^{-alpha} du
// by the trapezoid rule on the simulation grid, and read off the
// normalized state at the inverse-clock times by monotone linear
// interpolation.

inline std::vector<ProbState> simulate_gfv_timechange(
    const ModelParams& p, const SimConfig& cfg, const MeasureState& eta0,
    const std::vector<double>& record_s, RngStream& rng,
    double mass_floor = 1e-12, int max_chunks = 64) {
  p.validate();
  cfg.validate();
  validate_measure_state(eta0, p.num_types());
  for (std::size_t r = 0; r < p.num_types(); ++r) {
    require(p.a[r] == 1.0 && p.b[r] == 1.0,
            "time-change route requires a == 1 == b");
  }
  double total0 = 0.0;
  for (double v : eta0) total0 += v;
  require(total0 > 0.0, "time-change route needs a non-null initial state");

  const double gamma_a2 = std::tgamma(p.alpha + 2.0);
  const std::size_t k = p.num_types();
  std::vector<CirEngine> engines;
  std::vector<RngStream> streams;
  engines.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    engines.emplace_back(CirParams{p.alpha, 1.0, 1.0, p.m[r]}, cfg);
    streams.emplace_back(rng.seed(), rng.stream() * k + r);
  }

  std::vector<ProbState> out;
  out.reserve(record_s.size());
  MeasureState eta = eta0;
  MeasureState eta_prev = eta;
  double s_acc = 0.0;
  std::size_t rec = 0;
  StepCounters c;
  auto total_mass = [](const MeasureState& e) {
    double s = 0.0;
    for (double v : e) s += v;
    return s;
  };
  double rate_prev = gamma_a2 * std::pow(total0, -p.alpha);
  const long steps_per_chunk =
      static_cast<long>(std::llround(cfg.horizon / cfg.h));
  for (int chunk = 0; chunk < max_chunks && rec < record_s.size(); ++chunk) {
    for (long i = 0; i < steps_per_chunk && rec < record_s.size(); ++i) {
      eta_prev = eta;
      for (std::size_t r = 0; r < k; ++r)
        eta[r] = engines[r].step(eta[r], streams[r], c);
      const double tot = total_mass(eta);
      if (tot < mass_floor)
        throw DegenerateStateError("time change: total mass hit the floor");
      const double rate = gamma_a2 * std::pow(tot, -p.alpha);
      const double s_next = s_acc + 0.5 * (rate_prev + rate) * cfg.h;
      while (rec < record_s.size() && record_s[rec] <= s_next) {
        const double frac =
            s_next > s_acc ? (record_s[rec] - s_acc) / (s_next - s_acc) : 1.0;
        ProbState mu(k);
        double tot_i = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
          mu[r] = eta_prev[r] + frac * (eta[r] - eta_prev[r]);
          tot_i += mu[r];
        }
        if (tot_i < mass_floor)
          throw DegenerateStateError("time change: interpolated mass at floor");
        for (double& w : mu) w /= tot_i;
        out.push_back(std::move(mu));
        ++rec;
      }
      s_acc = s_next;
      rate_prev = rate;
    }
  }
  if (rec < record_s.size())
    throw std::runtime_error(
        "time change: horizon chunks exhausted before reaching target time");
  return out;
}

// ---------------------------------------------------------------------------
// Importance-sampled stationary law of the ratio process: draw eta from
// the exact stationary sampler of the unit model and return
// (eta / eta(E), w) with w = Gamma(alpha+1) (m(E)-1) eta(E)^{-alpha}.
// The weights self-normalize and have mean one.

struct WeightedProbSample {
  ProbState state;
  double weight = 0.0;
  double total_mass = 0.0;
};

inline WeightedProbSample stationary_gfv_draw(const ModelParams& p,
                                              RngStream& rng) {
  for (std::size_t r = 0; r < p.num_types(); ++r) {
    require(p.a[r] == 1.0 && p.b[r] == 1.0,
            "stationary ratio law requires a == 1 == b");
  }
  if (p.m_total() <= 1.0)
    throw AssumptionError("stationary ratio law requires m(E) > 1");
  const MeasureState eta = sample_linnik_measure(rng, p);
  double tot = 0.0;
  for (double v : eta) tot += v;
  WeightedProbSample s;
  s.total_mass = tot;
  s.weight = std::tgamma(p.alpha + 1.0) * (p.m_total() - 1.0) *
             std::pow(tot, -p.alpha);
  s.state.resize(eta.size());
  for (std::size_t r = 0; r < eta.size(); ++r) s.state[r] = eta[r] / tot;
  return s;
}

inline std::vector<WeightedProbSample> stationary_gfv_sample(
    const ModelParams& p, long n, std::uint64_t seed,
    std::uint64_t stream_offset = 0) {
  std::vector<WeightedProbSample> out(n);
  for (long i = 0; i < n; ++i) {
    RngStream rng(seed, stream_offset + static_cast<std::uint64_t>(i));
    out[i] = stationary_gfv_draw(p, rng);
  }
  return out;
}

inline double effective_sample_size(const std::vector<WeightedProbSample>& s) {
  double sw = 0.0, sw2 = 0.0;
  for (const auto& x : s) {
    sw += x.weight;
    sw2 += x.weight * x.weight;
  }
  return sw2 > 0.0 ? sw * sw / sw2 : 0.0;
}

}  // namespace alphacir
