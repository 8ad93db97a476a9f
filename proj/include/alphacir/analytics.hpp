#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "alphacir/quadrature.hpp"
#include "alphacir/types.hpp"

namespace alphacir {

struct ErgodicityError : std::domain_error {
  using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// Bernstein exponent psi(l) = log(1 + l^alpha) and its first three
// derivatives in closed form. The Levy measure behind psi has no usable
// density, so everything downstream goes through these expressions;
// finite differences appear only as test oracles.

inline double psi(double alpha, double lambda) {
  if (lambda < 0.0) throw std::domain_error("psi: lambda must be nonnegative");
  return std::log1p(std::pow(lambda, alpha));
}

// psi' = rho(l) = alpha l^{a-1} / (1 + l^a); +inf at l = 0.
inline double psi_d1(double alpha, double lambda) {
  if (lambda < 0.0) throw std::domain_error("psi_d1: lambda must be nonnegative");
  if (lambda == 0.0) return std::numeric_limits<double>::infinity();
  const double w = std::pow(lambda, alpha);
  return alpha * w / (lambda * (1.0 + w));
}

// psi'' = rho'(l) = alpha l^{a-2} [(a-1) - l^a] / (1 + l^a)^2; -inf at 0.
inline double psi_d2(double alpha, double lambda) {
  if (lambda < 0.0) throw std::domain_error("psi_d2: lambda must be nonnegative");
  if (lambda == 0.0) return -std::numeric_limits<double>::infinity();
  const double w = std::pow(lambda, alpha);
  const double d = 1.0 + w;
  return alpha * std::pow(lambda, alpha - 2.0) * ((alpha - 1.0) - w) / (d * d);
}

// psi''' = rho''(l)
//        = alpha l^{a-3} [(a-1)(a-2) - (a-1)(a+4) l^a + 2 l^{2a}] / (1+l^a)^3.
inline double psi_d3(double alpha, double lambda) {
  if (lambda < 0.0) throw std::domain_error("psi_d3: lambda must be nonnegative");
  if (lambda == 0.0) return std::numeric_limits<double>::infinity();
  const double w = std::pow(lambda, alpha);
  const double d = 1.0 + w;
  const double num =
      (alpha - 1.0) * (alpha - 2.0) - (alpha - 1.0) * (alpha + 4.0) * w + 2.0 * w * w;
  return alpha * std::pow(lambda, alpha - 3.0) * num / (d * d * d);
}

// ---------------------------------------------------------------------------
// Cumulant flow V_t f per type,
//   V_t f = e^{-b t/alpha} f / [1 + a f^alpha int_0^t e^{-b s} ds]^{1/alpha},
// the unique solution of dV/dt = -(a/alpha) V^{1+alpha} - (b/alpha) V.

inline double v_flow_scalar(double alpha, double a, double b, double f,
                            double t) {
  if (t < 0.0) throw std::domain_error("v_flow: t must be nonnegative");
  if (f == 0.0) return 0.0;
  const double phi = (b == 0.0) ? t : -std::expm1(-b * t) / b;
  return std::exp(-b * t / alpha) * f /
         std::pow(1.0 + a * std::pow(f, alpha) * phi, 1.0 / alpha);
}

inline std::vector<double> v_flow(const ModelParams& p,
                                  const std::vector<double>& f, double t) {
  p.validate();
  require(f.size() == p.num_types(), "v_flow: dimension mismatch");
  std::vector<double> out(f.size());
  for (std::size_t r = 0; r < f.size(); ++r) {
    require(f[r] > 0.0, "v_flow: f must be strictly positive");
    out[r] = v_flow_scalar(p.alpha, p.a[r], p.b[r], f[r], t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transition Laplace functional
//   E[exp(-<eta_t, f>) | eta_0] = exp[-<eta_0, V_t f> - int_0^t <m,(V_s f)^alpha> ds],
// the time integral by adaptive Gauss-Kronrod at abs tol 1e-10.

inline double laplace_semigroup(const ModelParams& p, const MeasureState& eta0,
                                const std::vector<double>& f, double t,
                                double quad_tol = 1e-10) {
  p.validate();
  validate_measure_state(eta0, p.num_types());
  require(f.size() == p.num_types(), "laplace_semigroup: dimension mismatch");
  if (t < 0.0) throw std::domain_error("laplace_semigroup: t must be nonnegative");
  const auto vt = v_flow(p, f, t);
  double head = 0.0;
  for (std::size_t r = 0; r < f.size(); ++r) head += eta0[r] * vt[r];
  double integral = 0.0;
  if (t > 0.0) {
    integral = integrate_gk(
        [&](double s) {
          double acc = 0.0;
          for (std::size_t r = 0; r < f.size(); ++r) {
            if (p.m[r] == 0.0) continue;
            acc += p.m[r] *
                   std::pow(v_flow_scalar(p.alpha, p.a[r], p.b[r], f[r], s),
                            p.alpha);
          }
          return acc;
        },
        0.0, t, quad_tol);
  }
  return std::exp(-head - integral);
}

// Stationary log-Laplace functional psi(f) = <m, a^{-1} log(1 + a b^{-1} f^alpha)>.
inline double stationary_log_laplace(const ModelParams& p,
                                     const std::vector<double>& f) {
  p.require_ergodic();
  require(f.size() == p.num_types(), "stationary_log_laplace: dimension mismatch");
  double s = 0.0;
  for (std::size_t r = 0; r < f.size(); ++r) {
    require(f[r] >= 0.0, "stationary_log_laplace: f must be nonnegative");
    if (p.m[r] == 0.0) continue;
    s += p.m[r] / p.a[r] *
         std::log1p(p.a[r] / p.b[r] * std::pow(f[r], p.alpha));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Jump covariance kernels
//   K_B(s,t) = alpha^{-1} [(s+t)^{1+alpha} - s^{1+alpha} - t^{1+alpha}]
//   K_I(s,t) = s^alpha + t^alpha - (s+t)^alpha,
// the branching / immigration second-moment integrals against the two
// truncated-stable jump measures. Both vanish on the axes and are
// nonnegative and symmetric.

inline std::pair<double, double> kernels_kb_ki(double alpha, double s,
                                               double t) {
  if (s < 0.0 || t < 0.0)
    throw std::domain_error("kernels_kb_ki: arguments must be nonnegative");
  if (s > t) std::swap(s, t);  // bitwise symmetry
  const double u = s + t;
  const double kb = (std::pow(u, alpha + 1.0) - std::pow(s, alpha + 1.0) -
                     std::pow(t, alpha + 1.0)) /
                    alpha;
  const double ki = std::pow(s, alpha) + std::pow(t, alpha) - std::pow(u, alpha);
  return {kb, ki};
}

// ---------------------------------------------------------------------------
// Symmetric Dirichlet form of the stationary model on exponentials,
//   E(Psi_f, Psi_g) = 1/2 e^{-psi(f+g)} ( <m, alpha (f+g)^{alpha-1} a K_B(f,g)
//                      / (b + a (f+g)^alpha)> + <m, K_I(f,g)> ),
// extended bilinearly to finite sums.

inline double dirichlet_form_pair(const ModelParams& p,
                                  const std::vector<double>& f,
                                  const std::vector<double>& g) {
  std::vector<double> fg(f.size());
  for (std::size_t r = 0; r < f.size(); ++r) fg[r] = f[r] + g[r];
  const double damp = std::exp(-stationary_log_laplace(p, fg));
  double branch = 0.0, immig = 0.0;
  for (std::size_t r = 0; r < f.size(); ++r) {
    if (p.m[r] == 0.0) continue;
    const auto [kb, ki] = kernels_kb_ki(p.alpha, f[r], g[r]);
    const double u = fg[r];
    branch += p.m[r] * p.alpha * std::pow(u, p.alpha - 1.0) * p.a[r] * kb /
              (p.b[r] + p.a[r] * std::pow(u, p.alpha));
    immig += p.m[r] * ki;
  }
  return 0.5 * damp * (branch + immig);
}

inline double dirichlet_form(const ModelParams& p, const ExpFunctional& psi_fn) {
  p.require_ergodic();
  psi_fn.validate(p.num_types());
  double s = 0.0;
  for (const auto& ti : psi_fn.terms)
    for (const auto& tj : psi_fn.terms)
      s += ti.c * tj.c * dirichlet_form_pair(p, ti.f, tj.f);
  return s;
}

// Exact stationary variance, var(Psi) = sum_{ij} c_i c_j
// (e^{-psi(f_i+f_j)} - e^{-psi(f_i)} e^{-psi(f_j)}).
inline double variance_q(const ModelParams& p, const ExpFunctional& psi_fn) {
  p.require_ergodic();
  psi_fn.validate(p.num_types());
  const std::size_t n = psi_fn.terms.size();
  std::vector<double> single(n);
  for (std::size_t i = 0; i < n; ++i)
    single[i] = std::exp(-stationary_log_laplace(p, psi_fn.terms[i].f));
  double s = 0.0;
  std::vector<double> fg;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      fg.assign(p.num_types(), 0.0);
      for (std::size_t r = 0; r < fg.size(); ++r)
        fg[r] = psi_fn.terms[i].f[r] + psi_fn.terms[j].f[r];
      const double joint = std::exp(-stationary_log_laplace(p, fg));
      s += psi_fn.terms[i].c * psi_fn.terms[j].c * (joint - single[i] * single[j]);
    }
  }
  return s;
}

// Spectral gap of the stationary model: half the m-essential infimum of b.
inline double gap_exact(const ModelParams& p) {
  p.validate();
  for (double v : p.b)
    if (v <= 0.0) throw ErgodicityError("gap_exact: needs b(r) > 0");
  double binf = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < p.num_types(); ++r)
    if (p.m[r] > 0.0) binf = std::min(binf, p.b[r]);
  return 0.5 * binf;
}

// ---------------------------------------------------------------------------
// Constant-coefficient variance gap between one- and two-fold test
// exponentials,
//   Delta(t) = 2 psi(V_t 1) - psi(2 V_t 1)
//            = (m/a) log(1 + ((2-2^alpha) u + u^2) / (1 + 2^alpha u)),
// with u = (a/b) (V_t 1)^alpha. The log1p form stays accurate when u is
// exponentially small at large t, where the difference of psi values
// would cancel.

inline double delta_t(double alpha, double a, double b, double m_total,
                      double t) {
  if (t < 0.0) throw std::domain_error("delta_t: t must be nonnegative");
  const double v = v_flow_scalar(alpha, a, b, 1.0, t);
  const double u = a / b * std::pow(v, alpha);
  const double two_a = std::pow(2.0, alpha);
  const double z = ((2.0 - two_a) * u + u * u) / (1.0 + two_a * u);
  return m_total / a * std::log1p(z);
}

// var(T^2(t) Psi_1) = e^{-2 psi(1)} (e^{Delta(t)} - 1) for the same setup.
inline double var_t2_psi1(double alpha, double a, double b, double m_total,
                          double t) {
  const double psi1 = m_total / a * std::log1p(a / b);
  return std::exp(-2.0 * psi1) * std::expm1(delta_t(alpha, a, b, m_total, t));
}

// ---------------------------------------------------------------------------
// Stationary total-mass moments for the unit model (a = b = 1),
//   E[eta(E)^beta] = Gamma(1-beta/alpha) Gamma(mE+beta/alpha)
//                    / (Gamma(1-beta) Gamma(mE))
// when -alpha mE < beta < alpha, infinite otherwise. Infinity is a valid
// result and is returned as a tagged value, not thrown.

struct MomentResult {
  double value = 0.0;
  bool finite = true;
};

inline MomentResult moment_eta_total(double alpha, double m_total,
                                     double beta) {
  require(m_total > 0.0, "moment_eta_total: m(E) must be positive");
  require(alpha > 0.0 && alpha < 1.0, "moment_eta_total: alpha in (0,1)");
  if (beta <= -alpha * m_total || beta >= alpha) {
    return {std::numeric_limits<double>::infinity(), false};
  }
  const double lg = std::lgamma(1.0 - beta / alpha) +
                    std::lgamma(m_total + beta / alpha) -
                    std::lgamma(1.0 - beta) - std::lgamma(m_total);
  return {std::exp(lg), true};
}

}  // namespace alphacir
