#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "alphacir/analytics.hpp"
#include "alphacir/quadrature.hpp"
#include "alphacir/rng.hpp"
#include "alphacir/samplers.hpp"

using namespace alphacir;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent oracle for the two covariance kernels: numeric integration
// of the defining jump integrals against the two stable tails.
double kernel_kb_quadrature(double alpha, double s, double t) {
  const double c = (alpha + 1.0) / std::tgamma(1.0 - alpha);
  // factor as y^{-alpha} [(1-e^{-sy})/y][(1-e^{-ty})/y] so the integrand
  // never overflows near zero (it still diverges integrably like y^{-alpha})
  auto f = [&](double y) {
    return c * std::pow(y, -alpha) * (-std::expm1(-s * y) / y) *
           (-std::expm1(-t * y) / y);
  };
  const double cut = 60.0 / std::min(s, t);
  return integrate_tanh_sinh(f, 0.0, 1.0) + integrate_tanh_sinh(f, 1.0, cut);
}

double kernel_ki_quadrature(double alpha, double s, double t) {
  const double c = alpha / std::tgamma(1.0 - alpha);
  auto f = [&](double y) {
    return c * std::pow(y, 1.0 - alpha) * (-std::expm1(-s * y) / y) *
           (-std::expm1(-t * y) / y);
  };
  const double cut = 60.0 / std::min(s, t);
  return integrate_tanh_sinh(f, 0.0, 1.0) + integrate_tanh_sinh(f, 1.0, cut);
}

}  // namespace

TEST_CASE("psi values") {
  CHECK(psi(0.5, 0.0) == 0.0);
  CHECK_THAT(psi(0.3, 1.0), WithinAbs(std::log(2.0), 1e-15));
  CHECK_THAT(psi(0.9, 1.0), WithinAbs(std::log(2.0), 1e-15));
  CHECK_THAT(psi(0.5, 4.0), WithinAbs(std::log(3.0), 1e-15));
  CHECK_THROWS_AS(psi(0.5, -1.0), std::domain_error);
}

TEST_CASE("psi recovered from its derivative") {
  // psi(l) = int_0^l rho(u) du, an independent route through psi_d1;
  // tanh-sinh absorbs the integrable u^{alpha-1} endpoint
  for (double alpha : {0.2, 0.5, 0.8}) {
    for (double lambda : {0.3, 1.0, 4.0}) {
      const double q = integrate_tanh_sinh(
          [&](double u) { return psi_d1(alpha, u); }, 0.0, lambda);
      CHECK_THAT(q, WithinAbs(psi(alpha, lambda), 1e-8));
    }
  }
}

TEST_CASE("psi derivatives match finite differences") {
  RngStream rng(11, 0);
  for (int i = 0; i < 200; ++i) {
    const double alpha = 0.1 + 0.8 * rng.u01();
    const double l = 0.2 + 5.0 * rng.u01();
    const double h = 1e-5 * std::max(1.0, l);
    const double d1 = (psi(alpha, l + h) - psi(alpha, l - h)) / (2 * h);
    const double d2 =
        (psi(alpha, l + h) - 2 * psi(alpha, l) + psi(alpha, l - h)) / (h * h);
    const double d3 = (psi_d2(alpha, l + h) - psi_d2(alpha, l - h)) / (2 * h);
    CHECK_THAT(psi_d1(alpha, l), WithinRel(d1, 1e-6));
    CHECK_THAT(psi_d2(alpha, l), WithinRel(d2, 1e-4));
    CHECK_THAT(psi_d3(alpha, l), WithinRel(d3, 1e-6));
  }
  CHECK(std::isinf(psi_d1(0.5, 0.0)));
  CHECK(std::isinf(psi_d2(0.5, 0.0)));
}

TEST_CASE("psi is concave increasing") {
  for (double alpha : {0.1, 0.5, 0.9}) {
    double prev = -1.0;
    for (double l = 0.05; l < 30.0; l *= 1.5) {
      const double v = psi(alpha, l);
      CHECK(v > prev);
      CHECK(psi_d2(alpha, l) < 0.0);
      prev = v;
    }
  }
}

TEST_CASE("cumulant flow closed form") {
  CHECK(v_flow_scalar(0.5, 1.0, 1.0, 1.0, 0.0) == 1.0);
  CHECK_THAT(v_flow_scalar(0.5, 1.0, 1.0, 1.0, std::log(2.0)),
             WithinAbs(1.0 / 9.0, 1e-14));
  // componentwise monotone decay toward 0 for b > 0
  double prev = 1.0;
  for (double t : {0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double v = v_flow_scalar(0.4, 2.0, 0.7, 1.0, t);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("cumulant flow satisfies its evolution equation") {
  RngStream rng(12, 0);
  for (int i = 0; i < 100; ++i) {
    const double alpha = 0.3 + 0.6 * rng.u01();
    const double a = 0.3 + 1.7 * rng.u01();
    const double b = 0.3 + 1.7 * rng.u01();
    const double f = 0.2 + 1.8 * rng.u01();
    const double t = 0.05 + 2.95 * rng.u01();
    const double h = 1e-4;
    const double dv = (v_flow_scalar(alpha, a, b, f, t + h) -
                       v_flow_scalar(alpha, a, b, f, t - h)) /
                      (2 * h);
    const double v = v_flow_scalar(alpha, a, b, f, t);
    const double resid = dv + a / alpha * std::pow(v, 1.0 + alpha) + b / alpha * v;
    CHECK_THAT(resid, WithinAbs(0.0, 1e-6));
  }
}

TEST_CASE("transition Laplace functional") {
  ModelParams p = ModelParams::constant(0.5, 1.0, 1.0, 2.0);
  const std::vector<double> f{1.0};
  const MeasureState eta0{0.7};
  CHECK_THAT(laplace_semigroup(p, eta0, f, 0.0),
             WithinAbs(std::exp(-0.7), 1e-12));

  // monotone decay toward the stationary value from a null start
  const MeasureState null0{0.0};
  const double stat = std::exp(-stationary_log_laplace(p, f));
  double prev = 1.0;
  for (double t : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double v = laplace_semigroup(p, null0, f, t);
    CHECK(v < prev);
    CHECK(v > stat - 1e-12);
    prev = v;
  }
  CHECK_THAT(prev, WithinAbs(stat, 1e-6));

  // constant coefficients: stationary value (1+lambda^alpha)^{-m(E)}
  for (double lambda : {0.5, 1.0, 2.0}) {
    const std::vector<double> fl{lambda};
    CHECK_THAT(std::exp(-stationary_log_laplace(p, fl)),
               WithinAbs(std::pow(1.0 + std::sqrt(lambda), -2.0), 1e-13));
  }
}

TEST_CASE("quadrature route agrees with the flow identity") {
  // d/dt log(1 + (a/b) V_t^alpha) = -a V_t^alpha turns the time integral
  // into a difference of logs; dual route for the semigroup exponent.
  RngStream rng(13, 0);
  for (int i = 0; i < 25; ++i) {
    const double alpha = 0.2 + 0.7 * rng.u01();
    const double a = 0.4 + 1.6 * rng.u01();
    const double b = 0.4 + 1.6 * rng.u01();
    const double m = 0.2 + 2.0 * rng.u01();
    const double f = 0.3 + 2.0 * rng.u01();
    const double t = 0.2 + 2.0 * rng.u01();
    ModelParams p = ModelParams::constant(alpha, a, b, m);
    const double lhs = laplace_semigroup(p, {0.0}, {f}, t);
    const double vt = v_flow_scalar(alpha, a, b, f, t);
    const double integral =
        m / a *
        (std::log1p(a / b * std::pow(f, alpha)) -
         std::log1p(a / b * std::pow(vt, alpha)));
    CHECK_THAT(lhs, WithinRel(std::exp(-integral), 1e-9));
  }
}

TEST_CASE("stationary log-Laplace functional") {
  ModelParams p = ModelParams::constant(0.5, 1.0, 1.0, 2.0);
  CHECK(stationary_log_laplace(p, {0.0}) == 0.0);
  CHECK_THAT(stationary_log_laplace(p, {1.0}),
             WithinAbs(2.0 * std::log(2.0), 1e-14));
  ModelParams bad = p;
  bad.b[0] = 0.0;
  CHECK_THROWS(stationary_log_laplace(bad, {1.0}));

  // general finite sum over a 3-type space
  ModelParams q;
  q.alpha = 0.3;
  q.a = {0.5, 1.0, 2.0};
  q.b = {1.0, 2.0, 0.5};
  q.m = {0.4, 0.0, 1.1};
  const std::vector<double> f{0.7, 1.3, 2.1};
  double expect = 0.0;
  for (int r = 0; r < 3; ++r)
    expect += q.m[r] / q.a[r] *
              std::log(1.0 + q.a[r] / q.b[r] * std::pow(f[r], q.alpha));
  CHECK_THAT(stationary_log_laplace(q, f), WithinAbs(expect, 1e-14));
}

TEST_CASE("covariance kernels") {
  auto [kb0, ki0] = kernels_kb_ki(0.7, 1.3, 0.0);
  CHECK(kb0 == 0.0);
  CHECK(ki0 == 0.0);
  auto [kb, ki] = kernels_kb_ki(0.5, 1.0, 1.0);
  CHECK_THAT(kb, WithinAbs(2.0 * (std::pow(2.0, 1.5) - 2.0), 1e-14));
  CHECK_THAT(ki, WithinAbs(2.0 - std::sqrt(2.0), 1e-14));
  // symmetry and nonnegativity on a grid
  for (double s : {0.2, 1.0, 7.0}) {
    for (double t : {0.5, 2.0, 11.0}) {
      auto [a1, b1] = kernels_kb_ki(0.35, s, t);
      auto [a2, b2] = kernels_kb_ki(0.35, t, s);
      CHECK(a1 == a2);
      CHECK(b1 == b2);
      CHECK(a1 >= 0.0);
      CHECK(b1 >= 0.0);
    }
  }
}

TEST_CASE("covariance kernels match the defining jump integrals") {
  for (double alpha : {0.3, 0.5, 0.8}) {
    for (auto [s, t] : {std::pair{1.0, 1.0}, {0.4, 2.3}, {3.0, 0.7}}) {
      auto [kb, ki] = kernels_kb_ki(alpha, s, t);
      CHECK_THAT(kernel_kb_quadrature(alpha, s, t), WithinRel(kb, 1e-8));
      CHECK_THAT(kernel_ki_quadrature(alpha, s, t), WithinRel(ki, 1e-8));
    }
  }
}

TEST_CASE("dirichlet form basics") {
  ModelParams p = ModelParams::constant(0.5, 1.0, 1.0, 1.0);
  // constants have zero form: c Psi_f - c Psi_f
  ExpFunctional zero;
  zero.terms = {{1.5, {1.0}}, {-1.5, {1.0}}};
  CHECK_THAT(dirichlet_form(p, zero), WithinAbs(0.0, 1e-14));
  // quadratic scaling
  ExpFunctional one;
  one.terms = {{1.0, {1.0}}};
  ExpFunctional three;
  three.terms = {{3.0, {1.0}}};
  CHECK_THAT(dirichlet_form(p, three), WithinRel(9.0 * dirichlet_form(p, one), 1e-12));
}

TEST_CASE("dirichlet form against stationary Monte Carlo of the jump form") {
  // E^Q[Gamma(Psi_f,Psi_f)] with Gamma evaluated in closed form in eta and
  // the kernels evaluated by numeric y-integration; exact sampler for Q.
  ModelParams p = ModelParams::constant(0.5, 1.0, 1.0, 1.0);
  const double f = 1.0;
  const double kb = kernel_kb_quadrature(p.alpha, f, f);
  const double ki = kernel_ki_quadrature(p.alpha, f, f);
  const long n = 400000;
  double s = 0.0, s2 = 0.0;
  for (long i = 0; i < n; ++i) {
    RngStream rng(77, i);
    const auto eta = sample_linnik_measure(rng, p);
    const double g =
        0.5 * std::exp(-2.0 * f * eta[0]) * (eta[0] * kb + p.m[0] * ki);
    s += g;
    s2 += g * g;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  ExpFunctional one;
  one.terms = {{1.0, {f}}};
  const double closed = dirichlet_form(p, one);
  CHECK_THAT(mean, WithinAbs(closed, 3.0 * se));
}

TEST_CASE("stationary variance closed form") {
  ModelParams p = ModelParams::constant(0.5, 1.0, 1.0, 2.0);
  ExpFunctional zero;
  zero.terms = {{2.0, {1.0}}, {-2.0, {1.0}}};
  CHECK_THAT(variance_q(p, zero), WithinAbs(0.0, 1e-14));
  ExpFunctional one;
  one.terms = {{1.0, {1.0}}};
  const double expect =
      std::pow(1.0 + std::sqrt(2.0), -2.0) - 1.0 / 16.0;
  CHECK_THAT(variance_q(p, one), WithinAbs(expect, 1e-14));
  CHECK(variance_q(p, one) >= 0.0);
}

TEST_CASE("stationary variance against exact-sampler Monte Carlo") {
  ModelParams p = ModelParams::constant(0.5, 1.0, 1.0, 2.0);
  ExpFunctional psi_fn;
  psi_fn.terms = {{1.0, {1.0}}, {-0.5, {2.0}}};
  const long n = 400000;
  double s = 0.0, s2 = 0.0;
  for (long i = 0; i < n; ++i) {
    RngStream rng(78, i);
    const auto eta = sample_linnik_measure(rng, p);
    const double v = psi_fn(eta);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double var = (s2 - n * mean * mean) / (n - 1);
  // variance of the sample variance for a bounded statistic
  const double se = var * std::sqrt(2.0 / n) * 2.0;
  CHECK_THAT(variance_q(p, psi_fn), WithinAbs(var, 4.0 * se));
}

TEST_CASE("exact spectral gap") {
  ModelParams p = ModelParams::constant(0.5, 1.0, 1.0, 1.0);
  CHECK(gap_exact(p) == 0.5);
  ModelParams q;
  q.alpha = 0.3;
  q.a = {1.0, 1.0, 1.0};
  q.b = {1.0, 3.0, 2.0};
  q.m = {0.5, 0.5, 0.5};
  CHECK(gap_exact(q) == 0.5);
  // kappa-scaling
  for (double& bv : q.b) bv *= 4.0;
  CHECK(gap_exact(q) == 2.0);
  // alpha-independence below 1
  ModelParams r1 = ModelParams::constant(0.1, 1.0, 1.0, 1.0);
  ModelParams r9 = ModelParams::constant(0.9, 1.0, 1.0, 1.0);
  CHECK(gap_exact(r1) == gap_exact(r9));
  ModelParams bad = p;
  bad.b[0] = -1.0;
  CHECK_THROWS_AS(gap_exact(bad), ErgodicityError);
}

TEST_CASE("variance gap Delta(t)") {
  // frozen from 2 psi(1) - psi(2) with psi(l) = log(1 + l^{1/2})
  const double expect = 2.0 * std::log(2.0) - std::log(1.0 + std::sqrt(2.0));
  CHECK_THAT(delta_t(0.5, 1.0, 1.0, 1.0, 0.0), WithinAbs(expect, 1e-14));

  // dual route at moderate times: direct psi differences
  for (double t : {0.5, 1.0, 3.0}) {
    const double v = v_flow_scalar(0.5, 1.0, 1.0, 1.0, t);
    const double direct = 2.0 * std::log1p(std::sqrt(v)) -
                          std::log1p(std::sqrt(2.0 * v));
    CHECK_THAT(delta_t(0.5, 1.0, 1.0, 1.0, t), WithinRel(direct, 1e-11));
  }

  // nonnegative, decreasing to zero, with log-slope -> -b
  double prev = 1e9;
  for (double t : {0.0, 1.0, 2.0, 5.0, 10.0}) {
    const double d = delta_t(0.5, 1.0, 1.0, 1.0, t);
    CHECK(d >= 0.0);
    CHECK(d < prev);
    prev = d;
  }
  const double b = 1.3;
  const double rate = -std::log(delta_t(0.4, 0.8, b, 1.0, 30.0)) / 30.0;
  CHECK_THAT(rate, WithinRel(b, 0.05));
}

TEST_CASE("variance of the evolved exponential") {
  // var(T^2(t) Psi_1) assembled independently from the stationary
  // functional: e^{-2 c_t} (e^{-psi(2 V_t)} - e^{-2 psi(V_t)}) with
  // c_t = psi(1) - psi(V_t).
  for (double t : {0.5, 2.0, 6.0}) {
    const double alpha = 0.5, a = 1.0, b = 1.0, m = 1.0;
    const double v = v_flow_scalar(alpha, a, b, 1.0, t);
    auto psi_c = [&](double x) {
      return m / a * std::log1p(a / b * std::pow(x, alpha));
    };
    const double ct = psi_c(1.0) - psi_c(v);
    const double direct = std::exp(-2.0 * ct) *
                          (std::exp(-psi_c(2.0 * v)) -
                           std::exp(-2.0 * psi_c(v)));
    CHECK_THAT(var_t2_psi1(alpha, a, b, m, t), WithinRel(direct, 1e-9));
  }
}

TEST_CASE("total-mass moments") {
  CHECK(moment_eta_total(0.5, 2.0, 0.0).value == 1.0);
  CHECK_FALSE(moment_eta_total(0.5, 2.0, 0.5).finite);
  CHECK_FALSE(moment_eta_total(0.5, 2.0, -1.0).finite);
  CHECK(std::isinf(moment_eta_total(0.5, 2.0, 0.5).value));
  const auto m = moment_eta_total(0.5, 2.0, -0.5);
  REQUIRE(m.finite);
  CHECK_THAT(m.value, WithinAbs(2.0 / std::sqrt(std::numbers::pi), 1e-13));

  // Gamma(alpha+1)(mE-1) E[eta(E)^{-alpha}] = 1
  for (double me : {1.5, 2.0, 5.0}) {
    for (double alpha : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
      const auto mm = moment_eta_total(alpha, me, -alpha);
      REQUIRE(mm.finite);
      CHECK_THAT(std::tgamma(alpha + 1.0) * (me - 1.0) * mm.value,
                 WithinAbs(1.0, 1e-12));
    }
  }
}
