#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "alphacir/analytics.hpp"
#include "alphacir/types.hpp"

namespace alphacir {

// ---------------------------------------------------------------------------
// Intrinsic kernels of the two quadratic forms on exponentials: the
// "energy" kernel K with
//   2K(s,t) = rho(s+t) K_B(s,t) + K_I(s,t),
// its mixed derivative Ktilde = d_s d_t K assembled from the closed-form
// partials, and the remainder 2 Ktilde - J with J(s,t) = -psi''(s+t).

// Assembled from the product/decomposition form.
inline double kernel_k(double alpha, double s, double t) {
  const auto [kb, ki] = kernels_kb_ki(alpha, s, t);
  return 0.5 * (psi_d1(alpha, s + t) * kb + ki);
}

// Single-expression form; equal to kernel_k, kept as the dual route.
inline double kernel_k_direct(double alpha, double s, double t) {
  const double u = s + t;
  const double frac = std::pow(u, alpha - 1.0) / (1.0 + std::pow(u, alpha));
  const double bracket = std::pow(u, alpha + 1.0) - std::pow(s, alpha + 1.0) -
                         std::pow(t, alpha + 1.0);
  const double ki = std::pow(s, alpha) + std::pow(t, alpha) - std::pow(u, alpha);
  return 0.5 * (frac * bracket + ki);
}

namespace detail {

// (d_s + d_t) K_B and d_s d_t K_B, d_s d_t K_I.
inline double kb_sum_partial(double alpha, double s, double t) {
  const double u = s + t;
  return (alpha + 1.0) / alpha *
         (2.0 * std::pow(u, alpha) - std::pow(s, alpha) - std::pow(t, alpha));
}
inline double kb_mixed_partial(double alpha, double s, double t) {
  return (alpha + 1.0) * std::pow(s + t, alpha - 1.0);
}
inline double ki_mixed_partial(double alpha, double s, double t) {
  return alpha * (1.0 - alpha) * std::pow(s + t, alpha - 2.0);
}

// d_s d_t [rho(s+t) K_B(s,t)]
inline double rho_kb_mixed_partial(double alpha, double s, double t) {
  const double u = s + t;
  const auto [kb, ki] = kernels_kb_ki(alpha, s, t);
  (void)ki;
  return psi_d3(alpha, u) * kb + psi_d2(alpha, u) * kb_sum_partial(alpha, s, t) +
         psi_d1(alpha, u) * kb_mixed_partial(alpha, s, t);
}

}  // namespace detail

// 2 Ktilde(s,t) = d_s d_t [rho(s+t) K_B] + d_s d_t K_I.
inline double kernel_ktilde(double alpha, double s, double t) {
  return 0.5 * (detail::rho_kb_mixed_partial(alpha, s, t) +
                detail::ki_mixed_partial(alpha, s, t));
}

inline double kernel_j(double alpha, double s, double t) {
  return -psi_d2(alpha, s + t);
}

// Remainder 2 Ktilde - J, directly.
inline double remainder_kernel(double alpha, double s, double t) {
  return 2.0 * kernel_ktilde(alpha, s, t) - kernel_j(alpha, s, t);
}

// Same remainder via the three-term decomposition
//   (alpha/(alpha+1)) rho'' K_B - rho' K_I + (1/(alpha+1)) d_s d_t [rho K_B];
// each term is nonnegative definite (Gram-tested, not pointwise).
inline double remainder_kernel_decomposed(double alpha, double s, double t) {
  const double u = s + t;
  const auto [kb, ki] = kernels_kb_ki(alpha, s, t);
  return alpha / (alpha + 1.0) * psi_d3(alpha, u) * kb -
         psi_d2(alpha, u) * ki +
         detail::rho_kb_mixed_partial(alpha, s, t) / (alpha + 1.0);
}

// alpha -> 1 limits of the kernels (closed forms used by the continuity
// checks): 2K -> 2st/(1+s+t), Ktilde -> (1+s+t+2st)/(1+s+t)^3.
inline double kernel_k_alpha1(double s, double t) {
  return s * t / (1.0 + s + t);
}
inline double kernel_ktilde_alpha1(double s, double t) {
  const double u = 1.0 + s + t;
  return (u + 2.0 * s * t) / (u * u * u);
}

// ---------------------------------------------------------------------------
// Gram positive-definiteness probe: minimum eigenvalue of [k(s_i, s_j)]
// over a point grid, by a symmetric eigensolver.

inline double gram_min_eigenvalue(
    const std::function<double(double, double)>& kernel,
    const std::vector<double>& grid) {
  require(!grid.empty() && grid.size() <= 64, "gram grid must have 1..64 points");
  const int n = static_cast<int>(grid.size());
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double v = kernel(grid[i], grid[j]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("gram eigensolver failed");
  return solver.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Scalar-exponential forms of the one-dimensional comparison: for
// F = sum_i c_i e^{-l_i z},
//   U(F) = sum_{ij} c_i c_j [psi(l_i) + psi(l_j) - psi(l_i + l_j)]
//   V(F) = sum_{ij} c_i c_j K(l_i, l_j),
// computed through psi differences only (the Levy measure has no usable
// density). The pair satisfies 2V >= U.

struct ScalarExpFunctional {
  struct Term {
    double c = 0.0;
    double lambda = 0.0;
  };
  std::vector<Term> terms;
};

inline std::pair<double, double> check_uv_inequality(
    double alpha, const ScalarExpFunctional& f) {
  for (const auto& t : f.terms)
    require(t.lambda > 0.0, "check_uv: lambdas must be positive");
  double u = 0.0, v = 0.0;
  for (const auto& ti : f.terms) {
    for (const auto& tj : f.terms) {
      const double cc = ti.c * tj.c;
      u += cc * (psi(alpha, ti.lambda) + psi(alpha, tj.lambda) -
                 psi(alpha, ti.lambda + tj.lambda));
      v += cc * kernel_k(alpha, ti.lambda, tj.lambda);
    }
  }
  return {u, v};
}

// Poincare comparison: (var(Psi), 2 max(1/b) E(Psi)), both closed-form.
inline std::pair<double, double> check_poincare(const ModelParams& p,
                                                const ExpFunctional& psi_fn) {
  const double var = variance_q(p, psi_fn);
  double inv_b_max = 0.0;
  for (std::size_t r = 0; r < p.num_types(); ++r)
    if (p.m[r] > 0.0) inv_b_max = std::max(inv_b_max, 1.0 / p.b[r]);
  const double bound = 2.0 * inv_b_max * dirichlet_form(p, psi_fn);
  return {var, bound};
}

}  // namespace alphacir
