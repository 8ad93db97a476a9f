#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace alphacir {

// Nonnegative mass vector over the finite type space.
using MeasureState = std::vector<double>;

// Normalized mass vector; see validate_prob_state.
using ProbState = std::vector<double>;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Stable-jump model on a finite type space: stability index alpha plus
// per-type branching coefficients a (jump scale, positive), b (drift)
// and immigration weights m (nonnegative, not all zero).
struct ModelParams {
  double alpha = 0.5;
  std::vector<std::string> types;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> m;

  std::size_t num_types() const { return a.size(); }

  double m_total() const {
    double s = 0.0;
    for (double v : m) s += v;
    return s;
  }

  void validate() const {
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    require(!a.empty(), "type space must be nonempty");
    require(b.size() == a.size() && m.size() == a.size() &&
                (types.empty() || types.size() == a.size()),
            "per-type coefficient vectors must have equal length");
    for (double v : a) require(v > 0.0, "a(r) must be positive");
    for (double v : m) require(v >= 0.0, "m(r) must be nonnegative");
    require(m_total() > 0.0, "total immigration m(E) must be positive");
  }

  // Ergodic mode needs strictly positive drift everywhere.
  void require_ergodic() const {
    validate();
    for (double v : b) require(v > 0.0, "ergodic mode needs b(r) > 0");
  }

  static ModelParams constant(double alpha, double a0, double b0, double m0,
                              std::size_t n_types = 1) {
    ModelParams p;
    p.alpha = alpha;
    p.a.assign(n_types, a0);
    p.b.assign(n_types, b0);
    p.m.assign(n_types, m0 / static_cast<double>(n_types));
    return p;
  }
};

// Finite linear combination of negative exponentials of linear
// functionals: Psi(eta) = sum_i c_i exp(-<eta, f_i>), every f_i
// strictly positive.
struct ExpFunctional {
  struct Term {
    double c = 0.0;
    std::vector<double> f;
  };
  std::vector<Term> terms;

  void validate(std::size_t n_types) const {
    for (const auto& t : terms) {
      require(t.f.size() == n_types, "test function dimension mismatch");
      for (double v : t.f) require(v > 0.0, "test functions must be positive");
    }
  }

  double operator()(const MeasureState& eta) const {
    double s = 0.0;
    for (const auto& t : terms) {
      double dot = 0.0;
      for (std::size_t r = 0; r < t.f.size(); ++r) dot += t.f[r] * eta[r];
      s += t.c * std::exp(-dot);
    }
    return s;
  }
};

// Euler-thinning discretization knobs for the jump engine.
struct SimConfig {
  double h = 1e-3;        // step size
  double delta_b = 1e-3;  // branching-jump truncation (mass)
  double delta_i = 1e-3;  // immigration-jump truncation (mass)
  double horizon = 1.0;
  long n_paths = 1;
  std::uint64_t seed = 1;
  // Optional cost guard for heavy-tailed excursions: above this mass the
  // branching truncation is widened proportionally, delta_b * z / level,
  // keeping the per-path work bounded. 0 disables it. The induced extra
  // weak error is confined to states whose test-function values are
  // already exponentially small; the acceptance suite measures the total
  // bias of whatever scheme is configured.
  double coarsen_above_mass = 0.0;

  void validate() const {
    require(h > 0.0, "step size h must be positive");
    require(delta_b > 0.0 && delta_i > 0.0, "jump truncations must be positive");
    require(horizon >= 0.0, "horizon must be nonnegative");
    require(n_paths >= 1, "need at least one path");
  }
};

enum class GfvRoute { direct, time_change };

// Event-driven generalized Fleming-Viot simulation knobs.
struct GfvConfig {
  double epsilon = 1e-3;  // jump-size truncation in (0,1)
  double horizon = 1.0;
  long n_paths = 1;
  std::uint64_t seed = 1;
  GfvRoute route = GfvRoute::direct;

  void validate() const {
    require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0,1)");
    require(horizon >= 0.0, "horizon must be nonnegative");
    require(n_paths >= 1, "need at least one path");
  }
};

inline void validate_measure_state(const MeasureState& eta,
                                   std::size_t n_types) {
  require(eta.size() == n_types, "state dimension mismatch");
  for (double v : eta) require(v >= 0.0, "mass must be nonnegative");
}

inline void validate_prob_state(const ProbState& mu, std::size_t n_types,
                                double tol = 1e-12) {
  validate_measure_state(mu, n_types);
  double s = 0.0;
  for (double v : mu) s += v;
  require(std::fabs(s - 1.0) <= tol, "weights must sum to 1");
}

}  // namespace alphacir
