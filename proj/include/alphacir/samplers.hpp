#pragma once

#include <cmath>

#include "alphacir/analytics.hpp"
#include "alphacir/rng.hpp"
#include "alphacir/types.hpp"

namespace alphacir {

// One-sided stable draw, E[exp(-l S)] = exp(-l^alpha). Scale to
// exp(-c l^alpha) via S * c^{1/alpha}.
inline double sample_positive_stable(RngStream& rng, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "positive stable needs alpha in (0,1)");
  return rng.positive_stable(alpha);
}

// Exact stationary draw: per type independently
//   eta(r) = (a/b)^{1/alpha} G_r^{1/alpha} S_r,
// G_r ~ Gamma(m(r)/a(r)), S_r one-sided stable. Conditioning on G gives
// E[exp(-l G^{1/alpha} S)] = E[exp(-l^alpha G)] = (1+l^alpha)^{-shape},
// the per-type Linnik transform of the stationary law.
inline MeasureState sample_linnik_measure(RngStream& rng,
                                          const ModelParams& p) {
  p.validate();
  for (double v : p.b)
    if (v <= 0.0) throw ErgodicityError("linnik sampler needs b(r) > 0");
  MeasureState eta(p.num_types(), 0.0);
  for (std::size_t r = 0; r < eta.size(); ++r) {
    if (p.m[r] == 0.0) continue;
    const double g = rng.gamma(p.m[r] / p.a[r]);
    const double s = rng.positive_stable(p.alpha);
    eta[r] = std::pow(p.a[r] / p.b[r], 1.0 / p.alpha) *
             std::pow(g, 1.0 / p.alpha) * s;
  }
  return eta;
}

// Stable random measure with parameter measure eta:
//   eta'(r) = eta(r)^{1/alpha} S_r, so E[exp(-<eta',f>)] = exp(-<eta,f^alpha>).
inline MeasureState sample_stable_random_measure(RngStream& rng, double alpha,
                                                 const MeasureState& eta) {
  require(alpha > 0.0 && alpha < 1.0, "stable measure needs alpha in (0,1)");
  for (double v : eta) require(v >= 0.0, "parameter measure must be nonnegative");
  MeasureState out(eta.size(), 0.0);
  for (std::size_t r = 0; r < eta.size(); ++r) {
    if (eta[r] == 0.0) continue;
    out[r] = std::pow(eta[r], 1.0 / alpha) * rng.positive_stable(alpha);
  }
  return out;
}

// Truncated power-tail jump size, density ~ y^{-1-exponent} on [cutoff, inf).
inline double sample_pareto_jump(RngStream& rng, double exponent,
                                 double cutoff) {
  require(exponent > 0.0 && cutoff > 0.0, "pareto jump needs exponent, cutoff > 0");
  return rng.pareto(exponent, cutoff);
}

}  // namespace alphacir
