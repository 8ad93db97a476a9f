#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace alphacir {

// Counter-based stream: Philox4x32-10 (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). The 64-bit key is the user seed; the
// stream id occupies the upper half of the 128-bit counter, so distinct
// (seed, stream) pairs index disjoint counter blocks and the draws of
// different streams are independent by construction. A stream never
// reuses a counter, and replaying (seed, stream) replays the sequence
// bit for bit regardless of what other streams do.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_(stream) {}

  std::uint64_t seed() const {
    return static_cast<std::uint64_t>(key0_) |
           (static_cast<std::uint64_t>(key1_) << 32);
  }
  std::uint64_t stream() const { return stream_; }

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) refill();
    return buf_[buf_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Uniform on the open interval (0,1); safe under log().
  double u01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(u01()); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // polar Box-Muller
    double u, v, s;
    do {
      u = 2.0 * u01() - 1.0;
      v = 2.0 * u01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double r = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * r;
    have_spare_ = true;
    return u * r;
  }

  // Poisson variate. Knuth product below mean 10, PTRS transformed
  // rejection (Hormann 1993) above; both exact in distribution.
  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) {
      const double limit = std::exp(-mean);
      long k = 0;
      double prod = u01();
      while (prod > limit) {
        ++k;
        prod *= u01();
      }
      return k;
    }
    const double log_mean = std::log(mean);
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
      double u = u01() - 0.5;
      double v = u01();
      const double us = 0.5 - std::fabs(u);
      const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long>(kd);
      if (kd < 0.0 || (us < 0.013 && v > us)) continue;
      const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
      const double rhs = -mean + kd * log_mean - std::lgamma(kd + 1.0);
      if (lhs <= rhs) return static_cast<long>(kd);
    }
  }

  // Gamma(shape, rate 1) via Marsaglia-Tsang squeeze; shapes below 1 are
  // boosted through G(a) = G(a+1) U^{1/a}.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = u01();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = u01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // One-sided alpha-stable with E[exp(-l S)] = exp(-l^alpha), 0 < alpha < 1,
  // by Kanter's representation: S = (A(U)/E)^{(1-alpha)/alpha} with U
  // uniform on (0,pi), E standard exponential and
  // A(u) = [sin(a u)^a sin((1-a) u)^{1-a} / sin(u)]^{1/(1-a)}.
  double positive_stable(double alpha) {
    const double u = u01() * std::numbers::pi;
    const double e = exponential();
    const double one_m = 1.0 - alpha;
    const double log_a = alpha * std::log(std::sin(alpha * u)) +
                         one_m * std::log(std::sin(one_m * u)) -
                         std::log(std::sin(u));
    return std::exp((one_m / alpha) * (log_a / one_m - std::log(e)));
  }

  // Pareto tail draw with density proportional to y^{-1-exponent} on
  // [cutoff, inf), by inverse CDF.
  double pareto(double exponent, double cutoff) {
    return cutoff * std::pow(u01(), -1.0 / exponent);
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(block_);
    std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_ >> 32);
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += kW0;
      k1 += kW1;
    }
    buf_[0] = c0;
    buf_[1] = c1;
    buf_[2] = c2;
    buf_[3] = c3;
    buf_pos_ = 0;
    ++block_;
  }

  std::uint32_t key0_, key1_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace alphacir
