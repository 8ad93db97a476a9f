#pragma once

#include <cmath>
#include <vector>

#include "alphacir/cir_engine.hpp"
#include "alphacir/types.hpp"

namespace alphacir {

// <eta, f>
inline double functional(const MeasureState& eta, const std::vector<double>& f) {
  require(eta.size() == f.size(), "functional: dimension mismatch");
  double s = 0.0;
  for (std::size_t r = 0; r < eta.size(); ++r) s += eta[r] * f[r];
  return s;
}

struct MeasurePathRecord {
  std::vector<double> times;
  std::vector<MeasureState> states;
  long branch_jumps = 0;
  long imm_jumps = 0;
  long clamp_events = 0;
};

// Measure-valued path on the finite type space. The model has no motion
// process and both the transition functional and the stationary law
// factorize over types, so the joint path is exactly one independent
// scalar engine per type, each on its own substream of rng's stream.
// Joint Laplace panel over a (t, lambda) grid for the measure-valued
// model: estimates E[exp(-lambda <eta_t, f_dir>)] from n_paths joint
// paths (per-type engines on substreams path * K + r). The same
// statistical-death freeze as the scalar panel applies, with the
// per-type decay rates b(r)/alpha.
inline LaplacePanel run_measure_laplace_panel(
    const ModelParams& p, const SimConfig& cfg, const MeasureState& eta0,
    const std::vector<double>& f_dir, const std::vector<double>& t_grid,
    const std::vector<double>& lambda_grid, unsigned threads,
    LaplaceDeathPolicy death = {}, std::uint64_t stream_offset = 0) {
  p.validate();
  cfg.validate();
  validate_measure_state(eta0, p.num_types());
  require(f_dir.size() == p.num_types(), "panel: f dimension mismatch");
  for (double v : f_dir) require(v > 0.0, "panel: f must be positive");
  const std::size_t K = p.num_types();
  const std::size_t nt = t_grid.size(), nl = lambda_grid.size();
  std::vector<long> record_step(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    record_step[i] = static_cast<long>(std::llround(t_grid[i] / cfg.h));
    require(std::fabs(record_step[i] * cfg.h - t_grid[i]) < 1e-9,
            "recording times must align with the step grid");
  }
  double lambda_min = lambda_grid[0];
  for (double l : lambda_grid) lambda_min = std::min(lambda_min, l);

  std::vector<CirEngine> engines;
  engines.reserve(K);
  for (std::size_t r = 0; r < K; ++r)
    engines.emplace_back(CirParams{p.alpha, p.a[r], p.b[r], p.m[r]}, cfg);
  std::vector<double> type_decay(K);
  bool freeze_ok = death.enabled;
  for (std::size_t r = 0; r < K; ++r) {
    if (p.b[r] <= 0.0) freeze_ok = false;
    type_decay[r] = std::exp(-p.b[r] / p.alpha * cfg.h);
  }

  const long n_paths = cfg.n_paths;
  const std::size_t block = 64;
  const std::size_t n_blocks =
      (static_cast<std::size_t>(n_paths) + block - 1) / block;
  struct BlockAcc {
    std::vector<double> sum, sumsq;
    long clamps = 0, frozen = 0;
    double frozen_bound = 0.0;
  };
  std::vector<BlockAcc> acc(n_blocks);
  const double w_target = freeze_ok ? -std::log(death.value_floor) : 0.0;
  const double t_last = t_grid.back();

  parallel_for(n_blocks, threads, [&](std::size_t bi) {
    BlockAcc& A = acc[bi];
    A.sum.assign(nt * nl, 0.0);
    A.sumsq.assign(nt * nl, 0.0);
    const long lo = static_cast<long>(bi * block);
    const long hi = std::min<long>(n_paths, lo + block);
    std::vector<double> values(nt * nl);
    std::vector<double> eta(K);
    std::vector<double> decay_to_last(K);
    std::vector<RngStream> streams;
    for (long path = lo; path < hi; ++path) {
      streams.clear();
      for (std::size_t r = 0; r < K; ++r)
        streams.emplace_back(
            cfg.seed, (stream_offset + static_cast<std::uint64_t>(path)) * K + r);
      StepCounters c;
      eta = eta0;
      for (std::size_t r = 0; r < K; ++r)
        decay_to_last[r] =
            freeze_ok ? std::exp(-p.b[r] / p.alpha * t_last) : 0.0;
      long step_idx = 0;
      bool frozen = false;
      for (std::size_t rec = 0; rec < nt && !frozen; ++rec) {
        while (step_idx < record_step[rec]) {
          double bound_exponent = 0.0;
          double total = 0.0;
          for (std::size_t r = 0; r < K; ++r) {
            eta[r] = engines[r].step(eta[r], streams[r], c);
            decay_to_last[r] /= type_decay[r];
            total += eta[r];
            if (freeze_ok)
              bound_exponent += f_dir[r] * eta[r] * decay_to_last[r];
          }
          ++step_idx;
          if (freeze_ok &&
              lambda_min * bound_exponent / death.margin > w_target &&
              total > 256.0) {
            frozen = true;
            ++A.frozen;
            A.frozen_bound +=
                std::exp(-lambda_min * bound_exponent / death.margin);
            break;
          }
        }
        if (frozen) {
          for (std::size_t r2 = rec; r2 < nt; ++r2)
            for (std::size_t li = 0; li < nl; ++li) values[r2 * nl + li] = 0.0;
          break;
        }
        double dot = 0.0;
        for (std::size_t r = 0; r < K; ++r) dot += f_dir[r] * eta[r];
        for (std::size_t li = 0; li < nl; ++li)
          values[rec * nl + li] = std::exp(-lambda_grid[li] * dot);
      }
      for (std::size_t idx = 0; idx < nt * nl; ++idx) {
        A.sum[idx] += values[idx];
        A.sumsq[idx] += values[idx] * values[idx];
      }
      A.clamps += c.clamp_events;
    }
  });

  LaplacePanel out;
  out.t_grid = t_grid;
  out.lambda_grid = lambda_grid;
  out.n_paths = n_paths;
  out.cells.resize(nt * nl);
  std::vector<double> sum(nt * nl, 0.0), sumsq(nt * nl, 0.0);
  for (const auto& A : acc) {
    for (std::size_t idx = 0; idx < nt * nl; ++idx) {
      sum[idx] += A.sum[idx];
      sumsq[idx] += A.sumsq[idx];
    }
    out.clamp_events += A.clamps;
    out.frozen_paths += A.frozen;
    out.frozen_value_bound += A.frozen_bound;
  }
  const double n = static_cast<double>(n_paths);
  for (std::size_t idx = 0; idx < nt * nl; ++idx) {
    const double mean = sum[idx] / n;
    const double var = std::max(0.0, sumsq[idx] / n - mean * mean);
    out.cells[idx] = {mean, std::sqrt(var / n)};
  }
  out.frozen_value_bound /= n;
  return out;
}

inline MeasurePathRecord simulate_measure_path(const ModelParams& p,
                                               const SimConfig& cfg,
                                               const MeasureState& eta0,
                                               RngStream& rng) {
  p.validate();
  cfg.validate();
  validate_measure_state(eta0, p.num_types());
  const std::size_t k = p.num_types();
  const long n_steps = static_cast<long>(std::llround(cfg.horizon / cfg.h));
  MeasurePathRecord rec;
  rec.times.resize(n_steps + 1);
  for (long i = 0; i <= n_steps; ++i) rec.times[i] = i * cfg.h;
  rec.states.assign(n_steps + 1, MeasureState(k, 0.0));
  for (std::size_t r = 0; r < k; ++r) {
    CirParams cp{p.alpha, p.a[r], p.b[r], p.m[r]};
    CirEngine engine(cp, cfg);
    RngStream sub(rng.seed(), rng.stream() * k + r);
    StepCounters c;
    double z = eta0[r];
    rec.states[0][r] = z;
    for (long i = 1; i <= n_steps; ++i) {
      z = engine.step(z, sub, c);
      rec.states[i][r] = z;
    }
    rec.branch_jumps += c.branch_jumps;
    rec.imm_jumps += c.imm_jumps;
    rec.clamp_events += c.clamp_events;
  }
  return rec;
}

}  // namespace alphacir
