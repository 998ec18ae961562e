#pragma once
// Monte Carlo probe of dX = -sign·√δ (d-2)/2 · X/max(|X|, r_core)² dt + √2 dB
// in R^d: how often paths started at x0 reach the ball |x| <= r_hit by t_final.
//
// Steps are adaptive: dt_k = min(dt, t_final - t, κ g², 0.1 g / |drift|) with
// g = max(|X| - r_hit, η r_hit), so the step shrinks as a path approaches the
// target. Between steps a Brownian-bridge test, P = exp(-2ab/σ²) with a, b the
// distances of the endpoints to the sphere, catches crossings inside a step.

#include <cstdint>
#include <string>
#include <vector>

namespace critdrift {

struct SdeConfig {
  int dim = 3;
  double delta = 4.0;
  /// +1: drift toward the origin (the attracting Hardy SDE); -1: away from it.
  int sign = +1;
  std::vector<double> x0 = {0.2, 0.0, 0.0};
  double t_final = 1.0;
  /// Largest step.
  double dt = 1e-3;
  std::int64_t n_paths = 100000;
  std::uint64_t seed = 12345;
  double r_hit = 1e-3;
  /// Drift cap radius; defaults to r_hit / 10 when <= 0.
  double r_core = 0.0;
  /// Diffusive step factor κ and floor fraction η of the adaptive rule.
  double kappa = 0.02;
  double eta = 0.5;
  /// Worker threads; results do not depend on this.
  int threads = 1;
};

struct HittingStats {
  double delta = 0.0;
  std::int64_t n_paths = 0;
  std::int64_t hits = 0;
  double hit_fraction = 0.0;
  /// Mean hitting time over the paths that hit (NaN if none).
  double mean_hit_time = 0.0;
  /// Wilson 95% interval for the hit probability.
  double ci_low = 0.0;
  double ci_high = 0.0;
  double confidence_halfwidth = 0.0;
  std::uint64_t seed = 0;
  std::int64_t total_steps = 0;
  /// Set if some step moved a path by more than 10x its local scale.
  bool unstable = false;
  /// dt / 2 when unstable, else dt.
  double suggested_dt = 0.0;
};

struct WilsonInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for k successes in n trials at normal quantile z.
WilsonInterval wilson_interval(std::int64_t k, std::int64_t n, double z = 1.959963984540054);

HittingStats simulate_hardy_sde(const SdeConfig& config);

/// One simulation per δ, every run using the same seed (common random numbers).
std::vector<HittingStats> delta_sweep(const SdeConfig& base, const std::vector<double>& deltas);

/// {delta, hit_fraction, ci, mean_hit_time, n_paths, seed, ...} per entry.
std::string hitting_stats_json(const std::vector<HittingStats>& stats, int indent = 2);

}  // namespace critdrift
