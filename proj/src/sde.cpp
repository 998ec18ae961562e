#include "critdrift/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <nlohmann/json.hpp>

#include "critdrift/error.hpp"
#include "critdrift/philox.hpp"

namespace critdrift {

WilsonInterval wilson_interval(std::int64_t k, std::int64_t n, double z) {
  if (n <= 0 || k < 0 || k > n) throw InvalidInput("wilson_interval: need 0 <= k <= n, n > 0");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The closed-form bounds are exactly 0 and 1 at the edges; pin them against rounding.
  const double low = k == 0 ? 0.0 : std::max(0.0, centre - half);
  const double high = k == n ? 1.0 : std::min(1.0, centre + half);
  return {low, high};
}

namespace {

void validate(const SdeConfig& c) {
  if (c.dim < 3) throw InvalidInput("sde: dim must be >= 3");
  if (!(c.delta > 0.0) || !std::isfinite(c.delta)) throw InvalidInput("sde: delta must be > 0");
  if (c.sign != 1 && c.sign != -1) throw InvalidInput("sde: sign must be +1 or -1");
  if (static_cast<int>(c.x0.size()) != c.dim) throw InvalidInput("sde: x0 must have dim entries");
  if (!(c.t_final > 0.0) || !(c.dt > 0.0)) throw InvalidInput("sde: t_final and dt must be > 0");
  if (c.n_paths <= 0) throw InvalidInput("sde: n_paths must be > 0");
  if (!(c.r_hit > 0.0)) throw InvalidInput("sde: r_hit must be > 0");
  const double core = c.r_core > 0.0 ? c.r_core : 0.1 * c.r_hit;
  if (!(c.r_hit > core)) throw InvalidInput("sde: r_hit must exceed r_core");
  if (!(c.kappa > 0.0) || !(c.eta > 0.0)) throw InvalidInput("sde: kappa and eta must be > 0");
  double r0 = 0.0;
  for (double v : c.x0) r0 += v * v;
  if (!(std::sqrt(r0) > c.r_hit)) throw InvalidInput("sde: x0 must lie outside the target ball");
  if (c.threads < 1) throw InvalidInput("sde: threads must be >= 1");
}

struct PathResult {
  double hit_time = std::numeric_limits<double>::quiet_NaN();
  std::int64_t steps = 0;
  bool unstable = false;
};

PathResult run_path(const SdeConfig& c, double core, std::uint64_t path) {
  PhiloxStream rng(c.seed, path);
  const int d = c.dim;
  const double coef = c.sign * std::sqrt(c.delta) * 0.5 * (d - 2);
  double x[8] = {};
  double y[8] = {};
  for (int i = 0; i < d; ++i) x[i] = c.x0[static_cast<std::size_t>(i)];
  double r = 0.0;
  for (int i = 0; i < d; ++i) r += x[i] * x[i];
  r = std::sqrt(r);
  double t = 0.0;
  PathResult out;
  while (t < c.t_final) {
    const double gap = std::max(r - c.r_hit, c.eta * c.r_hit);
    const double cap = std::max(r, core);
    const double drift_mag = std::abs(coef) * r / (cap * cap);
    double h = std::min({c.dt, c.t_final - t, c.kappa * gap * gap});
    if (drift_mag > 0.0) h = std::min(h, 0.1 * gap / drift_mag);
    const double sigma = std::sqrt(2.0 * h);
    const double pull = -h * coef / (cap * cap);
    double r2 = 0.0;
    double jump2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double dx = pull * x[i] + sigma * rng.normal();
      y[i] = x[i] + dx;
      r2 += y[i] * y[i];
      jump2 += dx * dx;
    }
    const double r_new = std::sqrt(r2);
    t += h;
    ++out.steps;
    if (std::sqrt(jump2) > 10.0 * std::max(gap, c.r_hit)) out.unstable = true;
    if (r_new <= c.r_hit) {
      out.hit_time = t;
      return out;
    }
    // Bridge crossing, locally treating the sphere as a plane: a and b are the
    // distances of the two endpoints to the sphere.
    const double a = r - c.r_hit;
    const double b = r_new - c.r_hit;
    const double exponent = -2.0 * a * b / (sigma * sigma);
    if (exponent > -40.0 && rng.uniform() < std::exp(exponent)) {
      out.hit_time = t;
      return out;
    }
    for (int i = 0; i < d; ++i) x[i] = y[i];
    r = r_new;
  }
  return out;
}

}  // namespace

HittingStats simulate_hardy_sde(const SdeConfig& config) {
  validate(config);
  if (config.dim > 8) throw InvalidInput("sde: dim must be <= 8");
  const double core = config.r_core > 0.0 ? config.r_core : 0.1 * config.r_hit;
  const auto n = static_cast<std::size_t>(config.n_paths);
  std::vector<PathResult> results(n);
  const int threads = static_cast<int>(std::min<std::int64_t>(config.threads, config.n_paths));
  auto work = [&](int tid) {
    for (std::size_t p = static_cast<std::size_t>(tid); p < n; p += static_cast<std::size_t>(threads)) {
      results[p] = run_path(config, core, p);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  HittingStats s;
  s.delta = config.delta;
  s.n_paths = config.n_paths;
  s.seed = config.seed;
  double time_sum = 0.0;
  for (const auto& r : results) {
    s.total_steps += r.steps;
    s.unstable = s.unstable || r.unstable;
    if (!std::isnan(r.hit_time)) {
      ++s.hits;
      time_sum += r.hit_time;
    }
  }
  s.hit_fraction = static_cast<double>(s.hits) / static_cast<double>(s.n_paths);
  s.mean_hit_time = s.hits > 0 ? time_sum / static_cast<double>(s.hits) : std::numeric_limits<double>::quiet_NaN();
  const auto ci = wilson_interval(s.hits, s.n_paths);
  s.ci_low = ci.low;
  s.ci_high = ci.high;
  s.confidence_halfwidth = 0.5 * (ci.high - ci.low);
  s.suggested_dt = s.unstable ? 0.5 * config.dt : config.dt;
  return s;
}

std::vector<HittingStats> delta_sweep(const SdeConfig& base, const std::vector<double>& deltas) {
  if (deltas.empty()) throw InvalidInput("delta_sweep: deltas must be nonempty");
  std::vector<HittingStats> out;
  out.reserve(deltas.size());
  for (double delta : deltas) {
    SdeConfig c = base;
    c.delta = delta;
    out.push_back(simulate_hardy_sde(c));
  }
  return out;
}

std::string hitting_stats_json(const std::vector<HittingStats>& stats, int indent) {
  auto arr = nlohmann::json::array();
  for (const auto& s : stats) {
    nlohmann::json j;
    j["delta"] = s.delta;
    j["hit_fraction"] = s.hit_fraction;
    j["hits"] = s.hits;
    j["ci"] = {s.ci_low, s.ci_high};
    j["confidence_halfwidth"] = s.confidence_halfwidth;
    j["mean_hit_time"] = std::isnan(s.mean_hit_time) ? nlohmann::json(nullptr) : nlohmann::json(s.mean_hit_time);
    j["n_paths"] = s.n_paths;
    j["seed"] = s.seed;
    j["total_steps"] = s.total_steps;
    j["unstable"] = s.unstable;
    j["suggested_dt"] = s.suggested_dt;
    arr.push_back(std::move(j));
  }
  return arr.dump(indent);
}

}  // namespace critdrift
