#include "critdrift/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "critdrift/field_io.hpp"

namespace critdrift {

ConfigError::ConfigError(const std::string& field, int line, const std::string& what)
    : InvalidInput((line > 0 ? "line " + std::to_string(line) + ", " : std::string()) + "field '" + field +
                   "': " + what),
      field_(field),
      reason_(what),
      line_(line) {}

double ExperimentConfig::certificate_delta() const {
  if (certificate.delta) return *certificate.delta;
  if (const auto* h = std::get_if<HardyDrift>(&drift.kind)) return h->delta;
  return 4.0;
}

const char* scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::if_rk2: return "if_rk2";
    case Scheme::if_euler: return "if_euler";
    case Scheme::if_rk4: return "if_rk4";
  }
  return "?";
}

namespace {

int line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// Map node with key bookkeeping so unknown keys can be reported.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_, line_of(node_), "expected a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull();
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    out = as<T>(node_[key], path(key));
  }

  template <typename T>
  void get_opt(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    out = as<T>(node_[key], path(key));
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(node_ && node_.IsMap() ? node_[key] : YAML::Node(), path(key));
  }

  void reject_unknown() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError(path(key), line_of(kv.first), "unknown field");
    }
  }

  template <typename T>
  static T as(const YAML::Node& node, const std::string& path) {
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(path, line_of(node), "has the wrong type");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

double positive(double v, const std::string& field, int line) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, line, "must be a finite number > 0");
  return v;
}

Scheme parse_scheme(const std::string& s, const std::string& field, int line) {
  if (s == "if_rk2") return Scheme::if_rk2;
  if (s == "if_euler") return Scheme::if_euler;
  if (s == "if_rk4") return Scheme::if_rk4;
  throw ConfigError(field, line, "unknown scheme '" + s + "' (if_euler, if_rk2, if_rk4)");
}

DriftSpec parse_drift(Section& s, int dim) {
  DriftSpec spec;
  std::string type = "hardy";
  s.get("type", type);
  s.get("cutoff_radius", spec.cutoff_radius);
  const int type_line = s.has("type") ? line_of(s.raw("type")) : 0;
  if (type == "hardy") {
    HardyDrift h;
    s.get("delta", h.delta);
    s.get("sign", h.sign);
    s.get_opt("core_radius", h.core_radius);
    spec.kind = h;
  } else if (type == "constant") {
    ConstantDrift c;
    s.get("vector", c.vector);
    spec.kind = c;
  } else if (type == "zero") {
    spec.kind = ConstantDrift{std::vector<double>(static_cast<std::size_t>(std::max(dim, 0)), 0.0)};
  } else if (type == "trig") {
    TrigDrift t;
    if (s.has("components")) {
      const auto comps = s.raw("components");
      if (!comps.IsSequence()) throw ConfigError(s.path("components"), line_of(comps), "expected a list");
      for (std::size_t a = 0; a < comps.size(); ++a) {
        const std::string cpath = s.path("components") + "[" + std::to_string(a) + "]";
        if (!comps[a].IsSequence()) throw ConfigError(cpath, line_of(comps[a]), "expected a list of modes");
        std::vector<TrigMode> modes;
        for (std::size_t m = 0; m < comps[a].size(); ++m) {
          Section ms(comps[a][m], cpath + "[" + std::to_string(m) + "]");
          TrigMode mode;
          ms.get("amplitude", mode.amplitude);
          ms.get("wavevector", mode.wavevector);
          ms.get("phase", mode.phase);
          ms.reject_unknown();
          modes.push_back(std::move(mode));
        }
        t.components.push_back(std::move(modes));
      }
    }
    spec.kind = t;
  } else if (type == "file") {
    FileDrift f;
    std::string p;
    s.get("path", p);
    if (p.empty()) throw ConfigError(s.path("path"), 0, "is required for a file drift");
    f.path = p;
    spec.kind = f;
  } else {
    throw ConfigError(s.path("type"), type_line, "unknown drift type '" + type + "' (hardy, constant, zero, trig, file)");
  }
  s.reject_unknown();
  return spec;
}

InitialSpec parse_initial(Section& s) {
  InitialSpec spec;
  std::string type = "gaussian";
  s.get("type", type);
  if (type == "gaussian") spec.kind = InitialSpec::Kind::gaussian;
  else if (type == "constant") spec.kind = InitialSpec::Kind::constant;
  else if (type == "trig") spec.kind = InitialSpec::Kind::trig;
  else if (type == "file") spec.kind = InitialSpec::Kind::file;
  else throw ConfigError(s.path("type"), line_of(s.raw("type")), "unknown initial type '" + type + "'");
  s.get("amplitude", spec.amplitude);
  s.get("width", spec.width);
  s.get("center", spec.center);
  s.get("wavevector", spec.wavevector);
  std::string p;
  s.get("path", p);
  spec.path = p;
  s.reject_unknown();
  return spec;
}

template <typename T>
void get_list_line(Section& s, const std::string& key, std::vector<T>& out, int& line) {
  if (!s.has(key)) return;
  line = line_of(s.raw(key));
  out = Section::as<std::vector<T>>(s.raw(key), s.path(key));
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("<document>", e.mark.line + 1, e.msg);
  }
  ExperimentConfig cfg;
  Section top(root, "");
  top.get("seed", cfg.seed);
  {
    std::string out;
    top.get("output_dir", out);
    if (!out.empty()) cfg.output_dir = out;
  }
  {
    Section g = top.sub("grid");
    g.get("dim", cfg.dim);
    g.get("n", cfg.n);
    g.reject_unknown();
  }
  {
    Section d = top.sub("drift");
    cfg.drift = parse_drift(d, cfg.dim);
  }
  {
    Section c = top.sub("certificate");
    c.get_opt("delta", cfg.certificate.delta);
    c.get_opt("c", cfg.certificate.c);
    c.get("c_rel_tol", cfg.certificate.c_rel_tol);
    std::string method = "lobpcg";
    c.get("method", method);
    if (method == "lobpcg") cfg.certificate.method = EigenMethod::lobpcg;
    else if (method == "power") cfg.certificate.method = EigenMethod::power;
    else throw ConfigError(c.path("method"), line_of(c.raw("method")), "unknown method '" + method + "' (lobpcg, power)");
    c.reject_unknown();
  }
  {
    Section i = top.sub("initial");
    cfg.initial = parse_initial(i);
  }
  int sched_line = 0;
  int sched_b_line = 0;
  {
    Section m = top.sub("mollification");
    get_list_line(m, "schedule", cfg.schedule, sched_line);
    get_list_line(m, "interleaved", cfg.schedule_b, sched_b_line);
    m.reject_unknown();
  }
  {
    Section s = top.sub("solver");
    s.get("dt", cfg.solver.dt);
    s.get("t_final", cfg.solver.t_final);
    s.get("lambda", cfg.solver.lambda);
    s.get("snapshot_stride", cfg.solver.snapshot_stride);
    s.get("cfl_safety", cfg.solver.cfl_safety);
    s.get("orlicz_tol", cfg.solver.orlicz_tol);
    if (s.has("scheme")) {
      cfg.solver.scheme = parse_scheme(Section::as<std::string>(s.raw("scheme"), s.path("scheme")), s.path("scheme"),
                                       line_of(s.raw("scheme")));
    }
    s.reject_unknown();
  }
  {
    Section v = top.sub("verifier");
    if (v.has("checks")) {
      const auto node = v.raw("checks");
      cfg.verifier.checks = Section::as<std::vector<std::string>>(node, v.path("checks"));
      for (std::size_t i = 0; i < cfg.verifier.checks.size(); ++i) {
        const auto& id = cfg.verifier.checks[i];
        const auto& known = known_check_ids();
        if (std::find(known.begin(), known.end(), id) == known.end()) {
          throw ConfigError(v.path("checks") + "[" + std::to_string(i) + "]", line_of(node[i]),
                            "unknown inequality id '" + id + "'");
        }
      }
    }
    if (v.has("tier")) {
      const auto node = v.raw("tier");
      try {
        cfg.verifier.tier = parse_tier(Section::as<std::string>(node, v.path("tier")));
      } catch (const ConfigError&) {
        throw;
      } catch (const InvalidInput& e) {
        throw ConfigError(v.path("tier"), line_of(node), e.what());
      }
    }
    v.get("p_list", cfg.verifier.p_list);
    v.get("min_decay", cfg.verifier.min_decay);
    v.reject_unknown();
  }
  {
    Section n = top.sub("norm");
    n.get("morrey_eps", cfg.norm.morrey_eps);
    n.get("radii", cfg.norm.radii);
    n.reject_unknown();
  }
  if (top.has("sde")) {
    Section s = top.sub("sde");
    SdeSpec sde;
    auto& c = sde.config;
    c.seed = cfg.seed;
    s.get("dim", c.dim);
    s.get("sign", c.sign);
    s.get("x0", c.x0);
    s.get("t_final", c.t_final);
    s.get("dt", c.dt);
    s.get("n_paths", c.n_paths);
    s.get("r_hit", c.r_hit);
    s.get("r_core", c.r_core);
    s.get("kappa", c.kappa);
    s.get("eta", c.eta);
    s.get("deltas", sde.deltas);
    s.reject_unknown();
    cfg.sde = sde;
  }
  top.reject_unknown();

  cfg.solver.p_list = cfg.verifier.p_list;
  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    // Attach the schedule line numbers that validate_config cannot know.
    if (e.line() == 0 && e.field() == "mollification.schedule" && sched_line > 0)
      throw ConfigError(e.field(), sched_line, e.reason());
    if (e.line() == 0 && e.field() == "mollification.interleaved" && sched_b_line > 0)
      throw ConfigError(e.field(), sched_b_line, e.reason());
    throw;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

void check_schedule(const std::vector<double>& s, const std::string& field) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] >= 0.0) || !std::isfinite(s[i])) throw ConfigError(field, 0, "entries must be finite and >= 0");
    if (i > 0 && !(s[i] < s[i - 1])) throw ConfigError(field, 0, "must be strictly decreasing");
  }
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
  if (c.dim < 1 || c.dim > 3) throw ConfigError("grid.dim", 0, "must be 1, 2 or 3");
  if (c.n < 8 || c.n % 2 != 0) throw ConfigError("grid.n", 0, "must be even and >= 8");
  if (c.schedule.empty()) throw ConfigError("mollification.schedule", 0, "must not be empty");
  check_schedule(c.schedule, "mollification.schedule");
  check_schedule(c.schedule_b, "mollification.interleaved");
  const bool cauchy =
      std::find(c.verifier.checks.begin(), c.verifier.checks.end(), "cauchy_convergence") != c.verifier.checks.end();
  if (cauchy && (c.schedule.size() < 3 || c.schedule_b.size() < 3)) {
    throw ConfigError("mollification", 0, "cauchy_convergence needs both schedules with >= 3 members");
  }
  positive(c.solver.dt, "solver.dt", 0);
  positive(c.solver.t_final, "solver.t_final", 0);
  positive(c.solver.cfl_safety, "solver.cfl_safety", 0);
  positive(c.solver.orlicz_tol, "solver.orlicz_tol", 0);
  if (!(c.solver.lambda >= 0.0)) throw ConfigError("solver.lambda", 0, "must be >= 0");
  if (c.solver.snapshot_stride < 1) throw ConfigError("solver.snapshot_stride", 0, "must be >= 1");
  for (double p : c.verifier.p_list) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("verifier.p_list", 0, "entries must be finite and >= 1");
  }
  positive(c.verifier.min_decay, "verifier.min_decay", 0);
  if (c.certificate.delta) positive(*c.certificate.delta, "certificate.delta", 0);
  if (c.certificate.c && !(*c.certificate.c >= 0.0)) throw ConfigError("certificate.c", 0, "must be >= 0");
  positive(c.certificate.c_rel_tol, "certificate.c_rel_tol", 0);
  positive(c.norm.morrey_eps, "norm.morrey_eps", 0);
  for (double r : c.norm.radii) {
    if (!(r > 0.0 && r <= 0.5)) throw ConfigError("norm.radii", 0, "entries must lie in (0, 1/2]");
  }
  if (c.initial.kind == InitialSpec::Kind::gaussian) positive(c.initial.width, "initial.width", 0);
  if (!c.initial.center.empty() && static_cast<int>(c.initial.center.size()) != c.dim) {
    throw ConfigError("initial.center", 0, "must have grid.dim entries");
  }
  if (c.initial.kind == InitialSpec::Kind::trig && static_cast<int>(c.initial.wavevector.size()) != c.dim) {
    throw ConfigError("initial.wavevector", 0, "must have grid.dim entries");
  }
  if (c.initial.kind == InitialSpec::Kind::file && c.initial.path.empty()) {
    throw ConfigError("initial.path", 0, "is required for a file initial datum");
  }
  if (c.sde) {
    if (c.sde->config.n_paths <= 0) throw ConfigError("sde.n_paths", 0, "must be > 0");
    if (c.sde->deltas.empty()) throw ConfigError("sde.deltas", 0, "must not be empty");
  }
}

ScalarField build_initial(const InitialSpec& spec, const TorusGrid& grid) {
  const int d = grid.dim();
  switch (spec.kind) {
    case InitialSpec::Kind::constant:
      return ScalarField(grid, spec.amplitude);
    case InitialSpec::Kind::gaussian: {
      std::vector<double> c = spec.center;
      c.resize(static_cast<std::size_t>(d), 0.0);
      const double w2 = spec.width * spec.width;
      return ScalarField::sample(grid, [&](const std::array<double, 3>& x) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
          double dx = x[static_cast<std::size_t>(a)] - c[static_cast<std::size_t>(a)];
          dx -= std::round(dx);
          r2 += dx * dx;
        }
        return spec.amplitude * std::exp(-0.5 * r2 / w2);
      });
    }
    case InitialSpec::Kind::trig: {
      if (static_cast<int>(spec.wavevector.size()) != d) throw InvalidInput("initial: wavevector must have dim entries");
      return ScalarField::sample(grid, [&](const std::array<double, 3>& x) {
        double phase = 0.0;
        for (int a = 0; a < d; ++a) phase += spec.wavevector[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
        return spec.amplitude * std::sin(2.0 * std::numbers::pi * phase);
      });
    }
    case InitialSpec::Kind::file: {
      ScalarField f = read_scalar_field(spec.path);
      if (!(f.grid() == grid)) throw InvalidInput("initial: field file grid differs from the configured grid");
      return f;
    }
  }
  throw InvalidInput("initial: unknown kind");
}

std::string config_template() {
  return R"(# critdrift experiment configuration. Every field is shown at its default.
seed: 20240917               # seeds trial fields, eigen-solver noise and the SDE
output_dir: critdrift-out    # reports, CSV diagnostics, fields and manifest.json

grid:
  dim: 3                     # 1, 2 or 3
  n: 64                      # points per axis, even, >= 8

drift:
  type: hardy                # hardy | constant | zero | trig | file
  delta: 4.0                 # hardy: b = ±√δ (d-2)/2 · x/max(|x|, core)²
  sign: 1                    # +1: -b points at the origin
  core_radius: null          # null: 2h
  cutoff_radius: 0.4         # smooth periodizing cutoff, in (0, 1/2)
  # constant: vector: [1.0, 0.0, 0.0]
  # trig: components: [[{amplitude: 1.0, wavevector: [1, 0, 0], phase: 0.0}], [], []]
  # file: path: drift.bin

certificate:
  delta: null                # null: the Hardy δ (4 for other drifts)
  c: null                    # null: smallest c with δ̂(c) <= delta
  c_rel_tol: 1.0e-3          # calibration accuracy in c
  method: lobpcg             # lobpcg | power

initial:
  type: gaussian             # gaussian | constant | trig | file
  amplitude: 1.0
  width: 0.1                 # gaussian standard deviation
  center: []                 # gaussian centre (grid.dim entries); empty: origin
  # trig: wavevector: [1, 0, 0]
  # file: path: f.bin

mollification:
  schedule: [1.0e-2, 2.5e-3, 6.25e-4, 1.5625e-4]       # strictly decreasing ε
  interleaved: [5.0e-3, 1.25e-3, 3.125e-4, 7.8125e-5]  # second schedule for the Cauchy check

solver:
  dt: 1.0e-4
  t_final: 0.1
  lambda: 0.0                # shift of the frame the solve command reports
  scheme: if_rk2             # if_euler | if_rk2 | if_rk4
  snapshot_stride: 50
  cfl_safety: 0.5            # dt <= cfl_safety · h / max|b|
  orlicz_tol: 1.0e-10

verifier:
  checks: [orlicz_contraction, lp_contraction, cosh_energy, exp_energy, gradient_bound, cauchy_convergence]
  tier: singular             # analytic (1e-6) | singular (5e-2)
  p_list: [2, 4]             # L^p and exponential-energy exponents
  min_decay: 1.5             # required Cauchy decay factor per level

norm:
  morrey_eps: 0.5
  radii: [0.02, 0.05, 0.1, 0.2]

# Optional Monte Carlo probe; remove the block to skip it.
sde:
  dim: 3
  sign: 1
  x0: [0.2, 0.0, 0.0]
  t_final: 1.0
  dt: 1.0e-3
  n_paths: 100000
  r_hit: 1.0e-3
  r_core: 1.0e-4
  kappa: 0.02
  eta: 0.5
  deltas: [0.5, 4.0, 36.0, 100.0]
)";
}

}  // namespace critdrift
