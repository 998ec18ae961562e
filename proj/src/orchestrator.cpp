#include "critdrift/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "critdrift/field_io.hpp"
#include "critdrift/orlicz.hpp"

namespace critdrift {

namespace fs = std::filesystem;
using nlohmann::json;

Subcommand parse_subcommand(const std::string& name) {
  static const std::map<std::string, Subcommand> table = {
      {"norm", Subcommand::norm},     {"formbound", Subcommand::formbound}, {"mollify", Subcommand::mollify},
      {"solve", Subcommand::solve},   {"verify", Subcommand::verify},       {"sde", Subcommand::sde},
      {"all", Subcommand::all}};
  const auto it = table.find(name);
  if (it == table.end()) throw InvalidInput("unknown subcommand '" + name + "'");
  return it->second;
}

const char* subcommand_name(Subcommand cmd) {
  switch (cmd) {
    case Subcommand::norm: return "norm";
    case Subcommand::formbound: return "formbound";
    case Subcommand::mollify: return "mollify";
    case Subcommand::solve: return "solve";
    case Subcommand::verify: return "verify";
    case Subcommand::sde: return "sde";
    case Subcommand::all: return "all";
  }
  return "?";
}

int exit_status(const RunResult& result) { return result.passed ? 0 : 1; }

namespace {

std::string to_hex(const unsigned char* data, unsigned len) {
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(data[i]);
  return os.str();
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw NumericalError("sha256: init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const char* data, std::size_t len) {
    if (EVP_DigestUpdate(ctx_, data, len) != 1) throw NumericalError("sha256: update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_DigestFinal_ex(ctx_, md, &len) != 1) throw NumericalError("sha256: final failed");
    return to_hex(md, len);
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("sha256: cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::vector<ManifestEntry> scan_artifacts(const fs::path& dir) {
  std::vector<ManifestEntry> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    out.push_back({rel, sha256_file(entry.path()), entry.file_size()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

namespace {

constexpr int kTrialCount = 100;
constexpr double kCertificateViolation = 1e-8;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string eps_label(double e) {
  std::ostringstream os;
  os << std::setprecision(6) << e;
  return os.str();
}

class Pipeline {
 public:
  Pipeline(const ExperimentConfig& cfg, const RunOptions& opt)
      : cfg_(cfg), out_(cfg.output_dir), log_(opt.log), parallel_(opt.parallel), grid_(cfg.dim, cfg.n) {}

  std::vector<CheckOutcome> checks;

  void norm();
  void formbound();
  void mollify();
  void solve_parent();
  void verify();
  void sde();

 private:
  const ExperimentConfig& cfg_;
  fs::path out_;
  std::ostream* log_;
  bool parallel_;
  TorusGrid grid_;
  std::optional<VectorField> drift_;
  std::optional<ScalarField> initial_;
  std::optional<FormBoundCertificate> cert_;
  std::optional<std::vector<ScalarField>> trials_;

  template <typename... Args>
  void say(const Args&... args) {
    if (!log_) return;
    ((*log_) << ... << args) << '\n';
  }

  void write_json(const std::string& name, const json& j) {
    std::ofstream os(out_ / name);
    if (!os) throw InvalidInput("cannot write " + (out_ / name).string());
    os << j.dump(2) << '\n';
  }

  void add_check(std::string id, bool passed, std::string detail) {
    say("  [", passed ? "PASS" : "FAIL", "] ", id, (detail.empty() ? "" : "  "), detail);
    checks.push_back({std::move(id), passed, "", std::move(detail)});
  }

  void skip_check(std::string id, std::string reason) {
    say("  [SKIP] ", id, "  ", reason);
    checks.push_back({std::move(id), true, std::move(reason), ""});
  }

  bool selected(const std::string& id) const {
    const auto& c = cfg_.verifier.checks;
    return std::find(c.begin(), c.end(), id) != c.end();
  }

  const VectorField& drift() {
    if (!drift_) drift_ = build_drift(cfg_.drift, grid_);
    return *drift_;
  }

  const ScalarField& initial() {
    if (!initial_) initial_ = build_initial(cfg_.initial, grid_);
    return *initial_;
  }

  const std::vector<ScalarField>& trials() {
    if (!trials_) trials_ = random_trial_fields(grid_, kTrialCount, cfg_.seed);
    return *trials_;
  }

  const FormBoundCertificate& certificate();
};

const FormBoundCertificate& Pipeline::certificate() {
  if (cert_) return *cert_;
  FormBoundOptions opt;
  opt.method = cfg_.certificate.method;
  opt.seed = cfg_.seed;
  const double delta = cfg_.certificate_delta();
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg_.certificate.c) {
    cert_ = form_bound_estimate(drift(), *cfg_.certificate.c, opt);
  } else {
    cert_ = calibrate_form_bound(drift(), delta, cfg_.certificate.c_rel_tol, opt);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  say("certificate: delta=", delta, " c=", cert_->c, " delta_hat=", cert_->delta_hat, " (", secs, " s)");
  return *cert_;
}

void Pipeline::norm() {
  say("== norm");
  const ScalarField& f = initial();
  const auto on = orlicz_norm(f, cfg_.solver.orlicz_tol);
  json j;
  j["initial"]["orlicz_norm"] = on.value;
  j["initial"]["modular_at_norm"] = on.modular_at_value;
  j["initial"]["sup"] = lp_norm(f, std::numeric_limits<double>::infinity());
  json lps = json::object();
  bool lower_ok = true;
  double factorial = 1.0;
  for (int p = 1; p <= 3; ++p) {
    factorial *= (2 * p - 1) * (2 * p);
    const double l2p = lp_norm(f, 2.0 * p);
    lps[std::to_string(2 * p)] = l2p;
    lower_ok = lower_ok && on.value >= l2p / factorial;
  }
  for (double p : cfg_.verifier.p_list) lps[eps_label(p)] = lp_norm(f, p);
  j["initial"]["lp"] = lps;

  const VectorField& b = drift();
  j["drift"]["l2_squared"] = drift_l2_squared(b);
  j["drift"]["sup"] = drift_sup(b);
  j["drift"]["morrey_eps"] = cfg_.norm.morrey_eps;
  j["drift"]["morrey_radii"] = cfg_.norm.radii;
  j["drift"]["morrey_profile"] = morrey_profile(b, cfg_.norm.morrey_eps, cfg_.norm.radii);
  j["drift"]["morrey_norm"] = morrey_norm(b, cfg_.norm.morrey_eps, cfg_.norm.radii);
  j["orlicz_lp_lower_bound_holds"] = lower_ok;
  write_json("norm.json", j);
  write_field_binary(out_ / "initial.bin", f);
  write_field_binary(out_ / "drift.bin", b);
  say("  ||f||_Phi=", on.value, "  ||b||_2^2=", j["drift"]["l2_squared"].get<double>(),
      "  morrey=", j["drift"]["morrey_norm"].get<double>());
  add_check("orlicz_lp_lower_bound", lower_ok, "||f||_Phi >= ||f||_2p / (2p)!, p = 1, 2, 3");
}

void Pipeline::formbound() {
  say("== formbound");
  const auto& cert = certificate();
  const double delta = cfg_.certificate_delta();
  const double viol = verify_form_bound_relative(drift(), delta, cert.c, trials());
  json j;
  j["delta"] = delta;
  j["c"] = cert.c;
  j["feasible"] = cert.feasible;
  j["delta_hat"] = finite_or_null(cert.delta_hat);
  j["eigenvalue"] = finite_or_null(cert.eigenvalue);
  j["residual"] = cert.residual;
  j["residual_norm"] = cert.residual_norm;
  j["iterations"] = cert.iterations;
  j["converged"] = cert.converged;
  j["trial_count"] = kTrialCount;
  j["trial_violation_relative"] = viol;
  write_json("certificate.json", j);
  write_field_binary(out_ / "witness.bin", cert.witness);
  add_check("form_bound_certificate", cert.feasible && cert.delta_hat <= delta,
            "delta_hat=" + std::to_string(cert.delta_hat) + " <= delta=" + std::to_string(delta));
  add_check("form_bound_trials", viol <= kCertificateViolation,
            "worst relative violation " + std::to_string(viol) + " over " + std::to_string(kTrialCount) + " trials");
}

void Pipeline::mollify() {
  say("== mollify");
  const auto& cert = certificate();
  const double delta = cfg_.certificate_delta();
  std::vector<double> eps = cfg_.schedule;
  eps.insert(eps.end(), cfg_.schedule_b.begin(), cfg_.schedule_b.end());
  json rows = json::array();
  double worst = -std::numeric_limits<double>::infinity();
  for (double e : eps) {
    const VectorField be = mollify_drift(drift(), e);
    const double viol = verify_form_bound_relative(be, delta, cert.c, trials());
    worst = std::max(worst, viol);
    rows.push_back({{"eps", e},
                    {"l2_squared", drift_l2_squared(be)},
                    {"sup", drift_sup(be)},
                    {"morrey_norm", morrey_norm(be, cfg_.norm.morrey_eps, cfg_.norm.radii)},
                    {"trial_violation_relative", viol}});
    say("  eps=", e, "  ||b_eps||_2^2=", drift_l2_squared(be), "  violation=", viol);
  }
  write_json("mollify.json", {{"delta", delta}, {"c", cert.c}, {"members", rows}});
  add_check("mollified_certificate", worst <= kCertificateViolation,
            "parent (delta, c) holds for every b_eps; worst relative violation " + std::to_string(worst));
}

void Pipeline::solve_parent() {
  say("== solve");
  const ScalarField& f = initial();
  const Trajectory traj = solve(drift(), f, cfg_.solver);
  const auto& u_rows = traj.lambda == 0.0 ? traj.steps : traj.alt_steps;
  const double f_sup = lp_norm(f, std::numeric_limits<double>::infinity());
  double worst = 0.0;
  for (const auto& row : u_rows) worst = std::max(worst, row.sup);
  write_diagnostics_csv(out_ / "solve_diagnostics.csv", traj);
  write_field_binary(out_ / "solution_final.bin", traj.snapshots.back());
  write_json("solve.json", {{"lambda", traj.lambda},
                            {"dt", traj.dt},
                            {"scheme", scheme_name(traj.scheme)},
                            {"steps", traj.steps.size()},
                            {"final_time", traj.steps.back().t},
                            {"aborted", traj.aborted},
                            {"abort_reason", traj.abort_reason},
                            {"f_sup", f_sup},
                            {"max_u_sup", worst}});
  say("  steps=", traj.steps.size() - 1, " dt=", traj.dt, " max sup u=", worst, " (f: ", f_sup, ")");
  if (traj.aborted) add_check("solve_finite", false, traj.abort_reason);
  add_check("maximum_principle", worst <= f_sup + 1e-10, "sup_t ||u(t)||_inf <= ||f||_inf + 1e-10");
}

void Pipeline::verify() {
  say("== verify");
  const auto& cert = certificate();
  const double delta = cfg_.certificate_delta();
  const double c = cert.c;
  const ToleranceTier tier = cfg_.verifier.tier;
  const ScalarField& f = initial();
  SolverConfig sc = cfg_.solver;
  sc.p_list = cfg_.verifier.p_list;
  sc.lambda = c / std::sqrt(delta);

  std::vector<Trajectory> members;
  std::vector<std::string> labels;
  std::vector<double> drift_l2;
  std::vector<VerificationReport> reports;

  const auto t0 = std::chrono::steady_clock::now();
  if (selected("cauchy_convergence")) {
    CauchyOptions co;
    co.min_decay = cfg_.verifier.min_decay;
    co.parallel = parallel_;
    CauchyResult cr = check_cauchy_convergence(drift(), cfg_.schedule, cfg_.schedule_b, f, sc, tier, co);
    for (std::size_t i = 0; i < cr.members.size(); ++i) {
      const bool in_a = i < cfg_.schedule.size();
      labels.push_back(std::string(in_a ? "a" : "b") +
                       std::to_string(in_a ? i : i - cfg_.schedule.size()));
    }
    members = std::move(cr.members);
    drift_l2 = std::move(cr.member_drift_l2);
    add_check("cauchy_convergence", cr.report.passed, "dt=" + std::to_string(cr.dt));
    reports.push_back(std::move(cr.report));
  } else {
    std::vector<VectorField> drifts;
    double dt = sc.dt;
    for (double e : cfg_.schedule) {
      drifts.push_back(mollify_drift(drift(), e));
      dt = std::min({dt, cfl_dt_limit(drifts.back(), sc.cfl_safety),
                     cfl_dt_limit(dealiased_drift(drifts.back()), sc.cfl_safety)});
    }
    sc.dt = dt;
    for (std::size_t i = 0; i < drifts.size(); ++i) {
      members.push_back(solve(drifts[i], f, sc));
      labels.push_back("a" + std::to_string(i));
      drift_l2.push_back(drift_l2_squared(drifts[i]));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  say("  solved ", members.size(), " members in ", secs, " s");

  std::vector<Trajectory> u_members;
  for (const auto& m : members) u_members.push_back(unshift(m, m.lambda));

  std::map<std::string, bool> verdict;
  std::map<std::string, std::string> skipped;
  auto record = [&](VerificationReport rep, const std::string& id, const std::string& label) {
    rep.inequality_id = id + "[" + label + "]";
    auto [it, fresh] = verdict.emplace(id, true);
    it->second = it->second && rep.passed;
    (void)fresh;
    reports.push_back(std::move(rep));
  };

  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& u = u_members[i];
    const auto& label = labels[i];
    if (members[i].aborted) throw NumericalError("solve of member " + label + " aborted: " + members[i].abort_reason);
    write_diagnostics_csv(out_ / ("diagnostics_" + label + ".csv"), u);
    if (selected("orlicz_contraction")) record(check_orlicz_contraction(u, delta, c, tier), "orlicz_contraction", label);
    if (selected("cosh_energy")) record(check_cosh_energy(members[i], delta, c, tier), "cosh_energy", label);
    if (selected("lp_contraction")) {
      for (double p : cfg_.verifier.p_list) {
        const std::string id = "lp_contraction_p" + eps_label(p);
        if (delta >= 4.0) {
          skipped[id] = "no L^p quasi-contraction is claimed for delta >= 4";
        } else if (p < lp_threshold(delta)) {
          skipped[id] = "p below the threshold 2/(2 - sqrt(delta)) = " + std::to_string(lp_threshold(delta));
        } else {
          record(check_lp_contraction(u, p, delta, c, tier), id, label);
        }
      }
    }
    if (selected("exp_energy")) {
      for (double p : cfg_.verifier.p_list) {
        const std::string id = "exp_energy_p" + eps_label(p);
        if (p != std::round(p) || static_cast<long>(p) % 2 != 0) {
          skipped[id] = "the exponential energy is evaluated for even p only";
        } else if (delta > 4.0) {
          skipped[id] = "requires delta <= 4";
        } else {
          record(check_exp_energy(u, static_cast<int>(p), delta, c, tier), id, label);
        }
      }
    }
  }
  if (selected("gradient_bound")) {
    const double t_end = u_members.front().steps.back().t;
    double m = 0.0;
    for (double v : drift_l2) m = std::max(m, v);
    auto rep = check_gradient_bound(u_members, f, t_end * m, tier);
    verdict["gradient_bound"] = rep.passed;
    reports.push_back(std::move(rep));
  }

  for (const auto& [id, ok] : verdict) {
    add_check(id, ok, std::string(tier_name(tier)) + " tier, delta=" + std::to_string(delta) + ", c=" +
                          std::to_string(c));
  }
  for (const auto& [id, why] : skipped) {
    if (!verdict.count(id)) skip_check(id, why);
  }

  std::ofstream txt(out_ / "report.txt");
  for (const auto& r : reports) txt << report_text(r) << '\n';
  write_json("reports.json", json::parse(reports_json(reports)));
}

void Pipeline::sde() {
  say("== sde");
  SdeSpec spec = cfg_.sde.value_or(SdeSpec{});
  spec.config.seed = cfg_.seed;
  spec.config.threads = parallel_ ? std::max(1u, std::thread::hardware_concurrency()) : 1;
  const auto stats = delta_sweep(spec.config, spec.deltas);
  write_json("sde.json", json::parse(hitting_stats_json(stats)));

  if (log_) {
    *log_ << "  " << std::setw(10) << "delta" << std::setw(14) << "hit_fraction" << std::setw(26) << "95% CI"
          << std::setw(14) << "mean_time" << '\n';
    for (const auto& s : stats) {
      std::ostringstream ci;
      ci << "[" << std::setprecision(5) << s.ci_low << ", " << s.ci_high << "]";
      *log_ << "  " << std::setw(10) << s.delta << std::setw(14) << std::setprecision(5) << s.hit_fraction
            << std::setw(26) << ci.str() << std::setw(14) << s.mean_hit_time << '\n';
    }
  }
  std::vector<const HittingStats*> sorted;
  for (const auto& s : stats) sorted.push_back(&s);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->delta < b->delta; });
  bool monotone = true;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double allowance = sorted[i]->confidence_halfwidth + sorted[i - 1]->confidence_halfwidth;
    monotone = monotone && sorted[i]->hit_fraction >= sorted[i - 1]->hit_fraction - allowance;
  }
  bool stable = true;
  for (const auto& s : stats) stable = stable && !s.unstable;
  add_check("sde_monotone_in_delta", monotone, "adjacent drops within summed confidence halfwidths");
  add_check("sde_step_stability", stable, stable ? "" : "some step exceeded 10x its local scale; halve dt");
}

}  // namespace

RunResult run(Subcommand cmd, ExperimentConfig config, const RunOptions& options) {
  if (options.output_dir) config.output_dir = *options.output_dir;
  if (options.seed) config.seed = *options.seed;
  if (options.tier) config.verifier.tier = *options.tier;
  config.solver.p_list = config.verifier.p_list;
  validate_config(config);

  RunResult result;
  result.manifest.started_utc = utc_now();
  result.manifest.tool_version = kToolVersion;
  result.manifest.subcommand = subcommand_name(cmd);
  {
    std::ostringstream overrides;
    overrides << options.config_text << "\n# effective: seed=" << config.seed
              << " tier=" << tier_name(config.verifier.tier) << " output=" << config.output_dir.generic_string();
    result.manifest.config_sha256 = sha256_hex(overrides.str());
  }
  fs::create_directories(config.output_dir);
  result.output_dir = config.output_dir;
  if (!options.config_text.empty()) {
    std::ofstream(config.output_dir / "config.yaml") << options.config_text;
  }

  Pipeline pipe(config, options);
  auto stage = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const InvalidInput& e) {
      throw InvalidInput(std::string(name) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(name) + ": " + e.what());
    }
  };
  const bool all = cmd == Subcommand::all;
  if (all || cmd == Subcommand::norm) stage("norm", [&] { pipe.norm(); });
  if (all || cmd == Subcommand::formbound) stage("formbound", [&] { pipe.formbound(); });
  if (all || cmd == Subcommand::mollify) stage("mollify", [&] { pipe.mollify(); });
  if (all || cmd == Subcommand::solve) stage("solve", [&] { pipe.solve_parent(); });
  if (all || cmd == Subcommand::verify) stage("verify", [&] { pipe.verify(); });
  if (all || cmd == Subcommand::sde) stage("sde", [&] { pipe.sde(); });

  result.checks = std::move(pipe.checks);
  result.passed = std::all_of(result.checks.begin(), result.checks.end(), [](const auto& c) { return c.passed; });

  json summary;
  summary["subcommand"] = subcommand_name(cmd);
  summary["passed"] = result.passed;
  summary["seed"] = config.seed;
  summary["tier"] = tier_name(config.verifier.tier);
  summary["checks"] = json::array();
  for (const auto& c : result.checks) {
    json row{{"id", c.id}, {"passed", c.passed}, {"detail", c.detail}};
    if (!c.skipped_reason.empty()) row["skipped"] = c.skipped_reason;
    summary["checks"].push_back(row);
  }
  std::ofstream(config.output_dir / "summary.json") << summary.dump(2) << '\n';

  result.manifest.passed = result.passed;
  result.manifest.finished_utc = utc_now();
  result.manifest.files = scan_artifacts(config.output_dir);
  json m;
  m["config_sha256"] = result.manifest.config_sha256;
  m["tool_version"] = result.manifest.tool_version;
  m["subcommand"] = result.manifest.subcommand;
  m["started_utc"] = result.manifest.started_utc;
  m["finished_utc"] = result.manifest.finished_utc;
  m["passed"] = result.manifest.passed;
  m["files"] = json::array();
  for (const auto& f : result.manifest.files) {
    m["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }
  std::ofstream(config.output_dir / "manifest.json") << m.dump(2) << '\n';
  return result;
}

}  // namespace critdrift
