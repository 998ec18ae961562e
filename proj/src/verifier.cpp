#include "critdrift/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "critdrift/drift.hpp"
#include "critdrift/error.hpp"
#include "critdrift/orlicz.hpp"

namespace critdrift {

double tier_tolerance(ToleranceTier tier) {
  return tier == ToleranceTier::analytic ? kAnalyticTolerance : kSingularTolerance;
}

const char* tier_name(ToleranceTier tier) { return tier == ToleranceTier::analytic ? "analytic" : "singular"; }

ToleranceTier parse_tier(const std::string& name) {
  if (name == "analytic") return ToleranceTier::analytic;
  if (name == "singular") return ToleranceTier::singular;
  throw InvalidInput("unknown tolerance tier '" + name + "' (expected analytic or singular)");
}

void VerificationReport::add_row(std::string label, double t, double lhs, double rhs) {
  ReportRow r;
  r.label = std::move(label);
  r.t = t;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  rows.push_back(std::move(r));
}

void VerificationReport::finalize() {
  passed = !rows.empty();
  for (auto& r : rows) {
    r.slack = r.rhs - r.lhs;
    // NaN slack fails; +inf rhs passes.
    r.passed = r.slack >= -tol_rel * std::abs(r.rhs) || (std::isinf(r.rhs) && r.rhs > 0.0 && !std::isnan(r.lhs));
    passed = passed && r.passed;
  }
}

double VerificationReport::worst_relative_slack() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    const double rel = r.rhs != 0.0 ? r.slack / std::abs(r.rhs) : r.slack;
    worst = std::min(worst, std::isnan(rel) ? -std::numeric_limits<double>::infinity() : rel);
  }
  return worst;
}

double VerificationReport::value(const std::string& key) const {
  for (const auto& [k, v] : values) {
    if (k == key) return v;
  }
  throw InvalidInput("report " + inequality_id + " has no value '" + key + "'");
}

void attach_refinement(VerificationReport& report, std::vector<RefinementLevel> levels) {
  bool any_fail = false;
  bool improving = true;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    any_fail = any_fail || levels[i].worst_relative_slack < -report.tol_rel;
    if (i > 0 && levels[i].worst_relative_slack < levels[i - 1].worst_relative_slack) improving = false;
  }
  report.refinement_trend = std::move(levels);
  report.trend_flagged = any_fail && !improving;
}

std::vector<double> cumulative_trapezoid(const std::vector<Diagnostics>& steps,
                                         const std::function<double(const Diagnostics&)>& g) {
  std::vector<double> out(steps.size(), 0.0);
  for (std::size_t k = 1; k < steps.size(); ++k) {
    out[k] = out[k - 1] + 0.5 * (steps[k].t - steps[k - 1].t) * (g(steps[k - 1]) + g(steps[k]));
  }
  return out;
}

namespace {

VerificationReport make_report(std::string id, std::string statement, ToleranceTier tier) {
  VerificationReport r;
  r.inequality_id = std::move(id);
  r.statement = std::move(statement);
  r.tier = tier;
  r.tol_rel = tier_tolerance(tier);
  return r;
}

void require_steps(const Trajectory& traj, const char* who) {
  if (traj.steps.empty() || traj.snapshot_steps.empty()) {
    throw InvalidInput(std::string(who) + ": trajectory has no diagnostics");
  }
}

void require_unshifted(const Trajectory& traj, const char* who) {
  if (traj.lambda != 0.0) {
    throw InvalidInput(std::string(who) + ": expects the unshifted solution u (call unshift first)");
  }
}

void require_constants(double delta, double c_delta, const char* who) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidInput(std::string(who) + ": delta must be > 0");
  if (!(c_delta >= 0.0) || !std::isfinite(c_delta)) throw InvalidInput(std::string(who) + ": c_delta must be >= 0");
}

std::string time_label(double t) {
  std::ostringstream s;
  s << "t=" << t;
  return s.str();
}

}  // namespace

VerificationReport check_orlicz_contraction(const Trajectory& traj_u, double delta, double c_delta,
                                            ToleranceTier tier) {
  require_steps(traj_u, "check_orlicz_contraction");
  require_unshifted(traj_u, "check_orlicz_contraction");
  require_constants(delta, c_delta, "check_orlicz_contraction");
  for (std::size_t k : traj_u.snapshot_steps) {
    if (std::isnan(traj_u.steps[k].orlicz)) {
      throw InvalidInput("check_orlicz_contraction: missing Orlicz diagnostics at a snapshot");
    }
  }
  const double g = c_delta / std::sqrt(delta);
  const double f_norm = traj_u.steps.front().orlicz;
  auto rep = make_report("orlicz_contraction", "||u(t)||_Phi <= exp(2 (c/sqrt(delta)) t) ||f||_Phi", tier);
  auto sharp = make_report("orlicz_contraction_sharp", "||u(t)||_Phi <= exp((c/sqrt(delta)) t) ||f||_Phi", tier);
  for (std::size_t k : traj_u.snapshot_steps) {
    const auto& d = traj_u.steps[k];
    rep.add_row(time_label(d.t), d.t, d.orlicz, std::exp(2.0 * g * d.t) * f_norm);
    sharp.add_row(time_label(d.t), d.t, d.orlicz, std::exp(g * d.t) * f_norm);
  }
  rep.values = {{"growth_rate", g}, {"delta", delta}, {"c_delta", c_delta}};
  sharp.finalize();
  rep.auxiliary.push_back(std::move(sharp));
  rep.finalize();
  return rep;
}

double lp_threshold(double delta) {
  if (!(delta > 0.0) || !(delta < 4.0)) throw InvalidInput("lp_threshold: requires 0 < delta < 4");
  return 2.0 / (2.0 - std::sqrt(delta));
}

VerificationReport check_lp_contraction(const Trajectory& traj_u, double p, double delta, double c_delta,
                                        ToleranceTier tier) {
  require_steps(traj_u, "check_lp_contraction");
  require_unshifted(traj_u, "check_lp_contraction");
  require_constants(delta, c_delta, "check_lp_contraction");
  if (!(delta < 4.0)) throw InvalidInput("check_lp_contraction: the L^p quasi-contraction needs delta < 4");
  const double threshold = lp_threshold(delta);
  if (!(p >= threshold * (1.0 - 1e-12))) {
    std::ostringstream msg;
    msg << "check_lp_contraction: p = " << p << " is below the threshold 2/(2 - sqrt(delta)) = " << threshold
        << " for delta = " << delta;
    throw InvalidInput(msg.str());
  }
  const std::size_t idx = traj_u.p_index(p);
  const double rate = c_delta / (p * std::sqrt(delta));
  const double f_norm = traj_u.steps.front().lp[idx];
  std::ostringstream st;
  st << "||u(t)||_" << p << " <= exp((c/(p sqrt(delta))) t) ||f||_" << p;
  auto rep = make_report("lp_contraction", st.str(), tier);
  for (std::size_t k : traj_u.snapshot_steps) {
    const auto& d = traj_u.steps[k];
    rep.add_row(time_label(d.t), d.t, d.lp[idx], std::exp(rate * d.t) * f_norm);
  }
  rep.values = {{"p", p}, {"threshold", threshold}, {"growth_rate", rate}, {"delta", delta}, {"c_delta", c_delta}};
  rep.finalize();
  return rep;
}

VerificationReport check_cosh_energy(const Trajectory& traj_v, double delta, double c_delta, ToleranceTier tier) {
  require_steps(traj_v, "check_cosh_energy");
  require_constants(delta, c_delta, "check_cosh_energy");
  const double g = c_delta / std::sqrt(delta);
  if (std::abs(traj_v.lambda - g) > 1e-9 * std::max(1.0, g)) {
    std::ostringstream msg;
    msg << "check_cosh_energy: trajectory shift lambda = " << traj_v.lambda << " differs from c/sqrt(delta) = " << g;
    throw InvalidInput(msg.str());
  }
  const auto integral = cumulative_trapezoid(traj_v.steps, [](const Diagnostics& d) { return d.modular; });
  const double f_mod = traj_v.steps.front().modular;
  auto rep = make_report("cosh_energy",
                         "(lambda - c/sqrt(delta)) int <cosh v - 1> + <cosh v(t) - 1> <= <cosh f - 1> + (c/sqrt(delta)) t",
                         tier);
  for (std::size_t k : traj_v.snapshot_steps) {
    const auto& d = traj_v.steps[k];
    rep.add_row(time_label(d.t), d.t, (traj_v.lambda - g) * integral[k] + d.modular, f_mod + g * d.t);
  }
  rep.values = {{"lambda", traj_v.lambda}, {"growth_rate", g}, {"delta", delta}, {"c_delta", c_delta}};
  rep.finalize();
  return rep;
}

VerificationReport check_exp_energy(const Trajectory& traj_u, int p, double delta, double c_delta,
                                     ToleranceTier tier) {
  require_steps(traj_u, "check_exp_energy");
  require_unshifted(traj_u, "check_exp_energy");
  require_constants(delta, c_delta, "check_exp_energy");
  if (p < 2 || p % 2 != 0) throw InvalidInput("check_exp_energy: p must be an even integer >= 2");
  if (delta > 4.0) throw InvalidInput("check_exp_energy: the energy inequality is stated for delta <= 4");
  const std::size_t idx = traj_u.p_index(static_cast<double>(p));
  for (const auto& d : traj_u.steps) {
    if (!std::isfinite(d.exp_weight[idx]) || !std::isfinite(d.exp_gradient[idx]) ||
        !std::isfinite(d.weighted_gradient[idx])) {
      throw InvalidInput("check_exp_energy: e^{u^p} overflowed; rescale f so that ||f||_inf^p stays well below 700");
    }
  }
  const double g = c_delta / std::sqrt(delta);
  const double c2 = 4.0 * (p - 1.0) / p;
  const double c3 = 2.0 * (2.0 - std::sqrt(delta));
  const auto w_int =
      cumulative_trapezoid(traj_u.steps, [idx](const Diagnostics& d) { return d.weighted_gradient[idx]; });
  const auto g_int = cumulative_trapezoid(traj_u.steps, [idx](const Diagnostics& d) { return d.exp_gradient[idx]; });
  const auto e_int = cumulative_trapezoid(traj_u.steps, [idx](const Diagnostics& d) { return d.exp_weight[idx]; });
  std::vector<double> running_sup(traj_u.steps.size());
  double sup = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj_u.steps.size(); ++k) {
    sup = std::max(sup, traj_u.steps[k].exp_weight[idx]);
    running_sup[k] = sup;
  }
  const double e0 = traj_u.steps.front().exp_weight[idx];

  std::ostringstream st;
  st << "<e^{u^" << p << "(t)}> + " << c2 << " int <|grad u^{p/2}|^2 e^{u^p}> + " << c3
     << " int <|grad e^{u^p/2}|^2> <= <e^{f^p}> + (c/sqrt(delta)) int <e^{u^p}>";
  auto rep = make_report("exp_energy_p" + std::to_string(p), st.str(), tier);
  auto sup_form = make_report("exp_energy_supform_p" + std::to_string(p),
                              "same inequality with sup_{s<=t} <e^{u^p(s)}> as the first term", tier);
  auto corollary = make_report("exp_energy_corollary_p" + std::to_string(p),
                               "1/2 sup_{s<=t} <e^{u^p(s)}> + 4(p-1)/p int <|grad u^{p/2}|^2 e^{u^p}> <= <e^{f^p}>, "
                               "rows with (c/sqrt(delta)) t < 1/2",
                               tier);
  for (std::size_t k : traj_u.snapshot_steps) {
    const auto& d = traj_u.steps[k];
    const double grad_terms = c2 * w_int[k] + c3 * g_int[k];
    const double rhs = e0 + g * e_int[k];
    rep.add_row(time_label(d.t), d.t, d.exp_weight[idx] + grad_terms, rhs);
    sup_form.add_row(time_label(d.t), d.t, running_sup[k] + grad_terms, rhs);
    if (g * d.t < 0.5) corollary.add_row(time_label(d.t), d.t, 0.5 * running_sup[k] + c2 * w_int[k], e0);
  }
  rep.values = {{"p", static_cast<double>(p)},     {"coefficient_dispersion", c2}, {"coefficient_third", c3},
                {"growth_rate", g},                {"delta", delta},               {"c_delta", c_delta}};
  sup_form.finalize();
  corollary.finalize();
  rep.auxiliary.push_back(std::move(sup_form));
  rep.auxiliary.push_back(std::move(corollary));
  rep.finalize();
  return rep;
}

VerificationReport check_gradient_bound(const std::vector<Trajectory>& trajs, const ScalarField& f, double C0,
                                        ToleranceTier tier) {
  if (trajs.empty()) throw InvalidInput("check_gradient_bound: no trajectories");
  if (!(C0 >= 0.0) || !std::isfinite(C0)) throw InvalidInput("check_gradient_bound: C0 must be >= 0");
  for (const auto& tr : trajs) {
    require_steps(tr, "check_gradient_bound");
    if (tr.snapshots.empty() || !(tr.snapshots.front().grid() == f.grid()) ||
        !std::equal(tr.snapshots.front().values().begin(), tr.snapshots.front().values().end(), f.values().begin())) {
      throw InvalidInput("check_gradient_bound: trajectories do not share the initial datum f");
    }
  }
  const double l2sq = inner(f, f);
  const double sup = lp_norm(f, std::numeric_limits<double>::infinity());
  const double rhs = 0.5 * l2sq + 0.5 * C0 * sup * sup;
  const double rhs_full = l2sq + C0 * sup * sup;
  auto rep = make_report("gradient_bound", "int_0^t <|grad v_n|^2> <= 1/2 ||f||_2^2 + 1/2 C0 ||f||_inf^2", tier);
  auto full = make_report("gradient_bound_unhalved", "int_0^t <|grad v_n|^2> <= ||f||_2^2 + C0 ||f||_inf^2", tier);
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto integral = cumulative_trapezoid(trajs[i].steps, [](const Diagnostics& d) { return d.dirichlet; });
    const double t = trajs[i].steps.back().t;
    rep.add_row("member " + std::to_string(i), t, integral.back(), rhs);
    full.add_row("member " + std::to_string(i), t, integral.back(), rhs_full);
  }
  rep.values = {{"C0", C0}, {"f_l2_squared", l2sq}, {"f_sup", sup}};
  full.finalize();
  rep.auxiliary.push_back(std::move(full));
  rep.finalize();
  return rep;
}

double gradient_budget(const std::vector<VectorField>& drifts, double t) {
  if (!(t >= 0.0)) throw InvalidInput("gradient_budget: t must be >= 0");
  double m = 0.0;
  for (const auto& b : drifts) m = std::max(m, drift_l2_squared(b));
  return t * m;
}

namespace {

void validate_schedule(const std::vector<double>& s, const char* name) {
  if (s.size() < 2) throw InvalidInput(std::string("check_cauchy_convergence: ") + name + " needs >= 2 members");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0) || !std::isfinite(s[i])) {
      throw InvalidInput(std::string("check_cauchy_convergence: ") + name + " entries must be > 0");
    }
    if (i > 0 && !(s[i] < s[i - 1])) {
      throw InvalidInput(std::string("check_cauchy_convergence: ") + name + " must be strictly decreasing");
    }
  }
}

/// sup over shared checkpoints of e^{λt} ||v_a(t) - v_b(t)||_Φ.
double sup_distance(const Trajectory& a, const Trajectory& b) {
  if (a.snapshots.size() != b.snapshots.size()) throw NumericalError("cauchy: members have different checkpoints");
  double worst = 0.0;
  for (std::size_t j = 0; j < a.snapshots.size(); ++j) {
    ScalarField diff = a.snapshots[j] - b.snapshots[j];
    const double nrm = orlicz_norm(diff, a.orlicz_tol).value * std::exp(a.lambda * a.times[j]);
    worst = std::max(worst, nrm);
  }
  return worst;
}

std::string eps_label(const char* sched, double e1, double e2) {
  std::ostringstream s;
  s << sched << ": eps " << e1 << " -> " << e2;
  return s.str();
}

}  // namespace

CauchyResult check_cauchy_convergence(const VectorField& b, const std::vector<double>& schedule_a,
                                      const std::vector<double>& schedule_b, const ScalarField& f,
                                      const SolverConfig& config, ToleranceTier tier, const CauchyOptions& options) {
  validate_schedule(schedule_a, "schedule_a");
  validate_schedule(schedule_b, "schedule_b");
  if (!(b.grid() == f.grid())) throw InvalidInput("check_cauchy_convergence: drift and datum grids differ");
  if (!(options.min_decay > 1.0)) throw InvalidInput("check_cauchy_convergence: min_decay must be > 1");

  CauchyResult result;
  result.member_eps = schedule_a;
  result.member_eps.insert(result.member_eps.end(), schedule_b.begin(), schedule_b.end());

  std::vector<VectorField> drifts;
  double dt = config.dt;
  for (double eps : result.member_eps) {
    drifts.push_back(mollify_drift(b, eps));
    result.member_drift_l2.push_back(drift_l2_squared(drifts.back()));
    dt = std::min({dt, cfl_dt_limit(drifts.back(), config.cfl_safety),
                   cfl_dt_limit(dealiased_drift(drifts.back()), config.cfl_safety)});
  }
  SolverConfig cfg = config;
  cfg.dt = dt;
  result.dt = dt;

  std::vector<Trajectory> trajs(drifts.size());
  if (options.parallel) {
    std::vector<std::future<Trajectory>> jobs;
    for (const auto& d : drifts) jobs.push_back(std::async(std::launch::async, [&d, &f, &cfg] { return solve(d, f, cfg); }));
    for (std::size_t i = 0; i < jobs.size(); ++i) trajs[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < drifts.size(); ++i) trajs[i] = solve(drifts[i], f, cfg);
  }
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    if (trajs[i].aborted) {
      throw NumericalError("check_cauchy_convergence: member eps = " + std::to_string(result.member_eps[i]) +
                           " failed: " + trajs[i].abort_reason);
    }
  }

  const std::size_t na = schedule_a.size();
  const std::size_t nb = schedule_b.size();
  std::vector<double> da, db;
  for (std::size_t k = 0; k + 1 < na; ++k) da.push_back(sup_distance(trajs[k], trajs[k + 1]));
  for (std::size_t k = 0; k + 1 < nb; ++k) db.push_back(sup_distance(trajs[na + k], trajs[na + k + 1]));
  const double cross = sup_distance(trajs[na - 1], trajs[na + nb - 1]);

  auto rep = make_report("cauchy_convergence",
                         "D_k = sup_t ||u_k - u_{k+1}||_Phi shrinks by min_decay per level; finest members of the "
                         "two schedules within the last intra-schedule gap",
                         tier);
  auto add_levels = [&](const char* name, const std::vector<double>& sched, const std::vector<double>& d) {
    for (std::size_t k = 0; k < d.size(); ++k) {
      rep.values.emplace_back(std::string(name) + "_D" + std::to_string(k), d[k]);
      if (k > 0) {
        rep.add_row(eps_label(name, sched[k], sched[k + 1]), static_cast<double>(k), d[k], d[k - 1] / options.min_decay);
        rep.values.emplace_back(std::string(name) + "_decay" + std::to_string(k),
                                d[k] > 0.0 ? d[k - 1] / d[k] : std::numeric_limits<double>::infinity());
      }
    }
  };
  add_levels("a", schedule_a, da);
  add_levels("b", schedule_b, db);
  rep.add_row("cross: finest a vs finest b", 0.0, cross, std::min(da.back(), db.back()));
  rep.values.emplace_back("cross_distance", cross);
  rep.values.emplace_back("dt", dt);
  rep.finalize();
  result.report = std::move(rep);

  for (auto& tr : trajs) tr.snapshots.erase(tr.snapshots.begin() + 1, tr.snapshots.end());
  result.members = std::move(trajs);
  return result;
}

namespace {

nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json j;
  j["inequality_id"] = r.inequality_id;
  j["statement"] = r.statement;
  j["tier"] = tier_name(r.tier);
  j["tol_rel"] = r.tol_rel;
  j["passed"] = r.passed;
  j["worst_relative_slack"] = r.worst_relative_slack();
  auto rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"label", row.label},
                    {"t", row.t},
                    {"lhs", row.lhs},
                    {"rhs", row.rhs},
                    {"slack", row.slack},
                    {"passed", row.passed}});
  }
  j["rows"] = std::move(rows);
  auto trend = nlohmann::json::array();
  for (const auto& lv : r.refinement_trend) {
    trend.push_back({{"label", lv.label}, {"worst_relative_slack", lv.worst_relative_slack}});
  }
  j["refinement_trend"] = std::move(trend);
  j["trend_flagged"] = r.trend_flagged;
  auto values = nlohmann::json::object();
  for (const auto& [k, v] : r.values) values[k] = v;
  j["values"] = std::move(values);
  auto aux = nlohmann::json::array();
  for (const auto& a : r.auxiliary) aux.push_back(to_json(a));
  j["auxiliary"] = std::move(aux);
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

}  // namespace

std::string report_json(const VerificationReport& report, int indent) { return to_json(report).dump(indent); }

std::string reports_json(const std::vector<VerificationReport>& reports, int indent) {
  auto arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr.dump(indent);
}

std::string report_text(const VerificationReport& report) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s [%s, tol %.0e] %s\n", report.inequality_id.c_str(), tier_name(report.tier),
                report.tol_rel, report.passed ? "PASS" : "FAIL");
  out << buf << "  " << report.statement << '\n';
  std::snprintf(buf, sizeof buf, "  %-34s %12s %16s %16s %14s %4s\n", "row", "t", "lhs", "rhs", "slack", "ok");
  out << buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "  %-34s %12.6g %16.9g %16.9g %14.6e %4s\n", r.label.c_str(), r.t, r.lhs, r.rhs,
                  r.slack, r.passed ? "yes" : "NO");
    out << buf;
  }
  for (const auto& [k, v] : report.values) {
    std::snprintf(buf, sizeof buf, "  %-34s %.9g\n", k.c_str(), v);
    out << buf;
  }
  for (const auto& lv : report.refinement_trend) {
    std::snprintf(buf, sizeof buf, "  refinement %-23s worst relative slack %.6e\n", lv.label.c_str(),
                  lv.worst_relative_slack);
    out << buf;
  }
  if (report.trend_flagged) out << "  FLAGGED: failures do not shrink under refinement\n";
  if (!report.message.empty()) out << "  note: " << report.message << '\n';
  for (const auto& a : report.auxiliary) {
    std::istringstream sub(report_text(a));
    std::string line;
    out << "  (auxiliary)\n";
    while (std::getline(sub, line)) out << "    " << line << '\n';
  }
  return out.str();
}

}  // namespace critdrift
