#pragma once
// Numerical checks of the a priori inequalities against solver trajectories.
//
// Every check produces a VerificationReport with one row per checkpoint
// (snapshot times of the trajectory) holding lhs, rhs and slack = rhs - lhs.
// A row passes when slack >= -tol_rel·|rhs|. Time integrals use the
// trapezoid rule over the per-step diagnostic rows.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "critdrift/evolution.hpp"
#include "critdrift/grid.hpp"

namespace critdrift {

enum class ToleranceTier { analytic, singular };

inline constexpr double kAnalyticTolerance = 1e-6;
inline constexpr double kSingularTolerance = 5e-2;

double tier_tolerance(ToleranceTier tier);
const char* tier_name(ToleranceTier tier);
ToleranceTier parse_tier(const std::string& name);

struct ReportRow {
  std::string label;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool passed = false;
};

struct RefinementLevel {
  std::string label;
  double worst_relative_slack = 0.0;
};

struct VerificationReport {
  std::string inequality_id;
  std::string statement;
  ToleranceTier tier = ToleranceTier::analytic;
  double tol_rel = kAnalyticTolerance;
  std::vector<ReportRow> rows;
  bool passed = false;
  /// Worst relative slack per refinement level, coarse to fine.
  std::vector<RefinementLevel> refinement_trend;
  /// Set when a level fails and the failures do not shrink monotonically.
  bool trend_flagged = false;
  /// Informational companion checks; they never change `passed`.
  std::vector<VerificationReport> auxiliary;
  /// Named scalars (thresholds, decay factors, constants used).
  std::vector<std::pair<std::string, double>> values;
  std::string message;

  void add_row(std::string label, double t, double lhs, double rhs);
  /// Recomputes every row's pass flag and the aggregate.
  void finalize();
  /// min over rows of slack / |rhs| (rows with rhs == 0 use slack itself).
  double worst_relative_slack() const;
  double value(const std::string& key) const;
};

/// Records refinement levels and sets trend_flagged per the refinement rule.
void attach_refinement(VerificationReport& report, std::vector<RefinementLevel> levels);

/// Trapezoid ∫_0^{steps[k].t} g ds for every k, g given per step.
std::vector<double> cumulative_trapezoid(const std::vector<Diagnostics>& steps,
                                         const std::function<double(const Diagnostics&)>& g);

/// ||u(t)||_Φ <= e^{2(c/√δ)t} ||f||_Φ; auxiliary row set with exponent c/√δ.
VerificationReport check_orlicz_contraction(const Trajectory& traj_u, double delta, double c_delta,
                                            ToleranceTier tier = ToleranceTier::analytic);

/// 2 / (2 - √δ), the smallest p for which the L^p quasi-contraction is claimed.
double lp_threshold(double delta);

/// ||u(t)||_p <= e^{(c/(p√δ))t} ||f||_p; rejects δ >= 4 or p below the threshold.
VerificationReport check_lp_contraction(const Trajectory& traj_u, double p, double delta, double c_delta,
                                        ToleranceTier tier = ToleranceTier::analytic);

/// (λ - c/√δ)∫<Φ(v)> + <Φ(v(t))> <= <Φ(f)> + (c/√δ)t; requires λ = c/√δ.
VerificationReport check_cosh_energy(const Trajectory& traj_v, double delta, double c_delta,
                                     ToleranceTier tier = ToleranceTier::analytic);

/// Per-time exponential energy inequality for even p:
///   <e^{u^p(t)}> + 4(p-1)/p ∫<|∇u^{p/2}|² e^{u^p}> + 2(2-√δ)∫<|∇e^{u^p/2}|²>
///     <= <e^{f^p}> + (c/√δ)∫<e^{u^p}>.
/// Auxiliary reports: the same with sup_s <e^{u^p(s)}> in place of the
/// first term, and the short-time corollary where (c/√δ)t < 1/2.
VerificationReport check_exp_energy(const Trajectory& traj_u, int p, double delta, double c_delta,
                                     ToleranceTier tier = ToleranceTier::analytic);

/// ∫_0^t <|∇v_n|²> <= ½||f||_2² + ½ C0 ||f||_∞² for every trajectory (final
/// time). Auxiliary: the bound ||f||_2² + C0||f||_∞² that the energy
/// argument yields before halving.
VerificationReport check_gradient_bound(const std::vector<Trajectory>& trajs, const ScalarField& f, double C0,
                                        ToleranceTier tier = ToleranceTier::analytic);

/// C0 = t · max_n ||b_n||_2² for time-independent drifts.
double gradient_budget(const std::vector<VectorField>& drifts, double t);

struct CauchyOptions {
  double min_decay = 1.5;
  /// Solve schedule members on worker threads.
  bool parallel = false;
};

struct CauchyResult {
  VerificationReport report;
  /// Diagnostics of every member (schedule_a then schedule_b), solved in the
  /// frame of config.lambda. Only the t = 0 field is kept in snapshots;
  /// times and snapshot_steps stay complete.
  std::vector<Trajectory> members;
  std::vector<double> member_eps;
  /// ||b_n||_2² of the drift each member was advected with.
  std::vector<double> member_drift_l2;
  /// The dt actually used (shared by all members).
  double dt = 0.0;
};

/// D_k = sup_t ||u_k(t) - u_{k+1}(t)||_Φ along each schedule must shrink by
/// min_decay per level; the finest members of the two schedules must differ
/// by no more than the smaller of the two last intra-schedule gaps. All
/// members share dt = min(config.dt, strictest CFL limit).
CauchyResult check_cauchy_convergence(const VectorField& b, const std::vector<double>& schedule_a,
                                      const std::vector<double>& schedule_b, const ScalarField& f,
                                      const SolverConfig& config, ToleranceTier tier = ToleranceTier::analytic,
                                      const CauchyOptions& options = {});

/// Machine-readable form of a report.
std::string report_json(const VerificationReport& report, int indent = 2);
std::string reports_json(const std::vector<VerificationReport>& reports, int indent = 2);
/// Aligned-column text table.
std::string report_text(const VerificationReport& report);

}  // namespace critdrift
