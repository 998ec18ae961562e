#pragma once
// Integrating-factor pseudospectral solver for
//   (λ + ∂t - Δ + b·∇) v = 0  on the torus,
// with per-step diagnostics. With λ > 0 the solver returns the shifted
// solution v = u e^{-λt}; unshift() converts back to u.

#include <filesystem>
#include <string>
#include <vector>

#include "critdrift/grid.hpp"

namespace critdrift {

enum class Scheme {
  if_rk2,    ///< Heun in the integrating-factor frame (second order)
  if_euler,  ///< forward Euler in the integrating-factor frame (first order)
  if_rk4,    ///< classical RK4 in the integrating-factor frame (fourth order)
};

struct SolverConfig {
  double dt = 1e-4;
  double t_final = 0.1;
  double lambda = 0.0;
  /// Full fields are stored every snapshot_stride steps (and at t_final).
  int snapshot_stride = 50;
  Scheme scheme = Scheme::if_rk2;
  /// dt must not exceed cfl_safety · h / max|b|.
  double cfl_safety = 0.5;
  /// Exponents for the L^p columns; even integers also get exp-weight columns.
  std::vector<double> p_list = {2.0, 4.0};
  /// Luxemburg-norm tolerance for the Orlicz column.
  double orlicz_tol = 1e-10;
  /// The Orlicz column is filled at snapshot rows only (NaN elsewhere) unless
  /// this is set; every other column is filled on every row.
  bool orlicz_every_step = false;
};

/// Diagnostics of one field w (either v or u) at one time.
struct Diagnostics {
  double t = 0.0;
  double sup = 0.0;
  std::vector<double> lp;  ///< ||w||_p per p_list entry
  double orlicz = 0.0;     ///< ||w||_Φ (NaN on rows where it was not evaluated)
  double modular = 0.0;    ///< <cosh(w) - 1>
  double dirichlet = 0.0;  ///< <|∇w|²>
  // Per p_list entry; NaN unless p is an even integer.
  std::vector<double> exp_weight;         ///< <e^{w^p}>
  std::vector<double> exp_gradient;       ///< <|∇ e^{w^p/2}|²>
  std::vector<double> weighted_gradient;  ///< <|∇ w^{p/2}|² e^{w^p}>
};

struct Trajectory {
  /// The stored fields are u e^{-lambda t}; lambda == 0 means the unshifted u.
  double lambda = 0.0;
  std::vector<double> p_list;
  double dt = 0.0;
  Scheme scheme = Scheme::if_rk2;
  double orlicz_tol = 1e-10;

  /// One row per time step, starting at t = 0.
  std::vector<Diagnostics> steps;
  /// Same rows for the frame with shift alt_lambda (empty if not tracked).
  std::vector<Diagnostics> alt_steps;
  double alt_lambda = 0.0;

  /// Snapshot times, the stored fields and their row indices into steps.
  std::vector<double> times;
  std::vector<ScalarField> snapshots;
  std::vector<std::size_t> snapshot_steps;

  bool aborted = false;
  std::string abort_reason;

  /// Index into p_list, or throws if p is not listed.
  std::size_t p_index(double p) const;
};

/// Largest admissible dt for drift b under the CFL rule.
double cfl_dt_limit(const VectorField& b, double cfl_safety);

/// Drift as seen by the stepper: every component truncated to the 2/3 band.
VectorField dealiased_drift(const VectorField& b);

/// Diagnostics of s·w at time t, given w and its gradient.
Diagnostics compute_diagnostics(const ScalarField& w, const VectorField& grad_w, double s, double t,
                                const std::vector<double>& p_list, double orlicz_tol);

/// Evolves f under drift b. Rejects a CFL violation before stepping. If a
/// non-finite value appears mid-run the trajectory ends at the last valid
/// step with aborted = true.
Trajectory solve(const VectorField& b, const ScalarField& f, const SolverConfig& config);

/// Multiplies every snapshot at time t by e^{lambda t} and returns the
/// trajectory in the frame with shift (traj.lambda - lambda). Per-step rows
/// carry over exactly when traj tracks that frame in alt_steps; otherwise the
/// rows are recomputed from the snapshots (one row per snapshot).
Trajectory unshift(const Trajectory& traj, double lambda);

/// One CSV row per step: t, sup, l<p>..., orlicz, modular, dirichlet, then
/// exp_weight_p<p>, exp_gradient_p<p>, weighted_gradient_p<p> per even p.
void write_diagnostics_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace critdrift
