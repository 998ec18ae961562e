#pragma once
// Variational estimation of form bounds ||bφ||² <= δ||∇φ||² + c||φ||².
//
// For fixed c the smallest admissible δ is the supremum of the generalized
// Rayleigh quotient (<|b|²φ²> - c<φ²>) / <|∇φ|²> over trial functions φ that
// are not constant. The trial space is the band-limited grid functions (no
// Nyquist modes). The constant part of φ is eliminated exactly: writing
// φ = ψ + a with <ψ> = 0 and maximizing over a gives the operator
//   A ψ = P(mψ) - cψ + <mψ>/(c - <m>) · P m,     m = |b|²,
// whose top generalized eigenvalue against the Dirichlet form is δ̂(c).

#include <cstdint>
#include <optional>
#include <vector>

#include "critdrift/grid.hpp"

namespace critdrift {

enum class EigenMethod {
  lobpcg,  ///< locally optimal block (size 1) preconditioned CG
  power,   ///< inverse-L preconditioned power iteration, shift c/(4π²)
};

struct FormBoundOptions {
  EigenMethod method = EigenMethod::lobpcg;
  int max_iter = 5000;
  /// Stop once successive Rayleigh quotients differ by less than tol (relative).
  double tol = 1e-10;
  /// Seed of the noise added to the default starting vector.
  std::uint64_t seed = 20240917;
  /// Optional starting field, resampled onto the drift grid if needed.
  std::optional<ScalarField> initial;
};

struct FormBoundCertificate {
  explicit FormBoundCertificate(const TorusGrid& grid) : witness(grid) {}

  double c = 0.0;
  bool feasible = false;
  /// max(eigenvalue, 0); +inf when infeasible.
  double delta_hat = 0.0;
  /// The zeroth-order constant of the certificate (equals c).
  double c_delta = 0.0;
  /// Top generalized eigenvalue (may be negative when c is generous).
  double eigenvalue = 0.0;
  /// Maximizing trial function, constant part included.
  ScalarField witness;
  /// Relative change of the Rayleigh quotient in the last iteration.
  double residual = 0.0;
  /// ||Aψ - μLψ||_{L^{-1}} / (||ψ||_L max(|μ|, 1)) at the returned iterate.
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// One certificate per entry of c_values (same order). c below <|b|²> is
/// reported infeasible (φ ≡ 1 alone forces δ = ∞); so is c == <|b|²> unless
/// |b|² is constant.
std::vector<FormBoundCertificate> form_bound_estimate(const VectorField& b, const std::vector<double>& c_values,
                                                      const FormBoundOptions& options = {});

FormBoundCertificate form_bound_estimate(const VectorField& b, double c, const FormBoundOptions& options = {});

/// Smallest c (to relative accuracy c_rel_tol) with δ̂(c) <= delta_target, by
/// bisection; the returned certificate satisfies delta_hat <= delta_target.
FormBoundCertificate calibrate_form_bound(const VectorField& b, double delta_target, double c_rel_tol = 1e-3,
                                          const FormBoundOptions& options = {});

/// max over trials of ||bφ||² - δ||∇φ||² - c||φ||².
double verify_form_bound(const VectorField& b, double delta, double c_delta, const std::vector<ScalarField>& trials);

/// max over trials of (||bφ||² - δ||∇φ||² - c||φ||²) / ||bφ||².
double verify_form_bound_relative(const VectorField& b, double delta, double c_delta,
                                  const std::vector<ScalarField>& trials);

/// (||bφ||² - c||φ||²) / ||∇φ||² for one trial; +inf if ∇φ = 0 and the numerator is > 0.
double form_rayleigh_quotient(const VectorField& b, double c, const ScalarField& phi);

/// Seeded band-limited trial fields: half are random Fourier series with a
/// random power-law spectrum, half are Gaussian bumps of random width placed
/// near the origin, each plus a random constant.
std::vector<ScalarField> random_trial_fields(const TorusGrid& grid, int count, std::uint64_t seed);

}  // namespace critdrift
