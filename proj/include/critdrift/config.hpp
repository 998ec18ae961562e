#pragma once
// Experiment configuration: one YAML file per experiment. Parse errors carry
// the line and the dotted field path of the offending entry.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "critdrift/drift.hpp"
#include "critdrift/error.hpp"
#include "critdrift/evolution.hpp"
#include "critdrift/form_bound.hpp"
#include "critdrift/sde.hpp"
#include "critdrift/verifier.hpp"

namespace critdrift {

class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& field, int line, const std::string& what);
  const std::string& field() const { return field_; }
  /// The message without the position prefix.
  const std::string& reason() const { return reason_; }
  /// 1-based; 0 when the position is unknown.
  int line() const { return line_; }

 private:
  std::string field_;
  std::string reason_;
  int line_;
};

/// Initial datum f of the evolution.
struct InitialSpec {
  enum class Kind { gaussian, constant, trig, file };
  Kind kind = Kind::gaussian;
  double amplitude = 1.0;
  /// Gaussian standard deviation.
  double width = 0.1;
  /// Empty means the origin.
  std::vector<double> center;
  /// Wavevector for the trig kind: amplitude · sin(2π k·x).
  std::vector<int> wavevector;
  std::filesystem::path path;
};

struct CertificateSpec {
  /// Form-bound target δ; defaults to the Hardy δ, else 4.
  std::optional<double> delta;
  /// Explicit c; when absent c is calibrated as the smallest c with δ̂(c) <= δ.
  std::optional<double> c;
  double c_rel_tol = 1e-3;
  EigenMethod method = EigenMethod::lobpcg;
};

inline const std::vector<std::string>& known_check_ids() {
  static const std::vector<std::string> ids = {"orlicz_contraction", "lp_contraction",  "cosh_energy",
                                               "exp_energy",         "gradient_bound", "cauchy_convergence"};
  return ids;
}

struct VerifierSpec {
  std::vector<std::string> checks = known_check_ids();
  ToleranceTier tier = ToleranceTier::singular;
  std::vector<double> p_list = {2.0, 4.0};
  double min_decay = 1.5;
};

struct NormSpec {
  double morrey_eps = 0.5;
  std::vector<double> radii = {0.02, 0.05, 0.1, 0.2};
};

struct SdeSpec {
  SdeConfig config;
  std::vector<double> deltas = {0.5, 4.0, 36.0, 100.0};
};

struct ExperimentConfig {
  int dim = 3;
  int n = 64;
  DriftSpec drift{HardyDrift{}};
  CertificateSpec certificate;
  InitialSpec initial;
  /// Strictly decreasing mollification parameters; the second schedule is
  /// the interleaved one used by the Cauchy check (may be empty otherwise).
  std::vector<double> schedule = {1e-2, 2.5e-3, 6.25e-4, 1.5625e-4};
  std::vector<double> schedule_b = {5e-3, 1.25e-3, 3.125e-4, 7.8125e-5};
  SolverConfig solver;
  VerifierSpec verifier;
  NormSpec norm;
  std::optional<SdeSpec> sde;
  std::filesystem::path output_dir = "critdrift-out";
  std::uint64_t seed = 20240917;

  /// δ used by the certificate and the checks.
  double certificate_delta() const;
};

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Commented template holding every field at its default value.
std::string config_template();

/// Cross-field checks (schedules, ids, grid); throws ConfigError.
void validate_config(const ExperimentConfig& config);

ScalarField build_initial(const InitialSpec& spec, const TorusGrid& grid);

const char* scheme_name(Scheme scheme);

}  // namespace critdrift
