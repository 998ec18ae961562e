#include "critdrift/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "critdrift/drift.hpp"
#include "critdrift/error.hpp"
#include "critdrift/orlicz.hpp"
#include "critdrift/simd.hpp"
#include "critdrift/spectral.hpp"

namespace critdrift {
namespace {

using Complex = Spectral::Complex;
using Spec = std::vector<Complex>;

constexpr double kFourPi2 = 4.0 * std::numbers::pi * std::numbers::pi;

double* raw(Spec& z) { return reinterpret_cast<double*>(z.data()); }
const double* raw(const Spec& z) { return reinterpret_cast<const double*>(z.data()); }

bool is_even_integer(double p) { return std::isfinite(p) && p >= 2.0 && p == std::floor(p) && std::fmod(p, 2.0) == 0.0; }

/// Real-space field and gradient from a spectrum.
void real_and_gradient(Spectral& sp, const Spec& vhat, ScalarField& v, VectorField& grad, Spec& tmp) {
  const auto& k = simd::kernels();
  sp.inverse(vhat, v.values());
  for (int a = 0; a < v.grid().dim(); ++a) {
    k.scale_complex_imag(raw(vhat), sp.derivative_symbol(a).data(), raw(tmp), tmp.size());
    sp.inverse(tmp, grad[a].values());
  }
}

/// orlicz_override replaces the Orlicz column unless NaN; skip_orlicz leaves it NaN.
Diagnostics diagnostics_impl(const ScalarField& w, const VectorField& grad, double s, double t,
                             const std::vector<double>& p_list, double orlicz_tol, double orlicz_override,
                             bool skip_orlicz = false) {
  const auto& k = simd::kernels();
  const std::size_t n = w.size();
  const double wq = w.grid().weight();
  const double* wv = w.values().data();
  Diagnostics d;
  d.t = t;
  d.sup = s * k.max_abs(wv, n);
  for (double p : p_list) d.lp.push_back(s * lp_norm(w, p));
  d.orlicz = std::isnan(orlicz_override) && !skip_orlicz ? s * orlicz_norm(w, orlicz_tol).value : orlicz_override;
  d.modular = k.phi_sum(wv, n, s) * wq;

  std::vector<double> g2(n, 0.0);
  for (int a = 0; a < grad.dim(); ++a) {
    const double* ga = grad[a].values().data();
    k.mul_add(ga, ga, g2.data(), n);
  }
  d.dirichlet = s * s * k.sum(g2.data(), n) * wq;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> up(n), e(n), q(n);
  for (double p : p_list) {
    if (!is_even_integer(p)) {
      d.exp_weight.push_back(nan);
      d.exp_gradient.push_back(nan);
      d.weighted_gradient.push_back(nan);
      continue;
    }
    const int ip = static_cast<int>(p);
    const double c2 = 0.25 * p * p * s * s;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = s * wv[j];
      double xm2 = 1.0;  // x^{p-2}
      for (int i = 0; i < ip - 2; ++i) xm2 *= x;
      up[j] = xm2 * x * x;
      q[j] = c2 * xm2 * g2[j];
    }
    k.exp(up.data(), e.data(), n);
    d.exp_weight.push_back(k.sum(e.data(), n) * wq);
    // |∇ w^{p/2}|² e^{w^p} = (p/2)² w^{p-2} |∇w|² e^{w^p}; times w^p gives |∇ e^{w^p/2}|².
    d.weighted_gradient.push_back(k.dot(q.data(), e.data(), n) * wq);
    d.exp_gradient.push_back(k.dot3(q.data(), e.data(), up.data(), n) * wq);
  }
  return d;
}

class Stepper {
 public:
  Stepper(const VectorField& b, double dt, double lambda, Scheme scheme)
      : sp_(spectral_engine(b.grid())), b_(b), dt_(dt), scheme_(scheme), tmp_(b.grid()), acc_(b.grid()) {
    const auto k2 = sp_.k_squared();
    const auto mask = sp_.dealias_mask();
    const std::size_t ns = sp_.spectrum_size();
    e_full_.resize(ns);
    e_half_.resize(ns);
    neg_mask_.resize(ns);
    for (std::size_t i = 0; i < ns; ++i) {
      const double rate = kFourPi2 * k2[i] + lambda;
      e_full_[i] = std::exp(-rate * dt);
      e_half_[i] = std::exp(-0.5 * rate * dt);
      neg_mask_[i] = -mask[i];
    }
    for (int a = 0; a < b.dim(); ++a) {
      const auto da = sp_.derivative_symbol(a);
      std::vector<double> m(ns);
      for (std::size_t i = 0; i < ns; ++i) m[i] = da[i] * mask[i];
      dmask_.push_back(std::move(m));
    }
    zs_ = sp_.make_spectrum();
    k1_ = sp_.make_spectrum();
    k2_ = sp_.make_spectrum();
    k3_ = sp_.make_spectrum();
    k4_ = sp_.make_spectrum();
    y_ = sp_.make_spectrum();
  }

  /// out = -P(b · ∇(P v)) with P the 2/3 truncation.
  void advection(const Spec& v, Spec& out) {
    const auto& k = simd::kernels();
    std::fill(acc_.values().begin(), acc_.values().end(), 0.0);
    for (int a = 0; a < b_.dim(); ++a) {
      k.scale_complex_imag(raw(v), dmask_[static_cast<std::size_t>(a)].data(), raw(zs_), zs_.size());
      sp_.inverse(zs_, tmp_.values());
      k.mul_add(b_[a].values().data(), tmp_.values().data(), acc_.values().data(), acc_.size());
    }
    sp_.forward(acc_.values(), out);
    k.scale_complex(raw(out), neg_mask_.data(), out.size());
  }

  void step(Spec& v) {
    const std::size_t ns = v.size();
    const double dt = dt_;
    switch (scheme_) {
      case Scheme::if_euler:
        advection(v, k1_);
        for (std::size_t i = 0; i < ns; ++i) v[i] = e_full_[i] * (v[i] + dt * k1_[i]);
        break;
      case Scheme::if_rk2:
        advection(v, k1_);
        for (std::size_t i = 0; i < ns; ++i) y_[i] = e_full_[i] * (v[i] + dt * k1_[i]);
        advection(y_, k2_);
        for (std::size_t i = 0; i < ns; ++i) v[i] = e_full_[i] * (v[i] + 0.5 * dt * k1_[i]) + 0.5 * dt * k2_[i];
        break;
      case Scheme::if_rk4:
        advection(v, k1_);
        for (std::size_t i = 0; i < ns; ++i) y_[i] = e_half_[i] * (v[i] + 0.5 * dt * k1_[i]);
        advection(y_, k2_);
        for (std::size_t i = 0; i < ns; ++i) y_[i] = e_half_[i] * v[i] + 0.5 * dt * k2_[i];
        advection(y_, k3_);
        for (std::size_t i = 0; i < ns; ++i) y_[i] = e_full_[i] * v[i] + dt * e_half_[i] * k3_[i];
        advection(y_, k4_);
        for (std::size_t i = 0; i < ns; ++i) {
          v[i] = e_full_[i] * (v[i] + dt / 6.0 * k1_[i]) + dt / 3.0 * e_half_[i] * (k2_[i] + k3_[i]) +
                 dt / 6.0 * k4_[i];
        }
        break;
    }
  }

 private:
  Spectral& sp_;
  const VectorField& b_;
  double dt_;
  Scheme scheme_;
  ScalarField tmp_;
  ScalarField acc_;
  std::vector<double> e_full_, e_half_, neg_mask_;
  std::vector<std::vector<double>> dmask_;
  Spec zs_, k1_, k2_, k3_, k4_, y_;
};

void validate(const VectorField& b, const ScalarField& f, const SolverConfig& c) {
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw InvalidInput("solver: dt must be > 0");
  if (!(c.t_final > 0.0) || !std::isfinite(c.t_final)) throw InvalidInput("solver: t_final must be > 0");
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) throw InvalidInput("solver: lambda must be >= 0");
  if (c.snapshot_stride < 1) throw InvalidInput("solver: snapshot_stride must be >= 1");
  if (!(c.cfl_safety > 0.0)) throw InvalidInput("solver: cfl_safety must be > 0");
  if (!(c.orlicz_tol > 0.0)) throw InvalidInput("solver: orlicz_tol must be > 0");
  for (double p : c.p_list) {
    if (std::isnan(p) || p < 1.0) throw InvalidInput("solver: p_list entries must be >= 1");
  }
  if (!(b.grid() == f.grid())) throw InvalidInput("solver: drift and initial datum live on different grids");
  if (!f.all_finite()) throw InvalidInput("solver: initial datum has non-finite values");
  if (!b.all_finite()) throw InvalidInput("solver: drift has non-finite values");
}

}  // namespace

std::size_t Trajectory::p_index(double p) const {
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    if (p_list[i] == p) return i;
  }
  std::ostringstream msg;
  msg << "trajectory has no diagnostics for p = " << p;
  throw InvalidInput(msg.str());
}

double cfl_dt_limit(const VectorField& b, double cfl_safety) {
  const double bmax = drift_sup(b);
  if (bmax == 0.0) return std::numeric_limits<double>::infinity();
  return cfl_safety * b.grid().spacing() / bmax;
}

VectorField dealiased_drift(const VectorField& b) {
  auto& sp = spectral_engine(b.grid());
  auto spec = sp.make_spectrum();
  std::vector<ScalarField> comps;
  for (int a = 0; a < b.dim(); ++a) {
    sp.forward(b[a].values(), spec);
    Spectral::multiply(spec, sp.dealias_mask());
    ScalarField c(b.grid());
    sp.inverse(spec, c.values());
    comps.push_back(std::move(c));
  }
  return VectorField(std::move(comps));
}

Diagnostics compute_diagnostics(const ScalarField& w, const VectorField& grad_w, double s, double t,
                                const std::vector<double>& p_list, double orlicz_tol) {
  return diagnostics_impl(w, grad_w, s, t, p_list, orlicz_tol, std::numeric_limits<double>::quiet_NaN());
}

Trajectory solve(const VectorField& b, const ScalarField& f, const SolverConfig& config) {
  validate(b, f, config);
  const TorusGrid& grid = f.grid();
  const VectorField bd = dealiased_drift(b);
  const double limit = std::min(cfl_dt_limit(b, config.cfl_safety), cfl_dt_limit(bd, config.cfl_safety));
  if (config.dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "solver: dt = " << config.dt << " violates the CFL limit " << limit << " (cfl_safety "
        << config.cfl_safety << ", max|b| " << drift_sup(b) << ")";
    throw InvalidInput(msg.str());
  }
  const long nsteps = std::max(1L, static_cast<long>(std::ceil(config.t_final / config.dt - 1e-9)));
  const double dt = config.t_final / static_cast<double>(nsteps);

  Trajectory traj;
  traj.lambda = config.lambda;
  traj.p_list = config.p_list;
  traj.dt = dt;
  traj.scheme = config.scheme;
  traj.orlicz_tol = config.orlicz_tol;
  traj.alt_lambda = 0.0;
  const bool two_frames = config.lambda != 0.0;

  auto& sp = spectral_engine(grid);
  Spec vhat = sp.make_spectrum();
  Spec tmp = sp.make_spectrum();
  sp.forward(f.values(), vhat);
  ScalarField v(grid);
  VectorField grad(grid);
  Stepper stepper(bd, dt, config.lambda, config.scheme);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto record = [&](long step, const ScalarField& field) {
    const double t = static_cast<double>(step) * dt;
    const bool snapshot = step % config.snapshot_stride == 0 || step == nsteps;
    Diagnostics dv = diagnostics_impl(field, grad, 1.0, t, config.p_list, config.orlicz_tol, nan,
                                      !snapshot && !config.orlicz_every_step);
    if (two_frames) {
      const double s = std::exp(config.lambda * t);
      traj.alt_steps.push_back(
          diagnostics_impl(field, grad, s, t, config.p_list, config.orlicz_tol, s * dv.orlicz, std::isnan(dv.orlicz)));
    }
    traj.steps.push_back(std::move(dv));
    if (snapshot) {
      traj.times.push_back(t);
      traj.snapshots.push_back(field);
      traj.snapshot_steps.push_back(traj.steps.size() - 1);
    }
  };

  // Row 0 uses f itself so snapshot 0 is the datum bit for bit.
  real_and_gradient(sp, vhat, v, grad, tmp);
  record(0, f);
  v = f;
  ScalarField next(grid);
  for (long step = 1; step <= nsteps; ++step) {
    stepper.step(vhat);
    real_and_gradient(sp, vhat, next, grad, tmp);
    if (!next.all_finite() || !grad.all_finite()) {
      traj.aborted = true;
      std::ostringstream msg;
      msg << "non-finite solution at step " << step << " (t = " << static_cast<double>(step) * dt
          << "); trajectory ends at the last valid step";
      traj.abort_reason = msg.str();
      if (traj.snapshot_steps.back() != traj.steps.size() - 1) {
        auto& last = traj.steps.back();
        if (std::isnan(last.orlicz)) {
          last.orlicz = orlicz_norm(v, config.orlicz_tol).value;
          if (two_frames) traj.alt_steps.back().orlicz = std::exp(config.lambda * last.t) * last.orlicz;
        }
        traj.times.push_back(traj.steps.back().t);
        traj.snapshots.push_back(v);
        traj.snapshot_steps.push_back(traj.steps.size() - 1);
      }
      break;
    }
    record(step, next);
    std::swap(v, next);
  }
  return traj;
}

Trajectory unshift(const Trajectory& traj, double lambda) {
  Trajectory out = traj;
  if (lambda == 0.0) return out;
  for (std::size_t i = 0; i < out.snapshots.size(); ++i) out.snapshots[i] *= std::exp(lambda * out.times[i]);
  out.lambda = traj.lambda - lambda;
  if (!traj.alt_steps.empty() && traj.alt_lambda == out.lambda) {
    std::swap(out.steps, out.alt_steps);
    out.alt_lambda = traj.lambda;
    return out;
  }
  out.steps.clear();
  out.alt_steps.clear();
  out.snapshot_steps.clear();
  for (std::size_t i = 0; i < out.snapshots.size(); ++i) {
    const VectorField g = gradient(out.snapshots[i]);
    out.steps.push_back(compute_diagnostics(out.snapshots[i], g, 1.0, out.times[i], out.p_list, out.orlicz_tol));
    out.snapshot_steps.push_back(i);
  }
  return out;
}

void write_diagnostics_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw InvalidInput("cannot open " + path.string() + " for writing");
  auto label = [](double p) {
    std::ostringstream s;
    s << p;
    return s.str();
  };
  std::fprintf(fp, "t,sup");
  for (double p : traj.p_list) std::fprintf(fp, ",l%s", label(p).c_str());
  std::fprintf(fp, ",orlicz,modular,dirichlet");
  for (double p : traj.p_list) {
    if (!is_even_integer(p)) continue;
    const auto l = label(p);
    std::fprintf(fp, ",exp_weight_p%s,exp_gradient_p%s,weighted_gradient_p%s", l.c_str(), l.c_str(), l.c_str());
  }
  std::fputc('\n', fp);
  for (const auto& d : traj.steps) {
    std::fprintf(fp, "%.17g,%.17g", d.t, d.sup);
    for (double v : d.lp) std::fprintf(fp, ",%.17g", v);
    std::fprintf(fp, ",%.17g,%.17g,%.17g", d.orlicz, d.modular, d.dirichlet);
    for (std::size_t i = 0; i < traj.p_list.size(); ++i) {
      if (!is_even_integer(traj.p_list[i])) continue;
      std::fprintf(fp, ",%.17g,%.17g,%.17g", d.exp_weight[i], d.exp_gradient[i], d.weighted_gradient[i]);
    }
    std::fputc('\n', fp);
  }
  if (std::fclose(fp) != 0) throw InvalidInput("write failed for " + path.string());
}

}  // namespace critdrift
