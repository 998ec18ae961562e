#include "critdrift/form_bound.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "critdrift/drift.hpp"
#include "critdrift/error.hpp"
#include "critdrift/simd.hpp"
#include "critdrift/spectral.hpp"

namespace critdrift {
namespace {

using Complex = Spectral::Complex;
using Spec = std::vector<Complex>;

constexpr double kFourPi2 = 4.0 * std::numbers::pi * std::numbers::pi;

void axpy(double a, const Spec& x, Spec& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void scale(Spec& x, double a) {
  for (auto& v : x) v *= a;
}

/// The operator pair (A, L) on band-limited mean-zero spectra.
struct Pencil {
  Pencil(const VectorField& b, double c_in)
      : sp(spectral_engine(b.grid())), m(b.magnitude_squared()), c(c_in), work(b.grid()) {
    const std::size_t ns = sp.spectrum_size();
    mask.assign(ns, 0.0);
    lsym.assign(ns, 0.0);
    inv_l.assign(ns, 0.0);
    const auto band = sp.band_mask();
    const auto k2 = sp.k_squared();
    for (std::size_t i = 1; i < ns; ++i) {  // index 0 is the constant mode
      if (band[i] == 0.0) continue;
      mask[i] = 1.0;
      lsym[i] = kFourPi2 * k2[i];
      inv_l[i] = 1.0 / lsym[i];
    }
    mean_m = integrate(m);
    pm = sp.make_spectrum();
    sp.forward(m.values(), pm);
    Spectral::multiply(pm, mask);
  }

  double dot(const Spec& a, const Spec& b2) const { return sp.weighted_inner(a, b2, {}); }
  double ldot(const Spec& a, const Spec& b2) const { return sp.weighted_inner(a, b2, lsym); }

  void apply(const Spec& x, Spec& out) {
    sp.inverse(x, work.values());
    simd::kernels().mul(work.values().data(), m.values().data(), work.values().data(), work.size());
    sp.forward(work.values(), out);
    Spectral::multiply(out, mask);
    axpy(-c, x, out);
    if (rank_one) axpy(dot(pm, x) / alpha, pm, out);
  }

  void normalize_l(Spec& x, Spec* ax = nullptr) const {
    const double nrm = std::sqrt(ldot(x, x));
    if (nrm > 0.0) {
      scale(x, 1.0 / nrm);
      if (ax) scale(*ax, 1.0 / nrm);
    }
  }

  Spectral& sp;
  ScalarField m;
  double c;
  ScalarField work;
  std::vector<double> mask;
  std::vector<double> lsym;
  std::vector<double> inv_l;
  double mean_m = 0.0;
  Spec pm;
  bool rank_one = false;
  double alpha = 0.0;
};

struct EigenResult {
  Spec x;
  double mu = 0.0;
  double change = 0.0;
  double resnorm = 0.0;
  int iterations = 0;
  bool converged = false;
};

double relative_change(double now, double before) {
  const double diff = std::abs(now - before);
  if (diff == 0.0) return 0.0;
  return diff / std::max(std::abs(now), std::numeric_limits<double>::min());
}

double dual_residual(Pencil& pb, const Spec& x, const Spec& ax, double mu, Spec& r, Spec& w) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    r[i] = ax[i] - mu * pb.lsym[i] * x[i];
    w[i] = r[i] * pb.inv_l[i];
  }
  const double xn = std::sqrt(pb.ldot(x, x));
  return std::sqrt(std::max(pb.dot(r, w), 0.0)) / (xn * std::max(std::abs(mu), 1.0));
}

EigenResult run_lobpcg(Pencil& pb, Spec x, const FormBoundOptions& opt) {
  const std::size_t ns = x.size();
  pb.normalize_l(x);
  Spec ax(ns), r(ns), w(ns), aw(ns), p, ap;
  pb.apply(x, ax);
  EigenResult res;
  double mu = pb.dot(x, ax);
  int quiet = 0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    res.resnorm = dual_residual(pb, x, ax, mu, r, w);
    res.iterations = it;
    if (res.resnorm == 0.0) {
      res.change = 0.0;
      res.converged = true;
      break;
    }
    pb.normalize_l(w);
    pb.apply(w, aw);

    std::vector<const Spec*> s = {&x, &w};
    std::vector<const Spec*> as = {&ax, &aw};
    if (!p.empty()) {
      s.push_back(&p);
      as.push_back(&ap);
    }
    const int k = static_cast<int>(s.size());
    Eigen::MatrixXd ga(k, k), gl(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = i; j < k; ++j) {
        ga(i, j) = ga(j, i) = 0.5 * (pb.dot(*s[i], *as[j]) + pb.dot(*s[j], *as[i]));
        gl(i, j) = gl(j, i) = pb.ldot(*s[i], *s[j]);
      }
    }
    // Rayleigh-Ritz on span{x, w, p}, discarding numerically dependent directions.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram(gl);
    const Eigen::VectorXd lam = gram.eigenvalues();
    const double lam_max = lam.maxCoeff();
    std::vector<int> kept;
    for (int i = 0; i < k; ++i) {
      if (lam(i) > 1e-12 * lam_max) kept.push_back(i);
    }
    if (kept.size() < 2) {
      res.change = 0.0;
      res.converged = true;
      break;
    }
    Eigen::MatrixXd t(k, static_cast<int>(kept.size()));
    for (std::size_t q = 0; q < kept.size(); ++q) {
      t.col(static_cast<int>(q)) = gram.eigenvectors().col(kept[q]) / std::sqrt(lam(kept[q]));
    }
    const Eigen::MatrixXd h = t.transpose() * ga * t;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(0.5 * (h + h.transpose()));
    const int top = static_cast<int>(kept.size()) - 1;
    const double mu_new = ritz.eigenvalues()(top);
    const Eigen::VectorXd coef = t * ritz.eigenvectors().col(top);

    Spec pn(ns, Complex{}), apn(ns, Complex{});
    axpy(coef(1), w, pn);
    axpy(coef(1), aw, apn);
    if (k == 3) {
      axpy(coef(2), p, pn);
      axpy(coef(2), ap, apn);
    }
    for (std::size_t i = 0; i < ns; ++i) {
      x[i] = coef(0) * x[i] + pn[i];
      ax[i] = coef(0) * ax[i] + apn[i];
    }
    p = std::move(pn);
    ap = std::move(apn);
    pb.normalize_l(x, &ax);
    pb.normalize_l(p, &ap);
    if (it % 64 == 0) pb.apply(x, ax);  // flush drift from the recurrences

    res.change = relative_change(mu_new, mu);
    mu = mu_new;
    quiet = res.change < opt.tol ? quiet + 1 : 0;
    if (quiet >= 2) {
      res.converged = true;
      break;
    }
  }
  pb.apply(x, ax);
  res.mu = pb.dot(x, ax) / pb.ldot(x, x);
  res.resnorm = dual_residual(pb, x, ax, res.mu, r, w);
  res.x = std::move(x);
  return res;
}

EigenResult run_power(Pencil& pb, Spec x, const FormBoundOptions& opt) {
  const std::size_t ns = x.size();
  const double sigma = pb.c / kFourPi2;
  pb.normalize_l(x);
  Spec ax(ns), r(ns), w(ns);
  EigenResult res;
  pb.apply(x, ax);
  double mu = pb.dot(x, ax);
  for (int it = 1; it <= opt.max_iter; ++it) {
    res.iterations = it;
    for (std::size_t i = 0; i < ns; ++i) x[i] = ax[i] * pb.inv_l[i] + sigma * x[i];
    pb.normalize_l(x);
    pb.apply(x, ax);
    const double mu_new = pb.dot(x, ax);
    res.change = relative_change(mu_new, mu);
    mu = mu_new;
    if (res.change < opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.mu = mu / pb.ldot(x, x);
  res.resnorm = dual_residual(pb, x, ax, res.mu, r, w);
  res.x = std::move(x);
  return res;
}

Spec starting_vector(Pencil& pb, const TorusGrid& grid, const FormBoundOptions& opt) {
  Spec x = pb.sp.make_spectrum();
  if (opt.initial) {
    const ScalarField init = spectral_resample(*opt.initial, grid);
    pb.sp.forward(init.values(), x);
    Spectral::multiply(x, pb.mask);
    if (pb.ldot(x, x) > 0.0) return x;
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ScalarField f(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    f[j] = std::cos(2.0 * std::numbers::pi * grid.point(j)[0]) + 0.1 * normal(rng);
  }
  pb.sp.forward(f.values(), x);
  Spectral::multiply(x, pb.mask);
  return x;
}

FormBoundCertificate infeasible(const TorusGrid& grid, double c) {
  FormBoundCertificate cert(grid);
  cert.c = cert.c_delta = c;
  cert.feasible = false;
  cert.delta_hat = cert.eigenvalue = std::numeric_limits<double>::infinity();
  for (double& v : cert.witness.values()) v = 1.0;
  cert.converged = true;
  return cert;
}

}  // namespace

double form_rayleigh_quotient(const VectorField& b, double c, const ScalarField& phi) {
  const ScalarField m = b.magnitude_squared();
  const auto& k = simd::kernels();
  const double w = phi.grid().weight();
  const double* p = phi.values().data();
  const double num = (k.dot3(m.values().data(), p, p, phi.size()) - c * k.dot(p, p, phi.size())) * w;
  const double den = dirichlet_energy(phi);
  if (den > 0.0) return num / den;
  if (num > 0.0) return std::numeric_limits<double>::infinity();
  return num < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
}

FormBoundCertificate form_bound_estimate(const VectorField& b, double c, const FormBoundOptions& options) {
  const TorusGrid& grid = b.grid();
  if (!std::isfinite(c)) throw InvalidInput("form_bound_estimate: c must be finite");
  if (!b.all_finite()) throw InvalidInput("form_bound_estimate: drift has non-finite values");
  if (options.max_iter < 1) throw InvalidInput("form_bound_estimate: max_iter must be >= 1");
  Pencil pb(b, c);
  const double scale_ref = std::max({std::abs(c), pb.mean_m, std::numeric_limits<double>::min()});
  const double alpha = c - pb.mean_m;
  if (alpha < -1e-12 * scale_ref) return infeasible(grid, c);
  if (alpha <= 1e-12 * scale_ref) {
    // c == <m>: only finite when m has no oscillating part to couple to constants.
    if (std::sqrt(pb.dot(pb.pm, pb.pm)) > 1e-10 * scale_ref) return infeasible(grid, c);
  } else {
    pb.rank_one = true;
    pb.alpha = alpha;
  }

  Spec x0 = starting_vector(pb, grid, options);
  EigenResult er = options.method == EigenMethod::lobpcg ? run_lobpcg(pb, std::move(x0), options)
                                                         : run_power(pb, std::move(x0), options);

  FormBoundCertificate cert(grid);
  cert.c = cert.c_delta = c;
  cert.feasible = true;
  pb.sp.inverse(er.x, cert.witness.values());
  if (pb.rank_one) {
    const double shift = pb.dot(pb.pm, er.x) / pb.alpha;
    for (double& v : cert.witness.values()) v += shift;
  }
  const double l2 = std::sqrt(inner(cert.witness, cert.witness));
  if (l2 > 0.0) cert.witness *= 1.0 / l2;
  cert.eigenvalue = er.mu;
  const double rq = form_rayleigh_quotient(b, c, cert.witness);
  cert.delta_hat = std::max(std::isfinite(rq) ? rq : er.mu, 0.0);
  cert.residual = er.change;
  cert.residual_norm = er.resnorm;
  cert.iterations = er.iterations;
  cert.converged = er.converged;
  return cert;
}

std::vector<FormBoundCertificate> form_bound_estimate(const VectorField& b, const std::vector<double>& c_values,
                                                      const FormBoundOptions& options) {
  std::vector<FormBoundCertificate> out;
  out.reserve(c_values.size());
  for (double c : c_values) out.push_back(form_bound_estimate(b, c, options));
  return out;
}

FormBoundCertificate calibrate_form_bound(const VectorField& b, double delta_target, double c_rel_tol,
                                          const FormBoundOptions& options) {
  if (!(delta_target >= 0.0)) throw InvalidInput("calibrate_form_bound: delta_target must be >= 0");
  if (!(c_rel_tol > 0.0)) throw InvalidInput("calibrate_form_bound: c_rel_tol must be > 0");
  const double mean_m = drift_l2_squared(b);
  FormBoundOptions opt = options;
  FormBoundCertificate best = form_bound_estimate(b, mean_m, opt);
  if (best.feasible && best.delta_hat <= delta_target) return best;

  double lo = mean_m;
  double hi = std::max(2.0 * mean_m, 1e-300);
  for (int grow = 0;; ++grow) {
    if (grow > 200) throw NumericalError("calibrate_form_bound: no c reaches the target");
    FormBoundCertificate cert = form_bound_estimate(b, hi, opt);
    if (cert.feasible && cert.delta_hat <= delta_target) {
      best = std::move(cert);
      break;
    }
    opt.initial = cert.witness;
    lo = hi;
    hi *= 2.0;
  }
  opt.initial = best.witness;
  while (hi - lo > c_rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    FormBoundCertificate cert = form_bound_estimate(b, mid, opt);
    if (cert.feasible && cert.delta_hat <= delta_target) {
      hi = mid;
      opt.initial = cert.witness;
      best = std::move(cert);
    } else {
      lo = mid;
    }
  }
  return best;
}

namespace {

struct Violation {
  double absolute = -std::numeric_limits<double>::infinity();
  double relative = -std::numeric_limits<double>::infinity();
};

Violation violations(const VectorField& b, double delta, double c_delta, const std::vector<ScalarField>& trials) {
  if (trials.empty()) throw InvalidInput("verify_form_bound: trials must be nonempty");
  const ScalarField m = b.magnitude_squared();
  const auto& k = simd::kernels();
  Violation v;
  for (const auto& phi : trials) {
    if (!(phi.grid() == b.grid())) throw InvalidInput("verify_form_bound: trial grid differs from drift grid");
    const double w = phi.grid().weight();
    const double* p = phi.values().data();
    const double lhs = k.dot3(m.values().data(), p, p, phi.size()) * w;
    const double rhs = delta * dirichlet_energy(phi) + c_delta * k.dot(p, p, phi.size()) * w;
    const double gap = lhs - rhs;
    v.absolute = std::max(v.absolute, gap);
    v.relative = std::max(v.relative, lhs > 0.0 ? gap / lhs : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
  }
  return v;
}

}  // namespace

double verify_form_bound(const VectorField& b, double delta, double c_delta, const std::vector<ScalarField>& trials) {
  return violations(b, delta, c_delta, trials).absolute;
}

double verify_form_bound_relative(const VectorField& b, double delta, double c_delta,
                                  const std::vector<ScalarField>& trials) {
  return violations(b, delta, c_delta, trials).relative;
}

std::vector<ScalarField> random_trial_fields(const TorusGrid& grid, int count, std::uint64_t seed) {
  if (count < 0) throw InvalidInput("random_trial_fields: count must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto& sp = spectral_engine(grid);
  const auto band = sp.band_mask();
  const auto k2 = sp.k_squared();
  const double h = grid.spacing();
  std::vector<ScalarField> out;
  out.reserve(static_cast<std::size_t>(count));
  auto spec = sp.make_spectrum();
  for (int t = 0; t < count; ++t) {
    ScalarField f(grid);
    if (t % 2 == 0) {
      const double s = 1.0 + 2.0 * unit(rng);
      for (std::size_t i = 0; i < spec.size(); ++i) {
        const double amp = band[i] * std::pow(1.0 + k2[i], -0.5 * s);
        spec[i] = Complex(normal(rng), normal(rng)) * amp * static_cast<double>(grid.size());
      }
      sp.inverse(spec, f.values());
    } else {
      std::array<double, TorusGrid::kMaxDim> centre{};
      for (int a = 0; a < grid.dim(); ++a) centre[static_cast<std::size_t>(a)] = 0.1 * (2.0 * unit(rng) - 1.0);
      const double width = std::exp(std::log(2.0 * h) + unit(rng) * (std::log(0.2) - std::log(2.0 * h)));
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto x = grid.point(j);
        double r2 = 0.0;
        for (int a = 0; a < grid.dim(); ++a) {
          double dx = x[static_cast<std::size_t>(a)] - centre[static_cast<std::size_t>(a)];
          dx -= std::round(dx);
          r2 += dx * dx;
        }
        f[j] = std::exp(-0.5 * r2 / (width * width));
      }
      sp.forward(f.values(), spec);
      Spectral::multiply(spec, band);
      sp.inverse(spec, f.values());
    }
    const double sup = simd::kernels().max_abs(f.values().data(), f.size());
    if (sup > 0.0) f *= (normal(rng) >= 0.0 ? 1.0 : -1.0) / sup;
    const double shift = unit(rng) - 0.5;
    for (double& v : f.values()) v += shift;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace critdrift
