// Certificates for the coherence inequality
//   sup_t |sum_{lambda in U} c_lambda e(<t, lambda>)| <= 2 C sup_{|y| <= r} |...|
// built from an interpolating function F with F(lambda) = e(<lambda, t>) on U
// and a spectrum F-hat of total mass at most C, less than 1/2 of it outside
// B(0, r).
#pragma once

#include "fqc/bump.hpp"
#include "fqc/exp_sum.hpp"
#include "fqc/fourier_pair.hpp"
#include "fqc/measure.hpp"
#include "fqc/types.hpp"
#include "fqc/wiener_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace fqc {

/// Atoms with |mu(lambda)| >= eps whose distance to every other atom is at
/// least eps.
inline std::vector<Vec> select_U(const AtomicMeasure& mu, double eps) {
  if (!(eps > 0.0)) throw PreconditionError("select_U: eps must be positive");
  const AtomLookup look(mu, std::max(eps, 1e-6));
  std::vector<Vec> out;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Atom& a = mu.atoms()[i];
    if (std::abs(a.mass) < eps) continue;
    bool isolated = true;
    for (std::size_t j : look.within(a.point, eps)) {
      if (j != i && (mu.atoms()[j].point - a.point).norm() < eps) {
        isolated = false;
        break;
      }
    }
    if (isolated) out.push_back(a.point);
  }
  return out;
}

struct CoherenceOptions {
  /// Bump radius; 0 chooses min(eps/4, separation/4).
  double eta = 0.0;
  /// Interpolation tolerance, truncation charges included.
  double tol = 1e-6;
  /// Spectral tail allowed for psi * mu.
  double bump_tol = 1e-9;
  /// Relative weight of h terms allowed to fall outside the reliable window;
  /// their possible contribution to F is charged to every sample.
  double window_tol = 1e-10;
  /// Options for the eps-inverse; a zero tolerance inherits `tol`.
  ComposeOptions compose{0, kDefaultDropTol, 0.0};
};

/// Checks of one sampled translation t.
struct CoherenceSample {
  Vec t;
  /// sum |F-hat| on the window and the part outside B(0, r).
  double total_mass = 0.0;
  double tail_mass = 0.0;
  /// max over U of |F(lambda) - e(<lambda, t>)|.
  double interpolation_residual = 0.0;
  /// Mass of F-hat possibly lost beyond the frequency window.
  double truncation_charge = 0.0;
  double C = 0.0;
  double r = 0.0;
  bool ok = false;
};

struct CoherenceCertificate {
  std::vector<Vec> U;
  double eps = 0.0;
  double eta = 0.0;
  double tol = 0.0;
  ExpSum g;
  ExpSum h;
  /// Spectrum of h mu; F-hat for translation t has atoms gamma + t with mass
  /// psi-hat(gamma + t) m_gamma.
  AtomicMeasure h_spectrum;
  double C = 0.0;
  double r = 0.0;
  MassReport mass_report;
  /// Bound on the F-hat mass lost to h terms beyond the reliable shift.
  double shift_charge = 0.0;
  std::size_t grid_n = 0;
  double compose_residual = 0.0;
  std::vector<CoherenceSample> samples;

  bool valid() const {
    return std::all_of(samples.begin(), samples.end(), [](const CoherenceSample& s) { return s.ok; });
  }
};

/// F-hat for translation t: atoms gamma + t with mass psi-hat(gamma + t) m_gamma.
inline AtomicMeasure interpolant_spectrum(const CoherenceCertificate& cert, const Vec& t) {
  const BumpFunction psi(cert.h_spectrum.dim(), cert.eta);
  std::vector<Atom> atoms;
  atoms.reserve(cert.h_spectrum.size());
  for (const Atom& a : cert.h_spectrum.atoms()) {
    const Vec y = a.point + t;
    const double w = psi.transform(y);
    if (w != 0.0) atoms.push_back({y, w * a.mass});
  }
  return AtomicMeasure(AtomicMeasure::Distinct{}, cert.h_spectrum.dim(), std::move(atoms),
                       cert.h_spectrum.window_radius() + t.norm());
}

inline CoherenceSample check_translation(const CoherenceCertificate& cert, const Vec& t) {
  check_dim(t.size(), cert.h_spectrum.dim(), "check_translation");
  const BumpFunction psi(cert.h_spectrum.dim(), cert.eta);
  const MassProfile w = transform_profile_of(psi);
  CoherenceSample s;
  s.t = t;
  s.C = cert.C;
  s.r = cert.r;
  const Vec back = -t;
  s.total_mass = direct_weighted_mass(w, cert.h_spectrum, back);
  s.tail_mass = direct_weighted_mass(w, cert.h_spectrum, back, cert.r);
  const double reach = cert.h_spectrum.window_radius() - t.norm();
  s.truncation_charge = cert.shift_charge;
  if (std::isfinite(reach)) {
    s.truncation_charge += reach > 0.0
                               ? bump_spectral_tail(psi, growth_fit(cert.h_spectrum), reach)
                               : kInf;
  }
  const AtomicMeasure fhat = interpolant_spectrum(cert, t);
  for (const Vec& lambda : cert.U) {
    Complex f = 0.0;
    for (const Atom& a : fhat.atoms()) f += a.mass * cis(lambda.dot(a.point));
    s.interpolation_residual = std::max(s.interpolation_residual, std::abs(f - cis(lambda.dot(t))));
  }
  s.ok = s.total_mass <= cert.C && s.tail_mass + s.truncation_charge < 0.5 &&
         s.interpolation_residual + s.truncation_charge <= cert.tol;
  return s;
}

/// Runs the construction for the measure of p: U from select_U, g = psi * mu,
/// h the eps-inverse of g, the spectrum of h mu, and the constants C, r of
/// the mass estimate for |psi-hat| against that spectrum. Every t in
/// `t_samples` is checked against the same C and r.
inline CoherenceCertificate build_certificate(const FourierPair& p, double eps,
                                              const std::vector<Vec>& t_samples,
                                              const CoherenceOptions& opt = {}) {
  if (!(eps > 0.0)) throw PreconditionError("build_certificate: eps must be positive");
  if (!(opt.tol > 0.0)) throw PreconditionError("build_certificate: tol must be positive");
  const AtomicMeasure& mu = p.time_measure();
  const int d = mu.dim();
  CoherenceCertificate cert;
  cert.U = select_U(mu, eps);
  cert.eps = eps;
  cert.tol = opt.tol;
  const double sep = min_separation(mu);
  cert.eta = opt.eta > 0.0 ? opt.eta : std::min(0.25 * eps, std::isfinite(sep) ? 0.25 * sep : kInf);
  if (!(cert.eta < 0.5 * eps)) {
    throw PreconditionError("build_certificate: bump radius " + fmt(cert.eta) +
                            " must be below eps/2");
  }
  const BumpFunction psi(d, cert.eta);
  cert.g = convolve_bump(psi, p, opt.bump_tol);
  ComposeOptions co = opt.compose;
  if (!(co.tol > 0.0)) co.tol = opt.tol;
  const Composition comp = eps_inverse(cert.g, eps, co);
  cert.h = comp.g;
  cert.grid_n = comp.grid_n;
  cert.compose_residual = std::max(comp.residual, std::max(comp.product_residual, comp.zero_residual));
  const FourierPair hp = multiply_pair(p, cert.h, opt.window_tol);
  cert.h_spectrum = hp.freq_side();
  const MassProfile w = transform_profile_of(psi);
  cert.mass_report = schwartz_mass_report(w, cert.h_spectrum, 0.5);
  // Each atom of the spectrum of h mu may miss at most the last multiply
  // charge; weighted by |psi-hat| this sums to at most that times the mass
  // bound of psi-hat against the spectrum of mu.
  const double per_atom = hp.provenance().back().tail_charge;
  if (per_atom > 0.0) {
    cert.shift_charge = per_atom / std::max(p.freq_side().max_mass(), 1e-300) *
                        schwartz_mass_report(w, p.freq_side(), 0.5).total_bound;
  }
  cert.C = cert.mass_report.total_bound;
  cert.r = cert.mass_report.tail_radius;
  for (const Vec& t : t_samples) cert.samples.push_back(check_translation(cert, t));
  return cert;
}

/// Sampling of the two suprema. Zero fields are chosen automatically: the
/// half width covers 5 periods 1/sep(U) on each side, the step resolves the
/// largest frequency of U with 8 samples per cycle.
struct InequalityGrid {
  double half_width = 0.0;
  double step = 0.0;
  std::size_t max_points = 2'000'000;
  bool polish = true;
};

struct InequalityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
  Vec argmax;
  /// Radius of the ball sampled for the right-hand side, min(r, half width).
  double ball_radius = 0.0;
};

namespace detail {

inline Complex eval_coeffs(const std::vector<std::pair<Vec, Complex>>& c, const Vec& t) {
  Complex s = 0.0;
  for (const auto& [lambda, v] : c) s += v * cis(t.dot(lambda));
  return s;
}

/// Calls f at the points of the grid step * Z^d inside [-w, w]^d.
template <class F>
void for_grid(int d, double w, double step, F&& f) {
  const auto m = static_cast<long>(std::floor(w / step));
  Vec x(d);
  if (d == 1) {
    for (long i = -m; i <= m; ++i) {
      x[0] = i * step;
      f(x);
    }
  } else if (d == 2) {
    for (long i = -m; i <= m; ++i) {
      for (long j = -m; j <= m; ++j) {
        x << i * step, j * step;
        f(x);
      }
    }
  } else {
    for (long i = -m; i <= m; ++i) {
      for (long j = -m; j <= m; ++j) {
        for (long k = -m; k <= m; ++k) {
          x << i * step, j * step, k * step;
          f(x);
        }
      }
    }
  }
}

}  // namespace detail

/// lhs: maximum of |P(t)| over the grid on [-W, W]^d, polished by golden
/// section searches along each axis. rhs: 2C times the maximum of |P| over
/// the grid points of the ball B(0, min(r, W)).
inline InequalityResult verify_inequality(const CoherenceCertificate& cert,
                                          const std::vector<std::pair<Vec, Complex>>& coeffs,
                                          const InequalityGrid& grid = {}) {
  InequalityResult res;
  if (coeffs.empty()) {
    res.ok = true;
    return res;
  }
  const int d = static_cast<int>(coeffs.front().first.size());
  {
    std::vector<Atom> u;
    for (const Vec& x : cert.U) u.push_back({x, 1.0});
    const AtomicMeasure um(d, std::move(u), kInf);
    const AtomLookup look(um, 0.5);
    for (const auto& [lambda, v] : coeffs) {
      check_dim(lambda.size(), d, "verify_inequality");
      if (look.find(lambda, 1e-9) == AtomLookup::npos) {
        throw PreconditionError("verify_inequality: coefficient outside U");
      }
    }
  }
  double sep_u = kInf;
  double max_freq = 0.0;
  {
    std::vector<Atom> u;
    for (const auto& c : coeffs) {
      u.push_back({c.first, 1.0});
      max_freq = std::max(max_freq, c.first.norm());
    }
    sep_u = std::min(sep_u, min_separation(u));
    std::vector<Atom> all;
    for (const Vec& x : cert.U) all.push_back({x, 1.0});
    sep_u = std::min(sep_u, min_separation(all));
  }
  const double w = grid.half_width > 0.0 ? grid.half_width : 5.0 / (std::isfinite(sep_u) ? sep_u : 1.0);
  double step = grid.step > 0.0 ? grid.step : 1.0 / (8.0 * (1.0 + max_freq));
  while (std::pow(2.0 * w / step + 1.0, d) > static_cast<double>(grid.max_points)) step *= 1.25;

  auto modulus = [&](const Vec& t) { return std::abs(detail::eval_coeffs(coeffs, t)); };
  std::vector<std::pair<double, Vec>> best;
  detail::for_grid(d, w, step, [&](const Vec& t) {
    const double v = modulus(t);
    if (best.size() < 3 || v > best.back().first) {
      best.emplace_back(v, t);
      std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      if (best.size() > 3) best.pop_back();
    }
  });
  res.lhs = best.front().first;
  res.argmax = best.front().second;
  if (grid.polish) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (auto [val, t] : best) {
      for (int sweep = 0; sweep < 2; ++sweep) {
        for (int axis = 0; axis < d; ++axis) {
          double a = t[axis] - step;
          double b = t[axis] + step;
          auto at = [&](double x) {
            Vec y = t;
            y[axis] = x;
            return modulus(y);
          };
          double x1 = b - gr * (b - a);
          double x2 = a + gr * (b - a);
          double f1 = at(x1);
          double f2 = at(x2);
          for (int it = 0; it < 60; ++it) {
            if (f1 > f2) {
              b = x2;
              x2 = x1;
              f2 = f1;
              x1 = b - gr * (b - a);
              f1 = at(x1);
            } else {
              a = x1;
              x1 = x2;
              f1 = f2;
              x2 = a + gr * (b - a);
              f2 = at(x2);
            }
          }
          const double xm = 0.5 * (a + b);
          const double fm = at(xm);
          if (fm > val) {
            val = fm;
            t[axis] = xm;
          }
        }
      }
      if (val > res.lhs) {
        res.lhs = val;
        res.argmax = t;
      }
    }
  }
  res.ball_radius = std::min(cert.r, w);
  double ball_max = modulus(zeros(d));
  detail::for_grid(d, res.ball_radius, step, [&](const Vec& t) {
    if (t.norm() <= res.ball_radius) ball_max = std::max(ball_max, modulus(t));
  });
  res.rhs = 2.0 * cert.C * ball_max;
  res.ok = res.lhs <= res.rhs + cert.tol;
  return res;
}

}  // namespace fqc
