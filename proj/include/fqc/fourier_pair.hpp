// Measures bundled with their atomic Fourier transforms, the test-function
// catalog, and numerical verifiers for the pairing identity, Poisson
// summation and the mass bounds of translation bounded measures.
//
// Conventions: phi-hat(y) = integral phi(x) e(-<x, y>) dx, and a pair (mu,
// mu-hat) satisfies sum mu-hat(gamma) phi(gamma) = sum mu(lambda)
// phi-hat(lambda) for every test function phi.
#pragma once

#include "fqc/bump.hpp"
#include "fqc/detail/point_index.hpp"
#include "fqc/detail/quadrature.hpp"
#include "fqc/exp_sum.hpp"
#include "fqc/lattice.hpp"
#include "fqc/measure.hpp"
#include "fqc/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fqc {

/// Values below this fraction of the amplitude count as zero when deciding
/// effective supports.
inline constexpr double kSupportTol = 1e-16;

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

class TestFunction {
 public:
  enum class Kind { gaussian, bump };

  /// phi(x) = amplitude * exp(-pi |x - center|^2 / sigma^2).
  static TestFunction gaussian(double sigma, const Vec& center, Complex amplitude = 1.0) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw PreconditionError("TestFunction::gaussian: sigma must be positive");
    }
    check_supported_dim(static_cast<int>(center.size()), "TestFunction::gaussian");
    return TestFunction(Kind::gaussian, static_cast<int>(center.size()), sigma, center, amplitude);
  }

  /// phi = amplitude * psi with psi the bump of radius eta centred at 0.
  static TestFunction bump(int dim, double eta, Complex amplitude = 1.0) {
    BumpFunction check(dim, eta);
    (void)check;
    return TestFunction(Kind::bump, dim, eta, zeros(dim), amplitude);
  }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double width() const { return width_; }
  const Vec& center() const { return center_; }
  Complex amplitude() const { return amp_; }

  TestFunction scaled(Complex alpha) const {
    TestFunction t = *this;
    t.amp_ *= alpha;
    return t;
  }

  Complex value(const Vec& x) const {
    check_dim(x.size(), dim_, "TestFunction::value");
    if (kind_ == Kind::gaussian) {
      return amp_ * std::exp(-kPi * (x - center_).squaredNorm() / (width_ * width_));
    }
    return amp_ * BumpFunction(dim_, width_).value(x);
  }

  Complex transform(const Vec& y) const {
    check_dim(y.size(), dim_, "TestFunction::transform");
    if (kind_ == Kind::gaussian) {
      return amp_ * std::pow(width_, dim_) * std::exp(-kPi * width_ * width_ * y.squaredNorm()) *
             cis(-center_.dot(y));
    }
    return amp_ * BumpFunction(dim_, width_).transform(y);
  }

  /// Radius around center() outside which |phi| < kSupportTol |amplitude|.
  double time_support_radius() const {
    if (kind_ == Kind::gaussian) return width_ * std::sqrt(std::log(1.0 / kSupportTol) / kPi);
    return width_;
  }

  /// Radius around 0 outside which |phi-hat| < kSupportTol |amplitude|.
  double freq_support_radius() const {
    if (kind_ == Kind::gaussian) {
      const double peak = std::pow(width_, dim_);
      const double ratio = std::max(peak / kSupportTol, 1.0);
      return std::sqrt(std::log(ratio) / kPi) / width_;
    }
    const BumpFunction psi(dim_, width_);
    double rho = 1.0 / width_;
    while (psi.transform_envelope(rho) >= kSupportTol) rho *= 1.05;
    return rho;
  }

  /// sup over |x| >= r of |phi(x)| (1 + |x|)^p.
  double weighted_tail_sup(double p, double r) const {
    if (kind_ == Kind::bump) return std::abs(amp_) * BumpFunction(dim_, width_).weighted_sup(p, r);
    const double c = center_.norm();
    const double reach = c + time_support_radius() * 1.5 + 10.0 * width_;
    double best = 0.0;
    const int n = 20000;
    const double lo = std::max(r, 0.0);
    if (lo >= reach) return 0.0;
    for (int i = 0; i < n; ++i) {
      const double x0 = lo + (reach - lo) * i / n;
      const double x1 = lo + (reach - lo) * (i + 1) / n;
      const double gap = std::max(x0 - c, 0.0);
      best = std::max(best, std::exp(-kPi * gap * gap / (width_ * width_)) * std::pow(1.0 + x1, p));
    }
    return std::abs(amp_) * best;
  }

 private:
  TestFunction(Kind k, int d, double w, Vec c, Complex a)
      : kind_(k), dim_(d), width_(w), center_(std::move(c)), amp_(a) {}

  Kind kind_;
  int dim_;
  double width_;
  Vec center_;
  Complex amp_;
};

// ---------------------------------------------------------------------------
// Fourier pairs
// ---------------------------------------------------------------------------

struct ProvenanceStep {
  std::string op;
  std::map<std::string, double> params;
  double tail_charge = 0.0;
};

class FourierPair {
 public:
  using TimeSide = std::variant<AtomicMeasure, ExpSum>;

  FourierPair(TimeSide time, AtomicMeasure freq, std::vector<ProvenanceStep> provenance)
      : time_(std::move(time)), freq_(std::move(freq)), provenance_(std::move(provenance)) {
    check_dim(time_dim(), freq_.dim(), "FourierPair");
  }

  int dim() const { return freq_.dim(); }
  bool time_is_measure() const { return std::holds_alternative<AtomicMeasure>(time_); }
  const TimeSide& time_side() const { return time_; }

  const AtomicMeasure& time_measure() const {
    if (!time_is_measure()) throw PreconditionError("FourierPair: time side is a density");
    return std::get<AtomicMeasure>(time_);
  }

  const ExpSum& time_density() const {
    if (time_is_measure()) throw PreconditionError("FourierPair: time side is a measure");
    return std::get<ExpSum>(time_);
  }

  const AtomicMeasure& freq_side() const { return freq_; }
  const std::vector<ProvenanceStep>& provenance() const { return provenance_; }

  double total_tail_charge() const {
    double s = 0.0;
    for (const auto& p : provenance_) s += p.tail_charge;
    return s;
  }

 private:
  int time_dim() const {
    return time_is_measure() ? std::get<AtomicMeasure>(time_).dim() : std::get<ExpSum>(time_).dim();
  }

  TimeSide time_;
  AtomicMeasure freq_;
  std::vector<ProvenanceStep> provenance_;
};

/// Density f(x) dx with transform sum c_n delta_{gamma_n}.
inline FourierPair pair_from_expsum(const ExpSum& f) {
  std::vector<Atom> atoms;
  atoms.reserve(f.size());
  for (const Term& t : f.terms()) atoms.push_back({t.freq, t.coef});
  ProvenanceStep step{"pair_from_expsum", {{"terms", static_cast<double>(f.size())}}, f.tail_bound()};
  return FourierPair(f, AtomicMeasure(f.dim(), std::move(atoms), kInf), {step});
}

/// Comb of L + a and its transform |det A|^{-1} sum_{y in L*} e(-<y, a>) delta_y.
inline FourierPair pair_from_comb(const Coset& c, double time_radius, double freq_radius,
                                  std::size_t cap = kDefaultEnumerationCap) {
  if (!(time_radius > 0.0) || !(freq_radius > 0.0)) {
    throw PreconditionError("pair_from_comb: radii must be positive");
  }
  AtomicMeasure time = comb(c, time_radius, cap);
  const Lattice dl = dual(c.lattice());
  const auto ys = enumerate_in_ball(Coset(dl), freq_radius, cap);
  const double inv_det = 1.0 / c.lattice().det_abs();
  std::vector<Atom> atoms;
  atoms.reserve(ys.size());
  for (const Vec& y : ys) atoms.push_back({y, inv_det * cis(-y.dot(c.shift()))});
  const double gap = shortest_vector_length(dl) * (1.0 - 1e-12);
  AtomicMeasure freq = gap > 2.0 * kAtomTol
                           ? AtomicMeasure(AtomicMeasure::Distinct{}, c.dim(), std::move(atoms), freq_radius, gap)
                           : AtomicMeasure(c.dim(), std::move(atoms), freq_radius, gap);
  ProvenanceStep step{"pair_from_comb",
                      {{"time_radius", time_radius}, {"freq_radius", freq_radius},
                       {"det_abs", c.lattice().det_abs()}},
                      0.0};
  return FourierPair(std::move(time), std::move(freq), {step});
}

/// Radius s such that the terms of g with |gamma_n| > s have total modulus at
/// most `window_tol * w_norm(g)`.
inline double reliable_shift(const ExpSum& g, double window_tol) {
  std::vector<std::pair<double, double>> nm;
  nm.reserve(g.size());
  for (const Term& t : g.terms()) nm.emplace_back(t.freq.norm(), std::abs(t.coef));
  std::sort(nm.begin(), nm.end());
  const double budget = window_tol * w_norm(g);
  double dropped = 0.0;
  std::size_t k = nm.size();
  while (k > 0 && dropped + nm[k - 1].second <= budget) {
    dropped += nm[k - 1].second;
    --k;
  }
  return k == 0 ? 0.0 : nm[k - 1].first;
}

/// Multiplication of the time side by g: time masses become g(lambda)
/// c_lambda and the transform becomes sum_n c_n (nu-hat shifted by gamma_n).
/// The reliable frequency window shrinks to R - s with s from
/// reliable_shift(g, window_tol); terms beyond s are still applied and their
/// possible missing contributions are charged to the provenance.
inline FourierPair multiply_pair(const FourierPair& p, const ExpSum& g, double window_tol = 0.0) {
  check_dim(g.dim(), p.dim(), "multiply_pair");
  const AtomicMeasure& time = p.time_measure();
  std::vector<Atom> tatoms = time.atoms();
  for (Atom& a : tatoms) a.mass *= eval(g, a.point);
  AtomicMeasure new_time(AtomicMeasure::Distinct{}, time.dim(), std::move(tatoms), time.window_radius(),
                         time.sep_radius());

  const AtomicMeasure& freq = p.freq_side();
  const double s = reliable_shift(g, window_tol);
  const double new_radius = std::isfinite(freq.window_radius()) ? freq.window_radius() - s : kInf;
  if (!(new_radius > 0.0)) {
    throw TruncationError("multiply_pair: frequency window " + fmt(freq.window_radius()) +
                              " does not exceed the shift " + fmt(s),
                          s + freq.window_radius());
  }
  detail::PointAccumulator acc(p.dim(), kAtomTol, freq.size());
  // Atoms on the boundary sphere may be missing partners, so the kept ball
  // is open.
  const double keep2 = new_radius * new_radius * (1.0 - 1e-12);
  for (const Term& t : g.terms()) {
    for (const Atom& a : freq.atoms()) {
      const Vec q = a.point + t.freq;
      if (q.squaredNorm() < keep2) acc.add(q, t.coef * a.mass);
    }
  }
  std::vector<Atom> fatoms;
  fatoms.reserve(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc.mass(i) != 0.0) fatoms.push_back({acc.point(i), acc.mass(i)});
  }
  double beyond = 0.0;
  for (const Term& t : g.terms()) {
    if (t.freq.norm() > s) beyond += std::abs(t.coef);
  }
  const double charge = (beyond + g.tail_bound()) * freq.max_mass();
  auto prov = p.provenance();
  prov.push_back({"multiply_pair",
                  {{"terms", static_cast<double>(g.size())}, {"shift", s},
                   {"freq_radius", new_radius}, {"window_tol", window_tol}},
                  charge});
  return FourierPair(std::move(new_time), AtomicMeasure(AtomicMeasure::Distinct{}, p.dim(), std::move(fatoms), new_radius),
                     std::move(prov));
}

// ---------------------------------------------------------------------------
// Bump convolution
// ---------------------------------------------------------------------------

/// Bound on sum_{|gamma| > R} |psi-hat(gamma)| |m_gamma| when the variation of
/// the spectrum satisfies N(r) <= C (1 + r)^d (summation by parts against the
/// nonincreasing envelope of psi-hat).
inline double bump_spectral_tail(const BumpFunction& psi, double growth_c, double radius) {
  const int d = psi.dim();
  double total = 0.0;
  double e_prev = psi.transform_envelope(radius);
  for (int i = 1; i < 4000; ++i) {
    const double r = radius * std::pow(1.01, i) + 0.01 * i;
    const double e = psi.transform_envelope(r);
    total += growth_c * std::pow(1.0 + r, d) * (e_prev - e);
    if (e * std::pow(1.0 + r, d + 1) < 1e-30) {
      total += growth_c * std::pow(1.0 + r, d) * e;
      return total;
    }
    e_prev = e;
  }
  return kInf;
}

/// g = psi * nu as an exponential sum with coefficients psi-hat(gamma)
/// nu-hat({gamma}). The spectral tail beyond the frequency window and the
/// transform interpolation error are charged to tail_bound; a tail above
/// `tol` raises TruncationError naming a sufficient frequency radius.
inline ExpSum convolve_bump(const BumpFunction& psi, const FourierPair& p, double tol = 1e-8) {
  check_dim(psi.dim(), p.dim(), "convolve_bump");
  const AtomicMeasure& freq = p.freq_side();
  double tail = 0.0;
  if (std::isfinite(freq.window_radius())) {
    const double c = growth_fit(freq);
    tail = bump_spectral_tail(psi, c, freq.window_radius());
    if (!(tail <= tol)) {
      double hi = std::max(freq.window_radius(), 1.0);
      while (bump_spectral_tail(psi, c, hi) > tol && hi < 1e9) hi *= 1.25;
      throw TruncationError("convolve_bump: spectral tail " + fmt(tail) +
                                " exceeds tolerance; frequency radius " + fmt(hi) +
                                " suffices",
                            hi);
    }
  }
  std::vector<Term> terms;
  terms.reserve(freq.size());
  double interp = 0.0;
  for (const Atom& a : freq.atoms()) {
    const double r = a.point.norm();
    interp += psi.transform_error(r) * std::abs(a.mass);
    const double w = psi.transform_radial(r);
    if (w != 0.0) terms.push_back({w * a.mass, a.point});
  }
  return ExpSum::from_terms(p.dim(), std::move(terms), kDefaultMergeTol, 0.0, tail + interp);
}

// ---------------------------------------------------------------------------
// Verifiers
// ---------------------------------------------------------------------------

namespace detail {

/// Tensor Gauss-Legendre integral of f over [-r, r]^d + center.
template <class F>
Complex integrate_box(int d, const Vec& center, double r, int panels, F&& f) {
  const QuadratureRule rule = composite_gauss(-r, r, panels, 16);
  const std::size_t n = rule.nodes.size();
  Complex s = 0.0;
  Vec x(d);
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      x[k] = center[k] + rule.nodes[idx[k]];
      w *= rule.weights[idx[k]];
    }
    s += w * f(x);
    int axis = 0;
    while (axis < d && ++idx[axis] == n) {
      idx[axis] = 0;
      ++axis;
    }
    if (axis == d) break;
  }
  return s;
}

}  // namespace detail

/// |pairing(time side, phi-hat) - pairing(freq side, phi)|.
inline double verify_pairing(const FourierPair& p, const TestFunction& phi) {
  check_dim(phi.dim(), p.dim(), "verify_pairing");
  const AtomicMeasure& freq = p.freq_side();
  const double need_freq = phi.center().norm() + phi.time_support_radius();
  if (need_freq > freq.window_radius()) {
    throw TruncationError("verify_pairing: test function support reaches radius " +
                              fmt(need_freq) + " beyond the frequency window",
                          need_freq);
  }
  const double need_time = phi.freq_support_radius();
  Complex lhs = 0.0;
  if (p.time_is_measure()) {
    const AtomicMeasure& time = p.time_measure();
    if (need_time > time.window_radius()) {
      throw TruncationError("verify_pairing: transformed test function reaches radius " +
                                fmt(need_time) + " beyond the time window",
                            need_time);
    }
    lhs = pairing(time, [&](const Vec& x) { return phi.transform(x); });
  } else {
    const ExpSum& f = p.time_density();
    const double band = f.max_frequency_norm() + 1.0;
    const int panels = std::max(4, static_cast<int>(std::ceil(2.0 * need_time * band / 4.0)) + 4);
    lhs = detail::integrate_box(p.dim(), zeros(p.dim()), need_time, panels,
                                [&](const Vec& x) { return eval(f, x) * phi.transform(x); });
  }
  const Complex rhs = pairing(freq, [&](const Vec& y) { return phi.value(y); });
  return std::abs(lhs - rhs);
}

struct PoissonResult {
  Complex lattice_sum;
  Complex dual_sum;
  double residual;
};

/// sum_{lambda in L} phi(lambda) against |det A|^{-1} sum_{y in L*} phi-hat(y),
/// both truncated to balls.
inline PoissonResult poisson_check(const TestFunction& phi, const Lattice& lattice,
                                   double radius = 8.0, std::optional<double> dual_radius = {}) {
  check_dim(phi.dim(), lattice.dim(), "poisson_check");
  const double rd = dual_radius.value_or(radius);
  const double need = phi.center().norm() + phi.time_support_radius();
  if (need > radius) {
    throw TruncationError("poisson_check: test function support needs radius " + fmt(need),
                          need);
  }
  if (phi.freq_support_radius() > rd) {
    throw TruncationError("poisson_check: transform support needs dual radius " +
                              fmt(phi.freq_support_radius()),
                          phi.freq_support_radius());
  }
  PoissonResult r{};
  for (const Vec& x : enumerate_in_ball(Coset(lattice), radius)) r.lattice_sum += phi.value(x);
  for (const Vec& y : enumerate_in_ball(Coset(dual(lattice)), rd)) r.dual_sum += phi.transform(y);
  r.dual_sum /= lattice.det_abs();
  r.residual = std::abs(r.lattice_sum - r.dual_sum);
  return r;
}

// ---------------------------------------------------------------------------
// Mass bounds
// ---------------------------------------------------------------------------

/// A radial weight w >= 0 together with the constants
/// C'(R) = sup_{|x| >= R} w(x) (1 + |x|)^{d+1}.
struct MassProfile {
  int dim = 1;
  std::function<double(const Vec&)> abs_value;
  std::function<double(double)> weighted_tail_sup;
  /// Radius outside which the weight vanishes (infinity if none).
  double support = kInf;
};

inline MassProfile profile_of(const TestFunction& phi) {
  MassProfile m;
  m.dim = phi.dim();
  m.abs_value = [phi](const Vec& x) { return std::abs(phi.value(x)); };
  const double p = phi.dim() + 1.0;
  m.weighted_tail_sup = [phi, p](double r) { return phi.weighted_tail_sup(p, r); };
  if (phi.kind() == TestFunction::Kind::bump) m.support = phi.width();
  return m;
}

inline MassProfile profile_of(const BumpFunction& psi) {
  MassProfile m;
  m.dim = psi.dim();
  m.abs_value = [psi](const Vec& x) { return psi.value(x); };
  const double p = psi.dim() + 1.0;
  m.weighted_tail_sup = [psi, p](double r) { return psi.weighted_sup(p, r); };
  m.support = psi.support_radius();
  return m;
}

/// |psi-hat| bounded through its nonincreasing envelope.
inline MassProfile transform_profile_of(const BumpFunction& psi) {
  MassProfile m;
  m.dim = psi.dim();
  m.abs_value = [psi](const Vec& y) {
    const double r = y.norm();
    return std::abs(psi.transform_radial(r)) + psi.transform_error(r);
  };
  const double p = psi.dim() + 1.0;
  m.weighted_tail_sup = [psi, p](double r0) {
    double best = 0.0;
    double r = std::max(r0, 0.0);
    const double step = 0.02 / psi.support_radius();
    while (true) {
      const double next = r + step + 0.01 * r;
      const double v = psi.transform_envelope(r) * std::pow(1.0 + next, p);
      best = std::max(best, v);
      if (v < 1e-30 && r > 200.0 / psi.support_radius()) break;
      r = next;
    }
    return best;
  };
  return m;
}

struct MassReport {
  /// Bound on sup_t sum |w(lambda - t)| |c_lambda|.
  double total_bound = 0.0;
  /// Radius with sum_{|lambda - t| > r} |w(lambda - t)| |c_lambda| < eps.
  double tail_radius = 0.0;
  double translation_bound = 0.0;
  /// C with |nu|(B(t, r)) <= C (1 + r)^d for every t.
  double covering_constant = 0.0;
  /// sup w(x) (1 + |x|)^{d+1}.
  double weight_constant = 0.0;
};

/// Number of unit balls per (1 + r)^d needed to cover a ball of radius r:
/// cubes of side s = 2(1 - delta)/sqrt(d) fit in unit balls.
inline double covering_factor(int d) {
  const double s = 2.0 * (1.0 - 1e-9) / std::sqrt(static_cast<double>(d));
  return std::pow(2.0 / s * std::max(1.0, s), d);
}

/// Integral estimate of the mass of a translation bounded measure seen
/// through a decaying weight: total <= C C' (d + 1), tail beyond R <=
/// C C'(R) (d + 1) / (1 + R).
inline MassReport schwartz_mass_report(const MassProfile& w, const AtomicMeasure& nu, double eps) {
  check_dim(w.dim, nu.dim(), "schwartz_mass_report");
  if (!(eps > 0.0)) throw PreconditionError("schwartz_mass_report: eps must be positive");
  MassReport rep;
  const int d = nu.dim();
  rep.translation_bound = translation_bound(nu);
  rep.covering_constant = rep.translation_bound * covering_factor(d);
  rep.weight_constant = w.weighted_tail_sup(0.0);
  rep.total_bound = rep.covering_constant * rep.weight_constant * (d + 1);
  auto tail = [&](double r) {
    if (r >= w.support) return 0.0;
    return rep.covering_constant * w.weighted_tail_sup(r) * (d + 1) / (1.0 + r);
  };
  if (tail(0.0) < eps) {
    rep.tail_radius = 0.0;
    return rep;
  }
  double hi = 1.0;
  while (tail(hi) >= eps) {
    hi *= 2.0;
    if (hi > 1e12) throw Error("schwartz_mass_report: no finite tail radius");
  }
  double lo = hi / 2.0 < 1.0 ? 0.0 : hi / 2.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) < eps ? hi : lo) = mid;
  }
  rep.tail_radius = hi;
  return rep;
}

/// Direct sum_{lambda} w(lambda - t) |c_lambda| restricted to |lambda - t| > r.
inline double direct_weighted_mass(const MassProfile& w, const AtomicMeasure& nu, const Vec& t,
                                   double r = -1.0) {
  double s = 0.0;
  for (const Atom& a : nu.atoms()) {
    const Vec x = a.point - t;
    if (x.norm() <= r) continue;
    s += w.abs_value(x) * std::abs(a.mass);
  }
  return s;
}

struct MassSupResult {
  /// max over atoms of |c_lambda - (psi * nu)(lambda)|.
  double residual = 0.0;
  double max_mass = 0.0;
  /// Integral bound on sup |nu(lambda)| through the spectrum.
  double bound = 0.0;
  bool bound_holds = false;
};

/// Recovers the masses from the spectrum through psi * nu, which equals nu at
/// its atoms when the bump is narrower than half the separation, and checks
/// sup |c_lambda| against the integral bound over |psi-hat| d|nu-hat|.
inline MassSupResult mass_sup_check(const FourierPair& p, const BumpFunction& psi,
                                    double tol = 1e-8) {
  const AtomicMeasure& time = p.time_measure();
  const double sep = min_separation(time);
  if (!(psi.support_radius() < 0.5 * sep)) {
    throw PreconditionError("mass_sup_check: bump support must be below half the separation");
  }
  const ExpSum g = convolve_bump(psi, p, tol);
  MassSupResult r;
  for (const Atom& a : time.atoms()) {
    r.residual = std::max(r.residual, std::abs(a.mass - eval(g, a.point)));
    r.max_mass = std::max(r.max_mass, std::abs(a.mass));
  }
  r.bound = schwartz_mass_report(transform_profile_of(psi), p.freq_side(), 0.5).total_bound;
  r.bound_holds = r.max_mass <= r.bound;
  return r;
}

}  // namespace fqc
