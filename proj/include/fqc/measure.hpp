// Truncated atomic measures sum_lambda c_lambda delta_lambda carrying the
// radius of the window they were cut from.
#pragma once

#include "fqc/detail/point_index.hpp"
#include "fqc/lattice.hpp"
#include "fqc/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace fqc {

/// Atoms closer than this are considered the same point.
inline constexpr double kAtomTol = 1e-9;

struct Atom {
  Vec point;
  Complex mass;
};

inline double min_separation(const std::vector<Atom>& atoms);

class AtomicMeasure {
 public:
  explicit AtomicMeasure(int dim = 1) : dim_(dim), window_(0.0) { check_supported_dim(dim, "AtomicMeasure"); }

  /// Atoms are stored ordered by norm, then lexicographically. A window of
  /// +infinity marks an exact finite object.
  AtomicMeasure(int dim, std::vector<Atom> atoms, double window_radius,
                std::optional<double> sep_radius = std::nullopt)
      : AtomicMeasure(dim, std::move(atoms), window_radius, sep_radius, true) {}

  /// For atoms already known to be pairwise distinct (and to respect any
  /// declared sep_radius), such as the output of an isometry or of a merging
  /// accumulator; skips the separation pass.
  struct Distinct {};
  AtomicMeasure(Distinct, int dim, std::vector<Atom> atoms, double window_radius,
                std::optional<double> sep_radius = std::nullopt)
      : AtomicMeasure(dim, std::move(atoms), window_radius, sep_radius, false) {}

  int dim() const { return dim_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double window_radius() const { return window_; }
  const std::optional<double>& sep_radius() const { return sep_; }

  double total_variation() const {
    double s = 0.0;
    for (const Atom& a : atoms_) s += std::abs(a.mass);
    return s;
  }

  double max_mass() const {
    double s = 0.0;
    for (const Atom& a : atoms_) s = std::max(s, std::abs(a.mass));
    return s;
  }

 private:
  AtomicMeasure(int dim, std::vector<Atom> atoms, double window_radius, std::optional<double> sep_radius,
                bool check_separation)
      : dim_(dim), atoms_(std::move(atoms)), window_(window_radius), sep_(sep_radius) {
    check_supported_dim(dim, "AtomicMeasure");
    if (!(window_radius >= 0.0)) {
      throw PreconditionError("AtomicMeasure: window_radius must be nonnegative");
    }
    if (sep_ && !(*sep_ >= 0.0)) throw PreconditionError("AtomicMeasure: sep_radius must be nonnegative");
    const double reach = window_radius * (1.0 + 1e-12) + 1e-12;
    for (const Atom& a : atoms_) {
      check_dim(a.point.size(), dim, "AtomicMeasure atom");
      if (!a.point.allFinite() || !std::isfinite(a.mass.real()) || !std::isfinite(a.mass.imag())) {
        throw PreconditionError("AtomicMeasure: non-finite atom");
      }
      if (a.point.norm() > reach) {
        throw PreconditionError("AtomicMeasure: atom outside the window radius");
      }
    }
    std::vector<std::pair<double, std::size_t>> order(atoms_.size());
    for (std::size_t i = 0; i < atoms_.size(); ++i) order[i] = {atoms_[i].point.squaredNorm(), i};
    std::sort(order.begin(), order.end(), [this](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return lex_less(atoms_[a.second].point, atoms_[b.second].point);
    });
    std::vector<Atom> sorted;
    sorted.reserve(atoms_.size());
    for (const auto& [n2, i] : order) sorted.push_back(std::move(atoms_[i]));
    atoms_ = std::move(sorted);
    if (!check_separation) return;
    const double sep = min_separation(atoms_);
    if (sep <= kAtomTol) throw PreconditionError("AtomicMeasure: atoms are not pairwise distinct");
    if (sep_ && sep < *sep_ * (1.0 - 1e-12)) {
      throw PreconditionError("AtomicMeasure: declared sep_radius " + fmt(*sep_) +
                              " exceeds the minimum separation " + fmt(sep));
    }
  }


  int dim_;
  std::vector<Atom> atoms_;
  double window_;
  std::optional<double> sep_;
};

namespace detail {

/// Minimum distance among pairs closer than `cell`, or +infinity if none is.
inline double min_separation_below(const std::vector<Atom>& atoms, double cell) {
  PointIndex index(static_cast<int>(atoms[0].point.size()), cell);
  index.reserve(atoms.size());
  for (const Atom& a : atoms) index.insert(a.point);
  double best = cell;
  bool hit = false;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    index.for_each_within(atoms[i].point, best, [&](std::size_t j) {
      if (j == i) return;
      best = std::min(best, (index.point(j) - atoms[i].point).norm());
      hit = true;
    });
  }
  return hit ? best : kInf;
}

}  // namespace detail

/// Exact minimum pairwise distance; +infinity for fewer than two atoms. A grid
/// at the mean spacing settles the usual case; otherwise a few lexicographic
/// neighbours give an upper bound to grid with.
inline double min_separation(const std::vector<Atom>& atoms) {
  if (atoms.size() < 2) return kInf;
  const int d = static_cast<int>(atoms[0].point.size());
  Vec lo = atoms[0].point;
  Vec hi = atoms[0].point;
  for (const Atom& a : atoms) {
    lo = lo.cwiseMin(a.point);
    hi = hi.cwiseMax(a.point);
  }
  const double volume = (hi - lo).prod();
  if (volume > 0.0) {
    const double spacing = std::pow(volume / static_cast<double>(atoms.size()), 1.0 / d);
    const double best = detail::min_separation_below(atoms, spacing);
    if (std::isfinite(best)) return best;
  }
  std::vector<const Vec*> pts;
  pts.reserve(atoms.size());
  for (const Atom& a : atoms) pts.push_back(&a.point);
  std::sort(pts.begin(), pts.end(), [](const Vec* a, const Vec* b) { return lex_less(*a, *b); });
  double delta = kInf;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < std::min(pts.size(), i + 9); ++j) {
      delta = std::min(delta, (*pts[j] - *pts[i]).norm());
    }
  }
  if (!(delta > 0.0)) return delta;
  return std::min(delta, detail::min_separation_below(atoms, delta));
}

inline double min_separation(const AtomicMeasure& nu) { return min_separation(nu.atoms()); }

/// Point lookup of atoms of a measure.
class AtomLookup {
 public:
  explicit AtomLookup(const AtomicMeasure& nu, double cell = 0.25)
      : nu_(&nu), index_(nu.dim(), cell) {
    index_.reserve(nu.size());
    for (const Atom& a : nu.atoms()) index_.insert(a.point);
  }

  /// Index of the atom within `tol` of p, or npos.
  std::size_t find(const Vec& p, double tol = kAtomTol) const { return index_.find(p, tol); }

  /// Mass at p, 0 when no atom is within `tol`.
  Complex mass_at(const Vec& p, double tol = kAtomTol) const {
    const std::size_t i = find(p, tol);
    return i == npos ? Complex(0.0) : nu_->atoms()[i].mass;
  }

  std::vector<std::size_t> within(const Vec& p, double radius) const {
    return index_.within(p, radius);
  }

  static constexpr std::size_t npos = detail::PointIndex::npos;

 private:
  const AtomicMeasure* nu_;
  detail::PointIndex index_;
};

/// Unit masses on (L + a) inside B(0, R).
inline AtomicMeasure comb(const Coset& c, double radius,
                          std::size_t cap = kDefaultEnumerationCap) {
  const auto pts = enumerate_in_ball(c, radius, cap);
  std::vector<Atom> atoms;
  atoms.reserve(pts.size());
  for (const Vec& p : pts) atoms.push_back({p, 1.0});
  const double gap = shortest_vector_length(c.lattice()) * (1.0 - 1e-12);
  if (gap > 2.0 * kAtomTol) return AtomicMeasure(AtomicMeasure::Distinct{}, c.dim(), std::move(atoms), radius, gap);
  return AtomicMeasure(c.dim(), std::move(atoms), radius, gap);
}

/// Shift nu_t with pairing(nu_t, g) = pairing(nu, g(. + t)): atoms move to
/// lambda + t and the window grows by |t|.
inline AtomicMeasure translate(const AtomicMeasure& nu, const Vec& t) {
  check_dim(t.size(), nu.dim(), "translate");
  std::vector<Atom> atoms = nu.atoms();
  for (Atom& a : atoms) a.point += t;
  return AtomicMeasure(AtomicMeasure::Distinct{}, nu.dim(), std::move(atoms), nu.window_radius() + t.norm(),
                       nu.sep_radius());
}

inline AtomicMeasure scale_masses(const AtomicMeasure& nu, Complex alpha) {
  std::vector<Atom> atoms = nu.atoms();
  for (Atom& a : atoms) a.mass *= alpha;
  return AtomicMeasure(AtomicMeasure::Distinct{}, nu.dim(), std::move(atoms), nu.window_radius(),
                       nu.sep_radius());
}

/// Atoms with |lambda| <= R; the window becomes min(R, old window).
inline AtomicMeasure restrict_to_ball(const AtomicMeasure& nu, double radius) {
  std::vector<Atom> atoms;
  for (const Atom& a : nu.atoms()) {
    if (a.point.norm() <= radius) atoms.push_back(a);
  }
  return AtomicMeasure(AtomicMeasure::Distinct{}, nu.dim(), std::move(atoms), std::min(radius, nu.window_radius()),
                       nu.sep_radius());
}

/// Sum of two measures; atoms within kAtomTol are merged. The window is the
/// smaller of the two.
inline AtomicMeasure add_measures(const AtomicMeasure& a, const AtomicMeasure& b) {
  check_dim(a.dim(), b.dim(), "add_measures");
  detail::PointAccumulator acc(a.dim(), kAtomTol, a.size() + b.size());
  for (const Atom& x : a.atoms()) acc.add(x.point, x.mass);
  for (const Atom& x : b.atoms()) acc.add(x.point, x.mass);
  const double window = std::min(a.window_radius(), b.window_radius());
  std::vector<Atom> atoms;
  atoms.reserve(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc.point(i).norm() <= window) atoms.push_back({acc.point(i), acc.mass(i)});
  }
  return AtomicMeasure(AtomicMeasure::Distinct{}, a.dim(), std::move(atoms), window);
}

template <class G>
Complex pairing(const AtomicMeasure& nu, G&& g) {
  Complex s = 0.0;
  for (const Atom& a : nu.atoms()) s += a.mass * Complex(g(a.point));
  return s;
}

namespace detail {

inline double ball_mass(const AtomicMeasure& nu, const AtomLookup& look, const Vec& c) {
  double s = 0.0;
  for (std::size_t i : look.within(c, 1.0)) {
    const Atom& a = nu.atoms()[i];
    if ((a.point - c).squaredNorm() < 1.0) s += std::abs(a.mass);
  }
  return s;
}

}  // namespace detail

/// sup over centres t of sum_{|lambda - t| < 1} |c_lambda| on the window.
/// Exact in dimensions 1 and 2 (extremal balls pass through atoms); in
/// dimension 3 the centres are the atoms and a 0.1 grid around them.
inline double translation_bound(const AtomicMeasure& nu) {
  const auto& at = nu.atoms();
  if (at.empty()) return 0.0;
  const int d = nu.dim();
  if (d == 1) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(at.size());
    for (const Atom& a : at) pts.emplace_back(a.point[0], std::abs(a.mass));
    std::sort(pts.begin(), pts.end());
    double best = 0.0;
    double run = 0.0;
    std::size_t hi = 0;
    for (std::size_t lo = 0; lo < pts.size(); ++lo) {
      while (hi < pts.size() && pts[hi].first < pts[lo].first + 2.0) run += pts[hi++].second;
      best = std::max(best, run);
      run -= pts[lo].second;
    }
    return best;
  }
  const AtomLookup look(nu, 1.0);
  double best = 0.0;
  for (const Atom& a : at) best = std::max(best, detail::ball_mass(nu, look, a.point));
  if (d == 2) {
    const double rho = 1.0 - 1e-12;
    for (std::size_t i = 0; i < at.size(); ++i) {
      for (std::size_t j : look.within(at[i].point, 2.0)) {
        if (j <= i) continue;
        const Vec p = at[i].point;
        const Vec q = at[j].point;
        const Vec mid = 0.5 * (p + q);
        const double half = 0.5 * (q - p).norm();
        if (half >= rho) continue;
        const double h = std::sqrt(rho * rho - half * half);
        Vec n(2);
        n << -(q - p)[1], (q - p)[0];
        n /= n.norm();
        best = std::max(best, detail::ball_mass(nu, look, mid + h * n));
        best = std::max(best, detail::ball_mass(nu, look, mid - h * n));
      }
    }
    return best;
  }
  detail::PointIndex seen(d, 0.05);
  for (const Atom& a : at) {
    Vec base(d);
    for (int k = 0; k < d; ++k) base[k] = std::nearbyint(a.point[k] / 0.1) * 0.1;
    for (int ix = -10; ix <= 10; ++ix) {
      for (int iy = -10; iy <= 10; ++iy) {
        for (int iz = -10; iz <= 10; ++iz) {
          Vec c = base;
          c[0] += 0.1 * ix;
          c[1] += 0.1 * iy;
          c[2] += 0.1 * iz;
          if ((c - a.point).norm() >= 1.0) continue;
          if (seen.find(c, 0.01) != detail::PointIndex::npos) continue;
          seen.insert(c);
          best = std::max(best, detail::ball_mass(nu, look, c));
        }
      }
    }
  }
  return best;
}

/// Smallest C with |nu|(B(0, r)) <= C (1 + r)^d for all r up to the window,
/// evaluated at the atom radii where the ratio peaks.
inline double growth_fit(const AtomicMeasure& nu) {
  if (nu.window_radius() < 2.0) throw PreconditionError("growth_fit: window radius must be at least 2");
  std::vector<std::pair<double, double>> rm;
  rm.reserve(nu.size());
  for (const Atom& a : nu.atoms()) rm.emplace_back(a.point.norm(), std::abs(a.mass));
  std::sort(rm.begin(), rm.end());
  double best = 0.0;
  double cum = 0.0;
  for (std::size_t i = 0; i < rm.size(); ++i) {
    cum += rm[i].second;
    if (i + 1 < rm.size() && rm[i + 1].first == rm[i].first) continue;
    best = std::max(best, cum / std::pow(1.0 + rm[i].first, nu.dim()));
  }
  return best;
}

}  // namespace fqc
