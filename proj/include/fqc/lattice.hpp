// Full-rank lattices L = A(Z^d), their duals, cosets L + a and ball
// enumeration.
#pragma once

#include "fqc/detail/lll.hpp"
#include "fqc/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace fqc {

/// Bases whose condition number exceeds this are rejected as singular.
inline constexpr double kConditionLimit = 1e12;

/// Default cap on the number of points a single enumeration may produce.
inline constexpr std::size_t kDefaultEnumerationCap = 4'000'000;

/// Fractional coordinates this close to 1 are snapped to 0 by reduce_point.
inline constexpr double kReduceSnap = 1e-12;

class Lattice {
 public:
  /// Columns of `basis` are the generators.
  explicit Lattice(Mat basis) : basis_(std::move(basis)) {
    if (basis_.rows() != basis_.cols()) {
      throw DimensionMismatch("Lattice: basis must be square");
    }
    check_supported_dim(static_cast<int>(basis_.rows()), "Lattice");
    if (!basis_.allFinite()) throw SingularLattice("Lattice: basis has non-finite entries");
    Eigen::JacobiSVD<Mat> svd(basis_);
    const auto& s = svd.singularValues();
    const double smax = s.maxCoeff();
    const double smin = s.minCoeff();
    if (!(smin > 0.0) || smax / smin > kConditionLimit) {
      throw SingularLattice("Lattice: basis is singular or ill-conditioned (condition number " +
                            fmt(smin > 0.0 ? smax / smin : kInf) + ")");
    }
    inverse_ = basis_.inverse();
    det_abs_ = std::abs(basis_.determinant());
  }

  static Lattice integer(int d) { return Lattice(Mat::Identity(d, d)); }
  static Lattice scaled_integer(int d, double s) { return Lattice(s * Mat::Identity(d, d)); }

  int dim() const { return static_cast<int>(basis_.rows()); }
  const Mat& basis() const { return basis_; }
  const Mat& inverse() const { return inverse_; }
  double det_abs() const { return det_abs_; }
  Vec generator(int i) const { return basis_.col(i); }

  /// Real coordinates A^{-1} x.
  Vec coords(const Vec& x) const {
    check_dim(x.size(), dim(), "Lattice::coords");
    return inverse_ * x;
  }

  Vec point(const Vec& integer_coords) const { return basis_ * integer_coords; }

 private:
  Mat basis_;
  Mat inverse_;
  double det_abs_ = 0.0;
};

/// Dual lattice: basis is the inverse transpose, so <lambda, y> is an integer
/// for every lambda in L and y in the dual.
inline Lattice dual(const Lattice& lattice) { return Lattice(lattice.inverse().transpose()); }

/// True iff A^{-1} x is within `tol` (Euclidean, in coordinate space) of an
/// integer vector.
inline bool contains(const Lattice& lattice, const Vec& x, double tol) {
  const Vec u = lattice.coords(x);
  const Vec frac = u - u.unaryExpr([](double v) { return std::nearbyint(v); });
  return frac.norm() <= tol;
}

/// Representative r of x + L with A^{-1} r in [0, 1)^d.
inline Vec reduce_point(const Lattice& lattice, const Vec& x) {
  Vec u = lattice.coords(x);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    double f = u[i] - std::floor(u[i]);
    if (f >= 1.0 - kReduceSnap) f = 0.0;
    u[i] = f;
  }
  return lattice.point(u);
}

/// Lattice with an LLL-reduced basis; columns ordered by length then
/// lexicographically, each with its first significant coordinate positive.
inline Lattice reduced(const Lattice& lattice) {
  const int d = lattice.dim();
  std::vector<std::vector<long double>> rows(d, std::vector<long double>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) rows[i][j] = lattice.basis()(j, i);
  const auto red = detail::lll_reduce(rows);
  std::vector<Vec> cols;
  for (int i = 0; i < d; ++i) {
    Vec v(d);
    for (int j = 0; j < d; ++j) v[j] = static_cast<double>(red.basis[i][j]);
    const double scale = v.norm();
    for (int j = 0; j < d; ++j) {
      if (std::abs(v[j]) > 1e-12 * scale) {
        if (v[j] < 0) v = -v;
        break;
      }
    }
    cols.push_back(v);
  }
  std::sort(cols.begin(), cols.end(), [](const Vec& a, const Vec& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (std::abs(na - nb) > 1e-12 * std::max(na, nb)) return na < nb;
    return lex_less(b, a);
  });
  Mat basis(d, d);
  for (int i = 0; i < d; ++i) basis.col(i) = cols[i];
  return Lattice(basis);
}

/// Sum of generator lengths of the reduced basis; bounds the diameter of the
/// fundamental parallelepiped.
inline double cell_diameter(const Lattice& lattice) {
  const Lattice r = reduced(lattice);
  double s = 0.0;
  for (int i = 0; i < r.dim(); ++i) s += r.basis().col(i).norm();
  return s;
}

/// Equality of point sets: every generator of each lattice lies in the other.
inline bool same_lattice(const Lattice& a, const Lattice& b, double tol = 1e-9) {
  if (a.dim() != b.dim()) return false;
  for (int i = 0; i < a.dim(); ++i) {
    if (!contains(b, a.generator(i), tol) || !contains(a, b.generator(i), tol)) return false;
  }
  return true;
}

/// True when A^{-1} B is rational with denominators up to `max_den`, i.e. the
/// two lattices share a full-rank sublattice.
inline bool commensurable(const Lattice& a, const Lattice& b, int max_den = 64,
                          double tol = 1e-9) {
  if (a.dim() != b.dim()) return false;
  const Mat m = a.inverse() * b.basis();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      bool rational = false;
      for (int q = 1; q <= max_den && !rational; ++q) {
        const double v = q * m(i, j);
        rational = std::abs(v - std::nearbyint(v)) <= tol * q;
      }
      if (!rational) return false;
    }
  }
  return true;
}

/// A translated lattice L + a with a reduced into the fundamental
/// parallelepiped of L.
class Coset {
 public:
  Coset(Lattice lattice, const Vec& shift)
      : lattice_(std::move(lattice)), shift_(reduce_point(lattice_, shift)) {}

  explicit Coset(Lattice lattice) : Coset(lattice, zeros(lattice.dim())) {}

  const Lattice& lattice() const { return lattice_; }
  const Vec& shift() const { return shift_; }
  int dim() const { return lattice_.dim(); }

  bool contains_point(const Vec& x, double tol) const {
    return contains(lattice_, x - shift_, tol);
  }

 private:
  Lattice lattice_;
  Vec shift_;
};

inline double unit_ball_volume(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return kPi;
    default: return 4.0 / 3.0 * kPi;
  }
}

/// Points of (L + a) with |p| < R, each once, ordered by norm then
/// lexicographically.
inline std::vector<Vec> enumerate_in_ball(const Coset& coset, double radius,
                                          std::size_t cap = kDefaultEnumerationCap) {
  if (!(radius > 0.0)) throw PreconditionError("enumerate_in_ball: radius must be positive");
  const int d = coset.dim();
  const Lattice red = reduced(coset.lattice());
  const double estimate = unit_ball_volume(d) * std::pow(radius, d) / red.det_abs();
  if (!std::isfinite(estimate) || estimate > 2.0 * static_cast<double>(cap) + 16.0) {
    throw EnumerationCapExceeded("enumerate_in_ball: about " + fmt(estimate) +
                                 " points exceed the cap of " + std::to_string(cap));
  }
  const Vec& a = coset.shift();
  const Vec center = red.inverse() * (-a);
  std::vector<long long> lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    const double reach = radius * red.inverse().row(i).norm();
    lo[i] = static_cast<long long>(std::floor(center[i] - reach)) - 1;
    hi[i] = static_cast<long long>(std::ceil(center[i] + reach)) + 1;
  }
  std::vector<Vec> out;
  const double r2 = radius * radius;
  std::vector<long long> k = lo;
  Vec kv(d);
  while (true) {
    for (int i = 0; i < d; ++i) kv[i] = static_cast<double>(k[i]);
    Vec p = red.basis() * kv + a;
    if (p.squaredNorm() < r2) {
      out.push_back(p);
      if (out.size() > cap) {
        throw EnumerationCapExceeded("enumerate_in_ball: more than " + std::to_string(cap) +
                                     " points");
      }
    }
    int axis = 0;
    while (axis < d && ++k[axis] > hi[axis]) {
      k[axis] = lo[axis];
      ++axis;
    }
    if (axis == d) break;
  }
  std::sort(out.begin(), out.end(), norm_lex_less);
  return out;
}

/// Length of a shortest nonzero lattice vector.
inline double shortest_vector_length(const Lattice& lattice) {
  const Lattice red = reduced(lattice);
  double best = kInf;
  for (int i = 0; i < red.dim(); ++i) best = std::min(best, red.basis().col(i).norm());
  const auto pts = enumerate_in_ball(Coset(red), best * (1.0 + 1e-9));
  for (const Vec& p : pts) {
    const double n = p.norm();
    if (n > 1e-12 * best) best = std::min(best, n);
  }
  return best;
}

}  // namespace fqc
