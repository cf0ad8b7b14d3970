// Detection of finite unions of translated lattices in point sets, the
// factorization mu = sum_j F_j Delta^j over such a union and the periodic
// spectral parts nu^j.
#pragma once

#include "fqc/bump.hpp"
#include "fqc/detail/point_index.hpp"
#include "fqc/exp_sum.hpp"
#include "fqc/fourier_pair.hpp"
#include "fqc/lattice.hpp"
#include "fqc/measure.hpp"
#include "fqc/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace fqc {

struct DetectOptions {
  std::size_t max_cosets = 8;
  /// Membership tolerance (absolute).
  double tol = 1e-6;
  /// Fewest points a detected coset must explain.
  std::size_t min_support = 4;
  /// Difference-vector clusters kept as generator candidates.
  std::size_t clusters = 12;
  /// Window radius of the sample; 0 uses the largest point norm.
  double window_radius = 0.0;
};

/// Either a list of cosets covering the points or a failure description.
struct LatticeUnion {
  bool found = false;
  std::vector<Coset> cosets;
  std::string failure;
  /// Index of the coset explaining each input point (when found).
  std::vector<std::size_t> assignment;
};

namespace detail {

/// Euclidean distance from x to the translated lattice L + a is at most tol.
inline bool near_coset(const Lattice& lattice, const Vec& shift, const Vec& x, double tol) {
  const Vec u = lattice.coords(x - shift);
  const Vec frac = u - u.unaryExpr([](double v) { return std::nearbyint(v); });
  return lattice.point(frac).norm() <= tol;
}

inline Vec canonical_sign(Vec v) {
  const double scale = v.norm();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12 * scale) {
      if (v[i] < 0) v = -v;
      break;
    }
  }
  return v;
}

struct Cluster {
  Vec v;
  double count;
};

inline std::vector<Cluster> difference_clusters(const std::vector<Vec>& pts, double tol,
                                                std::size_t keep, double window) {
  const int d = static_cast<int>(pts[0].size());
  const std::size_t n = pts.size();
  const double vol = unit_ball_volume(d) * std::pow(std::max(window, 1e-9), d);
  const double spacing = std::max(std::pow(vol / static_cast<double>(n), 1.0 / d), 1e-6);
  PointIndex index(d, spacing);
  index.reserve(n);
  for (const Vec& p : pts) index.insert(p);
  const std::size_t k = std::min<std::size_t>(8 * d, n - 1);
  PointAccumulator acc(d, tol);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 2.0 * spacing;
    std::vector<std::size_t> near;
    for (int it = 0; it < 40; ++it) {
      near = index.within(pts[i], r);
      if (near.size() >= k + 1 || near.size() == n) break;
      r *= 1.5;
    }
    std::sort(near.begin(), near.end(), [&](std::size_t a, std::size_t b) {
      const double da = (pts[a] - pts[i]).squaredNorm();
      const double db = (pts[b] - pts[i]).squaredNorm();
      return da != db ? da < db : a < b;
    });
    std::size_t taken = 0;
    for (std::size_t j : near) {
      if (j == i) continue;
      if (taken++ >= k) break;
      // Each unordered pair is counted from its smaller index.
      if (j < i) continue;
      acc.add(canonical_sign(pts[j] - pts[i]), 1.0);
    }
  }
  std::vector<Cluster> cl;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double c = acc.mass(i).real();
    if (c >= 2.0) cl.push_back({acc.point(i), c});
  }
  std::sort(cl.begin(), cl.end(), [](const Cluster& a, const Cluster& b) {
    if (a.count != b.count) return a.count > b.count;
    const double na = a.v.squaredNorm();
    const double nb = b.v.squaredNorm();
    if (na != nb) return na < nb;
    return lex_less(a.v, b.v);
  });
  if (cl.size() > keep) cl.resize(keep);
  return cl;
}

struct Candidate {
  Lattice lattice;
  std::vector<std::size_t> members;
};

inline bool candidate_better(const Candidate& a, const Candidate& b) {
  if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
  const double da = a.lattice.det_abs();
  const double db = b.lattice.det_abs();
  if (std::abs(da - db) > 1e-9 * std::max(da, db)) return da < db;
  double la = 0.0;
  double lb = 0.0;
  for (int i = 0; i < a.lattice.dim(); ++i) {
    la += a.lattice.basis().col(i).norm();
    lb += b.lattice.basis().col(i).norm();
  }
  if (std::abs(la - lb) > 1e-9 * std::max(la, lb)) return la < lb;
  for (int i = 0; i < a.lattice.dim(); ++i) {
    if (lex_less(a.lattice.basis().col(i), b.lattice.basis().col(i))) return true;
    if (lex_less(b.lattice.basis().col(i), a.lattice.basis().col(i))) return false;
  }
  return false;
}

/// Least-squares fit of m_i = a + B k_i over the members, B the lattice basis.
inline Coset refine_coset(const std::vector<Vec>& pts, const std::vector<std::size_t>& members,
                          const Lattice& lattice, const Vec& base) {
  const int d = lattice.dim();
  const Eigen::Index unknowns = d + d * d;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(members.size()) * d, unknowns);
  Eigen::VectorXd rhs(a.rows());
  a.setZero();
  Eigen::Index row = 0;
  for (std::size_t m : members) {
    const Vec k = lattice.coords(pts[m] - base).unaryExpr([](double v) { return std::nearbyint(v); });
    for (int c = 0; c < d; ++c) {
      a(row, c) = 1.0;
      for (int j = 0; j < d; ++j) a(row, d + c * d + j) = k[j];
      rhs(row) = pts[m][c];
      ++row;
    }
  }
  const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(rhs);
  // Round-off below this level is cleared so exact inputs give exact cosets.
  auto clean = [](double v) { return std::abs(v) < 1e-13 ? 0.0 : v; };
  Vec shift(d);
  Mat basis(d, d);
  for (int c = 0; c < d; ++c) {
    shift[c] = clean(sol(c));
    for (int j = 0; j < d; ++j) basis(c, j) = clean(sol(d + c * d + j));
  }
  return Coset(reduced(Lattice(basis)), shift);
}

}  // namespace detail

/// Greedy peeling of translated lattices from a uniformly discrete point set
/// (dimension 1 or 2). Each round proposes lattices spanned by frequent
/// nearest-neighbour difference vectors, keeps the coset through the
/// smallest remaining point that is complete on the shrunken window and
/// explains the most points, and removes its members.
inline LatticeUnion detect_lattice_union(const std::vector<Vec>& points, const DetectOptions& opt = {}) {
  LatticeUnion out;
  if (points.empty()) {
    out.found = true;
    return out;
  }
  const int d = static_cast<int>(points[0].size());
  if (d > 2) throw PreconditionError("detect_lattice_union: only dimensions 1 and 2 are supported");
  if (points.size() > 10000) throw PreconditionError("detect_lattice_union: more than 10^4 points");
  for (const Vec& p : points) check_dim(p.size(), d, "detect_lattice_union");
  {
    std::vector<Atom> atoms;
    for (const Vec& p : points) atoms.push_back({p, 1.0});
    if (!(min_separation(atoms) > opt.tol)) {
      throw PreconditionError("detect_lattice_union: points are not uniformly discrete");
    }
  }
  double window = opt.window_radius;
  if (window <= 0.0) {
    for (const Vec& p : points) window = std::max(window, p.norm());
  }
  out.assignment.assign(points.size(), static_cast<std::size_t>(-1));
  std::vector<std::size_t> remaining(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) remaining[i] = i;

  while (!remaining.empty()) {
    if (out.cosets.size() >= opt.max_cosets) {
      out.failure = "no covering with at most " + std::to_string(opt.max_cosets) + " cosets";
      out.cosets.clear();
      return out;
    }
    std::vector<Vec> rem_pts;
    for (std::size_t i : remaining) rem_pts.push_back(points[i]);
    if (rem_pts.size() < opt.min_support) {
      out.failure = std::to_string(rem_pts.size()) + " points left, below the minimum support";
      out.cosets.clear();
      return out;
    }
    const auto clusters = detail::difference_clusters(rem_pts, opt.tol, opt.clusters, window);
    if (clusters.empty()) {
      out.failure = "no repeated difference vectors among the remaining points";
      out.cosets.clear();
      return out;
    }
    std::vector<Lattice> lattices;
    auto propose = [&](const Mat& basis) {
      try {
        const Lattice l = reduced(Lattice(basis));
        for (const Lattice& seen : lattices) {
          if (same_lattice(seen, l, 1e-9)) return;
        }
        lattices.push_back(l);
      } catch (const SingularLattice&) {
      }
    };
    if (d == 1) {
      for (const auto& c : clusters) {
        Mat b(1, 1);
        b(0, 0) = c.v[0];
        propose(b);
      }
    } else {
      for (std::size_t i = 0; i < clusters.size(); ++i) {
        for (std::size_t j = i + 1; j < clusters.size(); ++j) {
          const Vec& u = clusters[i].v;
          const Vec& w = clusters[j].v;
          if (std::abs(u[0] * w[1] - u[1] * w[0]) <= 1e-6 * u.norm() * w.norm()) continue;
          Mat b(2, 2);
          b.col(0) = u;
          b.col(1) = w;
          propose(b);
        }
      }
    }
    std::size_t base_local = 0;
    for (std::size_t i = 1; i < rem_pts.size(); ++i) {
      if (norm_lex_less(rem_pts[i], rem_pts[base_local])) base_local = i;
    }
    const Vec base = rem_pts[base_local];
    detail::PointIndex index(d, std::max(opt.tol * 4.0, 1e-9));
    for (const Vec& p : rem_pts) index.insert(p);
    std::optional<detail::Candidate> best;
    for (const Lattice& l : lattices) {
      const double inner = window - cell_diameter(l) - opt.tol;
      bool complete = true;
      if (inner > 0.0) {
        try {
          const auto expected = enumerate_in_ball(Coset(l, base), inner, 4 * rem_pts.size() + 64);
          for (const Vec& q : expected) {
            if (index.find(q, opt.tol) == detail::PointIndex::npos) {
              complete = false;
              break;
            }
          }
        } catch (const EnumerationCapExceeded&) {
          complete = false;
        }
      }
      if (!complete) continue;
      detail::Candidate cand{l, {}};
      for (std::size_t i = 0; i < rem_pts.size(); ++i) {
        if (detail::near_coset(l, base, rem_pts[i], opt.tol)) {
          cand.members.push_back(i);
        }
      }
      if (cand.members.size() < opt.min_support) continue;
      if (!best || detail::candidate_better(cand, *best)) best = std::move(cand);
    }
    if (!best) {
      out.failure = "no candidate lattice forms a complete coset through the remaining points";
      out.cosets.clear();
      return out;
    }
    Coset coset = detail::refine_coset(rem_pts, best->members, best->lattice, base);
    const std::size_t id = out.cosets.size();
    out.cosets.push_back(coset);
    std::vector<bool> taken(rem_pts.size(), false);
    for (std::size_t m : best->members) taken[m] = true;
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (taken[i]) {
        out.assignment[remaining[i]] = id;
      } else {
        next.push_back(remaining[i]);
      }
    }
    remaining = std::move(next);
  }
  out.found = true;
  return out;
}

/// True when every point lies on one of the cosets and every coset point in
/// the window shrunk by the coset's cell diameter is among the points.
inline bool mutual_coverage(const std::vector<Vec>& points, const std::vector<Coset>& cosets,
                            double window, double tol = 1e-6) {
  if (points.empty()) return cosets.empty();
  const int d = static_cast<int>(points[0].size());
  for (const Vec& p : points) {
    bool hit = false;
    for (const Coset& c : cosets) {
      if (detail::near_coset(c.lattice(), c.shift(), p, tol)) {
        hit = true;
        break;
      }
    }
    if (!hit) return false;
  }
  detail::PointIndex index(d, std::max(4.0 * tol, 1e-9));
  for (const Vec& p : points) index.insert(p);
  for (const Coset& c : cosets) {
    const double inner = window - cell_diameter(c.lattice()) - tol;
    if (inner <= 0.0) continue;
    for (const Vec& q : enumerate_in_ball(c, inner)) {
      if (index.find(q, tol) == detail::PointIndex::npos) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Factorization and spectral parts
// ---------------------------------------------------------------------------

struct Decomposition {
  std::vector<Coset> cosets;
  /// F_j with frequencies in the fundamental parallelepiped of L_j*.
  std::vector<ExpSum> factors;
  /// Atoms of the time side per coset.
  std::vector<std::size_t> coset_sizes;
  double eta = 0.0;
  /// max over atoms of |F_j(lambda) - mu(lambda)|.
  double residual = 0.0;
  /// Tail charged to psi * mu.
  double bump_tail = 0.0;

  /// nu^j, periodic under L_j*, and the lattices L_j*.
  std::vector<AtomicMeasure> spectral_parts;
  std::vector<Lattice> period_lattices;
  double periodicity_residual = 0.0;
  /// Atom-wise comparison of sum_j e(-<lambda_j, .>) nu^j with the spectrum;
  /// only evaluated when the coset lattices are pairwise commensurable.
  bool reconstruction_applicable = false;
  double reconstruction_residual = 0.0;
  double spectral_window = 0.0;
};

struct FactorOptions {
  /// Bump radius; 0 chooses 0.4 times the minimum separation.
  double eta = 0.0;
  double membership_tol = 1e-6;
  /// Allowed spectral tail of psi * mu.
  double bump_tol = 1e-8;
};

/// mu = sum_j F_j Delta^j with F_j obtained from g = psi * mu, which equals mu
/// on the support, by reducing its frequencies modulo L_j*.
inline Decomposition factor_measure(const FourierPair& p, const std::vector<Coset>& cosets,
                                    const FactorOptions& opt = {}) {
  const AtomicMeasure& mu = p.time_measure();
  const double sep = min_separation(mu);
  const double eta = opt.eta > 0.0 ? opt.eta : 0.4 * (std::isfinite(sep) ? sep : 1.0);
  if (!(eta < 0.5 * sep)) {
    throw PreconditionError("factor_measure: bump radius " + fmt(eta) +
                            " is not below half the separation " + fmt(sep));
  }
  Decomposition dec;
  dec.cosets = cosets;
  dec.eta = eta;
  dec.coset_sizes.assign(cosets.size(), 0);
  std::vector<std::size_t> owner(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    std::size_t hits = 0;
    for (std::size_t j = 0; j < cosets.size(); ++j) {
      if (detail::near_coset(cosets[j].lattice(), cosets[j].shift(), mu.atoms()[i].point,
                             opt.membership_tol)) {
        owner[i] = j;
        ++hits;
      }
    }
    if (hits == 0) throw PreconditionError("factor_measure: an atom lies on none of the cosets");
    if (hits > 1) throw PreconditionError("factor_measure: cosets overlap on the support");
    ++dec.coset_sizes[owner[i]];
  }
  const BumpFunction psi(mu.dim(), eta);
  const ExpSum g = convolve_bump(psi, p, opt.bump_tol);
  dec.bump_tail = g.tail_bound();
  for (const Coset& c : cosets) dec.factors.push_back(reduce_mod_dual(g, c.lattice(), c.shift()));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Atom& a = mu.atoms()[i];
    dec.residual = std::max(dec.residual, std::abs(eval(dec.factors[owner[i]], a.point) - a.mass));
  }
  return dec;
}

/// Fills nu^j = e(<lambda_j, .>) (F_j Delta^j)^, checks its periodicity under
/// the generators of L_j* on the window shrunk by each generator length and,
/// for commensurable cosets, compares sum_j e(-<lambda_j, .>) nu^j with the
/// spectrum of p.
inline Decomposition spectral_parts(const FourierPair& p, Decomposition dec) {
  const AtomicMeasure& freq = p.freq_side();
  const double rf = freq.window_radius();
  const double rt = p.time_measure().window_radius();
  dec.spectral_parts.clear();
  dec.period_lattices.clear();
  dec.periodicity_residual = 0.0;
  double common = rf;
  for (std::size_t j = 0; j < dec.cosets.size(); ++j) {
    const Coset& c = dec.cosets[j];
    const Lattice dl = reduced(dual(c.lattice()));
    const double diam = cell_diameter(dl);
    if (!(rf >= 3.0 * diam)) {
      throw TruncationError("spectral_parts: frequency window " + fmt(rf) +
                                " holds fewer than 3 periods of the dual lattice",
                            3.0 * diam);
    }
    const FourierPair base = pair_from_comb(c, rt, rf);
    const FourierPair prod = multiply_pair(base, dec.factors[j]);
    std::vector<Atom> atoms = prod.freq_side().atoms();
    for (Atom& a : atoms) a.mass *= cis(a.point.dot(c.shift()));
    AtomicMeasure nu(AtomicMeasure::Distinct{}, p.dim(), std::move(atoms), prod.freq_side().window_radius());
    const AtomLookup look(nu, 0.5);
    for (int k = 0; k < dl.dim(); ++k) {
      const Vec v = dl.generator(k);
      const double lim = (nu.window_radius() - v.norm()) * (1.0 - 1e-12);
      for (const Atom& a : nu.atoms()) {
        if (a.point.norm() >= lim) continue;
        dec.periodicity_residual =
            std::max(dec.periodicity_residual, std::abs(a.mass - look.mass_at(a.point + v)));
        dec.periodicity_residual =
            std::max(dec.periodicity_residual, std::abs(a.mass - look.mass_at(a.point - v)));
      }
    }
    common = std::min(common, nu.window_radius());
    dec.spectral_parts.push_back(std::move(nu));
    dec.period_lattices.push_back(dl);
  }
  common *= 1.0 - 1e-12;
  dec.spectral_window = common;
  dec.reconstruction_applicable = true;
  for (std::size_t i = 0; i < dec.cosets.size(); ++i) {
    for (std::size_t j = i + 1; j < dec.cosets.size(); ++j) {
      if (!commensurable(dec.cosets[i].lattice(), dec.cosets[j].lattice())) {
        dec.reconstruction_applicable = false;
      }
    }
  }
  dec.reconstruction_residual = 0.0;
  if (dec.reconstruction_applicable) {
    detail::PointAccumulator acc(p.dim(), kAtomTol, freq.size());
    for (const Atom& a : freq.atoms()) {
      if (a.point.norm() < common) acc.add(a.point, -a.mass);
    }
    for (std::size_t j = 0; j < dec.cosets.size(); ++j) {
      const Vec& shift = dec.cosets[j].shift();
      for (const Atom& a : dec.spectral_parts[j].atoms()) {
        if (a.point.norm() < common) acc.add(a.point, a.mass * cis(-a.point.dot(shift)));
      }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
      dec.reconstruction_residual = std::max(dec.reconstruction_residual, std::abs(acc.mass(i)));
    }
  }
  return dec;
}

/// Decomposition of a bare point set with unit masses after detection. Each
/// detected coset is factored against the exact spectrum of its own comb, so
/// the bump only has to separate points of one coset. A frequency radius of
/// 0 starts from 40 / eta and grows to whatever the bump tail requires.
inline Decomposition decompose_points(const std::vector<Vec>& points, const LatticeUnion& found,
                                      double freq_radius = 0.0, const FactorOptions& opt = {}) {
  if (!found.found) throw PreconditionError("decompose_points: no lattice union was detected");
  if (found.assignment.size() != points.size()) {
    throw PreconditionError("decompose_points: assignment does not match the point list");
  }
  Decomposition total;
  if (points.empty()) return total;
  const int d = static_cast<int>(points[0].size());
  double window = 0.0;
  for (const Vec& p : points) window = std::max(window, p.norm());
  total.eta = kInf;
  total.spectral_window = kInf;
  total.reconstruction_applicable = true;
  for (std::size_t j = 0; j < found.cosets.size(); ++j) {
    const Coset& c = found.cosets[j];
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (found.assignment[i] == j) atoms.push_back({points[i], 1.0});
    }
    AtomicMeasure time(d, std::move(atoms), window);
    const double sep = min_separation(time);
    const double eta = opt.eta > 0.0 ? opt.eta : 0.4 * (std::isfinite(sep) ? sep : 1.0);
    double rf = freq_radius > 0.0 ? freq_radius
                                  : std::max(40.0 / eta, 3.0 * cell_diameter(reduced(dual(c.lattice()))));
    FactorOptions fo = opt;
    fo.eta = eta;
    std::optional<Decomposition> dec;
    for (int attempt = 0; attempt < 4 && !dec; ++attempt) {
      try {
        FourierPair pj(time, pair_from_comb(c, window, rf).freq_side(),
                       {{"synthesized_from_coset", {{"coset", static_cast<double>(j)}, {"freq_radius", rf}}, 0.0}});
        dec = spectral_parts(pj, factor_measure(pj, {c}, fo));
      } catch (const TruncationError& e) {
        if (freq_radius > 0.0 || !std::isfinite(e.required_radius)) throw;
        rf = std::max(e.required_radius, 1.25 * rf);
      }
    }
    if (!dec) throw TruncationError("decompose_points: no sufficient frequency radius found", kInf);
    total.cosets.push_back(c);
    total.factors.push_back(dec->factors[0]);
    total.coset_sizes.push_back(dec->coset_sizes[0]);
    total.eta = std::min(total.eta, dec->eta);
    total.residual = std::max(total.residual, dec->residual);
    total.bump_tail = std::max(total.bump_tail, dec->bump_tail);
    total.spectral_parts.push_back(dec->spectral_parts[0]);
    total.period_lattices.push_back(dec->period_lattices[0]);
    total.periodicity_residual = std::max(total.periodicity_residual, dec->periodicity_residual);
    total.spectral_window = std::min(total.spectral_window, dec->spectral_window);
    total.reconstruction_residual += dec->reconstruction_residual;
  }
  for (std::size_t i = 0; i < total.cosets.size(); ++i) {
    for (std::size_t j = i + 1; j < total.cosets.size(); ++j) {
      if (!commensurable(total.cosets[i].lattice(), total.cosets[j].lattice())) {
        total.reconstruction_applicable = false;
      }
    }
  }
  if (!total.reconstruction_applicable) total.reconstruction_residual = 0.0;
  return total;
}

}  // namespace fqc
