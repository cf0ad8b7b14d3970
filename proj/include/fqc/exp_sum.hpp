// Finite exponential sums f(x) = sum_n c_n e(<x, gamma_n>) with e(t) =
// exp(2 pi i t), the algebra operations of the Wiener class and a ledger for
// the W-norm of dropped terms.
#pragma once

#include "fqc/detail/point_index.hpp"
#include "fqc/lattice.hpp"
#include "fqc/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace fqc {

inline constexpr double kDefaultMergeTol = 1e-9;
inline constexpr double kDefaultDropTol = 1e-14;

struct Term {
  Complex coef;
  Vec freq;
};

class ExpSum {
 public:
  explicit ExpSum(int dim = 1, double merge_tol = kDefaultMergeTol)
      : dim_(dim), merge_tol_(merge_tol) {
    check_supported_dim(dim, "ExpSum");
    if (!(merge_tol >= 0.0)) throw PreconditionError("ExpSum: merge_tol must be nonnegative");
  }

  /// Builds a normalized sum: equal frequencies merged, coefficients below
  /// `drop_tol` in modulus dropped and charged to the tail.
  static ExpSum from_terms(int dim, std::vector<Term> terms, double merge_tol = kDefaultMergeTol,
                           double drop_tol = kDefaultDropTol, double tail = 0.0) {
    ExpSum f(dim, merge_tol);
    f.tail_ = tail;
    for (const Term& t : terms) check_dim(t.freq.size(), dim, "ExpSum::from_terms");
    f.normalize(std::move(terms), drop_tol);
    return f;
  }

  static ExpSum constant(int dim, Complex c) { return from_terms(dim, {{c, zeros(dim)}}); }

  static ExpSum character(const Vec& freq, Complex c = 1.0) {
    return from_terms(static_cast<int>(freq.size()), {{c, freq}});
  }

  int dim() const { return dim_; }
  double merge_tol() const { return merge_tol_; }
  double tail_bound() const { return tail_; }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Copy with `extra` added to the tail ledger.
  ExpSum with_tail(double extra) const {
    if (!(extra >= 0.0)) throw PreconditionError("ExpSum::with_tail: charge must be nonnegative");
    ExpSum out = *this;
    out.tail_ += extra;
    return out;
  }

  double max_frequency_norm() const {
    double m = 0.0;
    for (const Term& t : terms_) m = std::max(m, t.freq.norm());
    return m;
  }

 private:
  void normalize(std::vector<Term> raw, double drop_tol) {
    std::stable_sort(raw.begin(), raw.end(),
                     [](const Term& a, const Term& b) { return lex_less(a.freq, b.freq); });
    detail::PointAccumulator acc(dim_, merge_tol_, raw.size());
    for (const Term& t : raw) acc.add(t.freq, t.coef);
    terms_.clear();
    for (std::size_t i = 0; i < acc.size(); ++i) {
      const Complex c = acc.mass(i);
      const double m = std::abs(c);
      if (m == 0.0) continue;
      if (m < drop_tol) {
        tail_ += m;
        continue;
      }
      terms_.push_back({c, acc.point(i)});
    }
    std::sort(terms_.begin(), terms_.end(),
              [](const Term& a, const Term& b) { return lex_less(a.freq, b.freq); });
  }

  int dim_;
  double merge_tol_;
  double tail_ = 0.0;
  std::vector<Term> terms_;
};

inline Complex eval(const ExpSum& f, const Vec& x) {
  check_dim(x.size(), f.dim(), "eval");
  Complex s = 0.0;
  for (const Term& t : f.terms()) s += t.coef * cis(x.dot(t.freq));
  return s;
}

inline double w_norm(const ExpSum& f) {
  double s = 0.0;
  for (const Term& t : f.terms()) s += std::abs(t.coef);
  return s;
}

enum class CombineOp { add, mul };

inline ExpSum combine(const ExpSum& f, const ExpSum& g, CombineOp op,
                      double drop_tol = kDefaultDropTol) {
  check_dim(f.dim(), g.dim(), "combine");
  const double tol = std::max(f.merge_tol(), g.merge_tol());
  std::vector<Term> raw;
  double tail = 0.0;
  if (op == CombineOp::add) {
    raw = f.terms();
    raw.insert(raw.end(), g.terms().begin(), g.terms().end());
    tail = f.tail_bound() + g.tail_bound();
  } else {
    raw.reserve(f.size() * g.size());
    for (const Term& a : f.terms()) {
      for (const Term& b : g.terms()) raw.push_back({a.coef * b.coef, a.freq + b.freq});
    }
    tail = f.tail_bound() * w_norm(g) + g.tail_bound() * w_norm(f) +
           f.tail_bound() * g.tail_bound();
  }
  return ExpSum::from_terms(f.dim(), std::move(raw), tol, drop_tol, tail);
}

inline ExpSum operator+(const ExpSum& f, const ExpSum& g) { return combine(f, g, CombineOp::add); }
inline ExpSum operator*(const ExpSum& f, const ExpSum& g) { return combine(f, g, CombineOp::mul); }

/// a * f; the tail scales by |a|.
inline ExpSum scale(const ExpSum& f, Complex a) {
  std::vector<Term> raw = f.terms();
  for (Term& t : raw) t.coef *= a;
  return ExpSum::from_terms(f.dim(), std::move(raw), f.merge_tol(), 0.0,
                            f.tail_bound() * std::abs(a));
}

/// Multiplication by the character e(<x, gamma>).
inline ExpSum modulate(const ExpSum& f, const Vec& gamma) {
  check_dim(gamma.size(), f.dim(), "modulate");
  std::vector<Term> raw = f.terms();
  for (Term& t : raw) t.freq += gamma;
  return ExpSum::from_terms(f.dim(), std::move(raw), f.merge_tol(), 0.0, f.tail_bound());
}

/// Replaces every frequency gamma by its representative alpha in the
/// fundamental parallelepiped of the dual lattice. Values are preserved on
/// anchor + L: the coefficient picks up the phase e(<anchor, gamma - alpha>),
/// which is 1 when the anchor is a lattice point.
inline ExpSum reduce_mod_dual(const ExpSum& f, const Lattice& lattice,
                              const std::optional<Vec>& anchor = std::nullopt) {
  check_dim(lattice.dim(), f.dim(), "reduce_mod_dual");
  const Lattice dl = dual(lattice);
  const Vec a = anchor.value_or(zeros(f.dim()));
  check_dim(a.size(), f.dim(), "reduce_mod_dual anchor");
  // Coordinates this close to an integer are treated as that integer so that
  // frequencies produced by floating lattice arithmetic land on one
  // representative.
  const double snap = std::max(f.merge_tol(), 1e-12);
  std::vector<Term> raw;
  raw.reserve(f.size());
  for (const Term& t : f.terms()) {
    Vec u = dl.coords(t.freq);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double r = std::nearbyint(u[i]);
      u[i] = std::abs(u[i] - r) <= snap ? 0.0 : u[i] - std::floor(u[i]);
    }
    const Vec alpha = dl.point(u);
    raw.push_back({t.coef * cis(a.dot(t.freq - alpha)), alpha});
  }
  return ExpSum::from_terms(f.dim(), std::move(raw), f.merge_tol(), 0.0, f.tail_bound());
}

}  // namespace fqc
