// Functional calculus on finite exponential sums: lift f to a trigonometric
// polynomial F on a k-torus through an integer frequency basis, apply a
// symbol pointwise on a grid, recover coefficients by FFT and push them back
// to real frequencies.
#pragma once

#include "fqc/detail/fft.hpp"
#include "fqc/detail/lll.hpp"
#include "fqc/exp_sum.hpp"
#include "fqc/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace fqc {

inline constexpr int kMaxRank = 3;
inline constexpr std::size_t kMaxGridPerAxis = 4096;
inline constexpr std::size_t kMaxGridPoints = std::size_t{1} << 22;
inline constexpr int kRelationBound = 64;

// ---------------------------------------------------------------------------
// Frequency bases
// ---------------------------------------------------------------------------

struct FrequencyBasis {
  int dim = 1;
  int rank = 0;
  std::vector<Vec> generators;
  /// The frequencies the basis was built from, in input order.
  std::vector<Vec> frequencies;
  /// coords[i] holds the integer coordinates of frequencies[i].
  std::vector<std::vector<std::int64_t>> coords;

  Vec combine(const std::vector<std::int64_t>& c) const {
    Vec v = zeros(dim);
    for (int i = 0; i < rank; ++i) v += static_cast<double>(c[i]) * generators[i];
    return v;
  }
};

namespace detail {

/// Shortest primitive integer relation r with sum r_i m_i ~ 0 and
/// max |r_i| <= bound, searched by LLL on [I | W M].
inline std::optional<std::vector<std::int64_t>> find_relation(const std::vector<Vec>& m,
                                                              double tol, int bound) {
  const std::size_t n = m.size();
  if (n == 0) return std::nullopt;
  const int d = static_cast<int>(m[0].size());
  double scale = 0.0;
  for (const Vec& v : m) scale = std::max(scale, v.norm());
  if (scale == 0.0) scale = 1.0;
  const long double weight = 1.0L / (static_cast<long double>(tol) * scale);
  std::vector<std::vector<long double>> rows(n, std::vector<long double>(n + d, 0.0L));
  for (std::size_t i = 0; i < n; ++i) {
    rows[i][i] = 1.0L;
    for (int j = 0; j < d; ++j) rows[i][n + j] = weight * static_cast<long double>(m[i][j]);
  }
  const LllResult red = lll_reduce(rows);
  std::optional<std::vector<std::int64_t>> best;
  double best_res = kInf;
  for (std::size_t row = 0; row < n; ++row) {
    const auto& t = red.transform[row];
    std::int64_t g = 0;
    std::int64_t mx = 0;
    for (auto v : t) {
      g = std::gcd(g, v < 0 ? -v : v);
      mx = std::max<std::int64_t>(mx, v < 0 ? -v : v);
    }
    if (g == 0 || mx > bound) continue;
    Vec s = zeros(d);
    for (std::size_t i = 0; i < n; ++i) {
      s += static_cast<double>(t[i]) * m[i];
    }
    const double res = s.norm();
    if (res > tol * scale) continue;
    if (res < best_res) {
      best_res = res;
      std::vector<std::int64_t> r(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) r[i] = t[i] / g;
      best = r;
    }
  }
  return best;
}

/// Unimodular V with r V = e_1 for a primitive integer r, and U = V^{-1}.
inline void unimodular_completion(const std::vector<std::int64_t>& r,
                                  std::vector<std::vector<std::int64_t>>& v,
                                  std::vector<std::vector<std::int64_t>>& u) {
  const std::size_t n = r.size();
  v.assign(n, std::vector<std::int64_t>(n, 0));
  u.assign(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = u[i][i] = 1;
  std::vector<std::int64_t> cur = r;
  auto col_op = [&](std::size_t j, std::size_t i, std::int64_t q) {
    for (std::size_t row = 0; row < n; ++row) v[row][j] -= q * v[row][i];
    for (std::size_t col = 0; col < n; ++col) u[i][col] += q * u[j][col];
    cur[j] -= q * cur[i];
  };
  auto swap_cols = [&](std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t row = 0; row < n; ++row) std::swap(v[row][a], v[row][b]);
    std::swap(u[a], u[b]);
    std::swap(cur[a], cur[b]);
  };
  while (true) {
    std::size_t piv = n;
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (cur[i] == 0) continue;
      ++nonzero;
      if (piv == n || std::abs(cur[i]) < std::abs(cur[piv])) piv = i;
    }
    if (piv == n) throw Error("unimodular_completion: zero relation");
    if (nonzero == 1) {
      swap_cols(piv, 0);
      break;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j != piv && cur[j] != 0) col_op(j, piv, cur[j] / cur[piv]);
    }
  }
  if (cur[0] == -1) {
    for (std::size_t row = 0; row < n; ++row) v[row][0] = -v[row][0];
    for (std::size_t col = 0; col < n; ++col) u[0][col] = -u[0][col];
    cur[0] = 1;
  }
  if (cur[0] != 1) throw Error("unimodular_completion: relation is not primitive");
}

}  // namespace detail

/// Integer basis of the Z-span of the frequencies. Each frequency is either
/// an integer combination of the current generators, or is tied to them by a
/// short integer relation (which is factored out by a unimodular change of
/// generators), or becomes a new generator.
inline FrequencyBasis find_basis(const std::vector<Vec>& freqs, double tol = 1e-9, int dim = 0) {
  FrequencyBasis b;
  b.dim = dim > 0 ? dim : (freqs.empty() ? 1 : static_cast<int>(freqs[0].size()));
  const int d = b.dim;
  for (const Vec& gamma : freqs) check_dim(gamma.size(), d, "find_basis");
  b.frequencies = freqs;
  b.coords.assign(freqs.size(), {});
  std::vector<std::size_t> order(freqs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return norm_lex_less(freqs[x], freqs[y]);
  });
  std::vector<Vec>& g = b.generators;
  std::vector<std::size_t> seen;
  for (std::size_t idx : order) {
    const Vec& gamma = freqs[idx];
    seen.push_back(idx);
    const int k = static_cast<int>(g.size());
    std::vector<std::int64_t> c(k, 0);
    if (gamma.norm() <= tol) {
      b.coords[idx] = c;
      continue;
    }
    bool done = false;
    bool outside_span = (k == 0);
    if (k > 0 && k <= d) {
      Eigen::MatrixXd gm(d, k);
      for (int i = 0; i < k; ++i) gm.col(i) = g[i];
      const Eigen::VectorXd gv = gamma;
      const Eigen::VectorXd a = gm.colPivHouseholderQr().solve(gv);
      Vec rounded_comb = zeros(d);
      bool fits = true;
      for (int i = 0; i < k; ++i) {
        const double r = std::nearbyint(a[i]);
        if (std::abs(r) > 9e15) fits = false;
        c[i] = static_cast<std::int64_t>(r);
        rounded_comb += r * g[i];
      }
      const double scale = std::max(1.0, gamma.norm());
      if (fits && (rounded_comb - gamma).norm() <= tol * scale) {
        b.coords[idx] = c;
        done = true;
      } else if ((gm * a - gv).norm() > tol * scale * 10.0) {
        outside_span = true;
      }
    }
    if (!done && !outside_span) {
      std::vector<Vec> m = g;
      m.push_back(gamma);
      if (auto r = detail::find_relation(m, tol, kRelationBound)) {
        std::vector<std::vector<std::int64_t>> v, u;
        detail::unimodular_completion(*r, v, u);
        std::vector<Vec> ng;
        for (int j = 1; j <= k; ++j) {
          Vec s = zeros(d);
          for (int i = 0; i <= k; ++i) s += static_cast<double>(u[j][i]) * m[i];
          ng.push_back(s);
        }
        for (std::size_t other : seen) {
          if (other == idx) continue;
          const auto& oc = b.coords[other];
          std::vector<std::int64_t> nc(k, 0);
          for (int j = 0; j < k; ++j) {
            for (int i = 0; i < k; ++i) nc[j] += oc[i] * v[i][j + 1];
          }
          b.coords[other] = nc;
        }
        std::vector<std::int64_t> gc(k);
        for (int j = 0; j < k; ++j) gc[j] = v[k][j + 1];
        b.coords[idx] = gc;
        g = ng;
        done = true;
      }
    }
    if (!done) {
      for (std::size_t other : seen) {
        if (other != idx) b.coords[other].push_back(0);
      }
      g.push_back(gamma);
      std::vector<std::int64_t> gc(k + 1, 0);
      gc[k] = 1;
      b.coords[idx] = gc;
    }
  }
  b.rank = static_cast<int>(g.size());
  for (auto& oc : b.coords) oc.resize(b.rank, 0);
  for (int i = 0; i < b.rank; ++i) {
    const double scale = g[i].norm();
    for (int j = 0; j < d; ++j) {
      if (std::abs(g[i][j]) > 1e-12 * scale) {
        if (g[i][j] < 0) {
          g[i] = -g[i];
          for (auto& oc : b.coords) oc[i] = -oc[i];
        }
        break;
      }
    }
  }
  return b;
}

/// Integer coordinates of x in the basis, or nullopt when x is not in its
/// Z-span (checked within tol).
inline std::optional<std::vector<std::int64_t>> basis_coordinates(const FrequencyBasis& b,
                                                                 const Vec& x, double tol = 1e-9) {
  for (std::size_t i = 0; i < b.frequencies.size(); ++i) {
    if ((b.frequencies[i] - x).norm() <= tol) return b.coords[i];
  }
  if (b.rank == 0) {
    if (x.norm() <= tol) return std::vector<std::int64_t>{};
    return std::nullopt;
  }
  if (b.rank > b.dim) return std::nullopt;
  Eigen::MatrixXd gm(b.dim, b.rank);
  for (int i = 0; i < b.rank; ++i) gm.col(i) = b.generators[i];
  const Eigen::VectorXd xv = x;
  const Eigen::VectorXd a = gm.colPivHouseholderQr().solve(xv);
  std::vector<std::int64_t> c(b.rank);
  for (int i = 0; i < b.rank; ++i) c[i] = static_cast<std::int64_t>(std::nearbyint(a[i]));
  if ((b.combine(c) - x).norm() > tol * std::max(1.0, x.norm())) return std::nullopt;
  return c;
}

// ---------------------------------------------------------------------------
// Symbols
// ---------------------------------------------------------------------------

/// C-infinity step: 0 for u <= 0, 1 for u >= 1.
inline double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

/// Cutoff equal to 0 on [0, eps/2] and 1 on [eps, infinity).
inline double eps_cutoff(double r, double eps) { return smooth_step((r - 0.5 * eps) / (0.5 * eps)); }

struct HolomorphicSymbol {
  enum class Kind { reciprocal, exponential, polynomial, power_series, eps_inverse };

  Kind kind = Kind::reciprocal;
  std::vector<Complex> coeffs;
  double radius = kInf;
  double eps = 0.0;

  static HolomorphicSymbol reciprocal() { return {Kind::reciprocal, {}, kInf, 0.0}; }
  static HolomorphicSymbol exponential() { return {Kind::exponential, {}, kInf, 0.0}; }
  static HolomorphicSymbol polynomial(std::vector<Complex> c) {
    return {Kind::polynomial, std::move(c), kInf, 0.0};
  }
  static HolomorphicSymbol power_series(std::vector<Complex> c, double r) {
    if (!(r > 0.0)) throw PreconditionError("power_series: radius must be positive");
    return {Kind::power_series, std::move(c), r, 0.0};
  }
  static HolomorphicSymbol eps_inverse(double e) {
    if (!(e > 0.0)) throw PreconditionError("eps_inverse: eps must be positive");
    return {Kind::eps_inverse, {}, kInf, e};
  }

  std::string name() const {
    switch (kind) {
      case Kind::reciprocal: return "reciprocal";
      case Kind::exponential: return "exponential";
      case Kind::polynomial: return "polynomial";
      case Kind::power_series: return "power_series";
      case Kind::eps_inverse: return "eps_inverse";
    }
    return "unknown";
  }

  /// Throws DomainGuardViolation when z is outside the symbol's domain.
  void check_guard(Complex z, double scale) const {
    if (kind == Kind::reciprocal && !(std::abs(z) > 1e-12 * std::max(scale, 1.0))) {
      throw DomainGuardViolation("reciprocal: lifted polynomial vanishes on the torus grid", z);
    }
    if (kind == Kind::power_series && !(std::abs(z) < radius)) {
      throw DomainGuardViolation("power_series: value outside the disc of convergence", z);
    }
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw DomainGuardViolation(name() + ": non-finite value", z);
    }
  }

  Complex apply(Complex z) const {
    switch (kind) {
      case Kind::reciprocal: return 1.0 / z;
      case Kind::exponential: return std::exp(z);
      case Kind::polynomial:
      case Kind::power_series: {
        Complex s = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) s = s * z + *it;
        return s;
      }
      case Kind::eps_inverse: {
        const double r = std::abs(z);
        if (r <= 0.5 * eps) return 0.0;
        return eps_cutoff(r, eps) / z;
      }
    }
    return 0.0;
  }
};

// ---------------------------------------------------------------------------
// Composition on the torus
// ---------------------------------------------------------------------------

struct Composition {
  ExpSum g;
  /// max |G - h(F)| over the grid and its half-shifted copies.
  double residual = 0.0;
  std::size_t grid_n = 0;
  bool tapered = false;
  /// Eps-inverse contract residuals (zero for other symbols):
  /// max |F G - 1| where |F| >= eps and max |G| where |F| <= eps/2.
  double product_residual = 0.0;
  double zero_residual = 0.0;
};

namespace detail {

struct TorusGrid {
  std::size_t n = 1;
  int rank = 0;
  std::size_t total = 1;

  TorusGrid(std::size_t n_, int k) : n(n_), rank(k) {
    for (int i = 0; i < k; ++i) total *= n;
  }

  std::size_t index(const std::vector<std::int64_t>& c) const {
    std::size_t idx = 0;
    const auto nn = static_cast<std::int64_t>(n);
    for (int i = 0; i < rank; ++i) {
      std::int64_t m = c[i] % nn;
      if (m < 0) m += nn;
      idx = idx * n + static_cast<std::size_t>(m);
    }
    return idx;
  }
};

struct IntTerm {
  Complex coef;
  std::vector<std::int64_t> k;
};

/// Values sum_k c_k e(<k, (j + s/2)/n>) on the n^rank grid. Short sums are
/// evaluated directly from per-axis phase tables, longer ones by FFT.
inline std::vector<Complex> sample(const std::vector<IntTerm>& terms, const TorusGrid& grid,
                                   const std::vector<int>& shift) {
  std::vector<Complex> a(grid.total, 0.0);
  const std::size_t n = grid.n;
  if (terms.size() <= 8) {
    std::vector<Complex> row(grid.total);
    std::vector<Complex> table(n);
    for (const IntTerm& t : terms) {
      std::fill(row.begin(), row.end(), t.coef);
      std::size_t inner = grid.total;
      for (int i = 0; i < grid.rank; ++i) {
        inner /= n;
        const std::int64_t k = t.k[i] % static_cast<std::int64_t>(2 * n);
        for (std::size_t j = 0; j < n; ++j) {
          table[j] = cis(static_cast<double>(k) * (static_cast<double>(j) + 0.5 * shift[i]) / static_cast<double>(n));
        }
        for (std::size_t idx = 0; idx < grid.total; ++idx) row[idx] *= table[(idx / inner) % n];
      }
      for (std::size_t idx = 0; idx < grid.total; ++idx) a[idx] += row[idx];
    }
    return a;
  }
  for (const IntTerm& t : terms) {
    double ph = 0.0;
    for (int i = 0; i < grid.rank; ++i) {
      ph += static_cast<double>(t.k[i]) * shift[i] / (2.0 * static_cast<double>(n));
    }
    a[grid.index(t.k)] += t.coef * cis(ph);
  }
  fft_nd(a, n, grid.rank, true);
  return a;
}

/// Signed frequency of FFT index m on an axis of length n; m == n/2 is the
/// Nyquist index, returned as +n/2.
inline std::int64_t signed_index(std::size_t m, std::size_t n) {
  const auto v = static_cast<std::int64_t>(m);
  return m > n / 2 ? v - static_cast<std::int64_t>(n) : v;
}

/// Trigonometric interpolant of grid values, kept as the dense n^rank array of
/// coefficients (FFT order). Nyquist entries stand for the even split between
/// +n/2 and -n/2 along each such axis.
struct DenseSpectrum {
  std::size_t n = 1;
  int rank = 0;
  std::vector<Complex> c;

  /// Values on the grid offset by s/2 cells along each axis.
  std::vector<Complex> sample(const std::vector<int>& shift) const {
    std::vector<std::vector<Complex>> phase(rank, std::vector<Complex>(n));
    for (int i = 0; i < rank; ++i) {
      for (std::size_t m = 0; m < n; ++m) {
        const double turns = static_cast<double>(signed_index(m, n)) * shift[i] / (2.0 * static_cast<double>(n));
        phase[i][m] = n > 1 && m == n / 2 ? Complex(std::cos(kTwoPi * turns), 0.0) : cis(turns);
      }
    }
    std::vector<Complex> a(c.size());
    for (std::size_t idx = 0; idx < c.size(); ++idx) {
      std::size_t rem = idx;
      Complex w = 1.0;
      for (int i = rank - 1; i >= 0; --i) {
        w *= phase[i][rem % n];
        rem /= n;
      }
      a[idx] = c[idx] * w;
    }
    fft_nd(a, n, rank, true);
    return a;
  }

  /// Calls fn(coef, k) for every nonzero coefficient, Nyquist entries split.
  template <class Fn>
  void for_each_term(Fn&& fn) const {
    const auto half = static_cast<std::int64_t>(n / 2);
    std::vector<std::int64_t> k(rank);
    for (std::size_t idx = 0; idx < c.size(); ++idx) {
      if (c[idx] == Complex(0.0)) continue;
      std::size_t rem = idx;
      int nyq = 0;
      for (int i = rank - 1; i >= 0; --i) {
        k[i] = signed_index(rem % n, n);
        rem /= n;
        if (n > 1 && k[i] == half) ++nyq;
      }
      if (nyq == 0) {
        fn(c[idx], k);
        continue;
      }
      const Complex share = c[idx] / static_cast<double>(1 << nyq);
      for (int mask = 0; mask < (1 << nyq); ++mask) {
        std::vector<std::int64_t> kk = k;
        int bit = 0;
        for (int i = 0; i < rank; ++i) {
          if (n > 1 && k[i] == half) {
            if (mask & (1 << bit)) kk[i] = -half;
            ++bit;
          }
        }
        fn(share, kk);
      }
    }
  }
};

inline DenseSpectrum interpolate(std::vector<Complex> values, const TorusGrid& grid) {
  fft_nd(values, grid.n, grid.rank, false);
  const double inv = 1.0 / static_cast<double>(grid.total);
  for (Complex& v : values) v *= inv;
  return {grid.n, grid.rank, std::move(values)};
}

struct GridPass {
  DenseSpectrum spectrum;
  double residual = 0.0;
  double product_residual = 0.0;
  double zero_residual = 0.0;
  double high_band = 0.0;
};

inline GridPass run_grid(const HolomorphicSymbol& h, const std::vector<IntTerm>& f_terms,
                         int rank, std::size_t n, bool taper) {
  const TorusGrid grid(n, rank);
  double scale = 0.0;
  for (const IntTerm& t : f_terms) scale += std::abs(t.coef);
  const std::vector<int> zero_shift(rank, 0);
  std::vector<Complex> fv = sample(f_terms, grid, zero_shift);
  std::vector<Complex> hv(fv.size());
  for (std::size_t i = 0; i < fv.size(); ++i) {
    h.check_guard(fv[i], scale);
    hv[i] = h.apply(fv[i]);
  }
  GridPass pass;
  pass.spectrum = interpolate(std::move(hv), grid);
  std::vector<Complex>& c = pass.spectrum.c;
  const auto nn = static_cast<std::int64_t>(n);
  for (std::size_t idx = 0; idx < c.size(); ++idx) {
    std::size_t rem = idx;
    std::int64_t mx = 0;
    double w = 1.0;
    for (int i = 0; i < rank; ++i) {
      const std::int64_t k = signed_index(rem % n, n);
      rem /= n;
      mx = std::max<std::int64_t>(mx, k < 0 ? -k : k);
      w *= 1.0 - std::abs(static_cast<double>(k)) / (static_cast<double>(nn) / 2.0 + 1.0);
    }
    if (taper) c[idx] *= w;
    if (mx > nn / 4) pass.high_band += std::abs(c[idx]);
  }
  const int shifts = 1 << rank;
  for (int mask = 0; mask < shifts; ++mask) {
    if (mask == 0 && !taper) {
      if (h.kind != HolomorphicSymbol::Kind::eps_inverse) continue;
    }
    std::vector<int> s(rank);
    for (int i = 0; i < rank; ++i) s[i] = (mask >> i) & 1;
    const std::vector<Complex> fs = mask == 0 ? fv : sample(f_terms, grid, s);
    const std::vector<Complex> gs = pass.spectrum.sample(s);
    for (std::size_t i = 0; i < fs.size(); ++i) {
      h.check_guard(fs[i], scale);
      pass.residual = std::max(pass.residual, std::abs(gs[i] - h.apply(fs[i])));
      if (h.kind == HolomorphicSymbol::Kind::eps_inverse) {
        const double r = std::abs(fs[i]);
        if (r >= h.eps) pass.product_residual = std::max(pass.product_residual, std::abs(fs[i] * gs[i] - 1.0));
        if (r <= 0.5 * h.eps) pass.zero_residual = std::max(pass.zero_residual, std::abs(gs[i]));
      }
    }
  }
  return pass;
}

}  // namespace detail

struct ComposeOptions {
  /// Initial grid size per axis; 0 chooses one from the frequency range and
  /// enables doubling until `tol` is met.
  std::size_t grid_n = 0;
  double drop_tol = kDefaultDropTol;
  double tol = 1e-10;
};

/// g with G = h(F) on the torus, F the lift of f through `basis`.
inline Composition compose(const HolomorphicSymbol& h, const ExpSum& f, const FrequencyBasis& basis,
                           const ComposeOptions& opt = {}) {
  check_dim(basis.dim, f.dim(), "compose");
  const int k = basis.rank;
  if (k > kMaxRank) {
    throw PreconditionError("compose: frequency rank " + std::to_string(k) + " exceeds " +
                            std::to_string(kMaxRank));
  }
  std::vector<detail::IntTerm> f_terms;
  std::int64_t max_coord = 0;
  for (const Term& t : f.terms()) {
    auto c = basis_coordinates(basis, t.freq);
    if (!c) throw PreconditionError("compose: a frequency of f is not covered by the basis");
    for (auto v : *c) max_coord = std::max<std::int64_t>(max_coord, v < 0 ? -v : v);
    f_terms.push_back({t.coef, *c});
  }
  Composition out{ExpSum(f.dim(), f.merge_tol())};
  const bool auto_grid = opt.grid_n == 0;
  std::size_t n = auto_grid ? next_pow2(static_cast<std::size_t>(2 * max_coord + 16)) : opt.grid_n;
  if (k == 0) n = 1;
  if (n == 0 || (n & (n - 1)) != 0) throw PreconditionError("compose: grid_n must be a power of two");
  auto total_points = [k](std::size_t m) {
    std::size_t t = 1;
    for (int i = 0; i < k; ++i) t *= m;
    return t;
  };
  if (k > 0 && (n > kMaxGridPerAxis || total_points(n) > kMaxGridPoints)) {
    throw CertificationError("compose: grid exceeds the size cap", kInf, static_cast<int>(n));
  }
  detail::GridPass pass = detail::run_grid(h, f_terms, k, n, false);
  double prev_high = kInf;
  while (auto_grid && k > 0 && std::max(pass.residual, std::max(pass.product_residual, pass.zero_residual)) > opt.tol) {
    const std::size_t next = 2 * n;
    if (next > kMaxGridPerAxis || total_points(next) > kMaxGridPoints) break;
    prev_high = pass.high_band;
    n = next;
    pass = detail::run_grid(h, f_terms, k, n, false);
  }
  bool tapered = false;
  const double raw_worst = std::max(pass.residual, std::max(pass.product_residual, pass.zero_residual));
  if (k > 0 && raw_worst > opt.tol && std::isfinite(prev_high) && pass.high_band > 0.5 * prev_high) {
    detail::GridPass tp = detail::run_grid(h, f_terms, k, n, true);
    if (std::max(tp.residual, std::max(tp.product_residual, tp.zero_residual)) < raw_worst) {
      pass = std::move(tp);
      tapered = true;
    }
  }
  const double worst = std::max(pass.residual, std::max(pass.product_residual, pass.zero_residual));
  if (k > 0 && worst > opt.tol) {
    throw CertificationError("compose: grid residual " + fmt(worst) +
                                 " above tolerance; try a larger grid_n",
                             worst, static_cast<int>(2 * n));
  }
  std::vector<Term> terms;
  double dropped = 0.0;
  pass.spectrum.for_each_term([&](Complex coef, const std::vector<std::int64_t>& kv) {
    if (std::abs(coef) < opt.drop_tol) {
      dropped += std::abs(coef);
      return;
    }
    terms.push_back({coef, basis.combine(kv)});
  });
  if (k == 0) {
    terms.clear();
    dropped = 0.0;
    Complex c = 0.0;
    for (const detail::IntTerm& t : f_terms) c += t.coef;
    h.check_guard(c, std::abs(c));
    const Complex v = h.apply(c);
    if (v != 0.0) terms.push_back({v, zeros(f.dim())});
  }
  out.g = ExpSum::from_terms(f.dim(), std::move(terms), f.merge_tol(), 0.0, dropped);
  out.residual = pass.residual;
  out.product_residual = pass.product_residual;
  out.zero_residual = pass.zero_residual;
  out.grid_n = n;
  out.tapered = tapered;
  return out;
}

inline Composition compose(const HolomorphicSymbol& h, const ExpSum& f, const ComposeOptions& opt = {}) {
  std::vector<Vec> freqs;
  for (const Term& t : f.terms()) freqs.push_back(t.freq);
  return compose(h, f, find_basis(freqs, f.merge_tol(), f.dim()), opt);
}

/// g with f g = 1 where |f| >= eps and g = 0 where |f| <= eps/2, certified on
/// the torus grid and its half-shifted copies.
inline Composition eps_inverse(const ExpSum& f, double eps, const ComposeOptions& opt = {}) {
  return compose(HolomorphicSymbol::eps_inverse(eps), f, opt);
}

}  // namespace fqc
