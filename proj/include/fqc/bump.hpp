// The standard mollifier psi(x) = exp(1 - 1/(1 - |x/eta|^2)) on B(0, eta) and
// its radial Fourier transform, tabulated once per dimension for the unit
// radius and rescaled on demand.
#pragma once

#include "fqc/detail/quadrature.hpp"
#include "fqc/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <vector>

namespace fqc {

namespace detail {

/// Unit bump psi_1 as a function of s = |x|^2.
inline double unit_bump_of_sq(double s) {
  if (s >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s));
}

/// Projection A(x) = integral of psi_1 over the hyperplane {x_1 = x}.
inline double unit_bump_projection(int d, double x) {
  const double rem = 1.0 - x * x;
  if (rem <= 0.0) return 0.0;
  if (d == 1) return unit_bump_of_sq(x * x);
  static const QuadratureRule rule = composite_gauss(0.0, 1.0, 16, 16);
  double s = 0.0;
  if (d == 2) {
    const double top = std::sqrt(rem);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double v = top * rule.nodes[i];
      s += rule.weights[i] * unit_bump_of_sq(x * x + v * v);
    }
    return 2.0 * top * s;
  }
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    s += rule.weights[i] * unit_bump_of_sq(x * x + rem * rule.nodes[i]);
  }
  return kPi * rem * s;
}

inline constexpr int kBumpMaxOrder = 12;

/// Samples of the unit-bump transform on [0, u_max] with exact first and
/// second derivatives for quintic Hermite interpolation, plus the constants
/// used to bound it.
struct UnitBumpTable {
  int dim = 1;
  double step = 1.0 / 128.0;
  double u_max = 128.0;
  std::vector<double> value;
  std::vector<double> slope;
  std::vector<double> curvature;
  /// suffix_max[i] = max_{j >= i} |value[j]|.
  std::vector<double> suffix_max;
  /// Bound on the quintic Hermite interpolation error anywhere in [0, u_max].
  double interp_error = 0.0;
  /// derivative_norm[k] = integral of |d^k psi_1 / dx_1^k|.
  std::array<double, kBumpMaxOrder + 1> derivative_norm{};
};

/// Taylor coefficients in tau of psi_1((x1 + tau) e_1 + y) with |y|^2 = r2.
inline void bump_taylor(double x1, double r2, std::array<double, kBumpMaxOrder + 1>& b) {
  constexpr int K = kBumpMaxOrder;
  b.fill(0.0);
  const double w0 = 1.0 - x1 * x1 - r2;
  if (w0 < 1e-6) return;
  const double w1 = -2.0 * x1;
  const double w2 = -1.0;
  std::array<double, K + 1> q{};
  q[0] = 1.0 / w0;
  for (int n = 1; n <= K; ++n) {
    double acc = w1 * q[n - 1];
    if (n >= 2) acc += w2 * q[n - 2];
    q[n] = -acc / w0;
  }
  std::array<double, K + 1> a{};
  a[0] = 1.0 - q[0];
  for (int n = 1; n <= K; ++n) a[n] = -q[n];
  b[0] = std::exp(a[0]);
  for (int n = 1; n <= K; ++n) {
    double acc = 0.0;
    for (int j = 1; j <= n; ++j) acc += j * a[j] * b[n - j];
    b[n] = acc / n;
  }
}

inline std::array<double, kBumpMaxOrder + 1> unit_bump_derivative_norms(int d) {
  constexpr int K = kBumpMaxOrder;
  std::array<double, K + 1> norms{};
  std::array<double, K + 1> b{};
  std::array<double, K + 1> fact{};
  fact[0] = 1.0;
  for (int k = 1; k <= K; ++k) fact[k] = fact[k - 1] * k;
  const QuadratureRule xr = composite_gauss(-1.0, 1.0, d == 1 ? 2000 : 240, 8);
  const QuadratureRule yr = composite_gauss(0.0, 1.0, 60, 8);
  for (std::size_t i = 0; i < xr.nodes.size(); ++i) {
    const double x = xr.nodes[i];
    if (d == 1) {
      bump_taylor(x, 0.0, b);
      for (int k = 0; k <= K; ++k) norms[k] += xr.weights[i] * std::abs(b[k]) * fact[k];
      continue;
    }
    const double top = std::sqrt(std::max(0.0, 1.0 - x * x));
    for (std::size_t j = 0; j < yr.nodes.size(); ++j) {
      const double rho = top * yr.nodes[j];
      const double jac = d == 2 ? 2.0 * top : kTwoPi * rho * top;
      bump_taylor(x, rho * rho, b);
      for (int k = 0; k <= K; ++k) {
        norms[k] += xr.weights[i] * yr.weights[j] * jac * std::abs(b[k]) * fact[k];
      }
    }
  }
  // Panel quadrature of |.| is not exact at sign changes; keep a margin.
  for (double& v : norms) v *= 1.1;
  return norms;
}

inline UnitBumpTable build_unit_bump_table(int d) {
  UnitBumpTable t;
  t.dim = d;
  const std::size_t n_u = static_cast<std::size_t>(std::llround(t.u_max / t.step)) + 1;
  const QuadratureRule rule = composite_gauss(0.0, 1.0, 512, 16);
  const std::size_t n_x = rule.nodes.size();
  std::vector<double> wa(n_x);
  std::vector<double> x = rule.nodes;
  double moment6 = 0.0;
  for (std::size_t j = 0; j < n_x; ++j) {
    const double a = unit_bump_projection(d, x[j]);
    wa[j] = 2.0 * rule.weights[j] * a;
    moment6 += wa[j] * std::pow(x[j], 6);
  }
  t.value.assign(n_u, 0.0);
  t.slope.assign(n_u, 0.0);
  t.curvature.assign(n_u, 0.0);
  std::vector<Complex> z(n_x);
  std::vector<Complex> rot(n_x);
  for (std::size_t j = 0; j < n_x; ++j) rot[j] = cis(t.step * x[j]);
  for (std::size_t i = 0; i < n_u; ++i) {
    const double u = static_cast<double>(i) * t.step;
    if (i % 256 == 0) {
      for (std::size_t j = 0; j < n_x; ++j) z[j] = cis(u * x[j]);
    }
    double v = 0.0;
    double s = 0.0;
    double c = 0.0;
    for (std::size_t j = 0; j < n_x; ++j) {
      const double k = kTwoPi * x[j];
      v += wa[j] * z[j].real();
      s -= wa[j] * k * z[j].imag();
      c -= wa[j] * k * k * z[j].real();
      z[j] *= rot[j];
    }
    t.value[i] = v;
    t.slope[i] = s;
    t.curvature[i] = c;
  }
  t.suffix_max.assign(n_u, 0.0);
  double m = 0.0;
  for (std::size_t i = n_u; i-- > 0;) {
    m = std::max(m, std::abs(t.value[i]));
    t.suffix_max[i] = m;
  }
  t.interp_error = std::pow(t.step, 6) / 46080.0 * std::pow(kTwoPi, 6) * moment6 + 1e-15;
  t.derivative_norm = unit_bump_derivative_norms(d);
  return t;
}

inline const UnitBumpTable& unit_bump_table(int d) {
  check_supported_dim(d, "unit_bump_table");
  static std::once_flag flags[kMaxDim];
  static UnitBumpTable tables[kMaxDim];
  std::call_once(flags[d - 1], [d] { tables[d - 1] = build_unit_bump_table(d); });
  return tables[d - 1];
}

}  // namespace detail

class BumpFunction {
 public:
  BumpFunction(int dim, double support_radius) : dim_(dim), eta_(support_radius) {
    check_supported_dim(dim, "BumpFunction");
    if (!(support_radius > 0.0) || !std::isfinite(support_radius)) {
      throw PreconditionError("BumpFunction: support radius must be positive and finite");
    }
  }

  int dim() const { return dim_; }
  double support_radius() const { return eta_; }

  double value(const Vec& x) const {
    check_dim(x.size(), dim_, "BumpFunction::value");
    return value_radial(x.norm());
  }

  double value_radial(double r) const {
    const double s = r / eta_;
    return detail::unit_bump_of_sq(s * s);
  }

  /// psi-hat(y) = eta^d psi_1-hat(eta |y|); real because psi is even.
  double transform(const Vec& y) const {
    check_dim(y.size(), dim_, "BumpFunction::transform");
    return transform_radial(y.norm());
  }

  double transform_radial(double rho) const {
    const auto& t = table();
    const double u = eta_ * rho;
    if (u >= t.u_max) return 0.0;
    const double pos = u / t.step;
    const std::size_t i = static_cast<std::size_t>(pos);
    const double s = pos - static_cast<double>(i);
    const double h = t.step;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double s4 = s3 * s;
    const double s5 = s4 * s;
    const double p0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
    const double p1 = 10 * s3 - 15 * s4 + 6 * s5;
    const double d0 = s - 6 * s3 + 8 * s4 - 3 * s5;
    const double d1 = -4 * s3 + 7 * s4 - 3 * s5;
    const double c0 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
    const double c1 = 0.5 * (s3 - 2 * s4 + s5);
    const double v = p0 * t.value[i] + p1 * t.value[i + 1] + h * (d0 * t.slope[i] + d1 * t.slope[i + 1]) +
                     h * h * (c0 * t.curvature[i] + c1 * t.curvature[i + 1]);
    return scale() * v;
  }

  /// Absolute error bound of transform_radial(rho).
  double transform_error(double rho) const {
    const auto& t = table();
    const double u = eta_ * rho;
    if (u >= t.u_max) return scale() * analytic_bound(u);
    return scale() * t.interp_error;
  }

  /// Uniform bound on the interpolation error over the tabulated range.
  double transform_error_uniform() const { return scale() * table().interp_error; }

  /// Envelope E(rho) >= sup_{|y| >= rho} |psi-hat(y)|, nonincreasing in rho.
  double transform_envelope(double rho) const {
    const auto& t = table();
    const double u = eta_ * rho;
    const double analytic = analytic_bound(u);
    if (u >= t.u_max) return scale() * analytic;
    const std::size_t i = static_cast<std::size_t>(u / t.step);
    const double tabulated = std::max(t.suffix_max[i] + t.interp_error, analytic_bound(t.u_max));
    return scale() * std::min(analytic, tabulated);
  }

  /// sup_x |psi(x)| (1 + |x|)^p over |x| >= r.
  double weighted_sup(double p, double r = 0.0) const {
    double best = 0.0;
    const int n = 4000;
    for (int i = 0; i <= n; ++i) {
      const double x = eta_ * i / n;
      if (x < r) continue;
      best = std::max(best, value_radial(x) * std::pow(1.0 + x, p));
    }
    if (r <= 0.0) best = std::max(best, 1.0);
    return best * (1.0 + (4.0 + p) * eta_ / n);
  }

 private:
  const detail::UnitBumpTable& table() const { return detail::unit_bump_table(dim_); }
  double scale() const { return std::pow(eta_, dim_); }

  double analytic_bound(double u) const {
    const auto& t = table();
    if (u <= 0.0) return t.derivative_norm[0];
    double best = t.derivative_norm[0];
    double denom = 1.0;
    for (int k = 1; k <= detail::kBumpMaxOrder; ++k) {
      denom *= kTwoPi * u;
      best = std::min(best, t.derivative_norm[k] / denom);
    }
    return best;
  }

  int dim_;
  double eta_;
};

}  // namespace fqc
