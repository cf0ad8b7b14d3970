// Core scalar/vector aliases, error types and small numeric helpers shared by
// every fqc header.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fqc {

/// Largest ambient dimension supported. Vectors are stack allocated.
inline constexpr int kMaxDim = 3;

using Complex = std::complex<double>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxDim, kMaxDim>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct PreconditionError : Error {
  using Error::Error;
};

struct SingularLattice : Error {
  using Error::Error;
};

struct EnumerationCapExceeded : Error {
  using Error::Error;
};

/// A symbol was applied outside the region where it is defined.
struct DomainGuardViolation : Error {
  DomainGuardViolation(const std::string& what, Complex offending)
      : Error(what), value(offending) {}
  Complex value;
};

/// A truncated object is not large enough for the requested accuracy.
/// `required_radius` names the radius that would satisfy the request
/// (infinity when none could be determined).
struct TruncationError : Error {
  TruncationError(const std::string& what, double required)
      : Error(what), required_radius(required) {}
  double required_radius;
};

/// A grid computation could not certify its residual.
struct CertificationError : Error {
  CertificationError(const std::string& what, double achieved, int suggested)
      : Error(what), residual(achieved), suggested_grid_n(suggested) {}
  double residual;
  int suggested_grid_n;
};

struct ParseError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

inline void check_dim(long a, long b, const char* where) {
  if (a != b) {
    throw DimensionMismatch(std::string(where) + ": dimension " + std::to_string(a) +
                            " does not match " + std::to_string(b));
  }
}

inline void check_supported_dim(int d, const char* where) {
  if (d < 1 || d > kMaxDim) {
    throw PreconditionError(std::string(where) + ": dimension " + std::to_string(d) +
                            " outside [1, " + std::to_string(kMaxDim) + "]");
  }
}

/// e(t) = exp(2 pi i t). The argument is reduced modulo 1 first so that large
/// phases keep full relative accuracy.
inline Complex cis(double turns) {
  const double frac = turns - std::nearbyint(turns);
  const double a = kTwoPi * frac;
  return {std::cos(a), std::sin(a)};
}

/// Short decimal rendering of a double for diagnostics.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline Vec zeros(int d) { return Vec::Zero(d); }

inline Vec vec1(double x) {
  Vec v(1);
  v << x;
  return v;
}

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

/// Strict lexicographic order on equally sized vectors.
inline bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (b[i] < a[i]) return false;
  }
  return false;
}

/// Order used for point lists: by Euclidean norm, then lexicographically.
inline bool norm_lex_less(const Vec& a, const Vec& b) {
  const double na = a.squaredNorm();
  const double nb = b.squaredNorm();
  if (na != nb) return na < nb;
  return lex_less(a, b);
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace fqc
