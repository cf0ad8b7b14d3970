// Textbook LLL reduction for a handful of short real vectors. Used for integer
// relation search and for putting lattice bases into a reduced form.
#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace fqc::detail {

struct LllResult {
  /// Reduced vectors (rows).
  std::vector<std::vector<long double>> basis;
  /// Integer transform: basis[i] = sum_j transform[i][j] * input[j].
  std::vector<std::vector<std::int64_t>> transform;
};

inline LllResult lll_reduce(std::vector<std::vector<long double>> b, long double delta = 0.99L) {
  const std::size_t k = b.size();
  LllResult out;
  out.transform.assign(k, std::vector<std::int64_t>(k, 0));
  for (std::size_t i = 0; i < k; ++i) out.transform[i][i] = 1;
  if (k == 0) {
    out.basis = std::move(b);
    return out;
  }
  const std::size_t m = b[0].size();

  auto dot = [m](const std::vector<long double>& x, const std::vector<long double>& y) {
    long double s = 0;
    for (std::size_t i = 0; i < m; ++i) s += x[i] * y[i];
    return s;
  };

  std::vector<std::vector<long double>> bstar(k, std::vector<long double>(m));
  std::vector<std::vector<long double>> mu(k, std::vector<long double>(k, 0));
  std::vector<long double> norm2(k);

  auto gram_schmidt = [&]() {
    for (std::size_t i = 0; i < k; ++i) {
      bstar[i] = b[i];
      for (std::size_t j = 0; j < i; ++j) {
        mu[i][j] = norm2[j] > 0 ? dot(b[i], bstar[j]) / norm2[j] : 0;
        for (std::size_t t = 0; t < m; ++t) bstar[i][t] -= mu[i][j] * bstar[j][t];
      }
      norm2[i] = dot(bstar[i], bstar[i]);
    }
  };

  gram_schmidt();
  std::size_t i = 1;
  int guard = 0;
  while (i < k && guard++ < 100000) {
    for (std::size_t jj = i; jj-- > 0;) {
      const long double q = std::nearbyint(mu[i][jj]);
      if (q != 0) {
        for (std::size_t t = 0; t < m; ++t) b[i][t] -= q * b[jj][t];
        const auto qi = static_cast<std::int64_t>(q);
        for (std::size_t t = 0; t < k; ++t) out.transform[i][t] -= qi * out.transform[jj][t];
        gram_schmidt();
      }
    }
    if (norm2[i] >= (delta - mu[i][i - 1] * mu[i][i - 1]) * norm2[i - 1]) {
      ++i;
    } else {
      std::swap(b[i], b[i - 1]);
      std::swap(out.transform[i], out.transform[i - 1]);
      gram_schmidt();
      i = i > 1 ? i - 1 : 1;
    }
  }
  out.basis = std::move(b);
  return out;
}

}  // namespace fqc::detail
