// Small construction helpers shared by the unit tests and the acceptance run.
#pragma once

#include "fqc/fqc.hpp"

#include <algorithm>
#include <vector>

namespace testing_support {

/// Retries a construction with the radius a TruncationError asks for.
template <class Build>
auto with_window(double radius, Build&& build) {
  for (int attempt = 0;; ++attempt) {
    try {
      return build(radius);
    } catch (const fqc::TruncationError& e) {
      if (attempt == 4) throw;
      radius = std::max(1.1 * e.required_radius, 1.5 * radius);
    }
  }
}

/// Time atoms concatenated on the common window, spectra added.
inline fqc::FourierPair add_pairs(const fqc::FourierPair& a, const fqc::FourierPair& b) {
  using namespace fqc;
  const double window = std::min(a.time_measure().window_radius(), b.time_measure().window_radius());
  std::vector<Atom> kept;
  for (const AtomicMeasure* m : {&a.time_measure(), &b.time_measure()}) {
    for (const Atom& x : m->atoms()) {
      if (x.point.norm() <= window) kept.push_back(x);
    }
  }
  return FourierPair(AtomicMeasure(a.dim(), kept, window), add_measures(a.freq_side(), b.freq_side()), {});
}

inline fqc::Complex coef_at(const fqc::ExpSum& g, const fqc::Vec& freq, double tol = 1e-9) {
  for (const fqc::Term& t : g.terms()) {
    if ((t.freq - freq).norm() <= tol) return t.coef;
  }
  return 0.0;
}

}  // namespace testing_support
