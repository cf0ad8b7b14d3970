#include <cstdio>

#include "fqc/fqc.hpp"

int main() {
  using namespace fqc;
  const Coset z(Lattice::integer(1));
  const Coset third(Lattice::scaled_integer(1, 2.0), vec1(1.0 / 3.0));
  const ExpSum f1 = ExpSum::from_terms(1, {{1.0, vec1(0.0)}, {0.2, vec1(0.25)}});
  const ExpSum f2 = ExpSum::from_terms(1, {{0.8, vec1(0.0)}, {Complex(0.0, 0.1), vec1(0.1)}});

  // The spectrum of the sum is the sum of the two spectra.
  const double rt = 30.0, rf = 900.0;
  const FourierPair a = multiply_pair(pair_from_comb(z, rt, rf + 2.0), f1);
  const FourierPair b = multiply_pair(pair_from_comb(third, rt, rf + 2.0), f2);
  std::vector<Atom> atoms = a.time_measure().atoms();
  for (const Atom& x : b.time_measure().atoms()) atoms.push_back(x);
  const double w = std::min(a.time_measure().window_radius(), b.time_measure().window_radius());
  const FourierPair pair(AtomicMeasure(1, std::move(atoms), w), add_measures(a.freq_side(), b.freq_side()), {});

  std::vector<Vec> points;
  for (const Atom& x : pair.time_measure().atoms()) points.push_back(x.point);
  const LatticeUnion found = detect_lattice_union(points);
  std::printf("found %d cosets\n", static_cast<int>(found.cosets.size()));
  for (const Coset& c : found.cosets) {
    std::printf("  step %.6f shift %.6f\n", c.lattice().basis()(0, 0), c.shift()[0]);
  }
  const Decomposition dec = spectral_parts(pair, factor_measure(pair, found.cosets));
  std::printf("factor residual %.3e, periodicity residual %.3e\n", dec.residual, dec.periodicity_residual);
  for (std::size_t j = 0; j < dec.factors.size(); ++j) {
    std::printf("factor %zu:\n", j);
    for (const Term& t : dec.factors[j].terms()) {
      std::printf("  % .6f%+.6fi  at %.6f\n", t.coef.real(), t.coef.imag(), t.freq[0]);
    }
  }
  return 0;
}
