// Pairs a Gaussian against the Dirac comb of a sheared lattice on both sides
// of the transform and prints the two sums.
#include <cstdio>

#include "fqc/fqc.hpp"

int main() {
  using namespace fqc;
  Mat a(2, 2);
  a << 1.0, 0.5, 0.0, 1.2;
  const Coset coset(Lattice(a), vec2(0.25, 0.1));
  const FourierPair pair = pair_from_comb(coset, 8.0, 8.0);
  const TestFunction phi = TestFunction::gaussian(1.0, vec2(0.0, 0.0));
  std::printf("time atoms %zu, frequency atoms %zu\n", pair.time_measure().size(), pair.freq_side().size());
  std::printf("pairing residual %.3e\n", verify_pairing(pair, phi));
  const PoissonResult r = poisson_check(phi, coset.lattice(), 8.0);
  std::printf("lattice sum %.15f\ndual sum    %.15f\n", r.lattice_sum.real(), r.dual_sum.real());
  return 0;
}
