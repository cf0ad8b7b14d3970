#include <gtest/gtest.h>

#include <random>

#include "fqc/fqc.hpp"
#include "support/frozen.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace fqc;

using testing_support::add_pairs;
using testing_support::coef_at;
using testing_support::with_window;

// ---------------------------------------------------------------------------
// fourier_pair
// ---------------------------------------------------------------------------

TEST(PairFromExpsum, AtomsMirrorTerms) {
  const FourierPair p = pair_from_expsum(ExpSum::constant(1, 1.0));
  ASSERT_EQ(p.freq_side().size(), 1u);
  EXPECT_EQ(p.freq_side().atoms()[0].mass, Complex(1.0));
  const double l = std::sqrt(3.0);
  const FourierPair q = pair_from_expsum(ExpSum::from_terms(1, {{1.0, vec1(0)}, {0.5, vec1(l)}}));
  ASSERT_EQ(q.freq_side().size(), 2u);
  EXPECT_EQ(q.freq_side().atoms()[0].mass, Complex(1.0));
  EXPECT_EQ(q.freq_side().atoms()[1].point[0], l);
  EXPECT_EQ(q.freq_side().atoms()[1].mass, Complex(0.5));
}

TEST(PairFromExpsum, GaussianPairingByQuadrature) {
  const ExpSum f = ExpSum::from_terms(1, {{1.0, vec1(0)}, {Complex(0.5, -0.2), vec1(0.7)}, {0.3, vec1(-1.3)}});
  const FourierPair p = pair_from_expsum(f);
  EXPECT_LE(verify_pairing(p, TestFunction::gaussian(1.0, zeros(1))), 1e-8);
  EXPECT_LE(verify_pairing(p, TestFunction::gaussian(0.7, vec1(0.4))), 1e-8);
  const ExpSum f2 = ExpSum::from_terms(2, {{1.0, vec2(0, 0)}, {0.4, vec2(0.5, -0.3)}});
  EXPECT_LE(verify_pairing(pair_from_expsum(f2), TestFunction::gaussian(1.0, zeros(2))), 1e-8);
}

TEST(PairFromComb, IntegerLatticeIsSelfDual) {
  for (int d = 1; d <= 3; ++d) {
    const FourierPair p = pair_from_comb(Coset(Lattice::integer(d)), 3.0, 3.0);
    EXPECT_EQ(p.freq_side().size(), p.time_measure().size());
    for (const Atom& a : p.freq_side().atoms()) EXPECT_NEAR(std::abs(a.mass - 1.0), 0.0, 1e-15);
  }
}

TEST(PairFromComb, ScaledLatticeHalvesMasses) {
  const FourierPair p = pair_from_comb(Coset(Lattice::scaled_integer(1, 2.0)), 10.0, 3.0);
  for (const Atom& a : p.freq_side().atoms()) {
    EXPECT_NEAR(a.point[0] * 2.0, std::nearbyint(a.point[0] * 2.0), 1e-15);
    EXPECT_NEAR(std::abs(a.mass - 0.5), 0.0, 1e-15);
  }
  EXPECT_EQ(p.freq_side().size(), 11u);
}

TEST(PairFromComb, ShiftedCosetPhases) {
  const FourierPair p = pair_from_comb(Coset(Lattice::integer(1), vec1(1.0 / 3.0)), 10.0, 6.0);
  for (const Atom& a : p.freq_side().atoms()) {
    EXPECT_LT(std::abs(a.mass - oracle::e(-a.point[0] / 3.0)), 1e-14);
  }
}

TEST(PairFromComb, GaussianPairingAndLinearity) {
  for (int d = 1; d <= 2; ++d) {
    const FourierPair p = pair_from_comb(Coset(Lattice::integer(d)), 8.0, 8.0);
    const TestFunction phi = TestFunction::gaussian(1.0, zeros(d));
    const double base = verify_pairing(p, phi);
    EXPECT_LE(base, 1e-8);
    const FourierPair q = pair_from_comb(Coset(Lattice::integer(1), vec1(0.3)), 8.0, 8.0);
    const TestFunction psi = TestFunction::gaussian(0.9, vec1(0.2));
    const double r = verify_pairing(q, psi);
    EXPECT_NEAR(verify_pairing(q, psi.scaled(3.0)), 3.0 * r, 1e-14);
  }
}

TEST(PairFromComb, FrequencyMassesHaveInverseDeterminantModulus) {
  Mat a(2, 2);
  a << 1.3, 0.4, -0.2, 0.8;
  const FourierPair p = pair_from_comb(Coset(Lattice(a), vec2(0.1, 0.7)), 6.0, 6.0);
  for (const Atom& x : p.freq_side().atoms()) EXPECT_NEAR(std::abs(x.mass), 1.0 / std::abs(a.determinant()), 1e-14);
  EXPECT_TRUE(std::isfinite(growth_fit(p.freq_side())));
}

TEST(PairFromComb, WindowTooSmallForTestFunction) {
  const FourierPair p = pair_from_comb(Coset(Lattice::integer(1)), 2.0, 8.0);
  EXPECT_THROW(verify_pairing(p, TestFunction::gaussian(1.0, zeros(1))), TruncationError);
}

TEST(MultiplyPair, ConstantOneIsIdentity) {
  const FourierPair p = pair_from_comb(Coset(Lattice::integer(1), vec1(0.25)), 10.0, 10.0);
  const FourierPair q = multiply_pair(p, ExpSum::constant(1, 1.0));
  ASSERT_EQ(q.freq_side().size(), p.freq_side().size());
  ASSERT_EQ(q.time_measure().size(), p.time_measure().size());
  for (std::size_t i = 0; i < q.time_measure().size(); ++i) {
    EXPECT_EQ(q.time_measure().atoms()[i].mass, p.time_measure().atoms()[i].mass);
  }
  for (std::size_t i = 0; i < q.freq_side().size(); ++i) {
    EXPECT_TRUE(q.freq_side().atoms()[i].point == p.freq_side().atoms()[i].point);
    EXPECT_EQ(q.freq_side().atoms()[i].mass, p.freq_side().atoms()[i].mass);
  }
}

TEST(MultiplyPair, CharacterShiftsSpectrum) {
  const double gamma = 0.3;
  const FourierPair p = pair_from_comb(Coset(Lattice::integer(1)), 10.0, 10.0);
  const FourierPair q = multiply_pair(p, ExpSum::character(vec1(gamma)));
  for (const Atom& a : q.freq_side().atoms()) {
    const double k = a.point[0] - gamma;
    EXPECT_NEAR(k, std::nearbyint(k), 1e-14);
    EXPECT_LT(std::abs(a.mass - 1.0), 1e-15);
  }
  for (const Atom& a : q.time_measure().atoms()) EXPECT_LT(std::abs(a.mass - oracle::e(gamma * a.point[0])), 1e-13);
  EXPECT_NEAR(q.freq_side().window_radius(), 10.0 - gamma, 1e-15);
}

TEST(MultiplyPair, RandomFactorKeepsPairing) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const FourierPair p = pair_from_comb(Coset(Lattice::integer(1), vec1(0.2)), 12.0, 14.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Term> terms;
    for (int i = 0; i < 4; ++i) terms.push_back({Complex(u(rng), u(rng)), vec1(2.0 * u(rng))});
    const FourierPair q = multiply_pair(p, ExpSum::from_terms(1, terms));
    EXPECT_LE(verify_pairing(q, TestFunction::gaussian(1.0, vec1(0.5 * u(rng)))), 1e-6);
  }
}

TEST(MultiplyPair, SuccessiveFactorsMatchProduct) {
  const FourierPair p = pair_from_comb(Coset(Lattice::integer(2)), 8.0, 12.0);
  const ExpSum g = ExpSum::from_terms(2, {{1.0, vec2(0, 0)}, {0.3, vec2(0.5, 0.2)}});
  const ExpSum h = ExpSum::from_terms(2, {{0.7, vec2(-0.1, 0.4)}, {Complex(0, 0.2), vec2(0.3, 0.3)}});
  const AtomicMeasure a = multiply_pair(multiply_pair(p, g), h).freq_side();
  const AtomicMeasure b = multiply_pair(p, g * h).freq_side();
  const double common = std::min(a.window_radius(), b.window_radius()) - 1e-9;
  const AtomLookup la(b);
  std::size_t compared = 0;
  for (const Atom& x : a.atoms()) {
    if (x.point.norm() >= common) continue;
    EXPECT_LT(std::abs(x.mass - la.mass_at(x.point)), 1e-10);
    ++compared;
  }
  EXPECT_GT(compared, 100u);
}

TEST(ConvolveBump, SingleAtomGivesConstant) {
  const BumpFunction psi(1, 0.3);
  const ExpSum g = convolve_bump(psi, pair_from_expsum(ExpSum::constant(1, 2.0)));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_NEAR(g.terms()[0].coef.real(), 2.0 * 0.3 * frozen::kBumpHat[0][2], 1e-9);
}

TEST(ConvolveBump, ReproducesCombOnIntegers) {
  const BumpFunction psi(1, 0.4);
  const ExpSum g = with_window(200.0, [&](double rf) {
    return convolve_bump(psi, pair_from_comb(Coset(Lattice::integer(1)), 10.0, rf), 1e-8);
  });
  for (int n = -5; n <= 5; ++n) EXPECT_LT(std::abs(eval(g, vec1(n)) - 1.0), 1e-7);
}

TEST(ConvolveBump, MatchesSpatialConvolution) {
  const BumpFunction psi(1, 0.35);
  const Coset c(Lattice::scaled_integer(1, 0.9), vec1(0.2));
  const FourierPair p = with_window(200.0, [&](double rf) { return pair_from_comb(c, 30.0, rf); });
  const ExpSum g = with_window(p.freq_side().window_radius(), [&](double rf) {
    return convolve_bump(psi, pair_from_comb(c, 30.0, rf), 1e-8);
  });
  for (double t = -3.0; t <= 3.0; t += 0.05) {
    double direct = 0.0;
    for (const Atom& a : p.time_measure().atoms()) direct += psi.value(vec1(t) - a.point);
    EXPECT_LT(std::abs(eval(g, vec1(t)) - direct), 1e-6) << "t = " << t;
  }
}

TEST(BumpTransform, MatchesFrozenValues) {
  for (const auto& row : frozen::kBumpHat) {
    const int d = static_cast<int>(row[0]);
    const BumpFunction psi(d, 1.0);
    EXPECT_NEAR(psi.transform_radial(row[1]), row[2], 1e-9) << "d = " << d << " u = " << row[1];
    const BumpFunction half(d, 0.5);
    EXPECT_NEAR(half.transform_radial(2.0 * row[1]), std::pow(0.5, d) * row[2], 1e-9);
  }
}

TEST(PoissonCheck, GaussianCatalog) {
  EXPECT_LE(poisson_check(TestFunction::gaussian(1.0, zeros(1)), Lattice::integer(1)).residual, 1e-12);
  EXPECT_NEAR(poisson_check(TestFunction::gaussian(1.0, zeros(1)), Lattice::integer(1)).lattice_sum.real(),
              frozen::kThetaSum, 1e-15);
  EXPECT_LE(poisson_check(TestFunction::gaussian(2.0, zeros(1)), Lattice::integer(1), 16.0).residual, 1e-12);
  EXPECT_LE(poisson_check(TestFunction::gaussian(1.0, vec1(1.0 / 3.0)), Lattice::integer(1)).residual, 1e-12);
  for (double s : {0.7, 1.0, 1.3}) {
    EXPECT_LE(poisson_check(TestFunction::gaussian(s, zeros(2)), Lattice::integer(2)).residual, 1e-10);
  }
}

TEST(PoissonCheck, InsufficientRadiusThrows) {
  EXPECT_THROW(poisson_check(TestFunction::gaussian(1.0, zeros(1)), Lattice::integer(1), 2.0), TruncationError);
}

TEST(SchwartzMassReport, BoundsDirectSums) {
  const AtomicMeasure c = comb(Coset(Lattice::integer(1)), 40.0);
  const TestFunction phi = TestFunction::gaussian(1.5, zeros(1));
  const MassProfile w = profile_of(phi);
  const MassReport rep = schwartz_mass_report(w, c, 1e-3);
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const Vec t = vec1(u(rng));
    EXPECT_LE(direct_weighted_mass(w, c, t), rep.total_bound);
    EXPECT_LT(direct_weighted_mass(w, c, t, rep.tail_radius), 1e-3);
  }
  const MassReport finer = schwartz_mass_report(w, c, 1e-6);
  EXPECT_GE(finer.tail_radius, rep.tail_radius);
  EXPECT_DOUBLE_EQ(finer.total_bound, rep.total_bound);
}

TEST(MassSupCheck, IntegerComb) {
  const BumpFunction psi(1, 0.4);
  const MassSupResult r = with_window(200.0, [&](double rf) {
    return mass_sup_check(pair_from_comb(Coset(Lattice::integer(1)), 10.0, rf), psi);
  });
  EXPECT_LE(r.residual, 1e-6);
  EXPECT_TRUE(r.bound_holds);
  const MassSupResult doubled = with_window(200.0, [&](double rf) {
    const FourierPair p = pair_from_comb(Coset(Lattice::integer(1)), 10.0, rf);
    return mass_sup_check(multiply_pair(p, ExpSum::constant(1, 2.0)), psi);
  });
  EXPECT_NEAR(doubled.bound, 2.0 * r.bound, 1e-12 * r.bound);
}

// ---------------------------------------------------------------------------
// wiener_calculus
// ---------------------------------------------------------------------------

TEST(FindBasis, IrrationalMultiples) {
  const double r2 = std::sqrt(2.0);
  const FrequencyBasis b = find_basis({vec1(0), vec1(r2), vec1(2 * r2)});
  ASSERT_EQ(b.rank, 1);
  EXPECT_NEAR(std::abs(b.generators[0][0]), r2, 1e-12);
  const double s = b.generators[0][0] > 0 ? 1.0 : -1.0;
  EXPECT_EQ(b.coords[0][0], 0);
  EXPECT_EQ(b.coords[1][0] * s, 1);
  EXPECT_EQ(b.coords[2][0] * s, 2);
}

TEST(FindBasis, RationalFrequencies) {
  const FrequencyBasis b = find_basis({vec1(1.0 / 3.0), vec1(0.5)});
  ASSERT_EQ(b.rank, 1);
  EXPECT_NEAR(std::abs(b.generators[0][0]), 1.0 / 6.0, 1e-12);
  EXPECT_EQ(std::abs(b.coords[0][0]), 2);
  EXPECT_EQ(std::abs(b.coords[1][0]), 3);
  EXPECT_EQ(find_basis({}, 1e-9, 1).rank, 0);
}

TEST(FindBasis, IndependentFrequenciesAndResiduals) {
  std::mt19937_64 rng(61);
  std::uniform_int_distribution<int> k(-4, 4);
  const Vec g1 = vec1(1.0);
  const Vec g2 = vec1(std::sqrt(2.0));
  const Vec g3 = vec1(std::sqrt(5.0));
  std::vector<Vec> freqs;
  for (int i = 0; i < 12; ++i) freqs.push_back(k(rng) * g1 + k(rng) * g2 + k(rng) * g3);
  const FrequencyBasis b = find_basis(freqs);
  EXPECT_LE(b.rank, 3);
  for (std::size_t i = 0; i < freqs.size(); ++i) EXPECT_LT((b.combine(b.coords[i]) - freqs[i]).norm(), 1e-9);
}

TEST(Compose, IdentityPolynomial) {
  const ExpSum f = ExpSum::from_terms(1, {{1.0, vec1(0)}, {0.3, vec1(std::sqrt(2.0))}, {-0.2, vec1(1.0)}});
  const Composition c = compose(HolomorphicSymbol::polynomial({0.0, 1.0}), f);
  ASSERT_EQ(c.g.size(), f.size());
  for (const Term& t : f.terms()) EXPECT_LT(std::abs(coef_at(c.g, t.freq) - t.coef), 1e-12);
}

TEST(Compose, ReciprocalGeometricSeries) {
  const double l = std::sqrt(3.0);
  const ExpSum f = ExpSum::from_terms(1, {{1.0, vec1(0)}, {0.5, vec1(l)}});
  const Composition c = compose(HolomorphicSymbol::reciprocal(), f);
  for (int n = 0; n < 30; ++n) EXPECT_NEAR(std::abs(coef_at(c.g, vec1(n * l)) - std::pow(-0.5, n)), 0.0, 1e-12);
  const ExpSum one = f * c.g;
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 50; ++i) EXPECT_LT(std::abs(eval(one, vec1(u(rng))) - 1.0), 1e-9);
}

TEST(Compose, ExponentialOfConstant) {
  const Complex c0(0.3, 0.8);
  const Composition c = compose(HolomorphicSymbol::exponential(), ExpSum::constant(2, c0));
  ASSERT_EQ(c.g.size(), 1u);
  EXPECT_LT(std::abs(c.g.terms()[0].coef - std::exp(c0)), 1e-14);
}

TEST(Compose, ReciprocalGuardFires) {
  const ExpSum f = ExpSum::from_terms(1, {{1.0, vec1(0)}, {1.0, vec1(1.0)}});
  EXPECT_THROW(compose(HolomorphicSymbol::reciprocal(), f), DomainGuardViolation);
}

TEST(Compose, NeumannSeriesOracle) {
  const double r2 = std::sqrt(2.0);
  const std::vector<std::pair<std::vector<long>, Complex>> u_terms = {
      {{1, 0}, 0.3}, {{0, 1}, Complex(0.1, 0.15)}, {{-1, 1}, -0.12}};
  std::vector<Term> terms{{1.0, vec1(0)}};
  oracle::IntPoly u;
  for (const auto& [k, c] : u_terms) {
    terms.push_back({c, vec1(k[0] + k[1] * r2)});
    u[k] = c;
  }
  const ExpSum f = ExpSum::from_terms(1, terms);
  const Composition rc = compose(HolomorphicSymbol::reciprocal(), f);
  const oracle::IntPoly ref = oracle::neumann_reciprocal(u, 70, 80);
  std::size_t compared = 0;
  for (const auto& [k, c] : ref) {
    if (std::abs(c) < 1e-10) continue;
    EXPECT_LT(std::abs(coef_at(rc.g, vec1(k[0] + k[1] * r2)) - c), 1e-8);
    ++compared;
  }
  EXPECT_GT(compared, 50u);
  for (const Term& t : rc.g.terms()) {
    bool in_span = false;
    for (int k1 = -300; k1 <= 300 && !in_span; ++k1) {
      const double rest = t.freq[0] - k1 * r2;
      in_span = std::abs(rest - std::nearbyint(rest)) < 1e-9;
    }
    EXPECT_TRUE(in_span) << t.freq[0];
  }
}

TEST(EpsInverse, ConstantAndVanishingInputs) {
  const Composition one = eps_inverse(ExpSum::constant(1, 1.0), 0.5);
  ASSERT_EQ(one.g.size(), 1u);
  EXPECT_LT(std::abs(one.g.terms()[0].coef - 1.0), 1e-14);
  const ExpSum small = ExpSum::from_terms(1, {{0.1, vec1(0)}, {0.1, vec1(std::sqrt(2.0))}});
  EXPECT_TRUE(eps_inverse(small, 0.5).g.empty());
}

TEST(EpsInverse, DenseGridContract) {
  const ExpSum f = ExpSum::from_terms(1, {{1.0, vec1(0)}, {0.9, vec1(1.0)}});
  const Composition c = eps_inverse(f, 0.5);
  double prod = 0.0;
  double zero = 0.0;
  for (int i = 0; i < 4096; ++i) {
    const Vec x = vec1(i / 4096.0);
    const Complex fv = eval(f, x);
    const Complex gv = eval(c.g, x);
    if (std::abs(fv) >= 0.5) prod = std::max(prod, std::abs(fv * gv - 1.0));
    if (std::abs(fv) <= 0.25) zero = std::max(zero, std::abs(gv));
  }
  EXPECT_LE(prod, 1e-6);
  EXPECT_LE(zero, 1e-6);
  EXPECT_LE(c.product_residual, 1e-6);
  EXPECT_TRUE(std::isfinite(w_norm(c.g)));
}

TEST(EpsInverse, FrozenCoefficients) {
  for (const auto& row : frozen::kEpsInverse) {
    const ExpSum f = ExpSum::from_terms(1, {{1.0, vec1(0)}, {row[0], vec1(1.0)}});
    const Composition c = eps_inverse(f, row[1]);
    const Complex want(row[3], row[4]);
    EXPECT_LT(std::abs(coef_at(c.g, vec1(row[2])) - want), 1e-8) << "a = " << row[0] << " k = " << row[2];
  }
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

TEST(DetectLatticeUnion, IntegersInWindow) {
  std::vector<Vec> pts;
  for (int k = -50; k <= 50; ++k) pts.push_back(vec1(k));
  const LatticeUnion u = detect_lattice_union(pts);
  ASSERT_TRUE(u.found) << u.failure;
  ASSERT_EQ(u.cosets.size(), 1u);
  EXPECT_TRUE(same_lattice(u.cosets[0].lattice(), Lattice::integer(1)));
  EXPECT_NEAR(u.cosets[0].shift()[0], 0.0, 1e-9);
}

TEST(DetectLatticeUnion, IntegersAndIrrationalCoset) {
  const std::vector<Vec> pts = read_points_csv_file(FQC_DATA_DIR "/z_union_sqrt2z.csv");
  const LatticeUnion u = detect_lattice_union(pts);
  ASSERT_TRUE(u.found) << u.failure;
  ASSERT_EQ(u.cosets.size(), 2u);
  const double r2 = std::sqrt(2.0);
  int matched = 0;
  for (const Coset& c : u.cosets) {
    if (same_lattice(c.lattice(), Lattice::integer(1)) && std::abs(c.shift()[0]) < 1e-9) ++matched;
    if (same_lattice(c.lattice(), Lattice::scaled_integer(1, r2), 1e-7) &&
        c.contains_point(vec1(1.0 / 3.0), 1e-7)) {
      ++matched;
    }
  }
  EXPECT_EQ(matched, 2);
  double window = 0.0;
  for (const Vec& p : pts) window = std::max(window, p.norm());
  EXPECT_TRUE(mutual_coverage(pts, u.cosets, window));
}

TEST(DetectLatticeUnion, TwoDimensionalUnion) {
  std::vector<Vec> pts;
  const Coset a(Lattice::integer(2));
  const Coset b(Lattice::integer(2), vec2(0.5, 0.3));
  for (const Vec& p : enumerate_in_ball(a, 8.0)) pts.push_back(p);
  for (const Vec& p : enumerate_in_ball(b, 8.0)) pts.push_back(p);
  const LatticeUnion u = detect_lattice_union(pts);
  ASSERT_TRUE(u.found) << u.failure;
  EXPECT_EQ(u.cosets.size(), 2u);
  EXPECT_TRUE(mutual_coverage(pts, u.cosets, 8.0));
}

TEST(DetectLatticeUnion, RandomPointsFail) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::vector<Vec> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(vec1(u(rng)));
  const LatticeUnion r = detect_lattice_union(pts);
  EXPECT_FALSE(r.found);
  EXPECT_FALSE(r.failure.empty());
}

TEST(DetectLatticeUnion, Preconditions) {
  EXPECT_THROW(detect_lattice_union({vec1(0), vec1(0)}), PreconditionError);
  Vec p3 = Vec::Zero(3);
  EXPECT_THROW(detect_lattice_union({p3}), PreconditionError);
}

TEST(FactorMeasure, IntegerCombIsConstantOne) {
  const Coset z(Lattice::integer(1));
  const Decomposition dec = with_window(300.0, [&](double rf) {
    return factor_measure(pair_from_comb(z, 15.0, rf), {z});
  });
  ASSERT_EQ(dec.factors.size(), 1u);
  EXPECT_LE(dec.residual, 1e-8);
  EXPECT_LT(std::abs(coef_at(dec.factors[0], vec1(0)) - 1.0), 1e-8);
  EXPECT_LT(w_norm(dec.factors[0]) - 1.0, 1e-7);
}

TEST(FactorMeasure, AlternatingMassesOverIntegers) {
  const Coset z(Lattice::integer(1));
  const ExpSum f = ExpSum::from_terms(1, {{2.5, vec1(0)}, {-0.5, vec1(0.5)}});
  const Decomposition dec = with_window(300.0, [&](double rf) {
    return factor_measure(multiply_pair(pair_from_comb(z, 15.0, rf + 1.0), f), {z});
  });
  EXPECT_LE(dec.residual, 1e-8);
  EXPECT_NEAR(eval(dec.factors[0], vec1(0)).real(), 2.0, 1e-7);
  EXPECT_NEAR(eval(dec.factors[0], vec1(1)).real(), 3.0, 1e-7);
  EXPECT_LT(std::abs(coef_at(dec.factors[0], vec1(0.5)) + 0.5), 1e-7);
}

class TwoCosetMeasure : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const Coset c1(Lattice::integer(1));
    const Coset c2(Lattice::scaled_integer(1, 2.0), vec1(1.0 / 3.0));
    const ExpSum f1 = ExpSum::from_terms(1, {{1.0, vec1(0)}, {Complex(0.2, 0.1), vec1(0.5)}});
    const ExpSum f2 = ExpSum::from_terms(1, {{0.7, vec1(0)}, {-0.15, vec1(0.25)}});
    cosets = {c1, c2};
    dec = new Decomposition(with_window(400.0, [&](double rf) {
      const FourierPair p = add_pairs(multiply_pair(pair_from_comb(c1, 20.0, rf + 1.0), f1),
                                      multiply_pair(pair_from_comb(c2, 20.0, rf + 1.0), f2));
      truth = p.time_measure();
      return spectral_parts(p, factor_measure(p, cosets));
    }));
  }
  static void TearDownTestSuite() { delete dec; }

  static inline std::vector<Coset> cosets;
  static inline Decomposition* dec = nullptr;
  static inline AtomicMeasure truth{1};
};

TEST_F(TwoCosetMeasure, AtomwiseResidual) {
  EXPECT_LE(dec->residual, 1e-6);
  for (const Atom& a : truth.atoms()) {
    const std::size_t j = cosets[0].contains_point(a.point, 1e-9) ? 0 : 1;
    EXPECT_LT(std::abs(eval(dec->factors[j], a.point) - a.mass), 1e-6);
  }
}

TEST_F(TwoCosetMeasure, FactorFrequenciesInFundamentalCell) {
  for (std::size_t j = 0; j < dec->factors.size(); ++j) {
    const Lattice dl = dual(cosets[j].lattice());
    for (const Term& t : dec->factors[j].terms()) {
      const Vec u = dl.coords(t.freq);
      EXPECT_GE(u[0], -1e-12);
      EXPECT_LT(u[0], 1.0);
    }
  }
}

TEST_F(TwoCosetMeasure, PeriodicityAndReconstruction) {
  EXPECT_LE(dec->periodicity_residual, 1e-8);
  ASSERT_TRUE(dec->reconstruction_applicable);
  EXPECT_LE(dec->reconstruction_residual, 1e-6);
  ASSERT_EQ(dec->period_lattices.size(), 2u);
  EXPECT_TRUE(same_lattice(dec->period_lattices[1], Lattice::scaled_integer(1, 0.5)));
}

TEST(SpectralParts, IntegerCombIsUnitComb) {
  const Coset z(Lattice::integer(1));
  const Decomposition dec = with_window(300.0, [&](double rf) {
    const FourierPair p = pair_from_comb(z, 15.0, rf);
    return spectral_parts(p, factor_measure(p, {z}));
  });
  ASSERT_EQ(dec.spectral_parts.size(), 1u);
  for (const Atom& a : dec.spectral_parts[0].atoms()) {
    EXPECT_NEAR(a.point[0], std::nearbyint(a.point[0]), 1e-12);
    EXPECT_LT(std::abs(a.mass - 1.0), 1e-7);
  }
  EXPECT_LE(dec.periodicity_residual, 1e-8);
  EXPECT_TRUE(same_lattice(dec.period_lattices[0], Lattice::integer(1)));
}

TEST(SpectralParts, ShiftedCombPhaseIsPeeledOff) {
  const Coset c(Lattice::integer(1), vec1(1.0 / 3.0));
  const Decomposition dec = with_window(300.0, [&](double rf) {
    const FourierPair p = pair_from_comb(c, 15.0, rf);
    return spectral_parts(p, factor_measure(p, {c}));
  });
  for (const Atom& a : dec.spectral_parts[0].atoms()) EXPECT_LT(std::abs(a.mass - 1.0), 1e-7);
  EXPECT_LE(dec.periodicity_residual, 1e-8);
  EXPECT_LE(dec.reconstruction_residual, 1e-6);
}

TEST(SpectralParts, WindowTooSmall) {
  const Coset z(Lattice::integer(1));
  const FourierPair p = with_window(300.0, [&](double rf) { return pair_from_comb(z, 15.0, rf); });
  Decomposition dec = factor_measure(p, {z});
  const FourierPair narrow(p.time_side(), restrict_to_ball(p.freq_side(), 2.0), {});
  EXPECT_THROW(spectral_parts(narrow, dec), TruncationError);
}

TEST(DecomposePoints, FixtureRoundTrip) {
  const std::vector<Vec> pts = read_points_csv_file(FQC_DATA_DIR "/z_union_sqrt2z.csv");
  const LatticeUnion u = detect_lattice_union(pts);
  ASSERT_TRUE(u.found);
  const Decomposition dec = decompose_points(pts, u);
  EXPECT_LE(dec.residual, 1e-6);
  EXPECT_LE(dec.periodicity_residual, 1e-8);
  EXPECT_FALSE(dec.reconstruction_applicable);
  ASSERT_EQ(dec.factors.size(), 2u);
  for (const ExpSum& f : dec.factors) EXPECT_LT(std::abs(coef_at(f, zeros(1)) - 1.0), 1e-6);
}

// ---------------------------------------------------------------------------
// coherence
// ---------------------------------------------------------------------------

TEST(SelectU, ConditionsOnMassAndSpacing) {
  const AtomicMeasure c = comb(Coset(Lattice::integer(1)), 6.0);
  EXPECT_EQ(select_U(c, 0.5).size(), c.size());
  std::vector<Atom> atoms;
  for (int k = -5; k <= 5; ++k) atoms.push_back({vec1(k), k % 2 == 0 ? 1.0 : 0.1});
  const auto u = select_U(AtomicMeasure(1, atoms, 6.0), 0.5);
  EXPECT_EQ(u.size(), 5u);
  for (const Vec& x : u) EXPECT_EQ(static_cast<int>(x[0]) % 2, 0);
  const auto v = select_U(AtomicMeasure(1, {{vec1(0), 1.0}, {vec1(0.25), 1.0}, {vec1(2), 1.0}}, 3.0), 0.5);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0][0], 2.0);
}

class CombCertificate : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<Vec> ts{zeros(1)};
    for (int i = 0; i < 10; ++i) ts.push_back(vec1(u(rng)));
    cert = new CoherenceCertificate(build_certificate(pair_from_comb(Coset(Lattice::integer(1)), 30.0, 2800.0), 0.5, ts));
  }
  static void TearDownTestSuite() { delete cert; }
  static inline CoherenceCertificate* cert = nullptr;
};

TEST_F(CombCertificate, InterpolatesAtZeroShift) {
  ASSERT_TRUE(cert->valid());
  EXPECT_LE(cert->samples[0].interpolation_residual, 1e-6);
  EXPECT_EQ(cert->U.size(), 59u);
}

TEST_F(CombCertificate, ConstantsIndependentOfShift) {
  ASSERT_EQ(cert->samples.size(), 11u);
  for (const CoherenceSample& s : cert->samples) {
    EXPECT_EQ(s.C, cert->C);
    EXPECT_EQ(s.r, cert->r);
    EXPECT_LT(s.tail_mass + s.truncation_charge, 0.5);
    EXPECT_LE(s.total_mass, cert->C);
    EXPECT_LE(s.interpolation_residual + s.truncation_charge, 1e-6);
  }
}

TEST_F(CombCertificate, TailMassByDirectSummation) {
  const Vec t = cert->samples[3].t;
  const AtomicMeasure fh = interpolant_spectrum(*cert, t);
  double tail = 0.0;
  for (const Atom& a : fh.atoms()) {
    if (a.point.norm() > cert->r) tail += std::abs(a.mass);
  }
  EXPECT_LT(tail, 0.5);
}

TEST_F(CombCertificate, SingleExponent) {
  const InequalityResult r = verify_inequality(*cert, {{cert->U[0], 1.0}});
  EXPECT_NEAR(r.lhs, 1.0, 1e-12);
  EXPECT_NEAR(r.rhs, 2.0 * cert->C, 1e-9);
  EXPECT_TRUE(r.ok);
  EXPECT_GE(cert->C, 0.5);
}

TEST_F(CombCertificate, HomogeneityAndRandomTrials) {
  std::mt19937_64 rng(82);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<Vec, Complex>> coeffs;
    for (const Vec& x : cert->U) coeffs.push_back({x, Complex(u(rng), u(rng))});
    const InequalityResult r = verify_inequality(*cert, coeffs);
    EXPECT_TRUE(r.ok) << r.lhs << " vs " << r.rhs;
    if (trial == 0) {
      for (auto& [x, c] : coeffs) c *= 2.5;
      const InequalityResult s = verify_inequality(*cert, coeffs);
      EXPECT_NEAR(s.lhs, 2.5 * r.lhs, 1e-9 * r.lhs);
      EXPECT_NEAR(s.rhs, 2.5 * r.rhs, 1e-9 * r.rhs);
      EXPECT_TRUE(s.ok);
    }
  }
}

TEST_F(CombCertificate, CoefficientOutsideUIsRejected) {
  EXPECT_THROW(verify_inequality(*cert, {{vec1(0.5), 1.0}}), PreconditionError);
}
