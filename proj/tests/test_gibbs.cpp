#include <gtest/gtest.h>

#include <random>

#include "ruelle/gibbs.hpp"
#include "ruelle/reference.hpp"

using namespace ruelle;

namespace {

AprioriMeasure uniform(std::size_t d) { return build_apriori(measure_spec::Uniform{d}); }
AprioriMeasure circle(std::size_t n) { return build_apriori(measure_spec::CircleQuadrature{n}); }

PotentialTable diag_log2() { return PotentialTable(2, 2, {std::log(2.0), 0.0, 0.0, std::log(2.0)}); }

PotentialTable random_table(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(std::pow(n, k)));
  for (double& x : v) x = U(rng);
  return PotentialTable(n, k, std::move(v));
}

}  // namespace

TEST(Markov, ZeroPotentialIsProduct) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  auto m = gibbs_markov(PotentialTable::constant(3, 2, 0.0), nu);
  for (double t : m.theta) EXPECT_NEAR(t, 1.0, 1e-13);
  for (double k : m.kernel) EXPECT_NEAR(k, 1.0, 1e-13);
}

TEST(Markov, TwoStateClosedForm) {
  auto m = gibbs_markov(diag_log2(), uniform(2));
  // M = [[1, 1/2], [1/2, 1]]: lambda = 3/2, psi = psibar = (1, 1)
  EXPECT_NEAR(std::exp(m.log_lambda), 1.5, 1e-13);
  EXPECT_NEAR(m.theta[0], 1.0, 1e-13);
  EXPECT_NEAR(m.theta[1], 1.0, 1e-13);
  EXPECT_NEAR(m.K(0, 0), 4.0 / 3.0, 1e-13);
  EXPECT_NEAR(m.K(0, 1), 2.0 / 3.0, 1e-13);
  EXPECT_NEAR(m.K(1, 1), 4.0 / 3.0, 1e-13);
  EXPECT_LE(check_invariants(m).worst(), 1e-13);
}

TEST(Markov, AsymmetricTwoStateAgainstPerronData) {
  PotentialTable A(2, 2, {0.3, -0.2, 0.9, 0.1});
  auto nu = build_apriori(measure_spec::Explicit{{0.4, 0.6}});
  auto m = gibbs_markov(A, nu);
  // L psi(x) = sum_a w_a e^{A(a,x)} psi(a): matrix rows x, cols a
  const double a = 0.4 * std::exp(0.3), b = 0.6 * std::exp(0.9), c = 0.4 * std::exp(-0.2), d = 0.6 * std::exp(0.1);
  auto sp = reference::spectrum_2x2(a, b, c, d);
  EXPECT_NEAR(std::exp(m.log_lambda), sp.perron, 1e-12);
  auto psi = reference::perron_vector_2x2(a, b, c, d);
  // transpose-type operator for psibar: psibar(x) = sum_b w_b e^{A(x,b)} psibar(b)
  auto pb = reference::perron_vector_2x2(0.4 * std::exp(0.3), 0.6 * std::exp(-0.2), 0.4 * std::exp(0.9), 0.6 * std::exp(0.1));
  const double pi = 0.4 * psi[0] * pb[0] + 0.6 * psi[1] * pb[1];
  EXPECT_NEAR(m.theta[0], psi[0] * pb[0] / pi, 1e-12);
  EXPECT_NEAR(m.theta[1], psi[1] * pb[1] / pi, 1e-12);
  EXPECT_NEAR(m.K(1, 0), std::exp(0.9) * pb[0] / (pb[1] * sp.perron), 1e-12);
}

TEST(Markov, XYRotationInvariant) {
  auto nu = circle(64);
  auto A = Potential::xy(0, 0).tabulate(nu.space());
  auto m = gibbs_markov(A, nu);
  const double i0 = reference::bessel_i(0, 1.0);
  for (double t : m.theta) EXPECT_NEAR(t, 1.0, 1e-10);
  for (std::size_t t = 0; t < A.size(); ++t) EXPECT_NEAR(m.kernel[t], std::exp(A[t]) / i0, 1e-10);
}

TEST(Markov, InvariantsRangeThree) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  auto m = gibbs_markov(random_table(3, 3, 8), nu);
  EXPECT_EQ(m.rank, 2u);
  EXPECT_LE(check_invariants(m).worst(), 1e-10);
  EXPECT_LE(normalization_residual(*m.normalized, nu), 1e-10);
  auto lm = gibbs_markov(random_table(3, 3, 8), nu, {EigenMethod::log_domain, {}});
  EXPECT_LE(check_invariants(lm).worst(), 1e-10);
  for (std::size_t i = 0; i < m.theta.size(); ++i) EXPECT_NEAR(m.theta[i], lm.theta[i], 1e-10);
}

TEST(Markov, RangeOneLifted) {
  auto nu = build_apriori(measure_spec::IntervalQuadrature{16});
  auto m = gibbs_markov(Potential::exp_interval(1.0), nu);
  EXPECT_EQ(m.rank, 1u);
  EXPECT_LE(check_invariants(m).worst(), 1e-12);
}

TEST(Markov, HandBuiltRejected) {
  auto nu = uniform(2);
  EXPECT_THROW(markov_from_kernel(nu, 1, {1.0, 1.0}, {1.5, 0.5, 1.0, 0.9}), ConfigError);
}

TEST(FromKernel, ProductKernel) {
  auto nu = uniform(3);
  auto m = markov_from_kernel(nu, 1, std::vector<double>(3, 1.0), std::vector<double>(9, 1.0));
  auto B = potential_from_kernel(m);
  for (double v : B.base.values) EXPECT_DOUBLE_EQ(v, 0.0);
  EXPECT_DOUBLE_EQ(B.lambda, 1.0);
}

TEST(FromKernel, TwoStateRoundTrip) {
  auto nu = uniform(2);
  auto m = gibbs_markov(diag_log2(), nu);
  auto B = potential_from_kernel(m);
  auto back = gibbs_markov(B.base, nu);
  EXPECT_NEAR(back.log_lambda, 0.0, 1e-13);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(back.kernel[i], m.kernel[i], 1e-10);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(back.theta[i], m.theta[i], 1e-10);
}

TEST(FromKernel, RandomThreeStateRoundTrip) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.1, 1.0);
  // rows P(a, .) normalized, then K = P / w
  Eigen::Matrix3d P;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) P(a, b) = U(rng);
    P.row(a) /= P.row(a).sum();
  }
  // stationary pi: (P^T - I) pi = 0 with sum 1
  Eigen::Matrix3d S = P.transpose() - Eigen::Matrix3d::Identity();
  S.row(2) = Eigen::RowVector3d::Ones();
  Eigen::Vector3d pi = S.fullPivLu().solve(Eigen::Vector3d(0, 0, 1));
  std::vector<double> theta(3), K(9);
  for (int a = 0; a < 3; ++a) {
    theta[a] = pi(a) / nu.weight(a);
    for (int b = 0; b < 3; ++b) K[a * 3 + b] = P(a, b) / nu.weight(b);
  }
  auto m = markov_from_kernel(nu, 1, theta, K);
  auto back = gibbs_markov(potential_from_kernel(m).base, nu);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(back.kernel[i], K[i], 1e-8);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back.theta[i], theta[i], 1e-8);
}

TEST(FromKernel, ZeroEntryRejected) {
  auto nu = uniform(2);
  auto m = markov_from_kernel(nu, 1, {1.0, 1.0}, {2.0, 0.0, 0.0, 2.0});
  EXPECT_THROW(potential_from_kernel(m), ConfigError);
}

TEST(Entropy, ZeroPotential) {
  auto nu = uniform(2);
  auto m = gibbs_markov(PotentialTable::constant(2, 2, 0.0), nu);
  EXPECT_NEAR(entropy_gibbs(*m.normalized, m).value, 0.0, 1e-14);
  auto c = entropy_cylinder(m, 6);
  EXPECT_NEAR(c.report.value, 0.0, 1e-13);
  EXPECT_NEAR(c.classical_rate, std::log(2.0), 1e-13);
}

TEST(Entropy, TwoStateAllDefinitionsAgree) {
  auto nu = uniform(2);
  auto m = gibbs_markov(diag_log2(), nu);
  const double h = -((2.0 / 3.0) * std::log(4.0 / 3.0) + (1.0 / 3.0) * std::log(2.0 / 3.0));
  EXPECT_NEAR(entropy_gibbs(*m.normalized, m).value, h, 1e-12);
  EXPECT_NEAR(entropy_markov(m).value, h, 1e-12);
  EXPECT_NEAR(entropy_markov(m).value, entropy_gibbs(*m.normalized, m).value, 1e-10);
  EXPECT_LE(h, 0.0);
}

TEST(Entropy, TwoStateCylinderConverges) {
  auto nu = uniform(2);
  auto m = gibbs_markov(diag_log2(), nu);
  const double h = entropy_markov(m).value;
  double prev_gap = 1.0;
  for (std::size_t n = 1; n <= 8; ++n) {
    auto c = entropy_cylinder(m, n);
    const double gap = std::abs(c.report.value - h);
    if (n >= 2) {
      EXPECT_LT(gap, prev_gap);
      EXPECT_NEAR(c.conditional, h, 1e-12);
    }
    EXPECT_NEAR(c.report.value + std::log(2.0), c.classical_rate, 1e-12);
    prev_gap = gap;
  }
}

TEST(Entropy, BernoulliCylinderIsZero) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  auto m = gibbs_markov(PotentialTable::constant(3, 2, 0.4), nu);
  for (std::size_t n : {1, 3, 7}) EXPECT_NEAR(entropy_cylinder(m, n).report.value, 0.0, 1e-13);
}

TEST(Entropy, CylinderCap) {
  auto nu = uniform(4);
  auto m = gibbs_markov(PotentialTable::constant(4, 2, 0.0), nu);
  EXPECT_THROW(entropy_cylinder(m, 11), CapacityError);
  auto cm = gibbs_markov(PotentialTable::constant(4, 2, 0.0), circle(4));
  EXPECT_THROW(entropy_cylinder(cm, 2), UnsupportedError);
}

TEST(Entropy, XYBessel) {
  auto nu = circle(64);
  auto m = gibbs_markov(Potential::xy(0, 0), nu);
  const double expect = reference::xy_entropy(1.0);
  EXPECT_NEAR(entropy_gibbs(*m.normalized, m).value, expect, 1e-10);
  EXPECT_NEAR(entropy_markov(m).value, expect, 1e-10);
}

TEST(Entropy, ProvenanceMismatch) {
  auto nu = uniform(2);
  auto m = gibbs_markov(diag_log2(), nu);
  EXPECT_THROW(entropy_gibbs(PotentialTable::constant(2, 2, 0.0), m), ConfigError);
}

TEST(UpperBound, AttainedAtOwnPotential) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  auto B = random_table(3, 2, 12);
  auto m = gibbs_markov(B, nu);
  auto e = entropy_upper_bound(InvariantMeasure::from_markov(m), {PotentialTable::constant(3, 2, 0.0), B}, nu);
  EXPECT_NEAR(e.value, entropy_markov(m).value, 1e-10);
  EXPECT_EQ(*e.argmin, 1u);
}

TEST(UpperBound, ProductAndZero) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  auto e = entropy_upper_bound(InvariantMeasure::product(nu), {PotentialTable::constant(3, 1, 0.0)}, nu);
  EXPECT_NEAR(e.value, 0.0, 1e-14);
}

TEST(UpperBound, DiracOnIntervalFallsWithoutBound) {
  const int N = 64;
  auto nu = build_apriori(measure_spec::IntervalQuadrature{N});
  std::vector<PotentialTable> fam;
  for (double c : {1.0, 2.0, 4.0, 8.0}) fam.push_back(Potential::exp_interval(c).tabulate(nu.space()));
  auto e = entropy_upper_bound(InvariantMeasure::periodic_orbit(N, {0}), fam, nu);
  std::size_t i = 0;
  for (double c : {1.0, 2.0, 4.0, 8.0}) {
    const double closed = -std::log(c / (1.0 - std::exp(-c))) + std::log(reference::exp_interval_eigenvalue(c, N));
    EXPECT_NEAR(e.bounds[i], closed, 1e-12);
    if (i > 0) {
      EXPECT_LT(e.bounds[i], e.bounds[i - 1]);
    }
    ++i;
  }
  EXPECT_TRUE(e.minus_infinity);
  EXPECT_EQ(*e.argmin, 3u);
}

TEST(Pressure, Examples) {
  auto nu = uniform(3);
  auto c = pressure(PotentialTable::constant(3, 1, 0.6), nu);
  EXPECT_NEAR(c.pressure, 0.6, 1e-13);
  EXPECT_NEAR(c.entropy, 0.0, 1e-13);
  EXPECT_NEAR(c.integral, 0.6, 1e-13);

  auto xy = pressure(Potential::xy(0, 0).tabulate(circle(64).space()), circle(64));
  EXPECT_NEAR(xy.pressure, 0.235914, 1e-6);
  EXPECT_NEAR(xy.pressure, std::log(reference::bessel_i(0, 1.0)), 1e-12);
  EXPECT_LE(xy.residual, 1e-8);

  PotentialTable flip(2, 2, {0.0, 1.0, 1.0, 0.0});
  auto f = pressure(flip, uniform(2));
  const double e = std::exp(1.0);
  EXPECT_NEAR(f.pressure, std::log(reference::spectrum_2x2(0.5, 0.5 * e, 0.5 * e, 0.5).perron), 1e-12);
  EXPECT_LE(f.residual, 1e-10);
}

TEST(Pressure, VariationalDominance) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto A = random_table(3, 2, 100 + s), B = random_table(3, 2, 200 + s);
    auto mB = gibbs_markov(B, nu);
    const double lhs = entropy_gibbs(*mB.normalized, mB).value + mB.integrate(A);
    EXPECT_LE(lhs, pressure(A, nu).pressure + 1e-8);
  }
}

TEST(Minimax, InequalityAndAttainment) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  auto A = random_table(3, 2, 51), B = random_table(3, 2, 52);
  auto mB = gibbs_markov(B, nu);
  const double target = entropy_gibbs(*mB.normalized, mB).value + mB.integrate(A);
  EXPECT_GE(minimax_value(A, mB, GridFunction::constant(3, 1, 1.0)), target - 1e-9);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.2, 3.0);
  for (int t = 0; t < 10; ++t) {
    GridFunction u(3, 2, std::vector<double>(9));
    for (double& v : u.values) v = U(rng);
    EXPECT_GE(minimax_value(A, mB, u), target - 1e-9);
  }
  auto ut = minimax_attaining_function(A, *mB.normalized);
  EXPECT_NEAR(minimax_value(A, mB, ut), target, 1e-9);
  EXPECT_THROW(minimax_value(A, mB, GridFunction::constant(3, 1, 0.0)), ConfigError);
}

TEST(Minimax, ZeroPotentialJensen) {
  auto nu = uniform(2);
  auto m = gibbs_markov(PotentialTable::constant(2, 2, 0.0), nu);
  EXPECT_NEAR(minimax_value(PotentialTable::constant(2, 2, 0.0), m, GridFunction::constant(2, 1, 1.0)), 0.0, 1e-15);
  EXPECT_GE(minimax_value(PotentialTable::constant(2, 2, 0.0), m, GridFunction(2, 1, {1.0, 5.0})), 0.0);
}

TEST(Correlation, ProductIsUncorrelated) {
  auto nu = uniform(3);
  auto m = gibbs_markov(PotentialTable::constant(3, 2, 0.0), nu);
  GridFunction v(3, 1, {1.0, -2.0, 0.5}), w(3, 1, {0.3, 0.1, -0.4});
  auto C = correlation_sequence(m, v, w, 6);
  for (std::size_t n = 1; n < C.size(); ++n) EXPECT_NEAR(C[n], 0.0, 1e-15);
}

TEST(Correlation, TwoStateGeometric) {
  auto nu = uniform(2);
  auto m = gibbs_markov(diag_log2(), nu);
  GridFunction v(2, 1, {1.0, 0.0}), w(2, 1, {1.0, -1.0});
  auto C = correlation_sequence(m, v, w, 10);
  // transition matrix [[2/3,1/3],[1/3,2/3]] has second eigenvalue 1/3
  for (std::size_t n = 1; n < C.size(); ++n) EXPECT_NEAR(C[n], C[0] * std::pow(1.0 / 3.0, static_cast<double>(n)), 1e-15);
  EXPECT_NEAR(fit_decay(C).rate, 1.0 / 3.0, 1e-9);
}

TEST(Correlation, XYMatchesGap) {
  auto nu = circle(64);
  auto A = Potential::xy(0, 0).tabulate(nu.space());
  auto m = gibbs_markov(A, nu);
  std::vector<double> c(64);
  for (std::size_t i = 0; i < 64; ++i) c[i] = std::cos(nu.space().atom(i));
  auto C = correlation_sequence(m, GridFunction(64, 1, c), GridFunction(64, 1, c), 30);
  SolverOptions o;
  o.tol = 1e-13;
  auto gap = spectral_gap_estimate(normalize_potential(A, eigenpair_power(A, nu, o).pair), nu);
  EXPECT_NEAR(C[11] / C[10], gap.value, 0.1 * gap.value);
  EXPECT_NEAR(fit_decay(C).rate, gap.value, 0.1 * gap.value);
  EXPECT_NEAR(gap.value, reference::bessel_i(1, 1.0) / reference::bessel_i(0, 1.0), 1e-6);
}

TEST(Iterate, EntropyAndEigenvalueScale) {
  auto nu = uniform(2);
  auto m = gibbs_markov(diag_log2(), nu);
  const double h = entropy_markov(m).value;
  auto it = iterate_system(diag_log2(), nu, 2);
  auto m2 = gibbs_markov(it.birkhoff, it.nu);
  EXPECT_NEAR(entropy_markov(m2).value / h, 2.0, 1e-9);
  EXPECT_NEAR(entropy_gibbs(it.birkhoff_normalized, m2).value, 2.0 * h, 1e-8);

  PotentialTable flip(2, 2, {0.0, 1.0, 1.0, 0.0});
  auto i3 = iterate_system(flip, nu, 3);
  SolverOptions o;
  o.tol = 1e-13;
  EXPECT_NEAR(eigenpair_power(i3.birkhoff, i3.nu, o).pair.log_lambda, 3.0 * eigenpair_power(flip, nu, o).pair.log_lambda, 1e-11);

  auto z = iterate_system(PotentialTable::constant(2, 2, 0.0), nu, 3);
  auto mz = gibbs_markov(z.birkhoff, z.nu);
  EXPECT_NEAR(entropy_markov(mz).value, 0.0, 1e-13);
}

TEST(Concavity, MixturesAtFixedN) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  auto m1 = InvariantMeasure::from_markov(gibbs_markov(random_table(3, 2, 61), nu));
  auto m2 = InvariantMeasure::from_markov(gibbs_markov(random_table(3, 2, 62), nu));
  const std::size_t n = 8;
  for (double eps : {0.1, 0.5, 0.9}) {
    auto mix = InvariantMeasure::mixture(eps, m1, m2);
    const double lhs = mix.block_entropy_rate(nu, n).first;
    const double rhs = eps * m1.block_entropy_rate(nu, n).first + (1 - eps) * m2.block_entropy_rate(nu, n).first;
    EXPECT_GE(lhs, rhs - 2.0 / n);
  }
}

TEST(Entropy, NonPositiveEverywhere) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto m = gibbs_markov(random_table(3, 3, 300 + s), nu);
    EXPECT_LE(entropy_gibbs(*m.normalized, m).value, 1e-9);
    EXPECT_LE(entropy_markov(m).value, 1e-9);
  }
}
