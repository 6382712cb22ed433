#include <gtest/gtest.h>

#include <random>

#include "ruelle/orbits.hpp"
#include "ruelle/reference.hpp"

using namespace ruelle;

namespace {

AprioriMeasure geometric8() { return build_apriori(measure_spec::Geometric{0.5, 8}); }

// sum over n-periodic words with a fixed first atom (or all words) of prod w e^{S_n A}, by brute force
double brute_periodic(const PotentialTable& A, const AprioriMeasure& nu, std::size_t n, long anchor = -1) {
  const std::size_t d = A.atoms;
  const std::size_t W = static_cast<std::size_t>(std::pow(d, n));
  double s = 0.0;
  for (std::size_t idx = 0; idx < W; ++idx) {
    Tuple word(n + A.range - 1);
    std::size_t x = idx;
    double w = 1.0;
    for (std::size_t j = n; j-- > 0;) {
      word[j] = x % d;
      x /= d;
      w *= nu.weight(word[j]);
    }
    if (anchor >= 0 && word[0] != static_cast<std::size_t>(anchor)) continue;
    for (std::size_t j = n; j < word.size(); ++j) word[j] = word[j % n];
    double S = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t t = 0;
      for (std::size_t j = 0; j < A.range; ++j) t = t * d + word[i + j];
      S += A[t];
    }
    s += w * std::exp(S);
  }
  return s;
}

}  // namespace

TEST(PeriodicPressure, ConstantPotential) {
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  std::vector<std::size_t> ns{1, 2, 3, 5, 8};
  for (auto m : {PeriodicMethod::trace, PeriodicMethod::exhaustive}) {
    auto s = pressure_periodic(PotentialTable::constant(3, 2, 0.7), nu, ns, m);
    for (const auto& p : s.points) EXPECT_NEAR(p.value, 0.7, 1e-13);
    EXPECT_NEAR(s.log_lambda, 0.7, 1e-13);
  }
}

TEST(PeriodicPressure, TwoStateTraceIsSumOfPowers) {
  PotentialTable A(2, 2, {0.3, -0.2, 0.9, 0.1});
  auto nu = build_apriori(measure_spec::Explicit{{0.4, 0.6}});
  std::vector<std::size_t> ns;
  for (std::size_t n = 1; n <= 10; ++n) ns.push_back(n);
  auto tr = pressure_periodic(A, nu, ns, PeriodicMethod::trace);
  auto ex = pressure_periodic(A, nu, ns, PeriodicMethod::exhaustive);
  auto sp = reference::spectrum_2x2(0.4 * std::exp(0.3), 0.6 * std::exp(-0.2), 0.4 * std::exp(0.9), 0.6 * std::exp(0.1));
  EXPECT_NEAR(tr.log_lambda, std::log(sp.perron), 1e-12);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double n = static_cast<double>(ns[i]);
    const double expect = std::log(std::pow(sp.perron, n) + std::pow(sp.second, n)) / n;
    EXPECT_NEAR(tr.points[i].value, expect, 1e-12);
    EXPECT_NEAR(ex.points[i].value, tr.points[i].value, 1e-10);
    EXPECT_NEAR(ex.points[i].value, std::log(brute_periodic(A, nu, ns[i])) / n, 1e-12);
  }
}

TEST(PeriodicPressure, RangeThreeMethodsAgree) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<double> v(27);
  for (double& x : v) x = U(rng);
  PotentialTable A(3, 3, v);
  auto nu = build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}});
  std::vector<std::size_t> ns{1, 2, 3, 4, 7, 9};
  auto ex = pressure_periodic(A, nu, ns);
  EXPECT_EQ(ex.method, PeriodicMethod::exhaustive);
  auto tr = pressure_periodic(A, nu, ns, PeriodicMethod::trace);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    EXPECT_NEAR(ex.points[i].value, tr.points[i].value, 1e-10);
    EXPECT_NEAR(ex.points[i].value, std::log(brute_periodic(A, nu, ns[i])) / static_cast<double>(ns[i]), 1e-12);
  }
}

TEST(PeriodicPressure, XYBessel) {
  auto nu = build_apriori(measure_spec::CircleQuadrature{64});
  auto A = Potential::xy(0, 0).tabulate(nu.space());
  auto s = pressure_periodic(A, nu, {16});
  EXPECT_NEAR(s.points[0].value, std::log(reference::bessel_i(0, 1.0)), 0.05);
}

TEST(PeriodicPressure, CapWithoutShortcut) {
  auto nu = build_apriori(measure_spec::Uniform{4});
  EXPECT_THROW(pressure_periodic(PotentialTable::constant(4, 3, 0.0), nu, {11}), CapacityError);
  EXPECT_THROW(pressure_periodic(PotentialTable::constant(4, 2, 0.0), nu, {0}), ConfigError);
}

TEST(PeriodicPressure, ConstantOverNStable) {
  PotentialTable flip(2, 2, {0.0, 1.0, 1.0, 0.0});
  auto nu = build_apriori(measure_spec::Uniform{2});
  std::vector<std::size_t> ns;
  for (std::size_t n = 8; n <= 64; ++n) ns.push_back(n);
  auto s = pressure_periodic(flip, nu, ns);
  const double c16 = fit_periodic_constant(s, 8, 16), c64 = fit_periodic_constant(s, 8, 64);
  EXPECT_GT(c16, 0.0);
  EXPECT_NEAR(c64 / c16, 1.0, 0.2);
  for (const auto& p : s.points) EXPECT_LE(std::abs(p.value - s.log_lambda), c64 / static_cast<double>(p.n) + 1e-15);
}

TEST(Recurrence, ZeroOnTwoSymbols) {
  auto nu = build_apriori(measure_spec::Uniform{2});
  auto A = PotentialTable::constant(2, 2, 0.0);
  auto s = recurrence_ratio(A, nu, 0, {1, 2, 3, 4, 5, 6});
  for (const auto& p : s.points) {
    // 2^{n-1} words start at the anchor, each of weight 2^{-n}
    EXPECT_NEAR(p.ratio, 0.5, 1e-14);
    EXPECT_NEAR(p.ratio, brute_periodic(A, nu, p.n, 0), 1e-14);
  }
  EXPECT_TRUE(s.bounded);
}

TEST(Recurrence, GeometricMatchesMatrixPowers) {
  auto nu = geometric8();
  auto A = Potential::neg_distance_to_zero(2).tabulate(nu.space());
  std::vector<std::size_t> ns;
  for (std::size_t n = 1; n <= 20; ++n) ns.push_back(n);
  auto s = recurrence_ratio(A, nu, 0, ns);
  EXPECT_TRUE(s.bounded);
  EXPECT_LT(s.bound, 1e3);
  // direct oracle at two periods: (M^n)_{00} / lambda^n with M(b,a) = w_a e^{A(b,a)}
  Eigen::MatrixXd M(8, 8);
  for (int b = 0; b < 8; ++b)
    for (int a = 0; a < 8; ++a) M(b, a) = nu.weight(a) * std::exp(A[b * 8 + a]);
  const double lam = M.eigenvalues().cwiseAbs().maxCoeff();
  for (int n : {3, 17}) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(8, 8);
    for (int i = 0; i < n; ++i) P = P * M;
    EXPECT_NEAR(s.points[n - 1].ratio, P(0, 0) / std::pow(lam, n), 1e-10);
  }
  auto z = recurrence_ratio(PotentialTable::constant(8, 2, 0.0), nu, 0, ns);
  for (const auto& p : z.points) EXPECT_NEAR(p.ratio, nu.weight(0), 1e-13);
}

TEST(Recurrence, ConstantCancels) {
  auto nu = geometric8();
  auto a = recurrence_ratio(PotentialTable::constant(8, 2, 0.0), nu, 2, {1, 5, 9});
  auto b = recurrence_ratio(PotentialTable::constant(8, 2, 3.5), nu, 2, {1, 5, 9});
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_NEAR(a.points[i].ratio, b.points[i].ratio, 1e-12);
  EXPECT_THROW(recurrence_ratio(PotentialTable::constant(8, 2, 0.0), nu, 8, {1}), ConfigError);
}

TEST(BirkhoffSup, Examples) {
  EXPECT_NEAR(birkhoff_sup(PotentialTable::constant(3, 2, -0.4), 5), -0.4, 1e-15);
  PotentialTable flip(2, 2, {0.0, 1.0, 1.0, 0.0});
  auto nu = build_apriori(measure_spec::Uniform{2});
  for (std::size_t n = 1; n <= 10; ++n) {
    // exhaustive over all words of length n
    double best = -1e300;
    for (std::size_t w = 0; w < (1u << n); ++w) {
      double S = 0.0;
      for (std::size_t i = 0; i < n; ++i) S += flip[((w >> i) & 1) * 2 + ((w >> ((i + 1) % n)) & 1)];
      best = std::max(best, S / static_cast<double>(n));
    }
    EXPECT_NEAR(birkhoff_sup(flip, n), best, 1e-15);
    if (n % 2 == 0) {
      EXPECT_DOUBLE_EQ(birkhoff_sup(flip, n), 1.0);
    }
  }
  auto c = build_apriori(measure_spec::CircleQuadrature{16});
  auto xy = Potential::xy(0, 0).tabulate(c.space());
  for (std::size_t n : {1, 3, 8}) {
    EXPECT_NEAR(birkhoff_sup(xy, n), 1.0, 1e-15);
    EXPECT_LE(birkhoff_sup(xy, n), xy.max());
  }
}

TEST(BirkhoffSup, BoundedByTableMax) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<double> v(27);
  for (double& x : v) x = U(rng);
  PotentialTable A(3, 3, v);
  const double m = karp(BlockDigraph(A)).value;
  for (std::size_t n = 1; n <= 12; ++n) {
    EXPECT_LE(birkhoff_sup(A, n), A.max() + 1e-15);
    EXPECT_LE(birkhoff_sup(A, n), m + 1e-12);
  }
}
