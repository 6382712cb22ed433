#include <gtest/gtest.h>

#include <random>

#include "ruelle/involution.hpp"
#include "ruelle/maxplus.hpp"

using namespace ruelle;

namespace {

PotentialTable random_table(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(std::pow(n, k)));
  for (double& x : v) x = U(rng);
  return PotentialTable(n, k, std::move(v));
}

AprioriMeasure three() { return build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}}); }
AprioriMeasure circle(std::size_t n) { return build_apriori(measure_spec::CircleQuadrature{n}); }

}  // namespace

TEST(Kernel, RangeTwoSingleTerm) {
  auto A = random_table(3, 2, 1);
  for (std::size_t ref : {0u, 2u}) {
    auto K = involution_kernel(A, ref);
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t x = 0; x < 3; ++x) EXPECT_NEAR(K(y, x), A[y * 3 + x] - A[y * 3 + ref], 1e-15);
    for (std::size_t y = 0; y < 3; ++y) EXPECT_EQ(K(y, ref), 0.0);
  }
}

TEST(Kernel, ConstantVanishes) {
  auto K = involution_kernel(PotentialTable::constant(3, 3, 0.8));
  for (double v : K.values) EXPECT_EQ(v, 0.0);
  auto D = dual_potential(K);
  for (double v : D.values.values) EXPECT_NEAR(v, 0.8, 1e-15);
}

TEST(Kernel, RangeThreeTwoTermsAndDeepTruncation) {
  auto A = random_table(2, 3, 2);
  auto K = involution_kernel(A, 1);
  const Tuple xr{0, 1};
  auto idx = [](std::size_t a, std::size_t b, std::size_t c) { return a * 4 + b * 2 + c; };
  std::mt19937_64 rng(3);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) {
      const std::size_t y1 = y / 2, y2 = y % 2, x1 = x / 2, x2 = x % 2;
      const double expect = A[idx(y1, x1, x2)] - A[idx(y1, xr[0], xr[1])] + A[idx(y2, y1, x1)] - A[idx(y2, y1, xr[0])];
      EXPECT_NEAR(K(y, x), expect, 1e-15);
      Tuple deep{y1, y2, rng() % 2, rng() % 2, rng() % 2};
      EXPECT_NEAR(involution_kernel_value(A, deep, Tuple{x1, x2}, xr, 5), K(y, x), 1e-14);
    }
}

TEST(Dual, SymmetricRangeTwo) {
  auto B = random_table(3, 2, 4);
  std::vector<double> v(9);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) v[a * 3 + b] = B[a * 3 + b] + B[b * 3 + a];
  PotentialTable A(3, 2, v);
  const std::size_t ref = 1;
  auto D = dual_potential(involution_kernel(A, ref));
  for (std::size_t y1 = 0; y1 < 3; ++y1)
    for (std::size_t y2 = 0; y2 < 3; ++y2)
      EXPECT_NEAR(D.values[y1 * 3 + y2], A[y2 * 3 + y1] + A[y1 * 3 + ref] - A[y2 * 3 + ref], 1e-14);
  EXPECT_LE(D.cocycle_residual, 1e-14);
}

TEST(Dual, XYFormula) {
  auto nu = circle(32);
  const auto& sp = nu.space();
  auto A = Potential::xy(0, 0).tabulate(sp);
  auto D = dual_potential(involution_kernel(A));
  for (std::size_t y1 = 0; y1 < 32; ++y1)
    for (std::size_t y2 = 0; y2 < 32; ++y2) {
      const double a = sp.atom(y1), b = sp.atom(y2);
      EXPECT_NEAR(D.values[y1 * 32 + y2], std::cos(a - b) + std::cos(a) - std::cos(b), 1e-14);
    }
  EXPECT_LT(D.cocycle_residual, 1e-12);
  EXPECT_LT(D.x_dependence, 1e-12);
}

TEST(Dual, EigenvalueAndErgodicMaximum) {
  auto nu = three();
  for (std::size_t k : {2u, 3u, 4u}) {
    auto A = random_table(3, k, 10 + k);
    auto S = solve_involution(A, nu);
    EXPECT_LE(S.lambda_gap(), 1e-8);
    EXPECT_LE(S.dual.cocycle_residual, 1e-12);
    EXPECT_NEAR(karp(BlockDigraph(A)).value, karp(BlockDigraph(S.dual.values)).value, 1e-12);
  }
}

TEST(Reconstruct, Examples) {
  auto c = solve_involution(PotentialTable::constant(3, 2, 0.4), three());
  for (double v : c.psi_rec) EXPECT_NEAR(v, 1.0, 1e-12);

  auto xy = solve_involution(Potential::xy(0, 0), circle(64));
  for (double v : xy.psi_rec) EXPECT_NEAR(v, 1.0, 1e-8);

  PotentialTable T(2, 2, {0.3, -0.2, 0.9, 0.1});
  auto t = solve_involution(T, build_apriori(measure_spec::Explicit{{0.4, 0.6}}));
  EXPECT_LE(t.reconstruction_error, 1e-9);

  auto r3 = solve_involution(random_table(3, 3, 21), three());
  EXPECT_LE(r3.reconstruction_error, 1e-6);
}

TEST(Reconstruct, ReferencePointOnlyMovesTheConstant) {
  auto A = random_table(3, 3, 22);
  auto a = solve_involution(A, three(), 0), b = solve_involution(A, three(), 7);
  EXPECT_NE(a.c, b.c);
  EXPECT_LE(sup_distance(a.psi_rec, b.psi_rec), 1e-9);
}

TEST(NaturalExtension, Residuals) {
  auto nu0 = build_apriori(measure_spec::Uniform{3});
  auto A0 = PotentialTable::constant(3, 2, 0.0);
  auto S0 = solve_involution(A0, nu0);
  auto r0 = natural_extension_check(S0, nu0, gibbs_markov(A0, nu0));
  EXPECT_LT(r0.duality_constant, 1e-12);
  EXPECT_LT(r0.invariance, 1e-15);

  auto nu = circle(64);
  auto A = Potential::xy(0, 0.5).tabulate(nu.space());
  auto S = solve_involution(A, nu);
  auto r = natural_extension_check(S, nu, gibbs_markov(A, nu));
  EXPECT_LT(r.duality_constant, 1e-12);
  EXPECT_LT(r.duality_sample, 1e-8);
  EXPECT_LT(r.invariance, 1e-8);
  EXPECT_LT(r.projection, 1e-8);

  auto A3 = random_table(3, 3, 23);
  auto S3 = solve_involution(A3, three());
  EXPECT_LT(natural_extension_check(S3, three(), gibbs_markov(A3, three())).worst(), 1e-9);
}

TEST(Derivative, KernelFormulas) {
  auto nu = circle(16);
  const auto& sp = nu.space();
  auto P = Potential::xy(0, 0);
  auto K = involution_kernel(P.tabulate(sp));
  auto d = kernel_derivative(P, sp, K, 1);
  const double h = 1e-4;
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) {
      const double yc = sp.atom(y), xc = sp.atom(x);
      EXPECT_NEAR(d.values[y * 16 + x], -std::sin(xc - yc), 1e-15);
      const std::vector<double> Y{yc}, R{0.0}, xp{xc + h}, xm{xc - h};
      const double fd = (involution_kernel_coords(P, sp, Y, xp, R) - involution_kernel_coords(P, sp, Y, xm, R)) / (2 * h);
      EXPECT_NEAR(fd, d.values[y * 16 + x], 1e-8);
    }
  auto far = kernel_derivative(P, sp, K, 2);
  EXPECT_FALSE(far.note.empty());
  for (double v : far.values) EXPECT_EQ(v, 0.0);
  auto c = kernel_derivative(Potential::constant(1.0, 2), sp, involution_kernel(PotentialTable::constant(16, 2, 1.0)), 1);
  for (double v : c.values) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(kernel_derivative(Potential::table(PotentialTable::constant(16, 2, 0.0)), sp, K, 1), UnsupportedError);
}

TEST(Derivative, EigenfunctionSymmetricCases) {
  auto nu = circle(64);
  auto c = solve_involution(PotentialTable::constant(64, 2, 0.3), nu);
  for (double v : eigenfunction_derivative(Potential::constant(0.3, 2), nu, c, 1).integral) EXPECT_EQ(v, 0.0);
  auto P = Potential::xy(0, 0);
  auto S = solve_involution(P, nu);
  auto d = eigenfunction_derivative(P, nu, S, 1);
  for (double v : d.integral) EXPECT_NEAR(v, 0.0, 1e-10);
  for (double v : *d.closed_form) EXPECT_NEAR(v, 0.0, 1e-10);
}

TEST(Derivative, XYThreeWayCheck) {
  auto P = Potential::xy(0, 0.5);
  auto nu = circle(128), fine = circle(256);
  auto S = solve_involution(P, nu);
  auto d = eigenfunction_derivative(P, nu, S, 1);
  ASSERT_TRUE(d.closed_form.has_value());
  EXPECT_LE(relative_sup_gap(d.integral, *d.closed_form), 1e-6);
  SolverOptions o;
  o.tol = 1e-13;
  auto psi_c = eigenpair_power(P, nu, o).pair.psi.values;
  auto psi_f = eigenpair_power(P, fine, o).pair.psi.values;
  auto fd = richardson_periodic_derivative(psi_c, psi_f, 2.0 * std::numbers::pi);
  EXPECT_LE(relative_sup_gap(d.integral, fd), 1e-3);
  EXPECT_LE(relative_sup_gap(*d.closed_form, fd), 1e-3);
}

TEST(ClassD, Builtins) {
  auto sp = StateSpace::circle_grid(8);
  auto xy = Potential::xy(0.3, 0.5);
  EXPECT_LE(class_d_check(xy, sp, class_d_pairs(xy)), 1.0);
  auto iv = StateSpace::interval_grid(8);
  auto e = Potential::exp_interval(2.0);
  EXPECT_LE(class_d_check(e, iv, class_d_pairs(e)), 1.0);
  EXPECT_THROW(class_d_pairs(Potential::neg_distance_to_zero(2)), UnsupportedError);
  EXPECT_THROW(class_d_check(Potential::table(PotentialTable::constant(8, 2, 0.0)), sp, {{0.1, 0.01}}), UnsupportedError);
}
