#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ruelle/gibbs.hpp"

namespace ruelle {

// W(y|x) = sum_{m>=1} A(y_m..y_1 x) - A(y_m..y_1 x'), stored on (y-block, x-block) pairs, index y*N + x.
// Blocks have length r = k-1 (y_1 first); terms with m >= k cancel.
struct InvolutionKernel {
  PotentialTable potential;  // range k >= 2
  std::size_t atoms = 0;
  std::size_t rank = 1;
  std::size_t blocks = 0;
  std::size_t reference = 0;  // block index of x'
  std::size_t depth = 1;
  std::vector<double> values;

  double operator()(std::size_t y, std::size_t x) const { return values[y * blocks + x]; }
};

namespace detail {

inline std::size_t tuple_index(std::size_t n, std::span<const std::size_t> t) {
  std::size_t i = 0;
  for (std::size_t s : t) i = i * n + s;
  return i;
}

inline Tuple block_tuple(std::size_t b, std::size_t n, std::size_t r) {
  Tuple t(r);
  for (std::size_t i = r; i-- > 0;) {
    t[i] = b % n;
    b /= n;
  }
  return t;
}

// A on the sequence (y_m .. y_1, x_1, x_2, ...) truncated to k coordinates.
inline double prefixed_value(const PotentialTable& A, std::span<const std::size_t> y, std::size_t m,
                             std::span<const std::size_t> x) {
  const std::size_t k = A.range;
  Tuple t;
  for (std::size_t i = m; i-- > 0 && t.size() < k;) t.push_back(y[i]);
  for (std::size_t i = 0; t.size() < k; ++i) t.push_back(x[i]);
  return A[tuple_index(A.atoms, t)];
}

}  // namespace detail

// Kernel sum truncated at an arbitrary depth, on explicit sequences (y needs depth entries, x and x' need k-1).
inline double involution_kernel_value(const PotentialTable& A_in, std::span<const std::size_t> y,
                                      std::span<const std::size_t> x, std::span<const std::size_t> xref, std::size_t depth) {
  const PotentialTable A = lift_for_blocks(A_in);
  if (y.size() < depth || x.size() + 1 < A.range || xref.size() + 1 < A.range)
    throw ConfigError("sequences too short for the requested depth");
  double s = 0.0;
  for (std::size_t m = 1; m <= depth; ++m) s += detail::prefixed_value(A, y, m, x) - detail::prefixed_value(A, y, m, xref);
  return s;
}

inline InvolutionKernel involution_kernel(const PotentialTable& A_in, std::size_t reference_block = 0) {
  InvolutionKernel K;
  K.potential = lift_for_blocks(A_in);
  K.atoms = K.potential.atoms;
  K.rank = K.potential.range - 1;
  K.depth = K.rank;
  K.blocks = checked_power(K.atoms, K.rank, kDefaultGridCap, "block grid");
  checked_power(K.blocks, 2, kDefaultGridCap * 16, "involution kernel table");
  if (reference_block >= K.blocks) throw ConfigError("reference block out of range");
  K.reference = reference_block;
  K.values.resize(K.blocks * K.blocks);
  const Tuple xref = detail::block_tuple(reference_block, K.atoms, K.rank);
  parallel_for(K.blocks, [&](std::size_t y) {
    const Tuple yt = detail::block_tuple(y, K.atoms, K.rank);
    for (std::size_t x = 0; x < K.blocks; ++x) {
      const Tuple xt = detail::block_tuple(x, K.atoms, K.rank);
      double s = 0.0;
      for (std::size_t m = 1; m <= K.rank; ++m)
        s += detail::prefixed_value(K.potential, yt, m, xt) - detail::prefixed_value(K.potential, yt, m, xref);
      K.values[y * K.blocks + x] = s;
    }
  }, 1);
  return K;
}

struct DualPotential {
  PotentialTable values;  // A*(y_1..y_k)
  double x_dependence = 0.0;
  double cocycle_residual = 0.0;
};

// A*(y) = A(y_1 x) + W(sigma y | y_1 x) - W(y | x), evaluated at x = x' and checked over every x.
inline DualPotential dual_potential(const InvolutionKernel& K, double tol = 1e-10) {
  const std::size_t n = K.atoms, N = K.blocks, stride = N / n;
  const PotentialTable& A = K.potential;
  const double scale = std::max(1.0, A.sup_norm());
  DualPotential D;
  std::vector<double> v(N * n);
  // y-tuple index = y_1 * N + (y_2..y_k) block
  for (std::size_t y1 = 0; y1 < n; ++y1)
    for (std::size_t rest = 0; rest < N; ++rest) {
      const std::size_t xb = K.reference;
      v[y1 * N + rest] = A[y1 * N + xb] + K(rest, y1 * stride + xb / n) - K(y1 * stride + rest / n, xb);
    }
  D.values = PotentialTable(n, K.rank + 1, v);
  std::vector<double> dep(N * n, 0.0);
  parallel_for(N * n, [&](std::size_t t) {
    const std::size_t y1 = t / N, rest = t % N, yb = y1 * stride + rest / n;
    double worst = 0.0;
    for (std::size_t xb = 0; xb < N; ++xb) {
      const double a = A[y1 * N + xb] + K(rest, y1 * stride + xb / n) - K(yb, xb);
      worst = std::max(worst, std::abs(a - v[t]));
    }
    dep[t] = worst;
  });
  D.x_dependence = *std::max_element(dep.begin(), dep.end());
  if (D.x_dependence > tol * scale)
    throw ConfigError("dual potential depends on the future coordinates (" + std::to_string(D.x_dependence) + ")");
  // (A* + W)(a y | x) = (A + W)(y | a x)
  std::vector<double> res(N, 0.0);
  parallel_for(N, [&](std::size_t y) {
    double worst = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t x = 0; x < N; ++x) {
        const double lhs = v[a * N + y] + K(a * stride + y / n, x);
        const double rhs = A[a * N + x] + K(y, a * stride + x / n);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    res[y] = worst;
  });
  D.cocycle_residual = *std::max_element(res.begin(), res.end());
  return D;
}

// Eigenmeasure on cylinders of length L >= r from its block marginal:
// rho[x_1..x_L] = lambda^{-1} w_{x_1} e^{A(x_1..x_k)} rho[x_2..x_L].
inline std::vector<double> cylinder_eigenmeasure(const PotentialTable& A, const AprioriMeasure& nu, double log_lambda,
                                                 const std::vector<double>& rho_blocks, std::size_t L) {
  const std::size_t n = A.atoms, r = A.range - 1;
  if (L < r) throw ConfigError("cylinder length below the block rank");
  std::vector<double> rho = rho_blocks;
  for (std::size_t len = r + 1; len <= L; ++len) {
    const std::size_t tail = checked_power(n, len - 1, kDefaultGridCap, "cylinder measure");
    const std::size_t shift = checked_power(n, len - A.range, kDefaultGridCap, "cylinder measure");
    std::vector<double> nxt(n * tail);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t t = 0; t < tail; ++t) {
        const std::size_t head = a * checked_power(n, r, kDefaultGridCap, "cylinder measure") + t / shift;
        nxt[a * tail + t] = std::exp(nu.log_weight(a) + A[head] - log_lambda) * rho[t];
      }
    rho = std::move(nxt);
  }
  return rho;
}

struct InvolutionSystem {
  InvolutionKernel kernel;
  DualPotential dual;
  double log_lambda = 0.0;
  double log_lambda_star = 0.0;
  std::vector<double> psi;       // max 1
  std::vector<double> rho;       // probability on x-blocks
  std::vector<double> rho_star;  // probability on y-blocks
  double c = 0.0;
  std::vector<double> psi_rec;   // max 1
  double psi_rec_scale = 1.0;    // max of the raw reconstruction
  double reconstruction_error = 0.0;

  double lambda_gap() const { return std::abs(std::exp(log_lambda_star - log_lambda) - 1.0); }
};

inline InvolutionSystem solve_involution(const PotentialTable& A_in, const AprioriMeasure& nu, std::size_t reference_block = 0,
                                         SolverOptions opts = {1e-13, 100000}) {
  InvolutionSystem S;
  S.kernel = involution_kernel(A_in, reference_block);
  S.dual = dual_potential(S.kernel);
  const auto& K = S.kernel;
  const std::size_t N = K.blocks;
  auto prim = eigenpair_power(K.potential, nu, opts);
  auto dual = eigenpair_power(S.dual.values, nu, opts);
  S.log_lambda = prim.pair.log_lambda;
  S.log_lambda_star = dual.pair.log_lambda;
  S.psi = prim.pair.psi.values;
  auto to_probability = [](std::vector<double> w) {
    double s = 0.0;
    for (double v : w) s += v;
    for (double& v : w) v /= s;
    return w;
  };
  S.rho = to_probability(prim.measure.weights);
  S.rho_star = to_probability(dual.measure.weights);
  std::vector<double> e;
  e.reserve(N * N);
  for (std::size_t y = 0; y < N; ++y)
    for (std::size_t x = 0; x < N; ++x) e.push_back(std::log(S.rho_star[y]) + std::log(S.rho[x]) + K(y, x));
  S.c = log_sum_exp(e);
  S.psi_rec.assign(N, 0.0);
  parallel_for(N, [&](std::size_t x) {
    double s = 0.0;
    for (std::size_t y = 0; y < N; ++y) s += S.rho_star[y] * std::exp(K(y, x) - S.c);
    S.psi_rec[x] = s;
  });
  S.psi_rec_scale = *std::max_element(S.psi_rec.begin(), S.psi_rec.end());
  for (double& v : S.psi_rec) v /= S.psi_rec_scale;
  S.reconstruction_error = sup_distance(S.psi_rec, S.psi);
  return S;
}

inline InvolutionSystem solve_involution(const Potential& A, const AprioriMeasure& nu, std::size_t reference_block = 0) {
  return solve_involution(A.tabulate(nu.space()), nu, reference_block);
}

struct NaturalExtensionReport {
  double duality_constant = 0.0;  // f = 1
  double duality_sample = 0.0;
  double invariance = 0.0;
  double projection = 0.0;
  double worst() const { return std::max({duality_constant, duality_sample, invariance, projection}); }
};

// Samples f(y_1 | x_1) and g(x_1) are drawn from a fixed seed.
inline NaturalExtensionReport natural_extension_check(const InvolutionSystem& S, const AprioriMeasure& nu,
                                                      const MarkovGibbs& mu, std::uint64_t seed = 2024) {
  const auto& K = S.kernel;
  const PotentialTable& A = K.potential;
  const PotentialTable& As = S.dual.values;
  const std::size_t n = K.atoms, N = K.blocks, r = K.rank, stride = N / n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> f(n * n), g(n);
  for (double& v : f) v = U(rng);
  for (double& v : g) v = U(rng);
  const std::size_t lead = stride;  // first atom of a block = block / stride

  NaturalExtensionReport rep;
  auto duality = [&](auto&& fy) {
    std::vector<double> worst(N, 0.0);
    parallel_for(N, [&](std::size_t y) {
      for (std::size_t x = 0; x < N; ++x) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
          const std::size_t ay = a * stride + y / n;
          lhs += nu.weight(a) * std::exp(As[a * N + y] + K(ay, x)) * fy(ay, x);
          rhs += nu.weight(a) * std::exp(A[a * N + x] + K(y, a * stride + x / n)) * fy(ay, x);
        }
        worst[y] = std::max(worst[y], std::abs(lhs - rhs));
      }
    }, 1);
    return *std::max_element(worst.begin(), worst.end());
  };
  rep.duality_constant = duality([](std::size_t, std::size_t) { return 1.0; });
  rep.duality_sample = duality([&](std::size_t y, std::size_t x) { return f[(y / lead) * n + x / lead]; });

  // int f(y_1|x_1) dmu^ against int f(x_1|x_2) dmu^, the latter on x-cylinders of length max(r, 2)
  const std::size_t L = std::max<std::size_t>(r, 2);
  auto rhoL = cylinder_eigenmeasure(A, nu, S.log_lambda, S.rho, L);
  const std::size_t tailL = rhoL.size() / N;
  double If = 0.0, Ifs = 0.0, Ig = 0.0;
  for (std::size_t y = 0; y < N; ++y)
    for (std::size_t x = 0; x < N; ++x) {
      const double dens = S.rho_star[y] * S.rho[x] * std::exp(K(y, x) - S.c);
      If += dens * f[(y / lead) * n + x / lead];
      Ig += dens * g[x / lead];
    }
  const std::size_t second = checked_power(n, L - 2, kDefaultGridCap, "cylinder");
  for (std::size_t y = 0; y < N; ++y)
    for (std::size_t w = 0; w < rhoL.size(); ++w) {
      const std::size_t xb = w / tailL;
      const std::size_t x1 = w / (second * n), x2 = (w / second) % n;
      Ifs += S.rho_star[y] * rhoL[w] * std::exp(K(y, xb) - S.c) * f[x1 * n + x2];
    }
  rep.invariance = std::abs(If - Ifs);
  auto marg = mu.marginal();
  double Im = 0.0;
  for (std::size_t a = 0; a < n; ++a) Im += marg[a] * g[a];
  rep.projection = std::abs(Ig - Im);
  return rep;
}

namespace detail {
inline std::vector<double> block_coords(const StateSpace& sp, std::size_t b, std::size_t n, std::size_t r) {
  auto t = block_tuple(b, n, r);
  std::vector<double> c(r);
  for (std::size_t i = 0; i < r; ++i) c[i] = sp.atom(t[i]);
  return c;
}

// coordinates (y_m..y_1, x_1, ...) cut to k entries
inline std::vector<double> prefixed_coords(std::span<const double> y, std::size_t m, std::span<const double> x, std::size_t k) {
  std::vector<double> c;
  for (std::size_t i = m; i-- > 0 && c.size() < k;) c.push_back(y[i]);
  for (std::size_t i = 0; c.size() < k; ++i) c.push_back(x[i]);
  return c;
}

inline double coord_eval(const Potential& A, const StateSpace& sp, std::span<const double> c) {
  auto v = A.eval_coords(sp, c.subspan(0, A.range()));
  if (!v) throw UnsupportedError("potential has no coordinate form");
  return *v;
}

inline double coord_derivative(const Potential& A, std::span<const double> c, std::size_t j) {
  if (j > A.range()) return 0.0;
  auto v = A.derivative(c.subspan(0, A.range()), j);
  if (!v) throw UnsupportedError("potential is not in the differentiable class");
  return *v;
}

inline void require_differentiable(const Potential& A, const StateSpace& sp) {
  if (!A.differentiable()) throw UnsupportedError("potential " + A.name() + " has no coordinate derivatives");
  if (sp.discrete()) throw UnsupportedError("derivatives need a continuous state space");
}
}  // namespace detail

// W at real coordinates (y, x, x' each of length k-1).
inline double involution_kernel_coords(const Potential& A, const StateSpace& sp, std::span<const double> y,
                                       std::span<const double> x, std::span<const double> xref) {
  const std::size_t k = std::max<std::size_t>(A.range(), 2);
  double s = 0.0;
  for (std::size_t m = 1; m < k; ++m) {
    auto a = detail::prefixed_coords(y, m, x, k), b = detail::prefixed_coords(y, m, xref, k);
    s += detail::coord_eval(A, sp, a) - detail::coord_eval(A, sp, b);
  }
  return s;
}

struct KernelDerivative {
  std::vector<double> values;  // index y*N + x
  std::string note;
};

// dW/dx_j = sum_{m>=1} D_{m+j} A(y_m..y_1 x).
inline KernelDerivative kernel_derivative(const Potential& A, const StateSpace& sp, const InvolutionKernel& K, std::size_t j) {
  if (j == 0) throw ConfigError("coordinate index is 1-based");
  detail::require_differentiable(A, sp);
  const std::size_t N = K.blocks, n = K.atoms, r = K.rank, k = r + 1;
  KernelDerivative out;
  out.values.assign(N * N, 0.0);
  if (j > r) {
    out.note = "W does not depend on x_" + std::to_string(j) + " (range " + std::to_string(k) + ")";
    return out;
  }
  parallel_for(N, [&](std::size_t y) {
    auto yc = detail::block_coords(sp, y, n, r);
    for (std::size_t x = 0; x < N; ++x) {
      auto xc = detail::block_coords(sp, x, n, r);
      double s = 0.0;
      for (std::size_t m = 1; m + j <= k; ++m) s += detail::coord_derivative(A, detail::prefixed_coords(yc, m, xc, k), m + j);
      out.values[y * N + x] = s;
    }
  }, 1);
  return out;
}

struct EigenfunctionDerivative {
  std::vector<double> integral;                   // integral formula, on x-blocks, scaled like psi (max 1)
  std::optional<std::vector<double>> closed_form;  // range-2 formula
};

inline EigenfunctionDerivative eigenfunction_derivative(const Potential& A, const AprioriMeasure& nu, const InvolutionSystem& S,
                                                        std::size_t j) {
  const auto& sp = nu.space();
  const auto& K = S.kernel;
  const std::size_t N = K.blocks, n = K.atoms;
  auto kd = kernel_derivative(A, sp, K, j);
  EigenfunctionDerivative out;
  out.integral.assign(N, 0.0);
  parallel_for(N, [&](std::size_t x) {
    double s = 0.0;
    for (std::size_t y = 0; y < N; ++y) s += S.rho_star[y] * std::exp(K(y, x) - S.c) * kd.values[y * N + x];
    out.integral[x] = s / S.psi_rec_scale;
  });
  if (K.rank == 1 && j == 1) {
    std::vector<double> cf(N, 0.0);
    const double lam = std::exp(S.log_lambda);
    for (std::size_t x = 0; x < N; ++x) {
      double s = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        const std::vector<double> c{sp.atom(a), sp.atom(x)};
        s += nu.weight(a) * std::exp(K.potential[a * N + x]) * detail::coord_derivative(A, c, 2) * S.psi[a];
      }
      cf[x] = s / lam;
    }
    out.closed_form = std::move(cf);
  }
  return out;
}

// Central differences of a max-1 eigenfunction on the periodic grids N and 2N, combined by Richardson
// extrapolation at the coarse nodes. Both inputs are rescaled to agree at the coarse maximum.
inline std::vector<double> richardson_periodic_derivative(const std::vector<double>& coarse, const std::vector<double>& fine,
                                                          double period) {
  const std::size_t N = coarse.size();
  if (fine.size() != 2 * N || N < 3) throw ConfigError("fine grid must double the coarse grid");
  const std::size_t arg = static_cast<std::size_t>(std::max_element(coarse.begin(), coarse.end()) - coarse.begin());
  const double scale = coarse[arg] / fine[2 * arg];
  const double h = period / static_cast<double>(N);
  std::vector<double> d(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double Dh = (coarse[(i + 1) % N] - coarse[(i + N - 1) % N]) / (2.0 * h);
    const double Dh2 = scale * (fine[(2 * i + 1) % (2 * N)] - fine[(2 * i + 2 * N - 1) % (2 * N)]) / h;
    d[i] = (4.0 * Dh2 - Dh) / 3.0;
  }
  return d;
}

inline double relative_sup_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double ref = 0.0;
  for (double v : b) ref = std::max(ref, std::abs(v));
  const double gap = sup_distance(a, b);
  return ref > 0.0 ? gap / ref : gap;
}

struct ClassDPair {
  double eps = 0.0;
  double H = 0.0;
};

// H_eps = eps / (2 M) with M a bound on second coordinate derivatives: one-sided quotients then
// miss D_j A by at most eps / 2^j for every j within the range.
inline std::vector<ClassDPair> class_d_pairs(const Potential& A) {
  std::function<double(const Potential&)> bound = [&](const Potential& P) -> double {
    return std::visit(
        [&](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Potential::XY>) return 1.0 + 4.0 * std::abs(p.gamma);
          else if constexpr (std::is_same_v<T, Potential::Constant> || std::is_same_v<T, Potential::ExpInterval>) return 0.0;
          else if constexpr (std::is_same_v<T, Potential::Scaled>) return std::abs(p.beta) * bound(*p.base);
          else throw UnsupportedError("potential is not in the differentiable class");
        },
        P.kind());
  };
  const double M = bound(A);
  const double scale = std::ldexp(1.0, static_cast<int>(A.range()) - 1);
  std::vector<ClassDPair> out;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) out.push_back({eps, M > 0.0 ? eps / (scale * M) : 1e-1});
  return out;
}

// Worst of |(A(x + h e_j) - A(x))/h - D_j A(x)| * 2^j / eps over sampled points, j = 1..k+1.
inline double class_d_check(const Potential& A, const StateSpace& sp, const std::vector<ClassDPair>& pairs,
                            std::size_t samples = 256, std::uint64_t seed = 7) {
  detail::require_differentiable(A, sp);
  const std::size_t k = A.range();
  std::mt19937_64 rng(seed);
  const double hi = sp.kind() == SpaceKind::CircleGrid ? 2.0 * std::numbers::pi : 1.0;
  std::uniform_real_distribution<double> U(0.0, hi);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<double> x(k);
    for (double& v : x) v = U(rng);
    for (const auto& p : pairs)
      for (std::size_t j = 1; j <= k + 1; ++j) {
        double dq = 0.0;
        if (j <= k) {
          std::vector<double> xh = x;
          xh[j - 1] += p.H;
          dq = (detail::coord_eval(A, sp, xh) - detail::coord_eval(A, sp, x)) / p.H;
        }
        const double err = std::abs(dq - detail::coord_derivative(A, x, j));
        worst = std::max(worst, err * std::ldexp(1.0, static_cast<int>(j)) / p.eps);
      }
  }
  return worst;
}

}  // namespace ruelle
