#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "ruelle/gibbs.hpp"
#include "ruelle/maxplus.hpp"

namespace ruelle {

enum class PeriodicMethod { automatic, trace, exhaustive };

inline const char* to_string(PeriodicMethod m) {
  switch (m) {
    case PeriodicMethod::automatic: return "automatic";
    case PeriodicMethod::trace: return "trace";
    case PeriodicMethod::exhaustive: return "exhaustive";
  }
  return "?";
}

struct PeriodicPoint {
  std::size_t n = 0;
  double value = 0.0;
};

struct PeriodicPressureSeries {
  std::vector<PeriodicPoint> points;
  double log_lambda = 0.0;
  PeriodicMethod method = PeriodicMethod::automatic;
};

namespace detail {

// w_a e^{A(b a) - shift} on the block digraph, with the shift returned.
inline Eigen::MatrixXd weighted_block_matrix(const BlockDigraph& g, const AprioriMeasure& nu, double& shift) {
  const std::size_t N = g.nodes(), n = g.atoms();
  if (N > 4096) throw CapacityError("dense block matrix", N, 4096);
  shift = kNegInf;
  for (std::size_t b = 0; b < N; ++b)
    for (std::size_t a = 0; a < n; ++a) shift = std::max(shift, nu.log_weight(a) + g.weight(b, a));
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t b = 0; b < N; ++b)
    for (std::size_t a = 0; a < n; ++a)
      M(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(g.target(b, a))) +=
          std::exp(nu.log_weight(a) + g.weight(b, a) - shift);
  return M;
}

// log of the diagonal of M^n for every n in 1..n_max, rescaling as the power grows.
template <class F>
void log_matrix_powers(const Eigen::MatrixXd& M, std::size_t n_max, F&& visit) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  double log_scale = 0.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    P = P * M;
    const double s = P.cwiseAbs().maxCoeff();
    if (!(s > 0.0)) throw ConvergenceError("matrix power vanished", 0.0, n);
    P /= s;
    log_scale += std::log(s);
    visit(n, P, log_scale);
  }
}

inline double periodic_exhaustive(const PotentialTable& A, const AprioriMeasure& nu, std::size_t n, std::size_t cap) {
  const std::size_t d = A.atoms, k = A.range;
  const std::size_t W = checked_power(d, n, cap, "periodic word enumeration");
  std::vector<double> e(W);
  parallel_for(W, [&](std::size_t idx) {
    Tuple word(n + k - 1);
    std::size_t x = idx;
    double lw = 0.0;
    for (std::size_t j = n; j-- > 0;) {
      word[j] = x % d;
      x /= d;
      lw += nu.log_weight(word[j]);
    }
    for (std::size_t j = n; j < word.size(); ++j) word[j] = word[j % n];
    e[idx] = lw + birkhoff_sum(A, word, n);
  });
  return log_sum_exp(e) / static_cast<double>(n);
}

}  // namespace detail

inline PeriodicPressureSeries pressure_periodic(const PotentialTable& A, const AprioriMeasure& nu,
                                                const std::vector<std::size_t>& n_list,
                                                PeriodicMethod method = PeriodicMethod::automatic,
                                                std::size_t cap = kDefaultGridCap) {
  if (A.atoms != nu.size()) throw ConfigError("potential table atom count does not match the a-priori measure");
  if (n_list.empty()) throw ConfigError("empty period list");
  for (std::size_t n : n_list)
    if (n == 0) throw ConfigError("periods must be >= 1");
  PeriodicPressureSeries s;
  s.method = method == PeriodicMethod::automatic ? (A.range <= 2 ? PeriodicMethod::trace : PeriodicMethod::exhaustive)
                                                 : method;
  SolverOptions o;
  o.tol = 1e-13;
  s.log_lambda = eigenpair_power(A, nu, o).pair.log_lambda;
  if (s.method == PeriodicMethod::exhaustive) {
    for (std::size_t n : n_list) s.points.push_back({n, detail::periodic_exhaustive(A, nu, n, cap)});
    return s;
  }
  BlockDigraph g(A);
  double shift = 0.0;
  const Eigen::MatrixXd M = detail::weighted_block_matrix(g, nu, shift);
  const std::size_t n_max = *std::max_element(n_list.begin(), n_list.end());
  std::vector<double> by_n(n_max + 1, 0.0);
  detail::log_matrix_powers(M, n_max, [&](std::size_t n, const Eigen::MatrixXd& P, double log_scale) {
    by_n[n] = (std::log(P.trace()) + log_scale) / static_cast<double>(n) + shift;
  });
  for (std::size_t n : n_list) s.points.push_back({n, by_n[n]});
  return s;
}

// max n |value_n - log lambda| over the window [lo, hi].
inline double fit_periodic_constant(const PeriodicPressureSeries& s, std::size_t lo, std::size_t hi) {
  double C = 0.0;
  for (const auto& p : s.points)
    if (p.n >= lo && p.n <= hi) C = std::max(C, static_cast<double>(p.n) * std::abs(p.value - s.log_lambda));
  return C;
}

struct RecurrencePoint {
  std::size_t n = 0;
  double ratio = 0.0;
};

struct RecurrenceRatioSeries {
  std::size_t anchor = 0;
  std::size_t burn_in = 1;
  std::vector<RecurrencePoint> points;
  double lo = 0.0;
  double hi = 0.0;
  double bound = 0.0;  // M_a: ratios lie in [1/M_a, M_a]
  std::vector<RecurrencePoint> probes;
  bool bounded = false;
};

// Z_n(A, a) / lambda^n with Z_n summing w-weighted e^{S_n A} over all n-periodic words starting at a.
inline RecurrenceRatioSeries recurrence_ratio(const PotentialTable& A, const AprioriMeasure& nu, std::size_t anchor,
                                              const std::vector<std::size_t>& n_list, std::size_t burn_in = 1) {
  if (anchor >= A.atoms) throw ConfigError("anchor atom out of range");
  if (n_list.empty()) throw ConfigError("empty period list");
  BlockDigraph g(A);
  SolverOptions o;
  o.tol = 1e-13;
  const double log_lambda = eigenpair_power(g.table(), nu, o).pair.log_lambda;
  if (!std::isfinite(log_lambda)) throw ConvergenceError("eigenvalue not finite", 0.0, 0);
  double shift = 0.0;
  const Eigen::MatrixXd M = detail::weighted_block_matrix(g, nu, shift);
  const std::size_t n_max = *std::max_element(n_list.begin(), n_list.end());
  const std::size_t stride = g.nodes() / g.atoms();
  std::vector<double> ratio(4 * n_max + 1, 0.0);
  detail::log_matrix_powers(M, 4 * n_max, [&](std::size_t n, const Eigen::MatrixXd& P, double log_scale) {
    double z = 0.0;
    for (std::size_t b = anchor * stride; b < (anchor + 1) * stride; ++b) z += P(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b));
    if (!(z > 0.0)) throw ConvergenceError("empty periodic orbit set at the anchor", 0.0, n);
    ratio[n] = std::exp(std::log(z) + log_scale + static_cast<double>(n) * (shift - log_lambda));
  });
  RecurrenceRatioSeries s;
  s.anchor = anchor;
  s.burn_in = burn_in;
  s.lo = std::numeric_limits<double>::infinity();
  s.hi = 0.0;
  for (std::size_t n : n_list) {
    s.points.push_back({n, ratio[n]});
    if (n >= burn_in) {
      s.lo = std::min(s.lo, ratio[n]);
      s.hi = std::max(s.hi, ratio[n]);
    }
  }
  if (!(s.hi > 0.0)) throw ConfigError("no periods past the burn-in");
  s.bound = std::max(s.hi, 1.0 / s.lo);
  const double slack = std::max(1e-9, (s.hi - s.lo) / s.hi);
  s.bounded = true;
  for (std::size_t n : {2 * n_max, 4 * n_max}) {
    s.probes.push_back({n, ratio[n]});
    s.bounded = s.bounded && ratio[n] >= s.lo * (1.0 - slack) && ratio[n] <= s.hi * (1.0 + slack);
  }
  return s;
}

inline double birkhoff_sup(const PotentialTable& A, std::size_t n) { return maxplus_periodic_sup(BlockDigraph(A), n); }

}  // namespace ruelle
