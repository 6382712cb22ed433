#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ruelle/gibbs.hpp"
#include "ruelle/maxplus.hpp"

namespace ruelle {

inline std::vector<double> default_beta_schedule() {
  std::vector<double> b;
  for (int i = 0; i <= 10; ++i) b.push_back(std::ldexp(1.0, i));
  return b;
}

struct BetaRecord {
  double beta = 0.0;
  double log_lambda = 0.0;
  double scaled_log_lambda = 0.0;  // (1/beta) log lambda_beta
  GridFunction V;                  // (1/beta) log psi_beta, max 0
  double tail_gap = std::nan("");  // sup |V_beta - V_prev|
  std::optional<MarkovGibbs> gibbs;
};

struct BetaSweep {
  PotentialTable potential;  // range >= 2
  AprioriMeasure nu;
  std::vector<BetaRecord> records;

  double sup_norm() const { return potential.sup_norm(); }
  const BetaRecord& last() const { return records.back(); }
  // |(1/beta) log lambda_beta| <= |A|_inf with relative float slack.
  bool sup_bound_holds(double slack = 1e-12) const {
    const double s = sup_norm();
    for (const auto& r : records)
      if (std::abs(r.scaled_log_lambda) > s + slack * std::max(1.0, s)) return false;
    return true;
  }
};

struct SweepOptions {
  bool with_gibbs = true;
  double tol = 1e-12;
};

inline BetaSweep beta_sweep(const PotentialTable& A_in, const AprioriMeasure& nu, const std::vector<double>& betas,
                            SweepOptions opts = {}) {
  if (betas.empty()) throw ConfigError("empty beta schedule");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0) || !std::isfinite(betas[i])) throw ConfigError("beta values must be positive and finite");
    if (i > 0 && !(betas[i] > betas[i - 1])) throw ConfigError("beta schedule must be strictly increasing");
  }
  BetaSweep s{lift_for_blocks(A_in), nu, {}};
  s.records.resize(betas.size());
  std::vector<std::string> failures(betas.size());
  parallel_for(betas.size(), [&](std::size_t i) {
    const double beta = betas[i];
    BetaRecord& r = s.records[i];
    r.beta = beta;
    try {
      const PotentialTable B = s.potential.scaled(beta);
      std::vector<double> lpsi;
      if (opts.with_gibbs) {
        GibbsOptions go;
        go.method = EigenMethod::log_domain;
        go.solver.tol = opts.tol;
        auto m = gibbs_markov(B, nu, go);
        r.log_lambda = m.log_lambda;
        lpsi = m.log_psi;
        r.gibbs = std::move(m);
      } else {
        auto e = eigenpair_log_domain(B, nu, opts.tol);
        r.log_lambda = e.log_lambda;
        lpsi = std::move(e.log_psi);
      }
      const double mx = *std::max_element(lpsi.begin(), lpsi.end());
      for (double& v : lpsi) v = (v - mx) / beta;
      r.V = GridFunction(s.potential.atoms, s.potential.range - 1, std::move(lpsi));
      r.scaled_log_lambda = r.log_lambda / beta;
      if (!std::isfinite(r.log_lambda)) throw ConvergenceError("eigenvalue overflow", 0.0, 0);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  }, 1);
  for (std::size_t i = 0; i < betas.size(); ++i)
    if (!failures[i].empty()) throw ConvergenceError("beta = " + std::to_string(betas[i]) + ": " + failures[i], 0.0, 0);
  for (std::size_t i = 1; i < s.records.size(); ++i)
    s.records[i].tail_gap = sup_distance(s.records[i].V.values, s.records[i - 1].V.values);
  return s;
}

inline BetaSweep beta_sweep(const Potential& A, const AprioriMeasure& nu, const std::vector<double>& betas,
                            SweepOptions opts = {}) {
  return beta_sweep(A.tabulate(nu.space()), nu, betas, opts);
}

// R(a x) = A(a x) + V(a x) - V(x) - m, indexed like the potential table.
inline std::vector<double> calibration_residual(const PotentialTable& A_in, const GridFunction& V, double m) {
  const PotentialTable A = lift_for_blocks(A_in);
  const std::size_t n = A.atoms, r = A.range - 1;
  const std::size_t N = checked_power(n, r, kDefaultGridCap, "block grid");
  if (V.size() != N) throw ConfigError("subaction lives on the wrong block grid");
  const std::size_t stride = N / n;
  std::vector<double> R(A.size());
  for (std::size_t x = 0; x < N; ++x)
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t t = a * N + x;
      R[t] = A[t] + V[a * stride + x / n] - V[x] - m;
    }
  return R;
}

struct Subaction {
  GridFunction V;
  double m = 0.0;
  std::vector<double> residual;
  double max_residual = 0.0;       // sup R
  double calibration_error = 0.0;  // sup_x |max_a R(a x)|
  double tol = 0.0;
  double tail_gap = 0.0;
  bool selected = false;
  bool calibrated = false;
  std::optional<GridFunction> previous;  // candidate at the second largest beta
};

inline Subaction subaction_from(const PotentialTable& A_in, GridFunction V, double m, double tol) {
  const PotentialTable A = lift_for_blocks(A_in);
  Subaction s;
  s.m = m;
  s.tol = tol;
  s.residual = calibration_residual(A, V, m);
  const std::size_t n = A.atoms, N = V.size();
  s.max_residual = *std::max_element(s.residual.begin(), s.residual.end());
  for (std::size_t x = 0; x < N; ++x) {
    double best = kNegInf;
    for (std::size_t a = 0; a < n; ++a) best = std::max(best, s.residual[a * N + x]);
    s.calibration_error = std::max(s.calibration_error, std::abs(best));
  }
  s.calibrated = s.max_residual <= tol && s.calibration_error <= tol;
  s.V = std::move(V);
  return s;
}

inline constexpr double kSelectionThreshold = 1e-3;

inline Subaction subaction_extract(const BetaSweep& sweep, double m, double threshold = kSelectionThreshold) {
  if (sweep.records.empty()) throw ConfigError("empty sweep");
  const auto& last = sweep.last();
  const double gap = sweep.records.size() > 1 ? last.tail_gap : std::numeric_limits<double>::infinity();
  const double grid = static_cast<double>(last.V.size() * sweep.potential.atoms);
  const double tol = 10.0 * ((std::isfinite(gap) ? gap : 0.0) + std::log(grid) / last.beta);
  Subaction s = subaction_from(sweep.potential, last.V, m, tol);
  s.tail_gap = gap;
  s.selected = gap < threshold;
  if (sweep.records.size() > 1) s.previous = sweep.records[sweep.records.size() - 2].V;
  return s;
}

struct MaxMeanReport {
  double value = 0.0;
  Cycle cycle;      // block nodes
  Tuple word;       // atoms appended along the cycle
  double cycle_mean = 0.0;
  std::string method = "karp";
  std::optional<double> exhaustive_value;
  std::size_t exhaustive_cycles = 0;
  double certificate = 0.0;  // one extra max-plus relaxation gain at m
  bool verified = false;
};

inline MaxMeanReport max_mean_cycle(const PotentialTable& A) {
  BlockDigraph g(A);
  auto k = karp(g);
  MaxMeanReport r;
  r.value = k.value;
  r.cycle = k.cycle;
  r.word = cycle_word(g, k.cycle);
  r.cycle_mean = k.cycle_mean;
  const double scale = std::max(1.0, A.sup_norm());
  r.certificate = maxplus_potential(g, k.value).residual;
  r.verified = std::abs(k.cycle_mean - k.value) <= 1e-12 * scale && r.certificate <= 1e-9 * scale;
  if (g.nodes() <= kExhaustiveNodeCap) {
    auto e = exhaustive_cycles(g);
    r.exhaustive_value = e.value;
    r.exhaustive_cycles = e.count;
    r.method = "karp+exhaustive";
    r.verified = r.verified && std::abs(e.value - k.value) <= 1e-12 * scale;
  }
  return r;
}

struct ConcentrationPoint {
  double beta = 0.0;
  double escaping_mass = 0.0;
};

// mu_beta mass of k-cylinders farther than eps (max-coordinate distance) from every critical k-tuple.
inline std::vector<ConcentrationPoint> concentration_report(const BetaSweep& sweep, const std::vector<std::size_t>& critical,
                                                           double eps) {
  if (critical.empty()) throw ConfigError("empty maximizing set");
  const auto& sp = sweep.nu.space();
  const std::size_t n = sweep.potential.atoms, k = sweep.potential.range;
  ConfigurationGrid grid(n, k);
  std::vector<char> far(grid.size(), 1);
  std::vector<Tuple> crit;
  for (std::size_t c : critical) crit.push_back(grid.tuple(c));
  parallel_for(grid.size(), [&](std::size_t t) {
    const Tuple x = grid.tuple(t);
    for (const auto& c : crit) {
      double d = 0.0;
      for (std::size_t j = 0; j < k; ++j) d = std::max(d, sp.point_distance(sp.atom(x[j]), sp.atom(c[j])));
      if (d <= eps) {
        far[t] = 0;
        return;
      }
    }
  });
  std::vector<ConcentrationPoint> out;
  for (const auto& r : sweep.records) {
    if (!r.gibbs) throw ConfigError("sweep was run without Gibbs data");
    auto P = r.gibbs->word_probabilities(k);
    double mass = 0.0;
    for (std::size_t t = 0; t < P.size(); ++t)
      if (far[t]) mass += P[t];
    out.push_back({r.beta, mass});
  }
  return out;
}

struct OrderingReport {
  bool hypothesis_holds = false;
  double hypothesis_margin = 0.0;
  bool claim_checked = false;
  bool claim_holds = false;
  double claim_margin = 0.0;
  std::vector<std::pair<double, double>> margins_by_beta;  // min log psi(0 x) - log psi(proxy x)
  std::string message;
};

// The last atom stands in for the accumulation point, the first for z_1 = 0.
inline OrderingReport ordering_condition_check(const PotentialTable& A_in, const AprioriMeasure& nu,
                                               const std::vector<double>& betas) {
  if (nu.space().kind() != SpaceKind::TruncatedCountable)
    throw ConfigError("ordering check needs a truncated countable alphabet");
  const PotentialTable A = lift_for_blocks(A_in);
  const std::size_t n = A.atoms, k = A.range, proxy = n - 1;
  ConfigurationGrid grid(n, k);
  OrderingReport rep;
  rep.hypothesis_margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < grid.size(); ++t) {
    Tuple x = grid.tuple(t);
    for (std::size_t j = 0; j < k; ++j) {
      if (x[j] != proxy) continue;
      Tuple y = x;
      y[j] = 0;
      rep.hypothesis_margin = std::min(rep.hypothesis_margin, A[grid.index(y)] - A[t]);
    }
  }
  rep.hypothesis_holds = rep.hypothesis_margin > 0.0;
  if (!rep.hypothesis_holds) {
    rep.message = "hypothesis fails";
    return rep;
  }
  rep.claim_checked = true;
  rep.claim_margin = std::numeric_limits<double>::infinity();
  const std::size_t r = k - 1;
  const std::size_t N = checked_power(n, r, kDefaultGridCap, "block grid"), stride = N / n;
  for (double beta : betas) {
    auto e = eigenpair_log_domain(A.scaled(beta), nu);
    double mb = std::numeric_limits<double>::infinity();
    for (std::size_t tail = 0; tail < stride; ++tail) mb = std::min(mb, e.log_psi[tail] - e.log_psi[proxy * stride + tail]);
    rep.margins_by_beta.emplace_back(beta, mb);
    rep.claim_margin = std::min(rep.claim_margin, mb);
  }
  rep.claim_holds = rep.claim_margin > 0.0;
  rep.message = rep.claim_holds ? "hypothesis and claim hold" : "claim fails";
  return rep;
}

}  // namespace ruelle
