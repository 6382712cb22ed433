#pragma once

#include <chrono>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ruelle/gibbs.hpp"
#include "ruelle/involution.hpp"
#include "ruelle/orbits.hpp"
#include "ruelle/reference.hpp"
#include "ruelle/scenarios.hpp"
#include "ruelle/zerotemp.hpp"

namespace ruelle {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = true;
  std::map<std::string, double> metrics;  // worst value per key
  std::vector<std::string> failures;
  double seconds = 0.0;

  void require(bool ok, std::string what) {
    if (ok) return;
    passed = false;
    failures.push_back(std::move(what));
  }
  void record(const std::string& key, double v) {
    auto [it, fresh] = metrics.try_emplace(key, v);
    if (!fresh && !(it->second >= v)) it->second = v;
  }
  std::string detail() const {
    if (!failures.empty()) return failures.front();
    std::string s;
    char buf[96];
    for (const auto& [k, v] : metrics) {
      std::snprintf(buf, sizeof buf, "%s%s=%.3g", s.empty() ? "" : " ", k.c_str(), v);
      s += buf;
    }
    return s;
  }
};

inline std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline constexpr int kCriterionCount = 10;

class AcceptanceSuite {
 public:
  AcceptanceSuite() : scenarios_(scenario_suite()) {}

  const std::vector<Scenario>& scenarios() const { return scenarios_; }

  CriterionResult run(int id) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    r.id = id;
    try {
      switch (id) {
        case 1: eigen_cross(r); break;
        case 2: bessel(r); break;
        case 3: invariants(r); break;
        case 4: variational(r); break;
        case 5: entropy(r); break;
        case 6: periodic(r); break;
        case 7: zero_temperature(r); break;
        case 8: subaction(r); break;
        case 9: involution(r); break;
        case 10: countable(r); break;
        default: throw ConfigError("no criterion " + std::to_string(id));
      }
    } catch (const Error& e) {
      r.require(false, std::string("error: ") + e.what());
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (id == 1) r.require(r.seconds <= 10.0, "runtime " + fmt_value(r.seconds) + " s > 10 s");
    return r;
  }

  std::vector<CriterionResult> run_all(bool fail_fast) {
    std::vector<CriterionResult> out;
    for (int id = 1; id <= kCriterionCount; ++id) {
      out.push_back(run(id));
      if (fail_fast && !out.back().passed) break;
    }
    return out;
  }

 private:
  struct ZeroTemp {
    BetaSweep sweep;
    MaxMeanReport mean;
    std::vector<std::size_t> critical;
    double escaping_mass = 0.0;
    double seconds = 0.0;
  };

  static SolverOptions tight() { return {1e-13, 100000}; }

  const std::vector<ZeroTemp>& zero_temp() {
    if (zt_) return *zt_;
    std::vector<ZeroTemp> v;
    for (const auto& s : scenarios_) {
      const auto t0 = std::chrono::steady_clock::now();
      auto sweep = beta_sweep(s.table, s.nu, default_beta_schedule());
      auto mm = max_mean_cycle(sweep.potential);
      auto crit = critical_edges(BlockDigraph(sweep.potential), mm.value);
      auto conc = concentration_report(sweep, crit, 0.3);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      v.push_back({std::move(sweep), std::move(mm), std::move(crit), conc.back().escaping_mass, secs});
    }
    zt_ = std::move(v);
    return *zt_;
  }

  void eigen_cross(CriterionResult& r) {
    r.name = "eigen-solver cross-validation";
    for (const auto& s : scenarios_) {
      auto p = eigenpair_power(s.table, s.nu, tight()).pair;
      auto c = eigenpair_contraction(s.table, s.nu).pair;
      const double gl = std::abs(c.lambda - p.lambda) / p.lambda;
      const double gp = sup_distance(c.psi.values, p.psi.values);
      r.record("lambda_rel_gap", gl);
      r.record("psi_sup_gap", gp);
      r.require(gl <= 1e-5, s.name + ": lambda gap " + fmt_value(gl));
      r.require(gp <= 1e-4, s.name + ": psi gap " + fmt_value(gp));
    }
  }

  void bessel(CriterionResult& r) {
    r.name = "Bessel oracle";
    auto nu = build_apriori(measure_spec::CircleQuadrature{256});
    auto A = Potential::xy(0.0, 0.0).tabulate(nu.space());
    const double i0 = reference::bessel_i(0, 1.0);
    auto e = eigenpair_power(A, nu, tight()).pair;
    auto p = pressure(A, nu);
    const double dl = std::abs(e.lambda - i0);
    const double dp = std::abs(p.pressure - std::log(i0));
    const double dh = std::abs(p.entropy - reference::xy_entropy());
    r.record("lambda_gap", dl);
    r.record("pressure_gap", dp);
    r.record("entropy_gap", dh);
    r.require(dl <= 1e-6, "lambda gap " + fmt_value(dl));
    r.require(dp <= 1e-6, "pressure gap " + fmt_value(dp));
    r.require(dh <= 1e-6, "entropy gap " + fmt_value(dh));
  }

  void invariants(CriterionResult& r) {
    r.name = "normalization and Gibbs invariants";
    for (const auto& s : scenarios_) {
      auto m = gibbs_markov(s.table, s.nu);
      const double nr = normalization_residual(*m.normalized, s.nu);
      const double gi = check_invariants(m).worst();
      r.record("normalization", nr);
      r.record("gibbs", gi);
      r.require(nr <= 1e-10, s.name + ": normalization residual " + fmt_value(nr));
      r.require(gi <= 1e-10, s.name + ": Gibbs invariant " + fmt_value(gi));
    }
  }

  void variational(CriterionResult& r) {
    r.name = "variational principle";
    for (const auto& s : scenarios_) {
      auto p = pressure(s.table, s.nu);
      r.record("identity", p.residual);
      r.require(p.residual <= 1e-8, s.name + ": identity residual " + fmt_value(p.residual));
    }
    for (std::size_t i = 0; i < 20; ++i) {
      const auto& s = scenarios_[i % scenarios_.size()];
      std::mt19937_64 rng(i);
      std::uniform_real_distribution<double> U(-1.0, 1.0);
      std::vector<double> v(s.table.size());
      for (double& x : v) x = U(rng);
      PotentialTable B(s.table.atoms, s.table.range, std::move(v));
      auto mb = gibbs_markov(B, s.nu);
      const double h = entropy_gibbs(*mb.normalized, mb).value;
      const double excess = h + mb.integrate(s.table) - pressure(s.table, s.nu).pressure;
      r.record("cross_excess", excess);
      r.require(excess <= 1e-8, s.name + ": cross pair " + std::to_string(i) + " exceeds pressure by " + fmt_value(excess));
    }
  }

  static std::size_t cylinder_length(std::size_t d) {
    std::size_t n = 1, w = d;
    while (n < 10 && w * d <= kDefaultGridCap) {
      w *= d;
      ++n;
    }
    return n;
  }

  void entropy(CriterionResult& r) {
    r.name = "entropy consistency";
    for (const auto& s : scenarios_) {
      if (!s.finite_alphabet()) continue;
      auto m = gibbs_markov(s.table, s.nu);
      const double h1 = entropy_gibbs(*m.normalized, m).value;
      const double h2 = entropy_markov(m).value;
      auto c = entropy_cylinder(m, cylinder_length(s.nu.size()));
      const double h3 = c.conditional;
      const double spread = std::max({h1, h2, h3}) - std::min({h1, h2, h3});
      double cross = 0.0;
      for (std::size_t i = 0; i < s.nu.size(); ++i) cross += s.nu.log_weight(i) * c.marginal[i];
      const double rel = std::abs(c.classical_conditional - (h1 - cross));
      r.record("spread", spread);
      r.record("classical_relation", rel);
      r.require(spread <= 5e-3, s.name + ": entropy spread " + fmt_value(spread));
      r.require(rel <= 5e-3, s.name + ": classical relation gap " + fmt_value(rel));
      if (s.nu.uniform()) {
        const double u = std::abs(h1 - (c.classical_conditional - std::log(static_cast<double>(s.nu.size()))));
        r.record("uniform_gap", u);
        r.require(u <= 1e-6, s.name + ": uniform relation gap " + fmt_value(u));
      }
    }
  }

  void periodic(CriterionResult& r) {
    r.name = "periodic-orbit pressure";
    std::vector<std::size_t> ns;
    for (std::size_t n = 1; n <= 64; ++n) ns.push_back(n);
    for (const auto& s : scenarios_) {
      if (s.table.range != 2) continue;
      auto tr = pressure_periodic(s.table, s.nu, ns, PeriodicMethod::trace);
      const double c64 = fit_periodic_constant(tr, 8, 64);
      // C = 0 means value_n = log lambda exactly (rank-one transfer matrix).
      const bool exact = c64 <= 1e-10 * std::max(1.0, std::abs(tr.log_lambda));
      double drift = 0.0;
      for (std::size_t hi : {16u, 32u}) {
        const double c = fit_periodic_constant(tr, 8, hi);
        if (!exact) drift = std::max(drift, std::abs(c / c64 - 1.0));
      }
      double over = 0.0;
      for (const auto& p : tr.points)
        if (p.n >= 8) over = std::max(over, std::abs(p.value - tr.log_lambda) - c64 / static_cast<double>(p.n));
      r.record("fit_drift", drift);
      r.require(drift <= 0.2, s.name + ": fitted constant drifts by " + fmt_value(drift));
      r.require(over <= 1e-15, s.name + ": C/n bound exceeded by " + fmt_value(over));
      std::vector<std::size_t> small;
      for (std::size_t n = 1; n <= 10; ++n) {
        std::size_t words = 1;
        bool fits = true;
        for (std::size_t i = 0; i < n && fits; ++i) fits = (words *= s.nu.size()) <= kDefaultGridCap;
        if (fits) small.push_back(n);
      }
      auto ex = pressure_periodic(s.table, s.nu, small, PeriodicMethod::exhaustive);
      double gap = 0.0;
      for (std::size_t i = 0; i < small.size(); ++i) gap = std::max(gap, std::abs(ex.points[i].value - tr.points[small[i] - 1].value));
      r.record("exhaustive_gap", gap);
      r.require(gap <= 1e-10, s.name + ": exhaustive vs trace gap " + fmt_value(gap));
    }
  }

  void zero_temperature(CriterionResult& r) {
    r.name = "zero temperature";
    const auto& zt = zero_temp();
    for (std::size_t i = 0; i < zt.size(); ++i) {
      const auto& z = zt[i];
      const std::string& nm = scenarios_[i].name;
      const double gap = std::abs(z.sweep.last().scaled_log_lambda - z.mean.value);
      r.record("limit_gap", gap);
      r.record("escaping_mass", z.escaping_mass);
      r.require(gap <= 0.02, nm + ": |(1/beta) log lambda - m| = " + fmt_value(gap));
      r.require(z.escaping_mass <= 1e-2, nm + ": escaping mass " + fmt_value(z.escaping_mass));
      r.require(z.mean.verified, nm + ": max-mean certificate failed");
      if (BlockDigraph(z.sweep.potential).nodes() <= kExhaustiveNodeCap)
        r.require(z.mean.exhaustive_value.has_value(), nm + ": exhaustive cycle check missing");
      r.require(z.seconds <= 60.0, nm + ": runtime " + fmt_value(z.seconds) + " s");
    }
  }

  void subaction(CriterionResult& r) {
    r.name = "subaction calibration";
    const auto& zt = zero_temp();
    for (std::size_t i = 0; i < scenarios_.size(); ++i) {
      const auto& s = scenarios_[i];
      auto sub = subaction_extract(zt[i].sweep, zt[i].mean.value);
      const double limit = s.finite_alphabet() ? 0.05 : 0.1;
      r.record(s.finite_alphabet() ? "calibration_finite" : "calibration_grid", sub.calibration_error);
      r.require(sub.calibration_error <= limit, s.name + ": calibration error " + fmt_value(sub.calibration_error));
    }
  }

  void involution(CriterionResult& r) {
    r.name = "involution pipeline";
    for (const auto& s : scenarios_) {
      auto S = solve_involution(s.table, s.nu);
      auto ne = natural_extension_check(S, s.nu, gibbs_markov(s.table, s.nu));
      r.record("lambda_gap", S.lambda_gap());
      r.record("reconstruction", S.reconstruction_error);
      r.record("cocycle", S.dual.cocycle_residual);
      r.record("natural_extension", ne.worst());
      r.require(S.lambda_gap() <= 1e-8, s.name + ": dual eigenvalue gap " + fmt_value(S.lambda_gap()));
      r.require(S.reconstruction_error <= 1e-6, s.name + ": reconstruction error " + fmt_value(S.reconstruction_error));
      r.require(S.dual.cocycle_residual <= 1e-9, s.name + ": cocycle residual " + fmt_value(S.dual.cocycle_residual));
      r.require(ne.worst() <= 1e-9, s.name + ": natural extension residual " + fmt_value(ne.worst()));
    }
    auto P = Potential::xy(0.0, 0.5);
    auto nu = build_apriori(measure_spec::CircleQuadrature{128});
    auto fine = build_apriori(measure_spec::CircleQuadrature{256});
    auto S = solve_involution(P, nu);
    auto d = eigenfunction_derivative(P, nu, S, 1);
    if (!d.closed_form) throw UnsupportedError("range-2 closed form unavailable");
    auto fd = richardson_periodic_derivative(eigenpair_power(P, nu, tight()).pair.psi.values,
                                             eigenpair_power(P, fine, tight()).pair.psi.values, 2.0 * std::numbers::pi);
    const double g1 = relative_sup_gap(d.integral, *d.closed_form);
    const double g2 = relative_sup_gap(d.integral, fd);
    const double g3 = relative_sup_gap(*d.closed_form, fd);
    r.record("derivative_gap", std::max({g1, g2, g3}));
    r.require(std::max({g1, g2, g3}) <= 1e-3, "derivative disagreement " + fmt_value(std::max({g1, g2, g3})));
  }

  void countable(CriterionResult& r) {
    r.name = "countable-alphabet diagnostics";
    const Scenario* g = nullptr;
    for (const auto& s : scenarios_)
      if (s.kind() == SpaceKind::TruncatedCountable) g = &s;
    if (!g) throw ConfigError("scenario suite lacks a countable alphabet");
    std::vector<std::size_t> ns;
    for (std::size_t n = 1; n <= 20; ++n) ns.push_back(n);
    auto rec = recurrence_ratio(g->table, g->nu, 0, ns);
    r.record("recurrence_bound", rec.bound);
    r.require(rec.bounded, "recurrence ratios leave [" + fmt_value(rec.lo) + ", " + fmt_value(rec.hi) + "]");
    auto ord = ordering_condition_check(g->table, g->nu, default_beta_schedule());
    r.record("ordering_margin", ord.claim_margin);
    r.record("hypothesis_margin", ord.hypothesis_margin);
    r.require(ord.hypothesis_holds && ord.claim_holds && ord.claim_margin > 0.0, "ordering check: " + ord.message);
    auto zero = ordering_condition_check(PotentialTable::constant(g->nu.size(), 2, 0.0), g->nu, default_beta_schedule());
    r.require(!zero.hypothesis_holds && zero.message == "hypothesis fails", "A = 0 ordering check: " + zero.message);
  }

  std::vector<Scenario> scenarios_;
  std::optional<std::vector<ZeroTemp>> zt_;
};

}  // namespace ruelle
