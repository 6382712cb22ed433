#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ruelle/transfer.hpp"

namespace ruelle {

inline double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Block Markov chain over r-tuples: stationary density theta (w.r.t. nu^r) and
// kernel K(b, a') (w.r.t. nu) for appending a' to block b.
struct MarkovGibbs {
  explicit MarkovGibbs(AprioriMeasure n) : nu(std::move(n)) {}

  AprioriMeasure nu;
  std::size_t atoms = 0;
  std::size_t rank = 1;
  std::size_t blocks = 0;
  std::vector<double> block_prior;
  std::vector<double> theta;
  std::vector<double> kernel;
  double log_lambda = 0.0;
  std::vector<double> log_psi;
  std::vector<double> log_psi_bar;
  std::optional<PotentialTable> potential;
  std::optional<PotentialTable> normalized;
  EigenMethod method = EigenMethod::power;

  std::size_t successor(std::size_t b, std::size_t a) const { return (b * atoms + a) % blocks; }
  double K(std::size_t b, std::size_t a) const { return kernel[b * atoms + a]; }
  double stationary(std::size_t b) const { return block_prior[b] * theta[b]; }
  double transition(std::size_t b, std::size_t a) const { return nu.weight(a) * kernel[b * atoms + a]; }

  // mu[w] for every word of length L, lexicographic.
  std::vector<double> word_probabilities(std::size_t L, std::size_t cap = kDefaultGridCap) const {
    if (L == 0) return {1.0};
    checked_power(atoms, std::max(L, rank), cap, "cylinder enumeration");
    std::vector<double> P(blocks);
    for (std::size_t b = 0; b < blocks; ++b) P[b] = stationary(b);
    if (L <= rank) {
      const std::size_t tail = blocks / checked_power(atoms, L, cap, "cylinder enumeration");
      std::vector<double> out(blocks / tail, 0.0);
      for (std::size_t b = 0; b < blocks; ++b) out[b / tail] += P[b];
      return out;
    }
    for (std::size_t len = rank; len < L; ++len) {
      std::vector<double> nxt(P.size() * atoms);
      parallel_for(P.size(), [&](std::size_t w) {
        const std::size_t b = w % blocks;
        for (std::size_t a = 0; a < atoms; ++a) nxt[w * atoms + a] = P[w] * transition(b, a);
      });
      P = std::move(nxt);
    }
    return P;
  }

  double integrate(const PotentialTable& f) const {
    if (f.atoms != atoms) throw ConfigError("function alphabet does not match the measure");
    auto P = word_probabilities(f.range);
    double s = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) s += P[i] * f[i];
    return s;
  }

  // First-coordinate marginal.
  std::vector<double> marginal() const { return word_probabilities(1); }
};

struct GibbsInvariants {
  double kernel_row = 0.0;
  double stationarity = 0.0;
  double mass = 0.0;
  double worst() const { return std::max({kernel_row, stationarity, mass}); }
};

inline GibbsInvariants check_invariants(const MarkovGibbs& m) {
  GibbsInvariants g;
  for (std::size_t b = 0; b < m.blocks; ++b) {
    double s = 0.0;
    for (std::size_t a = 0; a < m.atoms; ++a) s += m.transition(b, a);
    g.kernel_row = std::max(g.kernel_row, std::abs(s - 1.0));
  }
  const std::size_t stride = m.blocks / m.atoms;
  for (std::size_t bp = 0; bp < m.blocks; ++bp) {
    double s = 0.0;
    const std::size_t last = bp % m.atoms, head = bp / m.atoms;
    for (std::size_t a = 0; a < m.atoms; ++a) {
      const std::size_t pred = m.rank == 1 ? a : a * stride + head;
      s += m.nu.weight(a) * m.theta[pred] * m.K(pred, last);
    }
    g.stationarity = std::max(g.stationarity, std::abs(s - m.theta[bp]));
  }
  double mass = 0.0;
  for (std::size_t b = 0; b < m.blocks; ++b) mass += m.stationary(b);
  g.mass = std::abs(mass - 1.0);
  return g;
}

inline std::vector<double> block_prior(const AprioriMeasure& nu, std::size_t r) {
  ConfigurationGrid g(nu.size(), r);
  std::vector<double> p(g.size(), 1.0);
  for (std::size_t b = 0; b < g.size(); ++b) {
    std::size_t idx = b;
    for (std::size_t i = 0; i < r; ++i) {
      p[b] *= nu.weight(idx % nu.size());
      idx /= nu.size();
    }
  }
  return p;
}

inline std::size_t reverse_block(std::size_t b, std::size_t n, std::size_t r) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < r; ++i) {
    out = out * n + b % n;
    b /= n;
  }
  return out;
}

inline PotentialTable lift_for_blocks(const PotentialTable& A) { return A.range == 1 ? A.lifted(2) : A; }

// theta = psi psibar / pi, K = e^A psibar(b') / (psibar(b) lambda), all in logs.
inline MarkovGibbs markov_from_eigendata(const AprioriMeasure& nu, const PotentialTable& A, double log_lambda,
                                         std::vector<double> log_psi, std::vector<double> log_psi_bar) {
  if (A.range < 2) throw ConfigError("block Markov form needs range >= 2");
  MarkovGibbs m(nu);
  m.atoms = A.atoms;
  m.rank = A.range - 1;
  m.blocks = checked_power(m.atoms, m.rank, kDefaultGridCap, "block grid");
  m.block_prior = block_prior(nu, m.rank);
  m.log_lambda = log_lambda;
  std::vector<double> lw(m.blocks);
  for (std::size_t b = 0; b < m.blocks; ++b) lw[b] = std::log(m.block_prior[b]) + log_psi[b] + log_psi_bar[b];
  const double log_pi = log_sum_exp(lw);
  m.theta.resize(m.blocks);
  for (std::size_t b = 0; b < m.blocks; ++b) m.theta[b] = std::exp(log_psi[b] + log_psi_bar[b] - log_pi);
  m.kernel.resize(m.blocks * m.atoms);
  for (std::size_t b = 0; b < m.blocks; ++b)
    for (std::size_t a = 0; a < m.atoms; ++a) {
      const double e = A[b * m.atoms + a] + log_psi_bar[m.successor(b, a)] - log_psi_bar[b] - log_lambda;
      if (std::isnan(e) || e > 700.0) throw ConvergenceError("kernel exponent overflow", e, 0);
      m.kernel[b * m.atoms + a] = std::exp(e);
    }
  m.potential = A;
  m.normalized = normalize_log(A, log_lambda, log_psi).values;
  m.log_psi = std::move(log_psi);
  m.log_psi_bar = std::move(log_psi_bar);
  return m;
}

struct GibbsOptions {
  EigenMethod method = EigenMethod::power;
  SolverOptions solver{1e-13, 100000};
};

inline MarkovGibbs gibbs_markov(const PotentialTable& A_in, const AprioriMeasure& nu, GibbsOptions opts = {}) {
  const PotentialTable A = lift_for_blocks(A_in);
  const PotentialTable R = A.reversed();
  const std::size_t n = A.atoms, r = A.range - 1;
  std::vector<double> lp, lpb_rev;
  double log_lambda = 0.0, log_lambda_rev = 0.0;
  if (opts.method == EigenMethod::log_domain) {
    auto f = eigenpair_log_domain(A, nu, std::min(opts.solver.tol, 1e-12));
    auto b = eigenpair_log_domain(R, nu, std::min(opts.solver.tol, 1e-12));
    log_lambda = f.log_lambda;
    log_lambda_rev = b.log_lambda;
    lp = std::move(f.log_psi);
    lpb_rev = std::move(b.log_psi);
  } else {
    auto f = eigenpair_power(A, nu, opts.solver);
    auto b = eigenpair_power(R, nu, opts.solver);
    log_lambda = f.pair.log_lambda;
    log_lambda_rev = b.pair.log_lambda;
    for (double v : f.pair.psi.values) lp.push_back(std::log(v));
    for (double v : b.pair.psi.values) lpb_rev.push_back(std::log(v));
  }
  if (std::abs(log_lambda - log_lambda_rev) > 1e-8 * std::max(1.0, std::abs(log_lambda)))
    throw ConvergenceError("forward and backward eigenvalues disagree", std::abs(log_lambda - log_lambda_rev), 0);
  std::vector<double> lpb(lpb_rev.size());
  for (std::size_t b = 0; b < lpb.size(); ++b) lpb[b] = lpb_rev[reverse_block(b, n, r)];
  auto m = markov_from_eigendata(nu, A, log_lambda, std::move(lp), std::move(lpb));
  m.method = opts.method;
  return m;
}

inline MarkovGibbs gibbs_markov(const Potential& A, const AprioriMeasure& nu, GibbsOptions opts = {}) {
  return gibbs_markov(A.tabulate(nu.space()), nu, opts);
}

// Hand-built chain, validated against the stationarity equations.
inline MarkovGibbs markov_from_kernel(const AprioriMeasure& nu, std::size_t rank, std::vector<double> theta,
                                      std::vector<double> K, double tol = 1e-9) {
  MarkovGibbs m(nu);
  m.atoms = nu.size();
  m.rank = rank;
  m.blocks = checked_power(m.atoms, rank, kDefaultGridCap, "block grid");
  if (theta.size() != m.blocks || K.size() != m.blocks * m.atoms) throw ConfigError("kernel or density has the wrong size");
  m.block_prior = block_prior(nu, rank);
  m.theta = std::move(theta);
  m.kernel = std::move(K);
  for (double v : m.kernel)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("kernel values must be finite and non-negative");
  auto inv = check_invariants(m);
  if (inv.worst() > tol) throw ConfigError("hand-built chain violates the stationarity equations by " + std::to_string(inv.worst()));
  return m;
}

// A = log K (range r+1); lambda = 1, psibar = 1, psi proportional to theta.
inline NormalizedPotential potential_from_kernel(const MarkovGibbs& m) {
  std::vector<double> logK(m.kernel.size());
  for (std::size_t i = 0; i < logK.size(); ++i) {
    if (!(m.kernel[i] > 0.0)) throw ConfigError("kernel has a zero entry; log K undefined");
    logK[i] = std::log(m.kernel[i]);
  }
  PotentialTable A(m.atoms, m.rank + 1, std::move(logK));
  std::vector<double> lp(m.blocks);
  for (std::size_t b = 0; b < m.blocks; ++b) {
    if (!(m.theta[b] > 0.0)) throw ConfigError("stationary density has a zero entry");
    lp[b] = std::log(m.theta[b]);
  }
  const double mx = *std::max_element(lp.begin(), lp.end());
  for (double& v : lp) v -= mx;
  return normalize_log(A, 0.0, lp);
}

enum class EntropyMethod { gibbs_normalized, markov_kernel, cylinder, upper_bound };

inline const char* to_string(EntropyMethod m) {
  switch (m) {
    case EntropyMethod::gibbs_normalized: return "gibbs_normalized";
    case EntropyMethod::markov_kernel: return "markov_kernel";
    case EntropyMethod::cylinder: return "cylinder";
    case EntropyMethod::upper_bound: return "upper_bound";
  }
  return "?";
}

struct EntropyReport {
  double value = 0.0;
  EntropyMethod method = EntropyMethod::gibbs_normalized;
  bool minus_infinity = false;
  std::size_t truncation = 0;
  std::size_t family_size = 0;
  std::optional<std::size_t> argmin;
  std::vector<double> bounds;
};

// max |mu[a x] / mu[x] - w_a e^{Abar(a x)}| over (r+1)-words.
inline double provenance_residual(const PotentialTable& Abar, const MarkovGibbs& m) {
  if (Abar.atoms != m.atoms || Abar.range != m.rank + 1) throw ConfigError("normalized potential does not match the measure");
  auto P = m.word_probabilities(m.rank + 1);
  double worst = 0.0;
  for (std::size_t w = 0; w < P.size(); ++w) {
    const std::size_t a = w / m.blocks, x = w % m.blocks;
    const double px = m.stationary(x);
    if (px <= 1e-300) continue;
    worst = std::max(worst, std::abs(P[w] / px - m.nu.weight(a) * std::exp(Abar[w])));
  }
  return worst;
}

inline EntropyReport entropy_gibbs(const PotentialTable& Abar_in, const MarkovGibbs& m, double provenance_tol = 1e-8) {
  const PotentialTable Abar = lift_for_blocks(Abar_in);
  const double pr = provenance_residual(Abar, m);
  if (!(pr <= provenance_tol)) throw ConfigError("measure is not the Gibbs measure of this normalized potential (residual " +
                                                 std::to_string(pr) + ")");
  EntropyReport e;
  e.method = EntropyMethod::gibbs_normalized;
  e.value = -m.integrate(Abar);
  e.truncation = Abar.range;
  return e;
}

inline EntropyReport entropy_gibbs(const NormalizedPotential& B, const MarkovGibbs& m) { return entropy_gibbs(B.values, m); }

inline EntropyReport entropy_markov(const MarkovGibbs& m) {
  double s = 0.0;
  for (std::size_t b = 0; b < m.blocks; ++b) {
    const double pb = m.stationary(b);
    for (std::size_t a = 0; a < m.atoms; ++a) {
      const double k = m.K(b, a);
      if (k > 0.0 && pb > 0.0) s -= pb * m.nu.weight(a) * k * std::log(k);
    }
  }
  EntropyReport e;
  e.method = EntropyMethod::markov_kernel;
  e.value = s;
  return e;
}

struct CylinderEntropy {
  EntropyReport report;      // value = n-th term of the relative rate
  double previous_term = 0.0;
  double conditional = 0.0;  // n t_n - (n-1) t_{n-1}
  double classical_rate = 0.0;
  double classical_conditional = 0.0;
  std::vector<double> marginal;
};

inline CylinderEntropy entropy_cylinder(const MarkovGibbs& m, std::size_t n, std::size_t cap = kDefaultGridCap) {
  if (!m.nu.space().discrete()) throw UnsupportedError("cylinder entropy needs a discrete alphabet");
  if (n == 0) throw ConfigError("cylinder length must be >= 1");
  checked_power(m.atoms, n, cap, "cylinder enumeration");
  auto sums = [&](std::size_t L, double& rel, double& cls) {
    rel = 0.0;
    cls = 0.0;
    if (L == 0) return;
    auto P = m.word_probabilities(L, cap);
    for (std::size_t w = 0; w < P.size(); ++w) {
      if (P[w] <= 0.0) continue;
      double logp = 0.0;
      std::size_t idx = w;
      for (std::size_t i = 0; i < L; ++i) {
        logp += m.nu.log_weight(idx % m.atoms);
        idx /= m.atoms;
      }
      const double lp = std::log(P[w]);
      rel -= P[w] * (lp - logp);
      cls -= P[w] * lp;
    }
  };
  double rel_n, cls_n, rel_p, cls_p;
  sums(n, rel_n, cls_n);
  sums(n - 1, rel_p, cls_p);
  CylinderEntropy c;
  c.report.method = EntropyMethod::cylinder;
  c.report.value = rel_n / static_cast<double>(n);
  c.report.truncation = n;
  c.previous_term = n > 1 ? rel_p / static_cast<double>(n - 1) : 0.0;
  c.conditional = rel_n - rel_p;
  c.classical_rate = cls_n / static_cast<double>(n);
  c.classical_conditional = cls_n - cls_p;
  c.marginal = m.marginal();
  return c;
}

// Shift-invariant measure given only through its cylinder probabilities.
class InvariantMeasure {
 public:
  using Words = std::function<std::vector<double>(std::size_t)>;
  InvariantMeasure(std::size_t atoms, Words w, std::string name) : atoms_(atoms), words_(std::move(w)), name_(std::move(name)) {}

  static InvariantMeasure from_markov(const MarkovGibbs& m) {
    return {m.atoms, [m](std::size_t L) { return m.word_probabilities(L); }, "markov"};
  }
  static InvariantMeasure product(const AprioriMeasure& nu) {
    return {nu.size(),
            [nu](std::size_t L) {
              std::vector<double> P{1.0};
              for (std::size_t i = 0; i < L; ++i) {
                std::vector<double> nxt(P.size() * nu.size());
                for (std::size_t w = 0; w < P.size(); ++w)
                  for (std::size_t a = 0; a < nu.size(); ++a) nxt[w * nu.size() + a] = P[w] * nu.weight(a);
                P = std::move(nxt);
              }
              return P;
            },
            "product"};
  }
  // Uniform measure on the shifts of the periodic point word^infinity.
  static InvariantMeasure periodic_orbit(std::size_t atoms, Tuple word) {
    if (word.empty()) throw ConfigError("periodic orbit needs a non-empty word");
    return {atoms,
            [atoms, word](std::size_t L) {
              std::vector<double> P(checked_power(atoms, L, kDefaultGridCap, "cylinder enumeration"), 0.0);
              const std::size_t p = word.size();
              for (std::size_t j = 0; j < p; ++j) {
                std::size_t idx = 0;
                for (std::size_t i = 0; i < L; ++i) idx = idx * atoms + word[(j + i) % p];
                P[idx] += 1.0 / static_cast<double>(p);
              }
              return P;
            },
            "periodic"};
  }
  static InvariantMeasure mixture(double eps, const InvariantMeasure& a, const InvariantMeasure& b) {
    if (a.atoms_ != b.atoms_) throw ConfigError("mixture components live on different alphabets");
    return {a.atoms_,
            [eps, a, b](std::size_t L) {
              auto P = a.words(L), Q = b.words(L);
              for (std::size_t i = 0; i < P.size(); ++i) P[i] = eps * P[i] + (1.0 - eps) * Q[i];
              return P;
            },
            "mixture"};
  }

  std::size_t atoms() const noexcept { return atoms_; }
  const std::string& name() const noexcept { return name_; }
  std::vector<double> words(std::size_t L) const { return words_(L); }
  double integrate(const PotentialTable& f) const {
    if (f.atoms != atoms_) throw ConfigError("function alphabet does not match the measure");
    auto P = words(f.range);
    double s = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) s += P[i] * f[i];
    return s;
  }
  // -(1/n) sum mu[w] log(mu[w] / p_w), plus the classical n-block rate.
  std::pair<double, double> block_entropy_rate(const AprioriMeasure& nu, std::size_t n) const {
    auto P = words(n);
    double rel = 0.0, cls = 0.0;
    for (std::size_t w = 0; w < P.size(); ++w) {
      if (P[w] <= 0.0) continue;
      double logp = 0.0;
      std::size_t idx = w;
      for (std::size_t i = 0; i < n; ++i) {
        logp += nu.log_weight(idx % atoms_);
        idx /= atoms_;
      }
      rel -= P[w] * (std::log(P[w]) - logp);
      cls -= P[w] * std::log(P[w]);
    }
    return {rel / static_cast<double>(n), cls / static_cast<double>(n)};
  }

 private:
  std::size_t atoms_;
  Words words_;
  std::string name_;
};

// min over the family of -int A dmu + log lambda_A: an upper bound on the entropy.
inline EntropyReport entropy_upper_bound(const InvariantMeasure& mu, const std::vector<PotentialTable>& family,
                                         const AprioriMeasure& nu) {
  if (family.empty()) throw ConfigError("entropy bound needs a non-empty family");
  EntropyReport e;
  e.method = EntropyMethod::upper_bound;
  e.family_size = family.size();
  e.value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double ll = eigenpair_log_domain(family[i], nu).log_lambda;
    const double b = -mu.integrate(family[i]) + ll;
    e.bounds.push_back(b);
    if (b < e.value) {
      e.value = b;
      e.argmin = i;
    }
  }
  // Bounds falling by a non-shrinking amount along the family: report -infinity.
  if (e.bounds.size() >= 3) {
    bool falling = true;
    for (std::size_t i = 1; i < e.bounds.size(); ++i) falling = falling && e.bounds[i] < e.bounds[i - 1];
    const double first = e.bounds[0] - e.bounds[1];
    const double last = e.bounds[e.bounds.size() - 2] - e.bounds.back();
    e.minus_infinity = falling && last >= 0.5 * first;
  }
  return e;
}

struct PressureReport {
  double pressure = 0.0;
  double entropy = 0.0;
  double integral = 0.0;
  double residual = 0.0;
};

inline PressureReport pressure(const PotentialTable& A, const AprioriMeasure& nu, GibbsOptions opts = {}) {
  auto m = gibbs_markov(A, nu, opts);
  PressureReport p;
  p.pressure = m.log_lambda;
  p.entropy = entropy_gibbs(*m.normalized, m).value;
  p.integral = m.integrate(lift_for_blocks(A));
  p.residual = std::abs(p.pressure - p.entropy - p.integral);
  return p;
}

// int log(L_A u / u) dmu, for u on blocks of rank q >= range(A) - 1.
inline double minimax_value(const PotentialTable& A, const MarkovGibbs& m, const GridFunction& u) {
  for (double v : u.values)
    if (!(v > 0.0)) throw ConfigError("minimax test function must be positive");
  if (u.atoms != A.atoms || u.atoms != m.atoms) throw ConfigError("alphabet mismatch");
  const std::size_t q = u.rank;
  if (q + 1 < A.range) throw ConfigError("test function rank too small for the potential");
  const PotentialTable Aq = A.lifted(q + 1);
  TransferOperator T(Aq, m.nu);
  auto Lu = T.apply(u.values);
  auto P = m.word_probabilities(q);
  double s = 0.0;
  for (std::size_t x = 0; x < P.size(); ++x) s += P[x] * std::log(Lu[x] / u[x]);
  return s;
}

// u~ = e^{-A + B}, on pair blocks.
inline GridFunction minimax_attaining_function(const PotentialTable& A, const PotentialTable& B) {
  const std::size_t k = std::max({A.range, B.range, std::size_t{2}});
  auto Al = A.lifted(k), Bl = B.lifted(k);
  std::vector<double> v(Al.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-Al[i] + Bl[i]);
  return {A.atoms, k, std::move(v)};
}

// C_n = int (v o sigma^n) w dmu, w centered.
inline std::vector<double> correlation_sequence(const MarkovGibbs& m, const GridFunction& v, const GridFunction& w_in,
                                                std::size_t n_max) {
  if (v.size() != m.blocks || w_in.size() != m.blocks) throw ConfigError("observables must live on the measure's blocks");
  std::vector<double> w = w_in.values;
  double mean = 0.0;
  for (std::size_t b = 0; b < m.blocks; ++b) mean += m.stationary(b) * w[b];
  for (double& x : w) x -= mean;
  std::vector<double> f = v.values, C;
  for (std::size_t n = 0; n <= n_max; ++n) {
    double c = 0.0;
    for (std::size_t b = 0; b < m.blocks; ++b) c += m.stationary(b) * w[b] * f[b];
    C.push_back(c);
    std::vector<double> nf(m.blocks);
    parallel_for(m.blocks, [&](std::size_t b) {
      double s = 0.0;
      for (std::size_t a = 0; a < m.atoms; ++a) s += m.transition(b, a) * f[m.successor(b, a)];
      nf[b] = s;
    });
    f = std::move(nf);
  }
  return C;
}

struct DecayFit {
  double rate = 0.0;
  double constant = 0.0;
};

// Tail ratio |C_{n+1}/C_n| averaged geometrically over the resolved tail.
inline DecayFit fit_decay(const std::vector<double>& C) {
  DecayFit f;
  if (C.size() < 3) return f;
  const double ref = std::abs(C[1]);
  std::size_t last = 1;
  while (last + 1 < C.size() && std::abs(C[last + 1]) > 1e-10 * ref) ++last;
  if (ref == 0.0 || last < 2) return f;
  const std::size_t first = std::max<std::size_t>(1, last / 2);
  f.rate = std::pow(std::abs(C[last]) / std::abs(C[first]), 1.0 / static_cast<double>(last - first));
  for (std::size_t n = 1; n <= last; ++n) f.constant = std::max(f.constant, std::abs(C[n]) / std::pow(f.rate, static_cast<double>(n)));
  return f;
}

struct IterateSystem {
  AprioriMeasure nu;
  PotentialTable birkhoff;             // S_n A on the alphabet M^n
  PotentialTable birkhoff_normalized;  // S_n Abar
  std::size_t step = 1;
};

namespace detail {
inline PotentialTable iterate_table(const PotentialTable& A, std::size_t n, std::size_t cap) {
  const std::size_t d = A.atoms, k = A.range;
  const std::size_t D = checked_power(d, n, cap, "iterated alphabet");
  const std::size_t kk = 1 + (k - 1 + n - 1) / n;
  ConfigurationGrid g(D, kk, cap);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    Tuple big = g.tuple(i), word;
    for (std::size_t s : big) {
      Tuple part(n);
      for (std::size_t j = n; j-- > 0;) {
        part[j] = s % d;
        s /= d;
      }
      word.insert(word.end(), part.begin(), part.end());
    }
    v[i] = birkhoff_sum(A, word, n);
  }
  return {D, kk, std::move(v)};
}
}  // namespace detail

inline IterateSystem iterate_system(const PotentialTable& A, const AprioriMeasure& nu, std::size_t n,
                                    std::size_t cap = kDefaultGridCap) {
  if (n == 0) throw ConfigError("iterate order must be >= 1");
  const std::size_t D = checked_power(nu.size(), n, cap, "iterated alphabet");
  std::vector<double> w(D, 1.0);
  for (std::size_t s = 0; s < D; ++s) {
    std::size_t idx = s;
    for (std::size_t j = 0; j < n; ++j) {
      w[s] *= nu.weight(idx % nu.size());
      idx /= nu.size();
    }
  }
  AprioriMeasure nun(StateSpace::finite_alphabet(D), std::move(w), true);
  auto m = gibbs_markov(A, nu);
  return {nun, detail::iterate_table(A, n, cap), detail::iterate_table(*m.normalized, n, cap), n};
}

}  // namespace ruelle
