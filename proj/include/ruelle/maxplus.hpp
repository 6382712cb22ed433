#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ruelle/parallel.hpp"
#include "ruelle/potential.hpp"
#include "ruelle/transfer.hpp"

namespace ruelle {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Nodes are (k-1)-blocks; the edge (b, a) appends atom a and carries A(b a).
class BlockDigraph {
 public:
  explicit BlockDigraph(const PotentialTable& A_in) : A_(A_in.range == 1 ? A_in.lifted(2) : A_in) {
    n_ = A_.atoms;
    r_ = A_.range - 1;
    N_ = checked_power(n_, r_, kDefaultGridCap, "block digraph");
    stride_ = N_ / n_;
  }

  std::size_t atoms() const noexcept { return n_; }
  std::size_t rank() const noexcept { return r_; }
  std::size_t nodes() const noexcept { return N_; }
  std::size_t edges() const noexcept { return N_ * n_; }
  const PotentialTable& table() const noexcept { return A_; }

  std::size_t target(std::size_t b, std::size_t a) const { return (b * n_ + a) % N_; }
  double weight(std::size_t b, std::size_t a) const { return A_[b * n_ + a]; }
  // p-th predecessor of c, reached by the edge carrying c's last atom.
  std::size_t source(std::size_t c, std::size_t p) const { return p * stride_ + c / n_; }
  double weight_into(std::size_t c, std::size_t p) const { return weight(source(c, p), c % n_); }

 private:
  PotentialTable A_;
  std::size_t n_ = 0, r_ = 1, N_ = 0, stride_ = 1;
};

using Cycle = std::vector<std::size_t>;

inline double cycle_mean(const BlockDigraph& g, const Cycle& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += g.weight(c[i], c[(i + 1) % c.size()] % g.atoms());
  return s / static_cast<double>(c.size());
}

// Rotation starting at the smallest node.
inline Cycle canonical_rotation(Cycle c) {
  std::rotate(c.begin(), std::min_element(c.begin(), c.end()), c.end());
  return c;
}

// Atoms appended along the cycle: the periodic word it encodes.
inline Tuple cycle_word(const BlockDigraph& g, const Cycle& c) {
  Tuple w;
  for (std::size_t i = 0; i < c.size(); ++i) w.push_back(c[(i + 1) % c.size()] % g.atoms());
  return w;
}

namespace detail {
inline double tie_tolerance(const BlockDigraph& g) { return 1e-12 * std::max(1.0, g.table().sup_norm()); }

inline bool better_cycle(const BlockDigraph& g, const Cycle& cand, double cm, const Cycle& best, double bm) {
  const double tol = tie_tolerance(g);
  if (best.empty() || cm > bm + tol) return true;
  if (cm < bm - tol) return false;
  return cand < best;
}
}  // namespace detail

struct KarpResult {
  double value = 0.0;
  Cycle cycle;
  double cycle_mean = 0.0;
};

inline constexpr std::size_t kKarpNodeCap = 2048;

inline KarpResult karp(const BlockDigraph& g) {
  const std::size_t N = g.nodes(), n = g.atoms();
  if (N > kKarpNodeCap) throw CapacityError("max-mean cycle search", N, kKarpNodeCap);
  std::vector<double> D((N + 1) * N, 0.0);
  std::vector<std::uint32_t> pred((N + 1) * N, 0);
  for (std::size_t k = 1; k <= N; ++k) {
    const double* prev = &D[(k - 1) * N];
    double* cur = &D[k * N];
    std::uint32_t* pk = &pred[k * N];
    parallel_for(N, [&](std::size_t c) {
      double best = kNegInf;
      std::uint32_t arg = 0;
      for (std::size_t p = 0; p < n; ++p) {
        const double v = prev[g.source(c, p)] + g.weight_into(c, p);
        if (v > best) {
          best = v;
          arg = static_cast<std::uint32_t>(p);
        }
      }
      cur[c] = best;
      pk[c] = arg;
    });
  }
  KarpResult out;
  out.value = kNegInf;
  std::size_t vstar = 0;
  for (std::size_t v = 0; v < N; ++v) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < N; ++k)
      worst = std::min(worst, (D[N * N + v] - D[k * N + v]) / static_cast<double>(N - k));
    if (worst > out.value) {
      out.value = worst;
      vstar = v;
    }
  }
  std::vector<std::size_t> walk(N + 1);
  walk[N] = vstar;
  for (std::size_t k = N; k > 0; --k) walk[k - 1] = g.source(walk[k], pred[k * N + walk[k]]);
  double bm = kNegInf;
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<char> seen(N, 0);
    seen[walk[i]] = 1;
    for (std::size_t j = i + 1; j <= N; ++j) {
      if (walk[j] == walk[i]) {
        Cycle c(walk.begin() + static_cast<std::ptrdiff_t>(i), walk.begin() + static_cast<std::ptrdiff_t>(j));
        c = canonical_rotation(std::move(c));
        const double cm = cycle_mean(g, c);
        if (detail::better_cycle(g, c, cm, out.cycle, bm)) {
          out.cycle = std::move(c);
          bm = cm;
        }
        break;
      }
      if (seen[walk[j]]) break;
      seen[walk[j]] = 1;
    }
  }
  out.cycle_mean = bm;
  return out;
}

struct ExhaustiveCycles {
  double value = kNegInf;
  Cycle cycle;
  std::size_t count = 0;
};

inline constexpr std::size_t kExhaustiveNodeCap = 8;

// Every simple cycle, each found once from its smallest node.
inline ExhaustiveCycles exhaustive_cycles(const BlockDigraph& g) {
  const std::size_t N = g.nodes(), n = g.atoms();
  if (N > kExhaustiveNodeCap) throw CapacityError("exhaustive cycle enumeration", N, kExhaustiveNodeCap);
  ExhaustiveCycles out;
  Cycle path;
  std::vector<char> on(N, 0);
  auto dfs = [&](auto&& self, std::size_t s, std::size_t u) -> void {
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t v = g.target(u, a);
      if (v == s) {
        ++out.count;
        const double cm = cycle_mean(g, path);
        if (detail::better_cycle(g, path, cm, out.cycle, out.value)) {
          out.cycle = path;
          out.value = cm;
        }
      } else if (v > s && !on[v]) {
        on[v] = 1;
        path.push_back(v);
        self(self, s, v);
        path.pop_back();
        on[v] = 0;
      }
    }
  };
  for (std::size_t s = 0; s < N; ++s) {
    path = {s};
    on.assign(N, 0);
    on[s] = 1;
    dfs(dfs, s, s);
  }
  return out;
}

// Longest walks for weights A - m; h(c) >= h(b) + A(b a) - m on every edge when m is the max mean.
// residual = largest gain of one further relaxation round.
struct MaxPlusPotential {
  std::vector<double> h;
  double residual = 0.0;
};

inline MaxPlusPotential maxplus_potential(const BlockDigraph& g, double m) {
  const std::size_t N = g.nodes(), n = g.atoms();
  std::vector<double> h(N, 0.0), nh(N);
  auto relax = [&] {
    parallel_for(N, [&](std::size_t c) {
      double best = h[c];
      for (std::size_t p = 0; p < n; ++p) best = std::max(best, h[g.source(c, p)] + g.weight_into(c, p) - m);
      nh[c] = best;
    });
  };
  for (std::size_t it = 0; it < N; ++it) {
    relax();
    std::swap(h, nh);
  }
  relax();
  MaxPlusPotential out;
  for (std::size_t c = 0; c < N; ++c) out.residual = std::max(out.residual, nh[c] - h[c]);
  out.h = std::move(h);
  return out;
}

inline constexpr std::size_t kCriticalNodeCap = 1024;

// Edges lying on some cycle of mean m, as k-tuple indices b*n + a.
inline std::vector<std::size_t> critical_edges(const BlockDigraph& g, double m) {
  const std::size_t N = g.nodes(), n = g.atoms();
  if (N > kCriticalNodeCap) throw CapacityError("critical graph", N, kCriticalNodeCap);
  std::vector<double> P(N * N, kNegInf);
  for (std::size_t b = 0; b < N; ++b)
    for (std::size_t a = 0; a < n; ++a) {
      double& e = P[b * N + g.target(b, a)];
      e = std::max(e, g.weight(b, a) - m);
    }
  for (std::size_t k = 0; k < N; ++k) {
    parallel_for(N, [&](std::size_t i) {
      const double ik = P[i * N + k];
      if (ik == kNegInf) return;
      for (std::size_t j = 0; j < N; ++j) P[i * N + j] = std::max(P[i * N + j], ik + P[k * N + j]);
    }, 16);
  }
  const double tol = 1e-9 * std::max(1.0, g.table().sup_norm());
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < N; ++b)
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t c = g.target(b, a);
      const double back = c == b ? 0.0 : P[c * N + b];
      if (back != kNegInf && g.weight(b, a) - m + back >= -tol) out.push_back(b * n + a);
    }
  return out;
}

// (1/n) max over closed walks of length n, i.e. over n-periodic words, of S_n A.
inline double maxplus_periodic_sup(const BlockDigraph& g, std::size_t len) {
  if (len == 0) throw ConfigError("period must be >= 1");
  const std::size_t N = g.nodes(), n = g.atoms();
  std::vector<double> per(N, kNegInf);
  parallel_for(N, [&](std::size_t s) {
    std::vector<double> f(N, kNegInf), nf(N);
    f[s] = 0.0;
    for (std::size_t step = 0; step < len; ++step) {
      for (std::size_t c = 0; c < N; ++c) {
        double best = kNegInf;
        for (std::size_t p = 0; p < n; ++p) best = std::max(best, f[g.source(c, p)] + g.weight_into(c, p));
        nf[c] = best;
      }
      std::swap(f, nf);
    }
    per[s] = f[s];
  }, 1);
  return *std::max_element(per.begin(), per.end()) / static_cast<double>(len);
}

}  // namespace ruelle
