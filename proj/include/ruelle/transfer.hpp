#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ruelle/parallel.hpp"
#include "ruelle/potential.hpp"

namespace ruelle {

inline std::size_t block_rank(std::size_t range) { return range > 1 ? range - 1 : 1; }

struct GridFunction {
  std::size_t atoms = 0;
  std::size_t rank = 1;
  std::vector<double> values;

  GridFunction() = default;
  GridFunction(std::size_t n, std::size_t r, std::vector<double> v) : atoms(n), rank(r), values(std::move(v)) {
    if (values.size() != checked_power(n, r, kDefaultGridCap, "grid function")) throw ConfigError("grid function size mismatch");
  }
  static GridFunction constant(std::size_t n, std::size_t r, double c) {
    return {n, r, std::vector<double>(checked_power(n, r, kDefaultGridCap, "grid function"), c)};
  }
  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  double max() const { return *std::max_element(values.begin(), values.end()); }
  double min() const { return *std::min_element(values.begin(), values.end()); }
  double sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

inline double sup_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// L_A on functions of the first r = max(k-1,1) coordinates.
// Preimage a.x of block x = (x_1..x_r) is the block (a, x_1..x_{r-1}).
class TransferOperator {
 public:
  TransferOperator(const PotentialTable& A, const AprioriMeasure& nu) : n_(A.atoms), k_(A.range), r_(block_rank(A.range)) {
    if (A.atoms != nu.size()) throw ConfigError("potential table atom count does not match the a-priori measure");
    N_ = checked_power(n_, r_, kDefaultGridCap, "transfer grid");
    stride_ = N_ / n_;
    log_kernel_.resize(N_ * n_);
    for (std::size_t x = 0; x < N_; ++x)
      for (std::size_t a = 0; a < n_; ++a) log_kernel_[x * n_ + a] = nu.log_weight(a) + A[a_index(x, a)];
    shift_ = *std::max_element(log_kernel_.begin(), log_kernel_.end());
    kernel_.resize(log_kernel_.size());
    for (std::size_t i = 0; i < kernel_.size(); ++i) kernel_[i] = std::exp(log_kernel_[i] - shift_);
  }

  std::size_t atoms() const noexcept { return n_; }
  std::size_t range() const noexcept { return k_; }
  std::size_t rank() const noexcept { return r_; }
  std::size_t size() const noexcept { return N_; }
  double log_shift() const noexcept { return shift_; }

  std::size_t preimage(std::size_t x, std::size_t a) const { return a * stride_ + x / n_; }
  std::size_t a_index(std::size_t x, std::size_t a) const { return k_ == 1 ? a : a * N_ + x; }
  // log w_a + A(a x)
  double log_kernel(std::size_t x, std::size_t a) const { return log_kernel_[x * n_ + a]; }
  // e^{-shift} w_a e^{A(a x)}
  double kernel(std::size_t x, std::size_t a) const { return kernel_[x * n_ + a]; }

  // e^{-shift} L phi
  std::vector<double> apply_scaled(std::span<const double> phi) const {
    std::vector<double> out(N_);
    parallel_for(N_, [&](std::size_t x) {
      double s = 0.0;
      const double* row = &kernel_[x * n_];
      for (std::size_t a = 0; a < n_; ++a) s += row[a] * phi[preimage(x, a)];
      out[x] = s;
    });
    return out;
  }
  // e^{-shift} L* rho, with rho an atomic measure on blocks.
  std::vector<double> apply_dual_scaled(std::span<const double> rho) const {
    std::vector<double> out(N_);
    parallel_for(N_, [&](std::size_t y) {
      const std::size_t a = y / stride_;
      const std::size_t base = (y % stride_) * n_;
      double s = 0.0;
      for (std::size_t c = 0; c < n_; ++c) {
        const std::size_t x = r_ == 1 ? c : base + c;
        s += rho[x] * kernel_[x * n_ + a];
      }
      out[y] = s;
    });
    return out;
  }
  std::vector<double> apply(std::span<const double> phi) const {
    auto out = apply_scaled(phi);
    const double f = std::exp(shift_);
    for (double& v : out) v *= f;
    return out;
  }
  std::vector<double> apply_dual(std::span<const double> rho) const {
    auto out = apply_dual_scaled(rho);
    const double f = std::exp(shift_);
    for (double& v : out) v *= f;
    return out;
  }

  Eigen::MatrixXd dense_scaled() const {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N_), static_cast<Eigen::Index>(N_));
    for (std::size_t x = 0; x < N_; ++x)
      for (std::size_t a = 0; a < n_; ++a)
        T(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(preimage(x, a))) += kernel_[x * n_ + a];
    return T;
  }

 private:
  std::size_t n_, k_, r_, N_ = 0, stride_ = 1;
  double shift_ = 0.0;
  std::vector<double> log_kernel_;
  std::vector<double> kernel_;
};

inline GridFunction apply_transfer(const PotentialTable& A, const AprioriMeasure& nu, const GridFunction& phi) {
  TransferOperator T(A, nu);
  if (phi.atoms != T.atoms() || phi.rank != T.rank()) throw ConfigError("grid function rank does not match the potential");
  return {T.atoms(), T.rank(), T.apply(phi.values)};
}

inline GridFunction apply_transfer(const Potential& A, const AprioriMeasure& nu, const GridFunction& phi) {
  return apply_transfer(A.tabulate(nu.space()), nu, phi);
}

enum class EigenMethod { power, contraction, log_domain };

inline const char* to_string(EigenMethod m) {
  switch (m) {
    case EigenMethod::power: return "power";
    case EigenMethod::contraction: return "contraction";
    case EigenMethod::log_domain: return "log_domain";
  }
  return "?";
}

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100000;

  static SolverOptions for_space(const StateSpace& space) {
    SolverOptions o;
    if (space.kind() == SpaceKind::CircleGrid) o.tol = 1e-8;
    return o;
  }
};

struct EigenPair {
  double lambda = 0.0;
  double log_lambda = 0.0;
  GridFunction psi;
  EigenMethod method = EigenMethod::power;
  std::size_t iterations = 0;
  double residual = 0.0;
};

struct EigenMeasure {
  std::vector<double> weights;
  double mass = 0.0;
};

struct PowerResult {
  EigenPair pair;
  EigenMeasure measure;
  double dual_residual = 0.0;
};

inline PowerResult eigenpair_power(const PotentialTable& A, const AprioriMeasure& nu, SolverOptions opts = {}) {
  if (!(opts.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  TransferOperator T(A, nu);
  const std::size_t N = T.size();
  std::vector<double> phi(N, 1.0), rho(N, 1.0 / static_cast<double>(N));
  double lam = 0.0, res = std::numeric_limits<double>::infinity();
  double dual_res = std::numeric_limits<double>::infinity();
  bool primal_done = false, dual_done = false;
  std::size_t it = 0;
  for (; it < opts.max_iter && !(primal_done && dual_done); ++it) {
    if (!primal_done) {
      auto Lphi = T.apply_scaled(phi);
      std::size_t arg = 0;
      for (std::size_t i = 1; i < N; ++i)
        if (phi[i] > phi[arg]) arg = i;
      lam = Lphi[arg] / phi[arg];
      if (!(lam > 0.0) || !std::isfinite(lam)) throw ConvergenceError("power iteration lost positivity", lam, it);
      res = 0.0;
      for (std::size_t i = 0; i < N; ++i) res = std::max(res, std::abs(Lphi[i] - lam * phi[i]));
      res /= lam;
      if (res <= opts.tol) {
        primal_done = true;
      } else {
        double mx = *std::max_element(Lphi.begin(), Lphi.end());
        for (std::size_t i = 0; i < N; ++i) phi[i] = Lphi[i] / mx;
      }
    }
    if (!dual_done) {
      auto Lrho = T.apply_dual_scaled(rho);
      double mass = 0.0;
      for (double v : Lrho) mass += v;
      double l1 = 0.0;
      for (std::size_t i = 0; i < N; ++i) l1 += std::abs(Lrho[i] / mass - rho[i]);
      dual_res = l1;
      for (std::size_t i = 0; i < N; ++i) rho[i] = Lrho[i] / mass;
      if (dual_res <= opts.tol) dual_done = true;
    }
  }
  if (!primal_done) throw ConvergenceError("power iteration did not reach tolerance", res, it);
  if (!dual_done) throw ConvergenceError("dual power iteration did not reach tolerance", dual_res, it);

  PowerResult out;
  out.pair.log_lambda = std::log(lam) + T.log_shift();
  out.pair.lambda = std::exp(out.pair.log_lambda);
  out.pair.psi = GridFunction(T.atoms(), T.rank(), std::move(phi));
  out.pair.method = EigenMethod::power;
  out.pair.iterations = it;
  out.pair.residual = res;
  double dot = 0.0;
  for (std::size_t i = 0; i < N; ++i) dot += rho[i] * out.pair.psi[i];
  double mass = 0.0;
  for (double& v : rho) {
    v /= dot;
    mass += v;
  }
  out.measure = {std::move(rho), mass};
  out.dual_residual = dual_res;
  return out;
}

inline PowerResult eigenpair_power(const Potential& A, const AprioriMeasure& nu, SolverOptions opts = {}) {
  return eigenpair_power(A.tabulate(nu.space()), nu, opts);
}

inline std::vector<double> default_s_schedule() {
  std::vector<double> s;
  for (int m = 1; m <= 12; ++m) s.push_back(1.0 - std::ldexp(1.0, -m));
  return s;
}

struct ContractionStep {
  double s = 0.0;
  double log_lambda = 0.0;  // (1-s) max u_s
  double max_u = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
};

struct ContractionResult {
  EigenPair pair;  // extrapolated to s = 1
  double log_lambda_final_s = 0.0;
  GridFunction psi_final_s;
  std::vector<ContractionStep> steps;
  std::size_t extrapolation_points = 0;
};

namespace detail {

// T_s(u)(x) = log sum_a exp(lw(x,a) + s u(a x)); also fills the softmax weights when P is given.
inline void contraction_map(const TransferOperator& T, double s, std::span<const double> u, std::vector<double>& out,
                            Eigen::MatrixXd* P) {
  const std::size_t N = T.size(), n = T.atoms();
  out.assign(N, 0.0);
  if (P) P->setZero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  std::vector<double> e(n);
  for (std::size_t x = 0; x < N; ++x) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      e[a] = T.log_kernel(x, a) + s * u[T.preimage(x, a)];
      mx = std::max(mx, e[a]);
    }
    double z = 0.0;
    for (std::size_t a = 0; a < n; ++a) z += std::exp(e[a] - mx);
    out[x] = mx + std::log(z);
    if (P)
      for (std::size_t a = 0; a < n; ++a)
        (*P)(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(T.preimage(x, a))) += std::exp(e[a] - mx) / z;
  }
}

// Neville extrapolation of samples f(h_i) to h = 0.
inline double extrapolate_to_zero(std::span<const double> h, std::span<const double> f) {
  std::vector<double> p(f.begin(), f.end());
  const auto m = static_cast<std::ptrdiff_t>(p.size());
  for (std::ptrdiff_t lvl = 1; lvl < m; ++lvl)
    for (std::ptrdiff_t i = m - 1; i >= lvl; --i)
      p[i] = (h[i - lvl] * p[i] - h[i] * p[i - 1]) / (h[i - lvl] - h[i]);
  return p[m - 1];
}

}  // namespace detail

inline ContractionResult eigenpair_contraction(const PotentialTable& A, const AprioriMeasure& nu,
                                               std::vector<double> schedule = default_s_schedule(), double tol = 1e-12,
                                               std::size_t max_iter = 100000) {
  if (schedule.empty()) throw ConfigError("empty s schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0 && schedule[i] < 1.0)) throw ConfigError("s values must lie in (0,1)");
    if (i > 0 && schedule[i] <= schedule[i - 1]) throw ConfigError("s schedule must be strictly increasing");
  }
  if (schedule.back() < 1.0 - 1e-3) throw ConfigError("final s must be at least 1 - 1e-3");

  TransferOperator T(A, nu);
  const std::size_t N = T.size();
  const bool newton = N <= 2048;
  std::vector<double> u(N, 0.0), Tu;
  ContractionResult out;
  std::vector<std::vector<double>> vs;
  Eigen::MatrixXd P;
  double prev_s = 0.0;
  for (double s : schedule) {
    if (prev_s > 0.0) {
      double mu = *std::max_element(u.begin(), u.end());
      double ell = (1.0 - prev_s) * mu;
      for (double& x : u) x = x - mu + ell / (1.0 - s);
    }
    std::size_t it = 0;
    double res = std::numeric_limits<double>::infinity();
    for (; it < max_iter; ++it) {
      double scale = 1.0;
      for (double x : u) scale = std::max(scale, 1.0 + std::abs(x));
      detail::contraction_map(T, s, u, Tu, newton ? &P : nullptr);
      res = 0.0;
      for (std::size_t i = 0; i < N; ++i) res = std::max(res, std::abs(Tu[i] - u[i]));
      if (res <= tol * scale) break;
      if (newton) {
        Eigen::VectorXd F(static_cast<Eigen::Index>(N));
        for (std::size_t i = 0; i < N; ++i) F(static_cast<Eigen::Index>(i)) = Tu[i] - u[i];
        Eigen::MatrixXd J = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N)) - s * P;
        Eigen::VectorXd d = J.partialPivLu().solve(F);
        std::vector<double> trial(N);
        for (std::size_t i = 0; i < N; ++i) trial[i] = u[i] + d(static_cast<Eigen::Index>(i));
        std::vector<double> Tt;
        detail::contraction_map(T, s, trial, Tt, nullptr);
        double tres = 0.0;
        for (std::size_t i = 0; i < N; ++i) tres = std::max(tres, std::abs(Tt[i] - trial[i]));
        if (std::isfinite(tres) && tres < res) {
          u = std::move(trial);
          continue;
        }
      }
      u = Tu;
    }
    if (res > tol * (1.0 + std::abs(*std::max_element(u.begin(), u.end()))))
      throw ConvergenceError("contraction iteration did not converge at s=" + std::to_string(s), res, it);
    ContractionStep step;
    step.s = s;
    step.max_u = *std::max_element(u.begin(), u.end());
    step.log_lambda = (1.0 - s) * step.max_u;
    step.iterations = it;
    step.residual = res;
    out.steps.push_back(step);
    std::vector<double> v(N);
    for (std::size_t i = 0; i < N; ++i) v[i] = u[i] - step.max_u;
    vs.push_back(std::move(v));
    prev_s = s;
  }

  const std::size_t m = std::min<std::size_t>(5, out.steps.size());
  std::vector<double> h, f;
  for (std::size_t i = out.steps.size() - m; i < out.steps.size(); ++i) {
    h.push_back(1.0 - out.steps[i].s);
    f.push_back(out.steps[i].log_lambda);
  }
  const double log_lam = detail::extrapolate_to_zero(h, f);
  std::vector<double> logpsi(N);
  for (std::size_t x = 0; x < N; ++x) {
    std::vector<double> fx;
    for (std::size_t i = out.steps.size() - m; i < out.steps.size(); ++i) fx.push_back(vs[i][x]);
    logpsi[x] = detail::extrapolate_to_zero(h, fx);
  }
  const double mx = *std::max_element(logpsi.begin(), logpsi.end());
  std::vector<double> psi(N);
  for (std::size_t x = 0; x < N; ++x) psi[x] = std::exp(logpsi[x] - mx);

  std::vector<double> psi_s(N);
  for (std::size_t x = 0; x < N; ++x) psi_s[x] = std::exp(vs.back()[x]);
  out.log_lambda_final_s = out.steps.back().log_lambda;
  out.psi_final_s = GridFunction(T.atoms(), T.rank(), std::move(psi_s));
  out.extrapolation_points = m;

  out.pair.log_lambda = log_lam;
  out.pair.lambda = std::exp(log_lam);
  out.pair.method = EigenMethod::contraction;
  std::size_t iters = 0;
  for (const auto& st : out.steps) iters += st.iterations;
  out.pair.iterations = iters;
  auto Lpsi = T.apply(psi);
  double r = 0.0;
  for (std::size_t x = 0; x < N; ++x) r = std::max(r, std::abs(Lpsi[x] - out.pair.lambda * psi[x]));
  out.pair.residual = r / out.pair.lambda;
  out.pair.psi = GridFunction(T.atoms(), T.rank(), std::move(psi));
  return out;
}

inline ContractionResult eigenpair_contraction(const Potential& A, const AprioriMeasure& nu,
                                               std::vector<double> schedule = default_s_schedule(), double tol = 1e-12) {
  return eigenpair_contraction(A.tabulate(nu.space()), nu, std::move(schedule), tol);
}

// Principal eigendata kept in logarithms; safe for large potentials.
struct LogEigenPair {
  double log_lambda = 0.0;
  std::vector<double> log_psi;  // max 0
  std::size_t atoms = 0;
  std::size_t rank = 1;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::size_t levels = 0;
};

namespace detail {

inline LogEigenPair log_domain_gauged(const PotentialTable& A, const AprioriMeasure& nu, std::span<const double> gauge,
                                      double tol, std::size_t max_iter) {
  TransferOperator T(A, nu);
  const std::size_t N = T.size(), n = T.atoms();
  const auto Ni = static_cast<Eigen::Index>(N);
  double c = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < N; ++x)
    for (std::size_t a = 0; a < n; ++a) c = std::max(c, T.log_kernel(x, a) + gauge[T.preimage(x, a)] - gauge[x]);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(Ni, Ni);
  for (std::size_t x = 0; x < N; ++x)
    for (std::size_t a = 0; a < n; ++a)
      M(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(T.preimage(x, a))) +=
          std::exp(T.log_kernel(x, a) + gauge[T.preimage(x, a)] - gauge[x] - c);

  Eigen::VectorXd v = Eigen::VectorXd::Ones(Ni);
  double lam = 0.0, res = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  auto measure = [&](const Eigen::VectorXd& w) {
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < Ni; ++i)
      if (v(i) > v(arg)) arg = i;
    lam = w(arg) / v(arg);
    res = (w - lam * v).cwiseAbs().maxCoeff() / lam;
  };
  for (; it < max_iter; ++it) {
    Eigen::VectorXd w = M * v;
    measure(w);
    if (res <= tol) break;
    double up = 0.0;
    for (Eigen::Index i = 0; i < Ni; ++i)
      if (v(i) > 0.0) up = std::max(up, w(i) / v(i));
    const double shift = up * (1.0 + 1e-10);
    Eigen::MatrixXd S = shift * Eigen::MatrixXd::Identity(Ni, Ni) - M;
    Eigen::VectorXd z = S.partialPivLu().solve(v);
    z = z.cwiseAbs();
    // one positive step keeps every component resolved
    z = M * z;
    const double mz = z.maxCoeff();
    if (!(mz > 0.0) || !std::isfinite(mz)) throw ConvergenceError("log-domain inverse iteration broke down", res, it);
    v = z / mz;
  }
  if (res > tol) throw ConvergenceError("log-domain solver did not reach tolerance", res, it);
  LogEigenPair out;
  out.atoms = T.atoms();
  out.rank = T.rank();
  out.log_lambda = std::log(lam) + c;
  out.log_psi.resize(N);
  for (std::size_t x = 0; x < N; ++x) out.log_psi[x] = std::log(v(static_cast<Eigen::Index>(x))) + gauge[x];
  const double mx = *std::max_element(out.log_psi.begin(), out.log_psi.end());
  for (double& l : out.log_psi) l -= mx;
  out.iterations = it;
  out.residual = res;
  return out;
}

}  // namespace detail

// Inverse iteration in a gauge e^{G}; the gauge for A comes from the solve at A/2,
// so the gauged eigenvector stays O(1) even when e^{A} spans hundreds of decades.
inline LogEigenPair eigenpair_log_domain(const PotentialTable& A, const AprioriMeasure& nu, double tol = 1e-12,
                                         std::size_t max_iter = 200, std::size_t max_levels = 64) {
  const double osc = A.max() - A.min();
  const std::size_t N = checked_power(A.atoms, block_rank(A.range), kDefaultGridCap, "transfer grid");
  if (N > 4096) throw CapacityError("log-domain solver uses dense factorizations", N, 4096);
  std::vector<double> gauge(N, 0.0);
  std::size_t levels = 0;
  if (osc > 16.0 && max_levels > 0) {
    LogEigenPair half = eigenpair_log_domain(A.scaled(0.5), nu, tol, max_iter, max_levels - 1);
    for (std::size_t x = 0; x < N; ++x) gauge[x] = 2.0 * half.log_psi[x];
    levels = half.levels + 1;
  }
  LogEigenPair out = detail::log_domain_gauged(A, nu, gauge, tol, max_iter);
  auto spread = [&] {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t x = 0; x < N; ++x) {
      lo = std::min(lo, out.log_psi[x] - gauge[x]);
      hi = std::max(hi, out.log_psi[x] - gauge[x]);
    }
    return hi - lo;
  };
  for (int pass = 0; pass < 2 && spread() > 300.0; ++pass) {
    gauge = out.log_psi;
    out = detail::log_domain_gauged(A, nu, gauge, tol, max_iter);
  }
  out.levels = levels;
  return out;
}

struct NormalizedPotential {
  PotentialTable base;
  PotentialTable values;
  double lambda = 1.0;
  double log_lambda = 0.0;
  GridFunction psi;
};

// Abar = A + log psi - log psi o sigma - log lambda
inline NormalizedPotential normalize_log(const PotentialTable& A, double log_lambda, std::span<const double> log_psi) {
  const std::size_t n = A.atoms, k = A.range;
  const std::size_t r = block_rank(k);
  const std::size_t N = checked_power(n, r, kDefaultGridCap, "grid");
  if (log_psi.size() != N) throw ConfigError("eigenfunction does not match the potential");
  for (double l : log_psi)
    if (!std::isfinite(l)) throw ConfigError("eigenfunction must be strictly positive");
  NormalizedPotential out;
  out.base = A;
  out.log_lambda = log_lambda;
  out.lambda = std::exp(log_lambda);
  std::vector<double> psi(N);
  for (std::size_t i = 0; i < N; ++i) psi[i] = std::exp(log_psi[i]);
  out.psi = GridFunction(n, r, std::move(psi));
  std::vector<double> v(A.size());
  if (k == 1) {
    for (std::size_t a = 0; a < n; ++a) v[a] = A[a] + log_psi[a] - log_psi[0] - log_lambda;
  } else {
    // k-tuple index t = head * n + last; head = (x_1..x_{k-1}), tail = (x_2..x_k)
    for (std::size_t t = 0; t < A.size(); ++t) {
      const std::size_t head = t / n, tail = t % N;
      v[t] = A[t] + log_psi[head] - log_psi[tail] - log_lambda;
    }
  }
  out.values = PotentialTable(n, k, std::move(v));
  return out;
}

inline NormalizedPotential normalize_potential(const PotentialTable& A, const EigenPair& eig) {
  std::vector<double> lp(eig.psi.size());
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (!(eig.psi[i] > 0.0)) throw ConfigError("eigenfunction must be strictly positive");
    lp[i] = std::log(eig.psi[i]);
  }
  auto out = normalize_log(A, eig.log_lambda, lp);
  out.psi = eig.psi;
  return out;
}

struct GapEstimate {
  double value = 0.0;
  bool indistinguishable = false;
  std::size_t iterations = 0;
};

// Second-largest modulus of L_Abar on functions with zero mu-mean.
inline GapEstimate spectral_gap_estimate(const NormalizedPotential& B, const AprioriMeasure& nu, std::size_t max_iter = 20000,
                                         double rel_tol = 1e-9) {
  TransferOperator T(B.values, nu);
  const std::size_t N = T.size();
  const double f = std::exp(T.log_shift());
  std::vector<double> mu(N, 1.0 / static_cast<double>(N));
  for (std::size_t it = 0; it < max_iter; ++it) {
    auto nxt = T.apply_dual_scaled(mu);
    double s = 0.0;
    for (double v : nxt) s += v;
    double d = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      nxt[i] /= s;
      d += std::abs(nxt[i] - mu[i]);
    }
    mu = std::move(nxt);
    if (d < 1e-15) break;
  }
  auto center = [&](std::vector<double>& w) {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) m += mu[i] * w[i];
    for (double& x : w) x -= m;
  };
  auto norm = [](const std::vector<double>& w) {
    double m = 0.0;
    for (double x : w) m = std::max(m, std::abs(x));
    return m;
  };
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> w(N);
  for (double& x : w) x = U(rng);
  center(w);
  GapEstimate g;
  if (norm(w) == 0.0) return g;
  const std::size_t window = 8;
  std::vector<double> logs;
  double log_scale = 0.0, prev = -1.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    auto nw = T.apply_scaled(w);
    for (double& x : nw) x *= f;
    center(nw);
    const double nn = norm(nw);
    g.iterations = it + 1;
    if (!(nn > 1e-300)) {
      g.value = 0.0;
      return g;
    }
    log_scale += std::log(nn);
    logs.push_back(log_scale);
    for (std::size_t i = 0; i < N; ++i) w[i] = nw[i] / nn;
    if (logs.size() > 2 * window) {
      const std::size_t m = logs.size();
      const double est = std::exp((logs[m - 1] - logs[m - 1 - window]) / static_cast<double>(window));
      if (prev > 0.0 && std::abs(est - prev) <= rel_tol * std::max(est, 1e-300)) {
        g.value = est;
        break;
      }
      prev = est;
      g.value = est;
    }
    if (log_scale < -700.0) {
      g.value = std::exp(log_scale / static_cast<double>(logs.size()));
      if (g.value < 1e-12) g.value = 0.0;
      break;
    }
  }
  g.indistinguishable = g.value >= 1.0 - 1e-9;
  return g;
}

}  // namespace ruelle
