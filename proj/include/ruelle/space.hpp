#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ruelle/error.hpp"

namespace ruelle {

using Tuple = std::vector<std::size_t>;

enum class SpaceKind { FiniteAlphabet, CircleGrid, IntervalGrid, TruncatedCountable };

inline const char* to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::FiniteAlphabet: return "finite";
    case SpaceKind::CircleGrid: return "circle";
    case SpaceKind::IntervalGrid: return "interval";
    case SpaceKind::TruncatedCountable: return "countable";
  }
  return "?";
}

class StateSpace {
 public:
  StateSpace(SpaceKind kind, std::vector<double> atoms) : kind_(kind), atoms_(std::move(atoms)) { validate(); }

  // Labels 1..d with the discrete metric.
  static StateSpace finite_alphabet(std::size_t d) {
    std::vector<double> a(d);
    std::iota(a.begin(), a.end(), 1.0);
    return {SpaceKind::FiniteAlphabet, std::move(a)};
  }
  static StateSpace circle_grid(std::size_t n) {
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    return {SpaceKind::CircleGrid, std::move(a)};
  }
  // Left endpoints i/n, so the point 0 is itself an atom.
  static StateSpace interval_grid(std::size_t n) {
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = static_cast<double>(i) / static_cast<double>(n);
    return {SpaceKind::IntervalGrid, std::move(a)};
  }
  // z_i = 1 - 2^{-(i-1)}, accumulating at 1.
  static StateSpace truncated_countable(std::size_t n) {
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = 1.0 - std::ldexp(1.0, -static_cast<int>(i));
    return {SpaceKind::TruncatedCountable, std::move(a)};
  }

  SpaceKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  double atom(std::size_t i) const { return atoms_.at(i); }
  const std::vector<double>& atoms() const noexcept { return atoms_; }
  bool discrete() const noexcept { return kind_ == SpaceKind::FiniteAlphabet || kind_ == SpaceKind::TruncatedCountable; }
  double accumulation_point() const noexcept { return kind_ == SpaceKind::TruncatedCountable ? 1.0 : std::nan(""); }

  double point_distance(double a, double b) const {
    switch (kind_) {
      case SpaceKind::FiniteAlphabet: return a == b ? 0.0 : 1.0;
      case SpaceKind::CircleGrid: {
        double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
        return std::min(d, 2.0 * std::numbers::pi - d);
      }
      default: return std::abs(a - b);
    }
  }
  double distance(std::size_t i, std::size_t j) const { return point_distance(atoms_.at(i), atoms_.at(j)); }

  double diameter() const {
    switch (kind_) {
      case SpaceKind::FiniteAlphabet: return atoms_.size() > 1 ? 1.0 : 0.0;
      case SpaceKind::CircleGrid: return std::numbers::pi;
      default: return 1.0;
    }
  }

  bool operator==(const StateSpace&) const = default;

 private:
  void validate() const {
    if (atoms_.empty()) throw ConfigError("state space needs at least one atom");
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      for (std::size_t j = i + 1; j < atoms_.size(); ++j)
        if (atoms_[i] == atoms_[j]) throw ConfigError("state space atoms must be pairwise distinct");
    if (kind_ == SpaceKind::TruncatedCountable) {
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (atoms_[i] < 0.0 || atoms_[i] >= 1.0) throw ConfigError("countable atoms must lie in [0,1)");
        if (i > 0 && atoms_[i] <= atoms_[i - 1]) throw ConfigError("countable atoms must be strictly increasing");
      }
    }
  }

  SpaceKind kind_;
  std::vector<double> atoms_;
};

class AprioriMeasure {
 public:
  AprioriMeasure(StateSpace space, std::vector<double> weights, bool renormalize = false)
      : space_(std::move(space)), weights_(std::move(weights)) {
    if (weights_.size() != space_.size()) throw ConfigError("one weight per atom required");
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("a-priori weights must be positive and finite");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9 && !renormalize)
      throw ConfigError("a-priori weights sum to " + std::to_string(sum) + "; enable renormalize to accept");
    for (double& w : weights_) w /= sum;
    log_weights_.resize(weights_.size());
    for (std::size_t i = 0; i < weights_.size(); ++i) log_weights_[i] = std::log(weights_[i]);
  }

  const StateSpace& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double weight(std::size_t i) const { return weights_.at(i); }
  double log_weight(std::size_t i) const { return log_weights_.at(i); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  bool uniform() const {
    for (double w : weights_)
      if (std::abs(w - weights_[0]) > 1e-15) return false;
    return true;
  }

 private:
  StateSpace space_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
};

namespace measure_spec {
struct Uniform { std::size_t d; };
struct Explicit { std::vector<double> weights; bool renormalize = false; };
struct CircleQuadrature { std::size_t n; };
struct IntervalQuadrature { std::size_t n; };
struct Geometric { double q; std::size_t n; };
}  // namespace measure_spec

using MeasureSpec = std::variant<measure_spec::Uniform, measure_spec::Explicit, measure_spec::CircleQuadrature,
                                 measure_spec::IntervalQuadrature, measure_spec::Geometric>;

inline AprioriMeasure build_apriori(const MeasureSpec& spec) {
  struct Visitor {
    AprioriMeasure operator()(const measure_spec::Uniform& s) const {
      if (s.d == 0) throw ConfigError("uniform measure needs d >= 1");
      return {StateSpace::finite_alphabet(s.d), std::vector<double>(s.d, 1.0 / static_cast<double>(s.d))};
    }
    AprioriMeasure operator()(const measure_spec::Explicit& s) const {
      return {StateSpace::finite_alphabet(s.weights.size()), s.weights, s.renormalize};
    }
    AprioriMeasure operator()(const measure_spec::CircleQuadrature& s) const {
      if (s.n == 0) throw ConfigError("circle quadrature needs N >= 1");
      return {StateSpace::circle_grid(s.n), std::vector<double>(s.n, 1.0 / static_cast<double>(s.n))};
    }
    AprioriMeasure operator()(const measure_spec::IntervalQuadrature& s) const {
      if (s.n == 0) throw ConfigError("interval quadrature needs N >= 1");
      return {StateSpace::interval_grid(s.n), std::vector<double>(s.n, 1.0 / static_cast<double>(s.n))};
    }
    AprioriMeasure operator()(const measure_spec::Geometric& s) const {
      if (!(s.q > 0.0 && s.q < 1.0) || s.n == 0) throw ConfigError("geometric measure needs 0 < q < 1 and N >= 1");
      std::vector<double> w(s.n);
      for (std::size_t i = 0; i < s.n; ++i) w[i] = std::pow(s.q, static_cast<double>(i + 1));
      return {StateSpace::truncated_countable(s.n), std::move(w), true};
    }
  };
  return std::visit(Visitor{}, spec);
}

inline constexpr std::size_t kDefaultGridCap = 1'000'000;

inline std::size_t checked_power(std::size_t base, std::size_t exp, std::size_t cap, const std::string& what) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && n > cap / base) throw CapacityError(what + " exceeds cap", n * base, cap);
    n *= base;
  }
  if (n > cap) throw CapacityError(what + " exceeds cap", n, cap);
  return n;
}

// Lexicographic enumeration of rank-tuples, first coordinate most significant.
class ConfigurationGrid {
 public:
  ConfigurationGrid(std::size_t atoms, std::size_t rank, std::size_t cap = kDefaultGridCap)
      : atoms_(atoms), rank_(rank) {
    if (rank == 0) throw ConfigError("grid rank must be >= 1");
    if (atoms == 0) throw ConfigError("grid needs at least one atom");
    size_ = checked_power(atoms, rank, cap, "configuration grid of rank " + std::to_string(rank));
  }

  std::size_t atoms() const noexcept { return atoms_; }
  std::size_t rank() const noexcept { return rank_; }
  std::size_t size() const noexcept { return size_; }

  std::size_t index(std::span<const std::size_t> t) const {
    if (t.size() != rank_) throw ConfigError("tuple length does not match grid rank");
    std::size_t idx = 0;
    for (std::size_t a : t) {
      if (a >= atoms_) throw ConfigError("atom index out of range");
      idx = idx * atoms_ + a;
    }
    return idx;
  }
  Tuple tuple(std::size_t idx) const {
    if (idx >= size_) throw ConfigError("grid index out of range");
    Tuple t(rank_);
    for (std::size_t i = rank_; i-- > 0;) {
      t[i] = idx % atoms_;
      idx /= atoms_;
    }
    return t;
  }

 private:
  std::size_t atoms_;
  std::size_t rank_;
  std::size_t size_;
};

inline ConfigurationGrid enumerate_grid(const StateSpace& space, std::size_t rank, std::size_t cap = kDefaultGridCap) {
  return {space.size(), rank, cap};
}

inline double truncated_metric(const StateSpace& space, std::span<const std::size_t> x, std::span<const std::size_t> y,
                               std::size_t depth) {
  if (depth > x.size() || depth > y.size()) throw ConfigError("metric depth exceeds tuple length");
  double d = 0.0;
  for (std::size_t n = 0; n < depth; ++n) d += std::ldexp(space.distance(x[n], y[n]), -static_cast<int>(n + 1));
  return d;
}

inline double truncated_metric(const StateSpace& space, std::span<const double> x, std::span<const double> y,
                               std::size_t depth) {
  if (depth > x.size() || depth > y.size()) throw ConfigError("metric depth exceeds tuple length");
  double d = 0.0;
  for (std::size_t n = 0; n < depth; ++n) d += std::ldexp(space.point_distance(x[n], y[n]), -static_cast<int>(n + 1));
  return d;
}

}  // namespace ruelle
