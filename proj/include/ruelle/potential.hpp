#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ruelle/space.hpp"

namespace ruelle {

// Dense values over all k-tuples of atom indices, lexicographic order.
struct PotentialTable {
  std::size_t atoms = 0;
  std::size_t range = 1;
  std::vector<double> values;

  PotentialTable() = default;
  PotentialTable(std::size_t n, std::size_t k, std::vector<double> v) : atoms(n), range(k), values(std::move(v)) {
    if (k == 0) throw ConfigError("potential range must be >= 1");
    if (values.size() != checked_power(n, k, kDefaultGridCap, "potential table")) throw ConfigError("table size must be atoms^range");
    for (double x : values)
      if (!std::isfinite(x)) throw ConfigError("potential table values must be finite");
  }
  static PotentialTable constant(std::size_t n, std::size_t k, double c) {
    return {n, k, std::vector<double>(checked_power(n, k, kDefaultGridCap, "potential table"), c)};
  }

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double operator()(std::span<const std::size_t> t) const { return values[ConfigurationGrid(atoms, range).index(t)]; }
  double sup_norm() const {
    double m = 0.0;
    for (double x : values) m = std::max(m, std::abs(x));
    return m;
  }
  double max() const { return *std::max_element(values.begin(), values.end()); }
  double min() const { return *std::min_element(values.begin(), values.end()); }

  // Same function viewed as depending on k+extra coordinates.
  PotentialTable lifted(std::size_t new_range) const {
    if (new_range < range) throw ConfigError("cannot lift a potential to a smaller range");
    std::size_t stride = checked_power(atoms, new_range - range, kDefaultGridCap, "lifted table");
    std::vector<double> v(values.size() * stride);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = values[i / stride];
    return {atoms, new_range, std::move(v)};
  }
  // A(x_k..x_1).
  PotentialTable reversed() const {
    ConfigurationGrid g(atoms, range);
    std::vector<double> v(values.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      Tuple t = g.tuple(i);
      std::reverse(t.begin(), t.end());
      v[i] = values[g.index(t)];
    }
    return {atoms, range, std::move(v)};
  }
  PotentialTable scaled(double beta) const {
    PotentialTable r = *this;
    for (double& x : r.values) x *= beta;
    return r;
  }
};

class Potential {
 public:
  struct Constant { double value; std::size_t range; };
  struct Table { PotentialTable table; };
  struct XY { double alpha; double gamma; };
  struct ExpInterval { double c; };
  struct NegDistanceToZero { std::size_t range; };
  struct Scaled { double beta; std::shared_ptr<const Potential> base; };
  using Kind = std::variant<Constant, Table, XY, ExpInterval, NegDistanceToZero, Scaled>;

  static Potential constant(double c, std::size_t range = 1) {
    if (range == 0) throw ConfigError("potential range must be >= 1");
    return Potential(Constant{c, range});
  }
  static Potential table(PotentialTable t) { return Potential(Table{std::move(t)}); }
  static Potential xy(double alpha, double gamma) { return Potential(XY{alpha, gamma}); }
  static Potential exp_interval(double c) {
    if (!(c > 0.0)) throw ConfigError("ExpInterval needs c > 0");
    return Potential(ExpInterval{c});
  }
  static Potential neg_distance_to_zero(std::size_t range) {
    if (range == 0) throw ConfigError("potential range must be >= 1");
    return Potential(NegDistanceToZero{range});
  }
  static Potential scaled(double beta, Potential base) {
    return Potential(Scaled{beta, std::make_shared<const Potential>(std::move(base))});
  }

  const Kind& kind() const noexcept { return kind_; }

  std::size_t range() const {
    return std::visit(
        [](const auto& p) -> std::size_t {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Constant>) return p.range;
          else if constexpr (std::is_same_v<T, Table>) return p.table.range;
          else if constexpr (std::is_same_v<T, XY>) return 2;
          else if constexpr (std::is_same_v<T, ExpInterval>) return 1;
          else if constexpr (std::is_same_v<T, NegDistanceToZero>) return p.range;
          else return p.base->range();
        },
        kind_);
  }

  std::string name() const {
    return std::visit(
        [](const auto& p) -> std::string {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Constant>) return "constant";
          else if constexpr (std::is_same_v<T, Table>) return "table";
          else if constexpr (std::is_same_v<T, XY>) return "xy";
          else if constexpr (std::is_same_v<T, ExpInterval>) return "exp_interval";
          else if constexpr (std::is_same_v<T, NegDistanceToZero>) return "neg_distance";
          else return "scaled(" + p.base->name() + ")";
        },
        kind_);
  }

  // Evaluation on real coordinates; tables have no coordinate form.
  std::optional<double> eval_coords(const StateSpace& space, std::span<const double> x) const {
    if (x.size() != range()) throw ConfigError("potential arity mismatch");
    return std::visit(
        [&](const auto& p) -> std::optional<double> {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Constant>) return p.value;
          else if constexpr (std::is_same_v<T, Table>) return std::nullopt;
          else if constexpr (std::is_same_v<T, XY>) return std::cos(x[1] - x[0] - p.alpha) + p.gamma * std::cos(2.0 * x[0]);
          else if constexpr (std::is_same_v<T, ExpInterval>)
            return std::log(p.c / (1.0 - std::exp(-p.c))) - p.c * x[0];
          else if constexpr (std::is_same_v<T, NegDistanceToZero>) {
            double s = 0.0;
            for (std::size_t i = 0; i < p.range; ++i)
              s += std::ldexp(space.point_distance(x[i], space.atom(0)), -static_cast<int>(i + 1));
            return -s;
          } else {
            auto v = p.base->eval_coords(space, x);
            if (!v) return std::nullopt;
            return p.beta * *v;
          }
        },
        kind_);
  }

  double eval(const StateSpace& space, std::span<const std::size_t> tuple) const {
    if (tuple.size() != range()) throw ConfigError("potential arity mismatch: expected " + std::to_string(range()) + " atoms");
    if (auto* t = std::get_if<Table>(&kind_)) {
      if (t->table.atoms != space.size()) throw ConfigError("table atom count does not match the state space");
      return t->table(tuple);
    }
    if (auto* s = std::get_if<Scaled>(&kind_)) return s->beta * s->base->eval(space, tuple);
    std::vector<double> x(tuple.size());
    for (std::size_t i = 0; i < tuple.size(); ++i) x[i] = space.atom(tuple[i]);
    return *eval_coords(space, x);
  }

  // D_j A at real coordinates (j is 1-based); zero for j beyond the range.
  std::optional<double> derivative(std::span<const double> x, std::size_t j) const {
    if (j == 0) throw ConfigError("coordinate index is 1-based");
    if (j > range()) return 0.0;
    return std::visit(
        [&](const auto& p) -> std::optional<double> {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Constant>) return 0.0;
          else if constexpr (std::is_same_v<T, XY>) {
            double s = std::sin(x[1] - x[0] - p.alpha);
            return j == 1 ? s - 2.0 * p.gamma * std::sin(2.0 * x[0]) : -s;
          } else if constexpr (std::is_same_v<T, ExpInterval>) return -p.c;
          else if constexpr (std::is_same_v<T, Scaled>) {
            auto d = p.base->derivative(x, j);
            if (!d) return std::nullopt;
            return p.beta * *d;
          } else return std::nullopt;
        },
        kind_);
  }
  bool differentiable() const {
    std::vector<double> x(range(), 0.0);
    return derivative(x, 1).has_value();
  }

  PotentialTable tabulate(const StateSpace& space) const {
    ConfigurationGrid g(space.size(), range());
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = eval(space, g.tuple(i));
    return {space.size(), range(), std::move(v)};
  }

  // Sup-norm distance to the untruncated potential this one approximates.
  double truncation_bound(const StateSpace& space) const {
    if (auto* p = std::get_if<NegDistanceToZero>(&kind_))
      return std::ldexp(space.diameter(), -static_cast<int>(p->range));
    if (auto* s = std::get_if<Scaled>(&kind_)) return std::abs(s->beta) * s->base->truncation_bound(space);
    return 0.0;
  }

 private:
  explicit Potential(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

inline double eval_potential(const Potential& A, const StateSpace& space, std::span<const std::size_t> tuple) {
  return A.eval(space, tuple);
}

inline double birkhoff_sum(const Potential& A, const StateSpace& space, std::span<const std::size_t> word, std::size_t n) {
  const std::size_t k = A.range();
  if (word.size() < n + k - 1) throw ConfigError("word too short for the requested Birkhoff sum");
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += A.eval(space, word.subspan(j, k));
  return s;
}

inline double birkhoff_sum(const PotentialTable& A, std::span<const std::size_t> word, std::size_t n) {
  if (word.size() < n + A.range - 1) throw ConfigError("word too short for the requested Birkhoff sum");
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += A(word.subspan(j, A.range));
  return s;
}

// max_x |sum_a w_a e^{B(ax)} - 1|
inline double normalization_residual(const PotentialTable& B, const AprioriMeasure& nu) {
  if (B.atoms != nu.size()) throw ConfigError("table atom count does not match the a-priori measure");
  const std::size_t n = B.atoms;
  const std::size_t tail = B.size() / n;
  double worst = 0.0;
  for (std::size_t x = 0; x < tail; ++x) {
    double s = 0.0;
    for (std::size_t a = 0; a < n; ++a) s += nu.weight(a) * std::exp(B[a * tail + x]);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

inline double normalization_residual(const Potential& B, const AprioriMeasure& nu) {
  return normalization_residual(B.tabulate(nu.space()), nu);
}

// Hölder quotient sup over pairs of a function of the first `rank` coordinates.
inline double holder_constant_of(std::span<const double> f, const StateSpace& space, std::size_t rank, double alpha,
                                 std::size_t max_pairs = 4'000'000, std::uint64_t seed = 7) {
  ConfigurationGrid g(space.size(), rank);
  if (f.size() != g.size()) throw ConfigError("function size does not match grid");
  const std::size_t N = g.size();
  double best = 0.0;
  auto consider = [&](std::size_t i, std::size_t j) {
    if (i == j) return;
    Tuple x = g.tuple(i), y = g.tuple(j);
    double d = truncated_metric(space, x, y, rank);
    if (d <= 0.0) return;
    best = std::max(best, std::abs(f[i] - f[j]) / std::pow(d, alpha));
  };
  if (N * (N - 1) / 2 <= max_pairs) {
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j) consider(i, j);
    return best;
  }
  // Large grids: all single-coordinate neighbours plus random pairs.
  for (std::size_t i = 0; i < N; ++i) {
    Tuple x = g.tuple(i);
    for (std::size_t c = 0; c < rank; ++c) {
      Tuple y = x;
      y[c] = (x[c] + 1) % space.size();
      consider(i, g.index(y));
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, N - 1);
  for (std::size_t s = 0; s < max_pairs / 2; ++s) consider(pick(rng), pick(rng));
  return best;
}

inline double holder_constant_estimate(const PotentialTable& A, const StateSpace& space, const ConfigurationGrid& grid,
                                       double alpha = 1.0) {
  if (grid.rank() < A.range) throw ConfigError("grid rank must be at least the potential range");
  return holder_constant_of(A.lifted(grid.rank()).values, space, grid.rank(), alpha);
}

inline double holder_constant_estimate(const Potential& A, const StateSpace& space, const ConfigurationGrid& grid,
                                       double alpha = 1.0) {
  return holder_constant_estimate(A.tabulate(space), space, grid, alpha);
}

// CSV with header `i1,...,ik,value`; every tuple must appear exactly once.
inline PotentialTable load_table_csv(std::istream& in, std::size_t atoms) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty potential table");
  std::size_t cols = std::count(line.begin(), line.end(), ',') + 1;
  if (cols < 2) throw ConfigError("potential table needs index columns and a value column");
  const std::size_t k = cols - 1;
  ConfigurationGrid g(atoms, k);
  std::vector<double> v(g.size(), 0.0);
  std::vector<char> seen(g.size(), 0);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Tuple t;
    double value = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!std::getline(ss, cell, ',')) throw ConfigError("short row in potential table");
      if (c < k) t.push_back(static_cast<std::size_t>(std::stoul(cell)));
      else value = std::stod(cell);
    }
    std::size_t idx = g.index(t);
    if (seen[idx]) throw ConfigError("duplicate tuple in potential table");
    seen[idx] = 1;
    v[idx] = value;
    ++rows;
  }
  if (rows != g.size()) throw ConfigError("potential table must list every tuple");
  return {atoms, k, std::move(v)};
}

inline PotentialTable load_table_csv(const std::string& path, std::size_t atoms) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open potential table " + path);
  return load_table_csv(in, atoms);
}

}  // namespace ruelle
