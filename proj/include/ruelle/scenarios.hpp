#pragma once

#include <string>
#include <vector>

#include "ruelle/potential.hpp"

namespace ruelle {

struct Scenario {
  std::string name;
  AprioriMeasure nu;
  Potential potential;
  PotentialTable table;

  bool finite_alphabet() const { return nu.space().discrete(); }
  SpaceKind kind() const { return nu.space().kind(); }
};

inline Scenario make_scenario(std::string name, AprioriMeasure nu, Potential P) {
  auto t = P.tabulate(nu.space());
  if (t.range == 1) t = t.lifted(2);
  return {std::move(name), std::move(nu), std::move(P), std::move(t)};
}

inline std::vector<Scenario> scenario_suite() {
  std::vector<Scenario> s;
  s.push_back(make_scenario("zero", build_apriori(measure_spec::Explicit{{0.2, 0.3, 0.5}}), Potential::constant(0.0, 2)));
  s.push_back(make_scenario("const", build_apriori(measure_spec::Uniform{3}), Potential::constant(0.7, 2)));
  s.push_back(make_scenario("flip", build_apriori(measure_spec::Uniform{2}),
                            Potential::table(PotentialTable(2, 2, {0.0, 1.0, 1.0, 0.0}))));
  s.push_back(make_scenario("xy0", build_apriori(measure_spec::CircleQuadrature{64}), Potential::xy(0.0, 0.0)));
  s.push_back(make_scenario("xy_half", build_apriori(measure_spec::CircleQuadrature{64}), Potential::xy(0.0, 0.5)));
  s.push_back(make_scenario("expint", build_apriori(measure_spec::IntervalQuadrature{64}), Potential::exp_interval(1.0)));
  s.push_back(make_scenario("geometric", build_apriori(measure_spec::Geometric{0.5, 8}), Potential::neg_distance_to_zero(2)));
  return s;
}

}  // namespace ruelle
