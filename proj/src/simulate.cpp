#include "netform/simulate.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "netform/kernels.hpp"

namespace netform {
namespace {

using TypeLaw = FixedEffectLaw;

TypeLaw law_for(const ScenarioSpec& spec, double x) {
  if (x == -1.0) return {spec.alpha_L, spec.gamma};
  if (x == 1.0) return {spec.alpha_H, 0.0};
  throw InputError(fmt::format(
      "scenario fixed-effect law is defined for X in {{-1, 1}}, got support value {}", x));
}

std::vector<TypeLaw> laws_for(const ScenarioSpec& spec, const TypeSpace& type_space) {
  if (!spec.laws.empty()) {
    if (spec.laws.size() != type_space.size()) {
      throw InputError(fmt::format("scenario: {} fixed-effect laws for {} types",
                                   spec.laws.size(), type_space.size()));
    }
    return spec.laws;
  }
  std::vector<TypeLaw> laws;
  for (double x : type_space.support()) laws.push_back(law_for(spec, x));
  return laws;
}

void check_spec(const ScenarioSpec& spec) {
  if (spec.n < 3) throw InputError("scenario: n must be at least 3");
  if (!(spec.var_a >= 0.0) || !(spec.var_V >= 0.0)) {
    throw InputError("scenario: variances must be nonnegative");
  }
}

}  // namespace

ScenarioSpec preset_scenario(int id, int n, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.n = n;
  spec.seed = seed;
  switch (id) {
    case 1:
      spec.name = "scenario1";
      spec.alpha_L = -2.0 / 3.0;
      spec.alpha_H = -1.0 / 6.0;
      spec.gamma = 0.0;
      break;
    case 2:
      spec.name = "scenario2";
      spec.alpha_L = -2.0 / 3.0;
      spec.alpha_H = -1.0 / 6.0;
      spec.gamma = 1.0;
      break;
    case 3:
      spec.name = "scenario3";
      spec.alpha_L = -0.5;
      spec.alpha_H = -0.5;
      spec.gamma = 0.0;
      break;
    default:
      throw InputError(fmt::format("unknown scenario {}", id));
  }
  return spec;
}

TypeSpace binary_type_space() { return TypeSpace::abs_diff({-1.0, 1.0}, {0.5, 0.5}); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Population draw_population(const ScenarioSpec& spec, const TypeSpace& type_space,
                           Rng& rng) {
  check_spec(spec);
  const std::size_t types = type_space.size();
  const std::vector<TypeLaw> laws = laws_for(spec, type_space);

  std::vector<double> cumulative(types);
  double acc = 0.0;
  for (std::size_t s = 0; s < types; ++s) cumulative[s] = acc += type_space.probabilities()[s];

  const double sd_a = std::sqrt(spec.var_a);
  const double sd_v = std::sqrt(spec.var_V);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<TypeIndex> type_of(spec.n);
  std::vector<double> a(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    const double u = uniform01(rng) * acc;
    std::size_t s = 0;
    while (s + 1 < types && u >= cumulative[s]) ++s;
    // Both shocks are always drawn so the stream layout does not depend on gamma.
    const double a_i = sd_a * normal(rng);
    const double v_i = sd_v * normal(rng);
    type_of[i] = static_cast<TypeIndex>(s);
    a[i] = spec.params.a_bounds.clamp(laws[s].mean + laws[s].gamma * a_i + v_i);
  }
  return Population(std::move(type_of), std::move(a), types);
}

ADistribution scenario_a_dist(const ScenarioSpec& spec, const TypeSpace& type_space,
                              int n_nodes) {
  check_spec(spec);
  ADistribution dist;
  for (const TypeLaw& law : laws_for(spec, type_space)) {
    const double variance = law.gamma * law.gamma * spec.var_a + spec.var_V;
    dist.per_type.push_back(
        clamp_nodes(discretize_normal(law.mean, variance, n_nodes), spec.params.a_bounds));
  }
  return dist;
}

Network generate_network(const Population& population, const BeliefMatrix& q_star,
                         const Parameters& params, const TypeSpace& type_space,
                         Rng& rng) {
  const std::size_t n = population.n();
  const std::size_t types = type_space.size();
  const auto& counts = population.type_counts();
  const auto& type_of = population.types();

  // The link index is type-pair level plus A_i: tabulate the a = 0 part.
  std::vector<double> base(types * types);
  for (std::size_t s = 0; s < types; ++s) {
    for (std::size_t t = 0; t < types; ++t) {
      base[s * types + t] = link_index(s, t, 0.0, q_star, counts, params, type_space);
    }
  }

  const std::uint64_t network_seed = rng();
  Network g(n);
  std::vector<double> u(n), p(n), by_type(types);
  for (std::size_t i = 0; i < n; ++i) {
    Rng row_rng(substream_seed(network_seed, i));
    for (auto& v : u) v = uniform01(row_rng);
    const std::size_t s = type_of[i];
    const double a = population.fixed_effects()[i];
    for (std::size_t t = 0; t < types; ++t) by_type[t] = logistic(base[s * types + t] + a);
    for (std::size_t j = 0; j < n; ++j) p[j] = by_type[type_of[j]];
    auto row = g.mutable_row(i);
    kernels::bernoulli_row(u, p, row);
    row[i] = 0;
  }
  return g;
}

SimulatedData simulate(const ScenarioSpec& spec, const TypeSpace& type_space,
                       const SolverConfig& solver, int n_nodes) {
  Rng rng(spec.seed);
  Population population = draw_population(spec, type_space, rng);
  const ADistribution dist = scenario_a_dist(spec, type_space, n_nodes);
  EquilibriumResult eq =
      solve_equilibrium(population.type_counts(), spec.params, type_space, dist, solver);
  Network g = generate_network(population, eq.q, spec.params, type_space, rng);
  return {std::move(population), std::move(eq), std::move(g)};
}

void write_edges_csv(std::ostream& out, const Network& network) {
  out << "src,dst\n";
  for (std::size_t i = 0; i < network.n(); ++i) {
    const auto row = network.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j]) out << i << ',' << j << '\n';
    }
  }
}

void write_attributes_csv(std::ostream& out, const Population& population,
                          const TypeSpace& type_space) {
  out << "agent_id,x_value,a_value\n";
  for (std::size_t i = 0; i < population.n(); ++i) {
    out << fmt::format("{},{},{}\n", i, type_space.support()[population.types()[i]],
                       population.fixed_effects()[i]);
  }
}

}  // namespace netform
