#pragma once

// Data-generating process for the Monte Carlo designs: covariates, fixed
// effects and links drawn at the solver-selected equilibrium.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "netform/core.hpp"
#include "netform/equilibrium.hpp"

namespace netform {

using Rng = std::mt19937_64;

// Per-type fixed-effect law: A_i = mean + gamma * a_i + V_i.
struct FixedEffectLaw {
  double mean = 0.0;
  double gamma = 0.0;
};

// A_i = (alpha_L + gamma * a_i) 1{X_i = -1} + alpha_H 1{X_i = 1} + V_i with
// a_i ~ N(0, var_a) and V_i ~ N(0, var_V). Second arguments are variances.
// A non-empty `laws` replaces the two-point rule, one entry per type.
struct ScenarioSpec {
  std::string name = "custom";
  double alpha_L = -0.5;
  double alpha_H = -0.5;
  double gamma = 0.0;
  double var_a = 0.1;
  double var_V = 0.31622776601683794;  // sqrt(0.1)
  int n = 100;
  Parameters params{{-2.0, 1.0, 1.0}, {}};
  std::uint64_t seed = 1;
  std::vector<FixedEffectLaw> laws;
};

// Scenarios 1-3 of the Monte Carlo study with beta = (-2, 1, 1).
ScenarioSpec preset_scenario(int id, int n, std::uint64_t seed = 1);
// X in {-1, 1} with equal probability, w = |X_i - X_j|.
TypeSpace binary_type_space();

std::uint64_t splitmix64(std::uint64_t x);
// Stream seed for replication/row k derived from a base seed.
inline std::uint64_t substream_seed(std::uint64_t base, std::uint64_t k) {
  return base ^ splitmix64(k);
}
// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Population draw_population(const ScenarioSpec& spec, const TypeSpace& type_space,
                           Rng& rng);

ADistribution scenario_a_dist(const ScenarioSpec& spec, const TypeSpace& type_space,
                              int n_nodes = 15);

// G_ij ~ Bernoulli(ccp(t_i, t_j, A_i, q_star)) independently over ordered
// pairs. Each row draws from its own substream of a seed taken from rng.
Network generate_network(const Population& population, const BeliefMatrix& q_star,
                         const Parameters& params, const TypeSpace& type_space,
                         Rng& rng);

struct SimulatedData {
  Population population;
  EquilibriumResult equilibrium;
  Network network;
};

// Population, equilibrium at the realized type counts, and network.
SimulatedData simulate(const ScenarioSpec& spec, const TypeSpace& type_space,
                       const SolverConfig& solver = {}, int n_nodes = 15);

// edges: "src,dst"; attributes: "agent_id,x_value,a_value".
void write_edges_csv(std::ostream& out, const Network& network);
void write_attributes_csv(std::ostream& out, const Population& population,
                          const TypeSpace& type_space);

}  // namespace netform
