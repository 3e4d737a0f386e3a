#pragma once

// Conditional choice probabilities and the symmetric-equilibrium belief fixed
// point, evaluated at a realized type composition.

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "netform/core.hpp"

namespace netform {

struct SolverConfig {
  double tolerance = 1e-12;
  int max_iterations = 10000;
  double damping = 1.0;
  int multistart_count = 1;
};

struct EquilibriumResult {
  BeliefMatrix q;
  int iterations = 0;
  double residual = 0.0;
  double damping = 1.0;
  // Number of distinct fixed points reached from the multistart starts (1 when
  // multistart is off).
  int distinct_fixed_points = 1;
};

// Average belief that a type-t target links to the third parties, excluding
// the proposer (type s) and the target itself:
//   (sum_u m_u q[t][u] - q[t][s] - q[t][t]) / (n - 2)
double popularity_belief(std::size_t s, std::size_t t, const BeliefMatrix& q,
                         std::span<const std::int64_t> counts);

double link_index(std::size_t s, std::size_t t, double a, const BeliefMatrix& q,
                  std::span<const std::int64_t> counts, const Parameters& params,
                  const TypeSpace& type_space);

double ccp(std::size_t s, std::size_t t, double a, const BeliefMatrix& q,
           std::span<const std::int64_t> counts, const Parameters& params,
           const TypeSpace& type_space);

// out[s][t] = sum over a_dist nodes of weight * ccp(s, t, node, q, ...).
BeliefMatrix belief_map(const BeliefMatrix& q, std::span<const std::int64_t> counts,
                        const Parameters& params, const TypeSpace& type_space,
                        const ADistribution& a_dist);

// Iterates the belief map from q = 0.5. Throws ConvergenceError when the
// iteration budget runs out at damping 0.5.
EquilibriumResult solve_equilibrium(std::span<const std::int64_t> counts,
                                    const Parameters& params,
                                    const TypeSpace& type_space,
                                    const ADistribution& a_dist,
                                    const SolverConfig& config = {});

// Gauss-Hermite rule for N(mean, variance); variance 0 gives a point mass.
std::vector<QuadratureNode> discretize_normal(double mean, double variance,
                                              int n_nodes);

// Nodes clamped into bounds, weights untouched.
std::vector<QuadratureNode> clamp_nodes(std::vector<QuadratureNode> nodes,
                                        const Bounds& bounds);

// Rows are proposer types, columns target types, labelled by support value.
void write_belief_csv(std::ostream& out, const BeliefMatrix& q,
                      const TypeSpace& type_space);

}  // namespace netform
