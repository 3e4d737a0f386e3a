#include "netform/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace netform {
namespace {

std::int64_t total_count(std::span<const std::int64_t> counts) {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

struct IterationOutcome {
  BeliefMatrix q;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  double damping = 1.0;
  bool converged = false;
};

IterationOutcome iterate(BeliefMatrix q, std::span<const std::int64_t> counts,
                         const Parameters& params, const TypeSpace& type_space,
                         const ADistribution& a_dist, const SolverConfig& config) {
  IterationOutcome out;
  double damping = config.damping;
  bool dropped = damping <= 0.5;
  int increases = 0;
  double previous = std::numeric_limits<double>::infinity();
  int budget = config.max_iterations;
  int total = 0;

  while (true) {
    for (int it = 0; it < budget; ++it) {
      const BeliefMatrix next = belief_map(q, counts, params, type_space, a_dist);
      ++total;
      const double residual = q.sup_distance(next);
      if (!std::isfinite(residual)) break;
      if (residual <= config.tolerance) {
        out.q = std::move(q);
        out.iterations = total;
        out.residual = residual;
        out.damping = damping;
        out.converged = true;
        return out;
      }
      increases = residual > previous ? increases + 1 : 0;
      previous = residual;
      if (increases >= 10 && !dropped) {
        damping = 0.5;
        dropped = true;
        increases = 0;
      }
      for (std::size_t s = 0; s < q.n_types(); ++s) {
        for (std::size_t t = 0; t < q.n_types(); ++t) {
          q(s, t) = (1.0 - damping) * q(s, t) + damping * next(s, t);
        }
      }
      out.residual = residual;
    }
    if (dropped) break;
    // Budget exhausted at full step: retry once from here at damping 0.5.
    damping = 0.5;
    dropped = true;
    increases = 0;
    previous = std::numeric_limits<double>::infinity();
  }
  out.q = std::move(q);
  out.iterations = total;
  out.damping = damping;
  return out;
}

}  // namespace

double popularity_belief(std::size_t s, std::size_t t, const BeliefMatrix& q,
                         std::span<const std::int64_t> counts) {
  const std::int64_t n = total_count(counts);
  if (n < 3) throw InputError("popularity term undefined: n < 3");
  double sum = 0.0;
  for (std::size_t u = 0; u < counts.size(); ++u) sum += static_cast<double>(counts[u]) * q(t, u);
  sum -= q(t, s) + q(t, t);
  return sum / static_cast<double>(n - 2);
}

double link_index(std::size_t s, std::size_t t, double a, const BeliefMatrix& q,
                  std::span<const std::int64_t> counts, const Parameters& params,
                  const TypeSpace& type_space) {
  const auto w = type_space.w(s, t);
  double index = a;
  for (std::size_t k = 0; k < w.size(); ++k) index += w[k] * params.beta[k];
  index += q(t, s) * params.reciprocity();
  index += params.popularity() * popularity_belief(s, t, q, counts);
  return index;
}

double ccp(std::size_t s, std::size_t t, double a, const BeliefMatrix& q,
           std::span<const std::int64_t> counts, const Parameters& params,
           const TypeSpace& type_space) {
  return logistic(link_index(s, t, a, q, counts, params, type_space));
}

BeliefMatrix belief_map(const BeliefMatrix& q, std::span<const std::int64_t> counts,
                        const Parameters& params, const TypeSpace& type_space,
                        const ADistribution& a_dist) {
  const std::size_t types = type_space.size();
  BeliefMatrix out(types, 0.0);
  for (std::size_t s = 0; s < types; ++s) {
    for (std::size_t t = 0; t < types; ++t) {
      // The index is affine in a, so evaluate the a = 0 part once.
      const double base = link_index(s, t, 0.0, q, counts, params, type_space);
      double acc = 0.0;
      for (const auto& nd : a_dist.per_type[s]) acc += nd.weight * logistic(base + nd.node);
      out(s, t) = acc;
    }
  }
  return out;
}

EquilibriumResult solve_equilibrium(std::span<const std::int64_t> counts,
                                    const Parameters& params,
                                    const TypeSpace& type_space,
                                    const ADistribution& a_dist,
                                    const SolverConfig& config) {
  if (!(config.tolerance > 0.0) || !(config.damping > 0.0 && config.damping <= 1.0) ||
      config.max_iterations < 1) {
    throw InputError("solver config: need tolerance > 0, damping in (0, 1], max_iterations >= 1");
  }
  if (counts.size() != type_space.size()) throw InputError("type counts do not match type space");
  if (total_count(counts) < 3) throw InputError("popularity term undefined: n < 3");

  auto main = iterate(BeliefMatrix(type_space.size(), 0.5), counts, params, type_space,
                      a_dist, config);
  if (!main.converged) {
    throw ConvergenceError(fmt::format(
        "no convergence: belief iteration residual {:.3e} after {} iterations", main.residual,
        main.iterations));
  }

  EquilibriumResult result;
  result.iterations = main.iterations;
  result.residual = main.residual;
  result.damping = main.damping;

  std::vector<BeliefMatrix> found{main.q};
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> start(0.02, 0.98);
  for (int k = 1; k < config.multistart_count; ++k) {
    BeliefMatrix q0(type_space.size(), 0.5);
    for (std::size_t s = 0; s < q0.n_types(); ++s) {
      for (std::size_t t = 0; t < q0.n_types(); ++t) q0(s, t) = start(rng);
    }
    auto alt = iterate(std::move(q0), counts, params, type_space, a_dist, config);
    if (!alt.converged) continue;
    const bool fresh = std::none_of(found.begin(), found.end(), [&](const BeliefMatrix& f) {
      return f.sup_distance(alt.q) <= 1e-6;
    });
    if (fresh) found.push_back(std::move(alt.q));
  }
  result.distinct_fixed_points = static_cast<int>(found.size());
  result.q = std::move(found.front());
  return result;
}

std::vector<QuadratureNode> discretize_normal(double mean, double variance,
                                              int n_nodes) {
  if (!(variance >= 0.0) || !std::isfinite(mean)) {
    throw InputError(fmt::format("discretize_normal: invalid variance {}", variance));
  }
  if (n_nodes < 1) throw InputError("discretize_normal: need at least one node");
  if (variance == 0.0 || n_nodes == 1) return {{mean, 1.0}};

  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  for (int k = 1; k < n_nodes; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  const Eigen::VectorXd x = eig.eigenvalues();
  Eigen::VectorXd w = eig.eigenvectors().row(0).transpose().array().square();

  // Symmetrize about zero so odd moments vanish to rounding.
  std::vector<QuadratureNode> nodes(n_nodes);
  double total = 0.0;
  for (int k = 0; k < n_nodes; ++k) {
    const int m = n_nodes - 1 - k;
    nodes[k].node = 0.5 * (x(k) - x(m));
    nodes[k].weight = 0.5 * (w(k) + w(m));
    total += nodes[k].weight;
  }
  const double sd = std::sqrt(variance);
  for (auto& nd : nodes) {
    nd.node = mean + sd * nd.node;
    nd.weight /= total;
  }
  return nodes;
}

std::vector<QuadratureNode> clamp_nodes(std::vector<QuadratureNode> nodes,
                                        const Bounds& bounds) {
  for (auto& nd : nodes) nd.node = bounds.clamp(nd.node);
  return nodes;
}

void write_belief_csv(std::ostream& out, const BeliefMatrix& q,
                      const TypeSpace& type_space) {
  out << "proposer";
  for (double x : type_space.support()) out << fmt::format(",{}", x);
  out << '\n';
  for (std::size_t s = 0; s < q.n_types(); ++s) {
    out << fmt::format("{}", type_space.support()[s]);
    for (std::size_t t = 0; t < q.n_types(); ++t) out << fmt::format(",{}", q(s, t));
    out << '\n';
  }
}

}  // namespace netform
