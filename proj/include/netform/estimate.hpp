#pragma once

// Two-step estimator. The first step replaces equilibrium beliefs by
// empirical type-pair link frequencies; the second step maximizes the
// likelihood jointly over beta and the fixed effects, with the fixed effects
// concentrated out through their own first-order fixed point.
//
// Every regressor Z_ij depends on the ordered type pair (t_i, t_j) only, so
// the likelihood is evaluated from per-agent link tallies by target type.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netform/core.hpp"

namespace netform {

struct FirstStep {
  BeliefMatrix q_hat;
  std::vector<std::int64_t> pair_counts;  // [s * T + t] ordered pairs
  std::vector<std::int64_t> link_counts;  // [s * T + t] links among them
};

// Cells without any ordered pair get a NaN frequency.
FirstStep pair_frequencies(const Network& network, std::span<const TypeIndex> types,
                           const TypeSpace& type_space);
// As pair_frequencies, but throws InputError("type pair unobserved ...") when
// a cell has no pairs.
FirstStep first_step(const Network& network, std::span<const TypeIndex> types,
                     const TypeSpace& type_space);

// Z_st = (w(x_s, x_t)', q[t][s], popularity_belief(s, t, q, counts))'.
class RegressorSet {
 public:
  RegressorSet() = default;
  RegressorSet(std::size_t n_types, std::size_t dim, std::vector<double> z,
               std::vector<std::int64_t> counts);

  std::size_t n_types() const { return n_types_; }
  std::size_t dim() const { return dim_; }
  std::size_t n() const { return n_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::span<const double> z(std::size_t s, std::size_t t) const {
    return {z_.data() + (s * n_types_ + t) * dim_, dim_};
  }
  Eigen::Map<const Eigen::VectorXd> zvec(std::size_t s, std::size_t t) const {
    return {z_.data() + (s * n_types_ + t) * dim_, static_cast<Eigen::Index>(dim_)};
  }
  double index(std::size_t s, std::size_t t, std::span<const double> beta) const;

 private:
  std::size_t n_types_ = 0;
  std::size_t dim_ = 0;
  std::size_t n_ = 0;
  std::vector<double> z_;
  std::vector<std::int64_t> counts_;
};

RegressorSet build_regressors(const BeliefMatrix& q, std::span<const std::int64_t> counts,
                              const TypeSpace& type_space);

// Link tallies of each agent by target type, [i * T + t].
std::vector<std::int64_t> link_tallies(const Network& network,
                                       std::span<const TypeIndex> types,
                                       std::size_t n_types);

// Regressors plus the sufficient statistics of the observed network.
class DyadData {
 public:
  DyadData(RegressorSet regressors, const Network& network,
           std::span<const TypeIndex> types);

  std::size_t n() const { return types_.size(); }
  std::size_t n_types() const { return reg_.n_types(); }
  std::size_t dim() const { return reg_.dim(); }
  const RegressorSet& regressors() const { return reg_; }
  TypeIndex type(std::size_t i) const { return types_[i]; }
  const std::vector<TypeIndex>& types() const { return types_; }
  std::int64_t links(std::size_t i, std::size_t t) const { return tallies_[i * n_types() + t]; }
  std::int64_t trials(std::size_t i, std::size_t t) const {
    return reg_.counts()[t] - (types_[i] == t ? 1 : 0);
  }
  std::int64_t out_degree(std::size_t i) const { return degree_[i]; }
  double pair_total() const {
    return static_cast<double>(n()) * static_cast<double>(n() - 1);
  }

 private:
  RegressorSet reg_;
  std::vector<TypeIndex> types_;
  std::vector<std::int64_t> tallies_;
  std::vector<std::int64_t> degree_;
};

struct MleConfig {
  double a_tolerance = 1e-10;
  int a_max_iterations = 500;
  double beta_tolerance = 1e-9;
  int beta_max_iterations = 100;
  std::vector<double> beta_init;  // empty means the zero vector
  Bounds a_bounds;
};

struct AFit {
  std::vector<double> a_hat;
  std::vector<std::size_t> boundary_agents;
  std::vector<std::uint8_t> at_bound;  // per agent
  int sweeps = 0;
};

// Normalized log-likelihood (1 / n(n-1)) sum_{i != j} of Bernoulli log terms.
double loglik(std::span<const double> beta, std::span<const double> a,
              const DyadData& data);

// Solves A_i = ln sum_j G_ij - ln sum_j exp(Z_ij'b) / (1 + exp(Z_ij'b + A_i))
// agent by agent, projecting into the bounds. Agents with out-degree 0 or
// n - 1 are pinned to the matching bound. `warm_start` seeds the iteration.
AFit fixed_point_a(std::span<const double> beta, const DyadData& data,
                   const MleConfig& config,
                   std::optional<std::span<const double>> warm_start = std::nullopt);

// beta-block of the full score at (beta, a).
Eigen::VectorXd score_at(std::span<const double> beta, std::span<const double> a,
                         const DyadData& data);
// H_bb - H_bA H_AA^{-1} H_Ab over the agents not held at a bound, normalized
// by n(n-1). Throws ConvergenceError when an interior agent has a vanishing
// H_AA entry.
Eigen::MatrixXd hessian_at(std::span<const double> beta, const AFit& fit,
                           const DyadData& data);

double concentrated_loglik(std::span<const double> beta, const DyadData& data,
                           const MleConfig& config);
Eigen::VectorXd concentrated_score(std::span<const double> beta, const DyadData& data,
                                   const MleConfig& config);
Eigen::MatrixXd concentrated_hessian(std::span<const double> beta, const DyadData& data,
                                     const MleConfig& config);

// Newton ascent on the concentrated likelihood with step halving. Numerical
// failures are reported through `converged` and `status`.
EstimateResult estimate(const DyadData& data, const MleConfig& config);

struct TwoStepFit {
  FirstStep first;
  DyadData data;
  EstimateResult result;
};

TwoStepFit fit_two_step(const Network& network, std::span<const TypeIndex> types,
                        const TypeSpace& type_space, const MleConfig& config);

EstimateResult estimate(const Network& network, std::span<const TypeIndex> types,
                        const TypeSpace& type_space, const MleConfig& config);

}  // namespace netform
