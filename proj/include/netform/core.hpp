#pragma once

// Domain types shared by every module: structural parameters, the discrete
// covariate support, fixed-effect laws, populations, networks and beliefs.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace netform {

// Bad input or configuration. The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed to converge. The CLI maps this to exit code 2.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TypeIndex = std::uint8_t;
inline constexpr std::size_t kMaxTypes = 255;

struct Bounds {
  double lo = -8.0;
  double hi = 8.0;

  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

// beta = (w-block, reciprocity, popularity). The w-block has dim(w) entries.
struct Parameters {
  std::vector<double> beta;
  Bounds a_bounds;

  std::size_t dim() const { return beta.size(); }
  std::size_t w_dim() const { return beta.size() - 2; }
  double reciprocity() const { return beta[beta.size() - 2]; }
  double popularity() const { return beta.back(); }
};

// Discrete covariate support with the pair regressor w(x_s, x_t) tabulated.
class TypeSpace {
 public:
  TypeSpace() = default;
  // w is laid out as [(s * T + t) * w_dim + k].
  TypeSpace(std::vector<double> support, std::vector<double> probabilities,
            std::size_t w_dim, std::vector<double> w);

  // w(x_s, x_t) = |x_s - x_t|, the homophily regressor used by the scenarios.
  static TypeSpace abs_diff(std::vector<double> support,
                            std::vector<double> probabilities);

  std::size_t size() const { return support_.size(); }
  std::size_t w_dim() const { return w_dim_; }
  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& probabilities() const { return probabilities_; }
  std::span<const double> w(std::size_t s, std::size_t t) const {
    return {w_.data() + (s * size() + t) * w_dim_, w_dim_};
  }
  // Index of the support point equal to x, if any.
  std::optional<std::size_t> find(double x) const;

 private:
  std::vector<double> support_;
  std::vector<double> probabilities_;
  std::size_t w_dim_ = 0;
  std::vector<double> w_;
};

struct QuadratureNode {
  double node = 0.0;
  double weight = 0.0;
};

// Discretized law of A given X = x_s, one node list per type.
struct ADistribution {
  std::vector<std::vector<QuadratureNode>> per_type;
};

class Population {
 public:
  Population() = default;
  Population(std::vector<TypeIndex> types, std::vector<double> fixed_effects,
             std::size_t n_types);

  std::size_t n() const { return types_.size(); }
  std::size_t n_types() const { return type_counts_.size(); }
  const std::vector<TypeIndex>& types() const { return types_; }
  const std::vector<double>& fixed_effects() const { return fixed_effects_; }
  const std::vector<std::int64_t>& type_counts() const { return type_counts_; }

 private:
  std::vector<TypeIndex> types_;
  std::vector<double> fixed_effects_;
  std::vector<std::int64_t> type_counts_;
};

// Directed binary adjacency, row-major, with an all-zero diagonal.
class Network {
 public:
  Network() = default;
  explicit Network(std::size_t n) : n_(n), adj_(n * n, 0) {}
  Network(std::size_t n, std::vector<std::uint8_t> adjacency);

  std::size_t n() const { return n_; }
  std::uint8_t operator()(std::size_t i, std::size_t j) const {
    return adj_[i * n_ + j];
  }
  // Self-loops are rejected.
  void set(std::size_t i, std::size_t j, bool linked);
  std::span<const std::uint8_t> row(std::size_t i) const {
    return {adj_.data() + i * n_, n_};
  }
  std::span<std::uint8_t> mutable_row(std::size_t i) {
    return {adj_.data() + i * n_, n_};
  }
  const std::vector<std::uint8_t>& adjacency() const { return adj_; }
  std::int64_t out_degree(std::size_t i) const;
  std::int64_t edge_count() const;
  Network transposed() const;

  bool operator==(const Network&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> adj_;
};

// q[s][t]: probability that a type-s agent proposes to a type-t agent.
class BeliefMatrix {
 public:
  BeliefMatrix() = default;
  BeliefMatrix(std::size_t n_types, double fill)
      : t_(n_types), q_(n_types * n_types, fill) {}

  std::size_t n_types() const { return t_; }
  double operator()(std::size_t s, std::size_t t) const { return q_[s * t_ + t]; }
  double& operator()(std::size_t s, std::size_t t) { return q_[s * t_ + t]; }
  const std::vector<double>& values() const { return q_; }

  double sup_distance(const BeliefMatrix& other) const;

 private:
  std::size_t t_ = 0;
  std::vector<double> q_;
};

struct EstimateResult {
  std::vector<double> beta_hat;
  std::vector<double> a_hat;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;
  std::string status;
  std::vector<std::size_t> boundary_agents;
  std::optional<std::vector<double>> se;
};

// 1 / (1 + exp(-x)) without overflow on either tail.
double logistic(double x);
// log(logistic(x)), accurate for large |x|.
double log_logistic(double x);

// Every violated invariant, human readable. Empty means valid.
std::vector<std::string> validate(const Parameters& params,
                                  const TypeSpace& type_space,
                                  const ADistribution& a_dist);
std::vector<std::string> validate(const Parameters& params,
                                  const TypeSpace& type_space);
std::vector<std::string> validate(const Population& population,
                                  const TypeSpace& type_space,
                                  const Bounds& a_bounds);

}  // namespace netform
