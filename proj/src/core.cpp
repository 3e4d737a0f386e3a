#include "netform/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace netform {

TypeSpace::TypeSpace(std::vector<double> support,
                     std::vector<double> probabilities, std::size_t w_dim,
                     std::vector<double> w)
    : support_(std::move(support)),
      probabilities_(std::move(probabilities)),
      w_dim_(w_dim),
      w_(std::move(w)) {
  if (support_.empty() || support_.size() > kMaxTypes) {
    throw InputError(fmt::format("type space needs 1..{} support points, got {}",
                                 kMaxTypes, support_.size()));
  }
  if (probabilities_.size() != support_.size()) {
    throw InputError("type space: probabilities and support differ in length");
  }
  if (w_dim_ == 0 || w_.size() != support_.size() * support_.size() * w_dim_) {
    throw InputError("type space: w table has the wrong shape");
  }
}

TypeSpace TypeSpace::abs_diff(std::vector<double> support,
                              std::vector<double> probabilities) {
  const std::size_t t = support.size();
  std::vector<double> w(t * t);
  for (std::size_t s = 0; s < t; ++s) {
    for (std::size_t u = 0; u < t; ++u) w[s * t + u] = std::abs(support[s] - support[u]);
  }
  return {std::move(support), std::move(probabilities), 1, std::move(w)};
}

std::optional<std::size_t> TypeSpace::find(double x) const {
  for (std::size_t s = 0; s < support_.size(); ++s) {
    if (support_[s] == x) return s;
  }
  return std::nullopt;
}

Population::Population(std::vector<TypeIndex> types,
                       std::vector<double> fixed_effects, std::size_t n_types)
    : types_(std::move(types)),
      fixed_effects_(std::move(fixed_effects)),
      type_counts_(n_types, 0) {
  if (types_.size() != fixed_effects_.size()) {
    throw InputError("population: types and fixed effects differ in length");
  }
  for (TypeIndex s : types_) {
    if (s >= n_types) throw InputError(fmt::format("population: type index {} out of range", s));
    ++type_counts_[s];
  }
}

Network::Network(std::size_t n, std::vector<std::uint8_t> adjacency)
    : n_(n), adj_(std::move(adjacency)) {
  if (adj_.size() != n * n) throw InputError("network: adjacency is not n x n");
  for (std::size_t i = 0; i < n; ++i) {
    if (adj_[i * n + i] != 0) throw InputError(fmt::format("network: self-loop at {}", i));
    for (std::size_t j = 0; j < n; ++j) {
      if (adj_[i * n + j] > 1) throw InputError("network: entries must be 0 or 1");
    }
  }
}

void Network::set(std::size_t i, std::size_t j, bool linked) {
  if (i == j) throw InputError(fmt::format("network: self-loop at {}", i));
  adj_[i * n_ + j] = linked ? 1 : 0;
}

std::int64_t Network::out_degree(std::size_t i) const {
  auto r = row(i);
  return std::accumulate(r.begin(), r.end(), std::int64_t{0});
}

std::int64_t Network::edge_count() const {
  return std::accumulate(adj_.begin(), adj_.end(), std::int64_t{0});
}

Network Network::transposed() const {
  Network out(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) out.adj_[j * n_ + i] = adj_[i * n_ + j];
  }
  return out;
}

double BeliefMatrix::sup_distance(const BeliefMatrix& other) const {
  double d = 0.0;
  for (std::size_t k = 0; k < q_.size(); ++k) d = std::max(d, std::abs(q_[k] - other.q_[k]));
  return d;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_logistic(double x) {
  // log(sigma(x)) = -log1p(exp(-x)); split so exp never overflows.
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

std::vector<std::string> validate(const Parameters& params,
                                  const TypeSpace& type_space) {
  std::vector<std::string> errors;
  if (params.beta.size() < 3) {
    errors.push_back("beta must have at least 3 entries (w-block, reciprocity, popularity)");
  } else if (params.w_dim() != type_space.w_dim()) {
    errors.push_back(fmt::format("beta w-block has {} entries but w has dimension {}",
                                 params.w_dim(), type_space.w_dim()));
  }
  for (double b : params.beta) {
    if (!std::isfinite(b)) errors.push_back("beta has a non-finite entry");
  }
  if (!std::isfinite(params.a_bounds.lo) || !std::isfinite(params.a_bounds.hi) ||
      !(params.a_bounds.lo < params.a_bounds.hi)) {
    errors.push_back("a_bounds must be finite with A_min < A_max");
  }

  const auto& p = type_space.probabilities();
  double total = 0.0;
  bool negative = false;
  for (double v : p) {
    negative = negative || !(v >= 0.0);
    total += v;
  }
  if (negative || std::abs(total - 1.0) > 1e-12) {
    errors.push_back(fmt::format("simplex violation: type probabilities sum to {}", total));
  }
  const auto& x = type_space.support();
  for (std::size_t s = 0; s < x.size(); ++s) {
    for (std::size_t t = s + 1; t < x.size(); ++t) {
      if (x[s] == x[t]) errors.push_back(fmt::format("support values {} and {} coincide", s, t));
    }
  }
  return errors;
}

std::vector<std::string> validate(const Parameters& params,
                                  const TypeSpace& type_space,
                                  const ADistribution& a_dist) {
  auto errors = validate(params, type_space);
  if (a_dist.per_type.size() != type_space.size()) {
    errors.push_back(fmt::format("a_dist has {} types, type space has {}",
                                 a_dist.per_type.size(), type_space.size()));
  }
  for (std::size_t s = 0; s < a_dist.per_type.size(); ++s) {
    double total = 0.0;
    bool bad = a_dist.per_type[s].empty();
    for (const auto& nd : a_dist.per_type[s]) {
      bad = bad || !(nd.weight >= 0.0);
      total += nd.weight;
      if (!params.a_bounds.contains(nd.node)) {
        errors.push_back(fmt::format("a_dist node {} of type {} lies outside a_bounds", nd.node, s));
      }
    }
    if (bad || std::abs(total - 1.0) > 1e-10) {
      errors.push_back(fmt::format("weights not normalized for type {} (sum {})", s, total));
    }
  }
  return errors;
}

std::vector<std::string> validate(const Population& population,
                                  const TypeSpace& type_space,
                                  const Bounds& a_bounds) {
  std::vector<std::string> errors;
  if (population.n_types() != type_space.size()) {
    errors.push_back("population type count differs from type space");
  }
  std::vector<std::int64_t> hist(population.n_types(), 0);
  for (TypeIndex s : population.types()) {
    if (s < hist.size()) ++hist[s];
  }
  if (hist != population.type_counts()) errors.push_back("type_counts disagree with types");
  const auto total = std::accumulate(population.type_counts().begin(),
                                     population.type_counts().end(), std::int64_t{0});
  if (total != static_cast<std::int64_t>(population.n())) {
    errors.push_back("type_counts do not sum to n");
  }
  for (double a : population.fixed_effects()) {
    if (!a_bounds.contains(a)) {
      errors.push_back(fmt::format("fixed effect {} outside a_bounds", a));
      break;
    }
  }
  return errors;
}

}  // namespace netform
