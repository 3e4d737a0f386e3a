#pragma once

// Shared fixtures and brute-force oracles for the test suites. The oracles
// work pair by pair from the definitions and do not reuse the library's
// type-pair collapse.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "netform/core.hpp"
#include "netform/estimate.hpp"
#include "netform/simulate.hpp"

namespace netform::testing {

// Three ordered covariate values: beta is identified with fixed effects.
inline TypeSpace three_type_space() {
  return TypeSpace::abs_diff({-1.0, 0.0, 1.0}, {0.3, 0.4, 0.3});
}

inline ScenarioSpec three_type_spec(int n, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.name = "three_type";
  spec.n = n;
  spec.seed = seed;
  spec.params.beta = {-1.0, 0.8, 1.2};
  spec.laws = {{-0.6, 0.0}, {-0.3, 0.0}, {-0.9, 0.0}};
  return spec;
}

struct Instance {
  std::vector<TypeIndex> types;
  Network network;
  std::vector<double> a_true;
};

// Types cycle through 0..T-1 and are then shuffled; links are Bernoulli with
// probabilities varying by agent and target type.
inline Instance random_instance(std::uint64_t seed, std::size_t n, std::size_t n_types) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Instance inst;
  inst.types.resize(n);
  for (std::size_t i = 0; i < n; ++i) inst.types[i] = static_cast<TypeIndex>(i % n_types);
  std::shuffle(inst.types.begin(), inst.types.end(), rng);
  std::vector<double> pair_shift(n_types * n_types);
  for (auto& v : pair_shift) v = 0.8 * normal(rng);
  inst.network = Network(n);
  inst.a_true.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    inst.a_true[i] = -0.5 + 0.6 * normal(rng);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = logistic(inst.a_true[i] + pair_shift[inst.types[i] * n_types + inst.types[j]]);
      if (unif(rng) < p) inst.network.set(i, j, true);
    }
  }
  return inst;
}

// Z_ij built from its definition: popularity sums q[t_j][t_k] over k != i, j.
inline std::vector<double> pair_regressor(std::size_t i, std::size_t j, const BeliefMatrix& q,
                                          const std::vector<TypeIndex>& types,
                                          const TypeSpace& ts) {
  const std::size_t s = types[i], t = types[j];
  std::vector<double> z(ts.w(s, t).begin(), ts.w(s, t).end());
  z.push_back(q(t, s));
  double pop = 0.0;
  for (std::size_t k = 0; k < types.size(); ++k) {
    if (k != i && k != j) pop += q(t, types[k]);
  }
  z.push_back(pop / static_cast<double>(types.size() - 2));
  return z;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Log-likelihood summed pair by pair, normalized by n(n-1).
inline double brute_loglik(const std::vector<double>& beta, const std::vector<double>& a,
                           const Network& g, const std::vector<TypeIndex>& types,
                           const TypeSpace& ts, const BeliefMatrix& q) {
  const std::size_t n = types.size();
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = 1.0 / (1.0 + std::exp(-(dot(pair_regressor(i, j, q, types, ts), beta) + a[i])));
      ll += g(i, j) ? std::log(p) : std::log1p(-p);
    }
  }
  return ll / static_cast<double>(n * (n - 1));
}

// Agent i's likelihood slice maximized over a in [lo, hi] by safeguarded
// 1-D Newton on the derivative.
inline double agent_newton(std::size_t i, const std::vector<double>& beta, const Network& g,
                           const std::vector<TypeIndex>& types, const TypeSpace& ts,
                           const BeliefMatrix& q, double lo, double hi) {
  const std::size_t n = types.size();
  std::vector<double> idx;
  double d = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    idx.push_back(dot(pair_regressor(i, j, q, types, ts), beta));
    d += g(i, j);
  }
  auto deriv = [&](double a, double& curv) {
    double f = d;
    curv = 0.0;
    for (double c : idx) {
      const double p = 1.0 / (1.0 + std::exp(-(c + a)));
      f -= p;
      curv += p * (1.0 - p);
    }
    return f;
  };
  double curv = 0.0;
  if (deriv(lo, curv) <= 0.0) return lo;
  if (deriv(hi, curv) >= 0.0) return hi;
  double a = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = deriv(a, curv);
    (f > 0.0 ? lo : hi) = a;
    double next = a + f / curv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - a) < 1e-15) return next;
    a = next;
  }
  return a;
}

inline DyadData dyad_data(const Instance& inst, const TypeSpace& ts) {
  const FirstStep fs = first_step(inst.network, inst.types, ts);
  std::vector<std::int64_t> counts(ts.size(), 0);
  for (TypeIndex s : inst.types) ++counts[s];
  return DyadData(build_regressors(fs.q_hat, counts, ts), inst.network, inst.types);
}

inline std::vector<double> random_beta(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 0.5);
  return {-1.0 + normal(rng), normal(rng), normal(rng)};
}

inline double sup(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Central differences of a scalar function of a vector.
inline std::vector<double> central_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double up = f(x);
    x[k] = x0 - h;
    const double down = f(x);
    x[k] = x0;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace netform::testing
