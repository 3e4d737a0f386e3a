#include "netform/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "netform/equilibrium.hpp"
#include "netform/kernels.hpp"

namespace netform {
namespace {

// c[s * T + t] = Z_st' beta.
std::vector<double> pair_indices(std::span<const double> beta, const RegressorSet& reg) {
  if (beta.size() != reg.dim()) {
    throw InputError(fmt::format("beta has {} entries, regressors have {}", beta.size(), reg.dim()));
  }
  const std::size_t types = reg.n_types();
  std::vector<double> c(types * types);
  for (std::size_t s = 0; s < types; ++s) {
    for (std::size_t t = 0; t < types; ++t) c[s * types + t] = reg.index(s, t, beta);
  }
  return c;
}

// Q[i * T + t] = logistic(c_{s_i t} + a_i) via the batched kernel.
std::vector<double> probabilities(const std::vector<double>& c, std::span<const double> a,
                                  const DyadData& data) {
  const std::size_t types = data.n_types();
  std::vector<double> x(data.n() * types), q(data.n() * types);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double* row = c.data() + data.type(i) * types;
    for (std::size_t t = 0; t < types; ++t) x[i * types + t] = row[t] + a[i];
  }
  kernels::logistic(x, q);
  return q;
}

// Expected links minus observed links of agent i as a function of a,
// bracketed on [lo, hi] and solved by safeguarded Newton.
double solve_agent(std::size_t i, double a, const std::vector<double>& c,
                   const DyadData& data, const Bounds& bounds, double tol) {
  const std::size_t types = data.n_types();
  const double* row = c.data() + data.type(i) * types;
  const double d = static_cast<double>(data.out_degree(i));
  auto eval = [&](double x, double* slope) {
    double f = -d, w = 0.0;
    for (std::size_t t = 0; t < types; ++t) {
      const double n_t = static_cast<double>(data.trials(i, t));
      const double q = logistic(row[t] + x);
      f += n_t * q;
      w += n_t * q * (1.0 - q);
    }
    if (slope) *slope = w;
    return f;
  };
  double lo = bounds.lo, hi = bounds.hi;
  if (eval(lo, nullptr) >= 0.0) return lo;
  if (eval(hi, nullptr) <= 0.0) return hi;
  a = std::clamp(a, lo, hi);
  for (int it = 0; it < 200; ++it) {
    double w = 0.0;
    const double f = eval(a, &w);
    if (f == 0.0) return a;
    (f > 0.0 ? hi : lo) = a;
    double next = w > 0.0 ? a - f / w : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - a) <= tol * 1e-3) return next;
    a = next;
  }
  throw ConvergenceError(fmt::format("A-loop no convergence (agent {})", i));
}

}  // namespace

FirstStep pair_frequencies(const Network& network, std::span<const TypeIndex> types,
                           const TypeSpace& type_space) {
  const std::size_t n = network.n();
  const std::size_t k = type_space.size();
  if (types.size() != n) throw InputError("first_step: types and network sizes differ");

  std::vector<std::int64_t> counts(k, 0);
  for (TypeIndex s : types) {
    if (s >= k) throw InputError("first_step: type index out of range");
    ++counts[s];
  }
  const auto tallies = link_tallies(network, types, k);

  FirstStep out{BeliefMatrix(k, 0.0), std::vector<std::int64_t>(k * k, 0),
                std::vector<std::int64_t>(k * k, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < k; ++t) out.link_counts[types[i] * k + t] += tallies[i * k + t];
  }
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      const std::int64_t pairs = counts[s] * (counts[t] - (s == t ? 1 : 0));
      out.pair_counts[s * k + t] = pairs;
      out.q_hat(s, t) = pairs > 0 ? static_cast<double>(out.link_counts[s * k + t]) /
                                        static_cast<double>(pairs)
                                  : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

FirstStep first_step(const Network& network, std::span<const TypeIndex> types,
                     const TypeSpace& type_space) {
  FirstStep out = pair_frequencies(network, types, type_space);
  const std::size_t k = type_space.size();
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      if (out.pair_counts[s * k + t] <= 0) {
        throw InputError(fmt::format("type pair unobserved: ({}, {})", s, t));
      }
    }
  }
  return out;
}

RegressorSet::RegressorSet(std::size_t n_types, std::size_t dim, std::vector<double> z,
                           std::vector<std::int64_t> counts)
    : n_types_(n_types), dim_(dim), z_(std::move(z)), counts_(std::move(counts)) {
  n_ = static_cast<std::size_t>(std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}));
}

double RegressorSet::index(std::size_t s, std::size_t t, std::span<const double> beta) const {
  const auto zz = z(s, t);
  double v = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) v += zz[k] * beta[k];
  return v;
}

RegressorSet build_regressors(const BeliefMatrix& q, std::span<const std::int64_t> counts,
                              const TypeSpace& type_space) {
  const std::size_t k = type_space.size();
  const std::size_t dim = type_space.w_dim() + 2;
  std::vector<double> z(k * k * dim);
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      double* out = z.data() + (s * k + t) * dim;
      const auto w = type_space.w(s, t);
      std::copy(w.begin(), w.end(), out);
      out[dim - 2] = q(t, s);
      out[dim - 1] = popularity_belief(s, t, q, counts);
    }
  }
  return {k, dim, std::move(z), {counts.begin(), counts.end()}};
}

std::vector<std::int64_t> link_tallies(const Network& network,
                                       std::span<const TypeIndex> types,
                                       std::size_t n_types) {
  std::vector<std::int64_t> out(network.n() * n_types);
  for (std::size_t i = 0; i < network.n(); ++i) {
    kernels::tally_by_type(network.row(i), types,
                           std::span<std::int64_t>(out.data() + i * n_types, n_types));
  }
  return out;
}

DyadData::DyadData(RegressorSet regressors, const Network& network,
                   std::span<const TypeIndex> types)
    : reg_(std::move(regressors)), types_(types.begin(), types.end()) {
  if (network.n() != types_.size() || reg_.n() != types_.size()) {
    throw InputError("dyad data: network, types and regressors disagree on n");
  }
  if (types_.size() < 3) throw InputError("popularity term undefined: n < 3");
  tallies_ = link_tallies(network, types_, reg_.n_types());
  degree_.resize(types_.size());
  for (std::size_t i = 0; i < types_.size(); ++i) {
    degree_[i] = std::accumulate(tallies_.begin() + i * n_types(),
                                 tallies_.begin() + (i + 1) * n_types(), std::int64_t{0});
  }
}

double loglik(std::span<const double> beta, std::span<const double> a,
              const DyadData& data) {
  const auto c = pair_indices(beta, data.regressors());
  const std::size_t types = data.n_types();
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    double row = 0.0;
    for (std::size_t t = 0; t < types; ++t) {
      const double x = c[data.type(i) * types + t] + a[i];
      const double links = static_cast<double>(data.links(i, t));
      const double misses = static_cast<double>(data.trials(i, t)) - links;
      if (links > 0) row += links * log_logistic(x);
      if (misses > 0) row += misses * log_logistic(-x);
    }
    total += row;
  }
  return total / data.pair_total();
}

AFit fixed_point_a(std::span<const double> beta, const DyadData& data,
                   const MleConfig& config,
                   std::optional<std::span<const double>> warm_start) {
  const std::size_t n = data.n();
  const std::size_t types = data.n_types();
  const Bounds& bounds = config.a_bounds;
  const auto c = pair_indices(beta, data.regressors());

  AFit fit;
  fit.a_hat.assign(n, 0.0);
  fit.at_bound.assign(n, 0);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t d = data.out_degree(i);
    const auto m = static_cast<std::int64_t>(n) - 1;
    if (d == 0 || d == m) {
      fit.a_hat[i] = d == 0 ? bounds.lo : bounds.hi;
      fit.at_bound[i] = 1;
      continue;
    }
    if (warm_start) {
      fit.a_hat[i] = bounds.clamp((*warm_start)[i]);
    } else {
      double mean_index = 0.0;
      for (std::size_t t = 0; t < types; ++t) {
        mean_index += static_cast<double>(data.trials(i, t)) * c[data.type(i) * types + t];
      }
      mean_index /= static_cast<double>(m);
      fit.a_hat[i] = bounds.clamp(std::log(static_cast<double>(d) / static_cast<double>(m - d)) -
                                  mean_index);
    }
    active.push_back(i);
  }

  std::vector<double> x, q;
  int sweep = 0;
  for (; sweep < config.a_max_iterations && !active.empty(); ++sweep) {
    x.resize(active.size() * types);
    q.resize(x.size());
    for (std::size_t k = 0; k < active.size(); ++k) {
      const std::size_t i = active[k];
      for (std::size_t t = 0; t < types; ++t) {
        x[k * types + t] = c[data.type(i) * types + t] + fit.a_hat[i];
      }
    }
    kernels::logistic(x, q);
    std::size_t kept = 0;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const std::size_t i = active[k];
      double expected = 0.0;
      for (std::size_t t = 0; t < types; ++t) {
        expected += static_cast<double>(data.trials(i, t)) * q[k * types + t];
      }
      const double next = bounds.clamp(
          fit.a_hat[i] + std::log(static_cast<double>(data.out_degree(i))) - std::log(expected));
      const double step = std::abs(next - fit.a_hat[i]);
      fit.a_hat[i] = next;
      if (!(step <= config.a_tolerance)) active[kept++] = i;
    }
    active.resize(kept);
  }
  fit.sweeps = sweep;

  // Slowly contracting agents (links to almost everyone) finish on the same
  // first-order condition by bracketed Newton.
  for (std::size_t i : active) {
    fit.a_hat[i] = solve_agent(i, fit.a_hat[i], c, data, bounds, config.a_tolerance);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (fit.at_bound[i]) continue;
    if (fit.a_hat[i] <= bounds.lo || fit.a_hat[i] >= bounds.hi) {
      fit.at_bound[i] = 1;
      continue;
    }
    // One Newton step on the first-order condition sharpens the fixed point.
    double resid = static_cast<double>(data.out_degree(i)), weight = 0.0;
    for (std::size_t t = 0; t < types; ++t) {
      const double p = logistic(c[data.type(i) * types + t] + fit.a_hat[i]);
      const double m = static_cast<double>(data.trials(i, t));
      resid -= m * p;
      weight += m * p * (1.0 - p);
    }
    if (weight > 0.0) {
      const double polished = fit.a_hat[i] + resid / weight;
      if (polished > bounds.lo && polished < bounds.hi) fit.a_hat[i] = polished;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (fit.at_bound[i]) fit.boundary_agents.push_back(i);
  }
  return fit;
}

Eigen::VectorXd score_at(std::span<const double> beta, std::span<const double> a,
                         const DyadData& data) {
  const auto c = pair_indices(beta, data.regressors());
  const auto q = probabilities(c, a, data);
  const std::size_t types = data.n_types();
  // Residuals aggregate per type pair before meeting the regressors.
  std::vector<double> resid(types * types, 0.0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t t = 0; t < types; ++t) {
      resid[data.type(i) * types + t] +=
          static_cast<double>(data.links(i, t)) -
          static_cast<double>(data.trials(i, t)) * q[i * types + t];
    }
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.dim()));
  for (std::size_t s = 0; s < types; ++s) {
    for (std::size_t t = 0; t < types; ++t) g += resid[s * types + t] * data.regressors().zvec(s, t);
  }
  return g / data.pair_total();
}

Eigen::MatrixXd hessian_at(std::span<const double> beta, const AFit& fit,
                           const DyadData& data) {
  const auto c = pair_indices(beta, data.regressors());
  const auto q = probabilities(c, fit.a_hat, data);
  const std::size_t types = data.n_types();
  const auto dim = static_cast<Eigen::Index>(data.dim());
  const RegressorSet& reg = data.regressors();

  std::vector<double> pair_weight(types * types, 0.0);
  Eigen::MatrixXd correction = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd h(dim);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const std::size_t s = data.type(i);
    double omega = 0.0;
    h.setZero();
    for (std::size_t t = 0; t < types; ++t) {
      const double p = q[i * types + t];
      const double w = static_cast<double>(data.trials(i, t)) * p * (1.0 - p);
      pair_weight[s * types + t] += w;
      omega += w;
      h += w * reg.zvec(s, t);
    }
    if (fit.at_bound[i]) continue;
    if (!(omega > 1e-12)) {
      throw ConvergenceError(fmt::format("singular H_AA block at agent {}", i));
    }
    correction.noalias() += h * h.transpose() / omega;
  }
  Eigen::MatrixXd hbb = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t s = 0; s < types; ++s) {
    for (std::size_t t = 0; t < types; ++t) {
      const auto z = reg.zvec(s, t);
      hbb.noalias() -= pair_weight[s * types + t] * z * z.transpose();
    }
  }
  Eigen::MatrixXd out = (hbb + correction) / data.pair_total();
  // Exact symmetry.
  return 0.5 * (out + out.transpose());
}

double concentrated_loglik(std::span<const double> beta, const DyadData& data,
                           const MleConfig& config) {
  const AFit fit = fixed_point_a(beta, data, config);
  return loglik(beta, fit.a_hat, data);
}

Eigen::VectorXd concentrated_score(std::span<const double> beta, const DyadData& data,
                                   const MleConfig& config) {
  const AFit fit = fixed_point_a(beta, data, config);
  return score_at(beta, fit.a_hat, data);
}

Eigen::MatrixXd concentrated_hessian(std::span<const double> beta, const DyadData& data,
                                     const MleConfig& config) {
  const AFit fit = fixed_point_a(beta, data, config);
  return hessian_at(beta, fit, data);
}

EstimateResult estimate(const DyadData& data, const MleConfig& config) {
  if (!(config.a_tolerance > 0.0) || !(config.beta_tolerance > 0.0)) {
    throw InputError("mle config: tolerances must be positive");
  }
  const std::size_t dim = data.dim();
  std::vector<double> beta = config.beta_init.empty() ? std::vector<double>(dim, 0.0)
                                                      : config.beta_init;
  if (beta.size() != dim) throw InputError("mle config: beta_init has the wrong length");

  EstimateResult result;
  auto finish = [&](const AFit& fit, double ll, double gnorm, bool ok, std::string status) {
    result.beta_hat = beta;
    result.a_hat = fit.a_hat;
    result.boundary_agents = fit.boundary_agents;
    result.loglik = ll;
    result.score_norm = gnorm;
    result.converged = ok;
    result.status = std::move(status);
    return result;
  };

  AFit fit;
  try {
    fit = fixed_point_a(beta, data, config);
  } catch (const ConvergenceError& e) {
    return finish(fit, std::numeric_limits<double>::quiet_NaN(),
                  std::numeric_limits<double>::quiet_NaN(), false, e.what());
  }
  double ll = loglik(beta, fit.a_hat, data);
  double gnorm = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter <= config.beta_max_iterations; ++iter) {
    result.iterations = iter;
    if (!std::isfinite(ll)) return finish(fit, ll, gnorm, false, "non-finite likelihood");
    const Eigen::VectorXd g = score_at(beta, fit.a_hat, data);
    gnorm = g.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(gnorm)) return finish(fit, ll, gnorm, false, "non-finite likelihood");
    if (gnorm <= config.beta_tolerance) return finish(fit, ll, gnorm, true, "converged");
    if (iter == config.beta_max_iterations) break;

    Eigen::MatrixXd neg_h;
    try {
      neg_h = -hessian_at(beta, fit, data);
    } catch (const ConvergenceError& e) {
      return finish(fit, ll, gnorm, false, e.what());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(neg_h);
    const double top = eig.eigenvalues().maxCoeff();
    const double bottom = eig.eigenvalues().minCoeff();
    if (!(top > 0.0) || bottom <= 1e-10 * top) {
      return finish(fit, ll, gnorm, false,
                    fmt::format("singular concentrated Hessian: beta not identified "
                                "(eigenvalue ratio {:.3e})",
                                top > 0.0 ? bottom / top : 0.0));
    }
    const Eigen::VectorXd step = neg_h.ldlt().solve(g);

    bool accepted = false;
    double scale = 1.0;
    for (int halving = 0; halving <= 30; ++halving, scale *= 0.5) {
      std::vector<double> trial(dim);
      for (std::size_t k = 0; k < dim; ++k) trial[k] = beta[k] + scale * step(static_cast<Eigen::Index>(k));
      AFit trial_fit;
      try {
        trial_fit = fixed_point_a(trial, data, config, std::span<const double>(fit.a_hat));
      } catch (const ConvergenceError&) {
        continue;
      }
      const double trial_ll = loglik(trial, trial_fit.a_hat, data);
      if (std::isfinite(trial_ll) && trial_ll >= ll) {
        beta = std::move(trial);
        fit = std::move(trial_fit);
        ll = trial_ll;
        accepted = true;
        break;
      }
    }
    if (!accepted) return finish(fit, ll, gnorm, false, "line search failed");
  }
  return finish(fit, ll, gnorm, false, "no convergence");
}

TwoStepFit fit_two_step(const Network& network, std::span<const TypeIndex> types,
                        const TypeSpace& type_space, const MleConfig& config) {
  FirstStep first = first_step(network, types, type_space);
  std::vector<std::int64_t> counts(type_space.size(), 0);
  for (TypeIndex s : types) ++counts[s];
  DyadData data(build_regressors(first.q_hat, counts, type_space), network, types);
  EstimateResult result = estimate(data, config);
  return {std::move(first), std::move(data), std::move(result)};
}

EstimateResult estimate(const Network& network, std::span<const TypeIndex> types,
                        const TypeSpace& type_space, const MleConfig& config) {
  return fit_two_step(network, types, type_space, config).result;
}

}  // namespace netform
