#include "netform/baseline.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "netform/estimate.hpp"

namespace netform {
namespace {

// Regressors and sufficient statistics are constant within an ordered type
// pair, so the pooled likelihood is a grouped binomial over the T^2 cells.
struct Cells {
  Eigen::MatrixXd x;      // cells x (1 + dim)
  Eigen::VectorXd links;  // successes per cell
  Eigen::VectorXd pairs;  // trials per cell
};

double cell_loglik(const Cells& c, const Eigen::VectorXd& b) {
  const Eigen::VectorXd eta = c.x * b;
  double ll = 0.0;
  for (Eigen::Index r = 0; r < eta.size(); ++r) {
    ll += c.links(r) * log_logistic(eta(r)) + (c.pairs(r) - c.links(r)) * log_logistic(-eta(r));
  }
  return ll;
}

}  // namespace

LeungResult estimate_leung(const Network& network, std::span<const TypeIndex> types,
                           const TypeSpace& type_space, const BeliefMatrix& q_hat,
                           const LeungConfig& config) {
  const std::size_t k = type_space.size();
  if (q_hat.n_types() != k) throw InputError("estimate_leung: q_hat has the wrong dimension");
  const FirstStep first = first_step(network, types, type_space);
  std::vector<std::int64_t> counts(k, 0);
  for (TypeIndex s : types) ++counts[s];
  const RegressorSet reg = build_regressors(q_hat, counts, type_space);

  const auto dim = static_cast<Eigen::Index>(reg.dim());
  const auto cells = static_cast<Eigen::Index>(k * k);
  Cells c{Eigen::MatrixXd(cells, dim + 1), Eigen::VectorXd(cells), Eigen::VectorXd(cells)};
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      const auto r = static_cast<Eigen::Index>(s * k + t);
      c.x(r, 0) = 1.0;
      c.x.row(r).tail(dim) = reg.zvec(s, t).transpose();
      c.links(r) = static_cast<double>(first.link_counts[s * k + t]);
      c.pairs(r) = static_cast<double>(first.pair_counts[s * k + t]);
    }
  }
  const double total = c.pairs.sum();

  Eigen::FullPivLU<Eigen::MatrixXd> rank_check(c.x);
  if (rank_check.rank() < dim + 1) {
    throw InputError(fmt::format("estimate_leung: design has rank {} < {}", rank_check.rank(),
                                 dim + 1));
  }

  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim + 1);
  double ll = cell_loglik(c, b);
  LeungResult out;
  for (int iter = 0; iter <= config.max_iterations; ++iter) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim + 1);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
    const Eigen::VectorXd eta = c.x * b;
    for (Eigen::Index r = 0; r < cells; ++r) {
      const double p = logistic(eta(r));
      g += (c.links(r) - c.pairs(r) * p) * c.x.row(r).transpose();
      info += c.pairs(r) * p * (1.0 - p) * c.x.row(r).transpose() * c.x.row(r);
    }
    g /= total;
    info /= total;
    out.iterations = iter;
    out.score_norm = g.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(out.score_norm)) {
      throw ConvergenceError("estimate_leung: non-finite score");
    }
    if (out.score_norm <= config.tolerance) break;
    if (iter == config.max_iterations) {
      throw ConvergenceError("estimate_leung: no convergence");
    }
    const Eigen::VectorXd step = info.ldlt().solve(g);
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, scale *= 0.5) {
      const Eigen::VectorXd trial = b + scale * step;
      const double trial_ll = cell_loglik(c, trial);
      if (std::isfinite(trial_ll) && trial_ll >= ll) {
        b = trial;
        ll = trial_ll;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw ConvergenceError("estimate_leung: line search failed");
    if (b.lpNorm<Eigen::Infinity>() > config.divergence_bound) {
      throw ConvergenceError("estimate_leung: separation (coefficients diverge)");
    }
  }
  out.intercept = b(0);
  out.slopes.assign(b.data() + 1, b.data() + b.size());
  out.loglik = ll / total;
  return out;
}

}  // namespace netform
