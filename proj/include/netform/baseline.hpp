#pragma once

// Comparison estimator without fixed effects: a pooled logit of G_ij on
// (1, w_ij, q_hat[t_j][t_i], popularity) where A_i is absorbed into the error.

#include <span>
#include <string>
#include <vector>

#include "netform/core.hpp"

namespace netform {

struct LeungResult {
  double intercept = 0.0;
  std::vector<double> slopes;  // aligned with beta
  double loglik = 0.0;         // per ordered pair
  double score_norm = 0.0;     // sup-norm of the per-pair score
  int iterations = 0;
};

struct LeungConfig {
  double tolerance = 1e-10;
  int max_iterations = 100;
  double divergence_bound = 50.0;  // |coefficient| beyond this is treated as separation
};

// Throws InputError on a rank-deficient design and ConvergenceError on
// separation or non-convergence.
LeungResult estimate_leung(const Network& network, std::span<const TypeIndex> types,
                           const TypeSpace& type_space, const BeliefMatrix& q_hat,
                           const LeungConfig& config = {});

}  // namespace netform
