#pragma once

// Plug-in sandwich variance for the concentrated MLE of beta.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netform/core.hpp"
#include "netform/estimate.hpp"

namespace netform {

struct VarianceReport {
  Eigen::MatrixXd i0_hat;
  Eigen::MatrixXd omega_hat;
  std::vector<double> se;
  std::string method = "analytic-plugin";
};

// -(n(n-1))^-1 sum ZZ'Q(1-Q) + n^-1 sum_i (ratio term) at (beta_hat, a_hat).
// Agents held at a bound are excluded from the ratio term, as in the
// concentrated Hessian.
Eigen::MatrixXd info_matrix(std::span<const double> beta_hat, std::span<const double> a_hat,
                            std::span<const std::uint8_t> at_bound, const DyadData& data);
Eigen::MatrixXd info_matrix(std::span<const double> beta_hat, std::span<const double> a_hat,
                            const DyadData& data);

// Per-agent linearization terms V_i = n^-1 sum_{j != i} M_ij (zeta_ij - Z_ij),
// where zeta_ij carries the realized (G_ji, (n-2)^-1 sum_k G_jk) and
//   M_ij = h_i (Q(1-Q) beta') + Q(1-Q) Z_ij beta' + Q I_d,
//   h_i  = sum_j Q(1-Q) Z_ij / sum_j Q(1-Q).
// Returned as an n x d matrix, one row per agent.
Eigen::MatrixXd linearization_terms(std::span<const double> beta_hat,
                                    std::span<const double> a_hat, const DyadData& data,
                                    const Network& network);

// n^-1 sum_i V_i V_i'.
Eigen::MatrixXd omega_hat(std::span<const double> beta_hat, std::span<const double> a_hat,
                          const DyadData& data, const Network& network);

// se_k = sqrt([I0^-1 Omega I0^-1]_kk / n). Throws InputError on singular I0.
std::vector<double> std_errors(const Eigen::MatrixXd& i0_hat,
                               const Eigen::MatrixXd& omega_hat, std::size_t n);

VarianceReport analytic_variance(const TwoStepFit& fit, const Network& network);

// Sample covariance of replicated estimates; se is the per-coordinate
// standard deviation and i0_hat is left empty.
VarianceReport empirical_variance(const std::vector<std::vector<double>>& draws);

}  // namespace netform
