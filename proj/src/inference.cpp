#include "netform/inference.hpp"

#include <cmath>

#include <fmt/format.h>

#include "netform/kernels.hpp"

namespace netform {
namespace {

double fitted(const DyadData& data, std::span<const double> beta, std::span<const double> a,
              std::size_t i, std::size_t t) {
  return logistic(data.regressors().index(data.type(i), t, beta) + a[i]);
}

void check_sizes(std::span<const double> beta, std::span<const double> a, const DyadData& data) {
  if (beta.size() != data.dim() || a.size() != data.n()) {
    throw InputError("inference: beta or a_hat has the wrong length");
  }
}

}  // namespace

Eigen::MatrixXd info_matrix(std::span<const double> beta_hat, std::span<const double> a_hat,
                            std::span<const std::uint8_t> at_bound, const DyadData& data) {
  check_sizes(beta_hat, a_hat, data);
  const auto dim = static_cast<Eigen::Index>(data.dim());
  const double n = static_cast<double>(data.n());
  const double m = n - 1.0;
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd ratio = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd h(dim);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const std::size_t s = data.type(i);
    double denom = 0.0;
    h.setZero();
    for (std::size_t t = 0; t < data.n_types(); ++t) {
      const double q = fitted(data, beta_hat, a_hat, i, t);
      const double w = static_cast<double>(data.trials(i, t)) * q * (1.0 - q);
      const auto z = data.regressors().zvec(s, t);
      outer.noalias() += w * z * z.transpose();
      h += w * z;
      denom += w;
    }
    if (!at_bound.empty() && at_bound[i]) continue;
    if (!(denom > 0.0)) throw InputError(fmt::format("info_matrix: zero denominator at agent {}", i));
    // ((n-1)^-1 h)((n-1)^-1 h)' / ((n-1)^-1 denom)
    ratio.noalias() += (h / m) * (h / m).transpose() / (denom / m);
  }
  Eigen::MatrixXd out = -outer / (n * m) + ratio / n;
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd info_matrix(std::span<const double> beta_hat, std::span<const double> a_hat,
                            const DyadData& data) {
  return info_matrix(beta_hat, a_hat, {}, data);
}

Eigen::MatrixXd linearization_terms(std::span<const double> beta_hat,
                                    std::span<const double> a_hat, const DyadData& data,
                                    const Network& network) {
  check_sizes(beta_hat, a_hat, data);
  if (network.n() != data.n()) throw InputError("inference: network size differs from data");
  const std::size_t n = data.n();
  const std::size_t types = data.n_types();
  const auto dim = static_cast<Eigen::Index>(data.dim());
  const auto& reg = data.regressors();

  // In-links of each agent by source type, and out-degree totals by type.
  const Network transposed = network.transposed();
  const auto in_links = link_tallies(transposed, data.types(), types);
  std::vector<double> degree_by_type(types, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    degree_by_type[data.type(j)] += static_cast<double>(data.out_degree(j));
  }

  const Eigen::Map<const Eigen::RowVectorXd> beta_row(beta_hat.data(), dim);
  Eigen::MatrixXd v(static_cast<Eigen::Index>(n), dim);
  Eigen::VectorXd h(dim), delta(dim), vi(dim);
  std::vector<double> q(types);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = data.type(i);
    double denom = 0.0;
    h.setZero();
    for (std::size_t t = 0; t < types; ++t) {
      q[t] = fitted(data, beta_hat, a_hat, i, t);
      const double w = static_cast<double>(data.trials(i, t)) * q[t] * (1.0 - q[t]);
      h += w * reg.zvec(s, t);
      denom += w;
    }
    if (denom > 0.0) h /= denom;

    vi.setZero();
    for (std::size_t t = 0; t < types; ++t) {
      const double trials = static_cast<double>(data.trials(i, t));
      if (trials == 0.0) continue;
      const auto z = reg.zvec(s, t);
      const double received = static_cast<double>(in_links[i * types + t]);
      const double others_degree =
          degree_by_type[t] - (t == s ? static_cast<double>(data.out_degree(i)) : 0.0);
      delta.setZero();
      delta(dim - 2) = received - trials * z(dim - 2);
      delta(dim - 1) =
          (others_degree - received) / static_cast<double>(n - 2) - trials * z(dim - 1);
      const double qq = q[t] * (1.0 - q[t]);
      // M delta with M = qq (h + z) beta' + q I.
      vi += qq * (h + z) * beta_row.dot(delta) + q[t] * delta;
    }
    v.row(static_cast<Eigen::Index>(i)) = vi.transpose() / static_cast<double>(n);
  }
  return v;
}

Eigen::MatrixXd omega_hat(std::span<const double> beta_hat, std::span<const double> a_hat,
                          const DyadData& data, const Network& network) {
  const Eigen::MatrixXd v = linearization_terms(beta_hat, a_hat, data, network);
  Eigen::MatrixXd out = v.transpose() * v / static_cast<double>(data.n());
  return 0.5 * (out + out.transpose());
}

std::vector<double> std_errors(const Eigen::MatrixXd& i0_hat,
                               const Eigen::MatrixXd& omega_hat, std::size_t n) {
  if (i0_hat.rows() != i0_hat.cols() || omega_hat.rows() != i0_hat.rows() ||
      omega_hat.cols() != i0_hat.cols() || n == 0) {
    throw InputError("std_errors: shape mismatch");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(i0_hat);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw InputError("std_errors: i0_hat is singular");
  const Eigen::MatrixXd inv = lu.inverse();
  const Eigen::MatrixXd cov = inv * omega_hat * inv.transpose();
  std::vector<double> se(static_cast<std::size_t>(cov.rows()));
  for (Eigen::Index k = 0; k < cov.rows(); ++k) {
    se[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, cov(k, k)) / static_cast<double>(n));
  }
  return se;
}

VarianceReport analytic_variance(const TwoStepFit& fit, const Network& network) {
  const auto& r = fit.result;
  std::vector<std::uint8_t> at_bound(fit.data.n(), 0);
  for (std::size_t i : r.boundary_agents) at_bound[i] = 1;
  VarianceReport report;
  report.i0_hat = info_matrix(r.beta_hat, r.a_hat, at_bound, fit.data);
  report.omega_hat = omega_hat(r.beta_hat, r.a_hat, fit.data, network);
  report.se = std_errors(report.i0_hat, report.omega_hat, fit.data.n());
  return report;
}

VarianceReport empirical_variance(const std::vector<std::vector<double>>& draws) {
  if (draws.size() < 2) throw InputError("empirical_variance: need at least two draws");
  const auto dim = static_cast<Eigen::Index>(draws.front().size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(draws.size()), dim);
  for (std::size_t r = 0; r < draws.size(); ++r) {
    if (static_cast<Eigen::Index>(draws[r].size()) != dim) {
      throw InputError("empirical_variance: draws differ in length");
    }
    x.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Eigen::RowVectorXd>(draws[r].data(), dim);
  }
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  VarianceReport report;
  report.method = "mc-empirical";
  report.omega_hat = centered.transpose() * centered / static_cast<double>(draws.size() - 1);
  for (Eigen::Index k = 0; k < dim; ++k) report.se.push_back(std::sqrt(report.omega_hat(k, k)));
  return report;
}

}  // namespace netform
