#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "netform/estimate.hpp"
#include "netform/simulate.hpp"
#include "support.hpp"

using namespace netform;
using namespace netform::testing;

namespace {

const TypeSpace kBinary = binary_type_space();
const TypeSpace kThree = three_type_space();

}  // namespace

TEST_CASE("first_step: hand count on three agents") {
  Network g(3);
  g.set(0, 1, true);
  const std::vector<TypeIndex> types{0, 0, 1};
  const auto fs = pair_frequencies(g, types, kBinary);
  CHECK(fs.q_hat(0, 0) == 0.5);
  CHECK(fs.q_hat(0, 1) == 0.0);
  CHECK(fs.q_hat(1, 0) == 0.0);
  CHECK(fs.pair_counts == std::vector<std::int64_t>{2, 2, 2, 0});
  CHECK(std::isnan(fs.q_hat(1, 1)));
  CHECK_THROWS_AS(first_step(g, types, kBinary), InputError);
}

TEST_CASE("first_step: unobserved pair is named") {
  Network g(3);
  CHECK_THROWS_WITH_AS(first_step(g, std::vector<TypeIndex>{0, 0, 1}, kBinary),
                       doctest::Contains("type pair unobserved: (1, 1)"), InputError);
}

TEST_CASE("first_step: complete and empty networks") {
  const std::vector<TypeIndex> types{0, 1, 0, 1, 1};
  Network full(5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      if (i != j) full.set(i, j, true);
    }
  }
  const auto complete = first_step(full, types, kBinary);
  const auto empty = first_step(Network(5), types, kBinary);
  for (double v : complete.q_hat.values()) CHECK(v == 1.0);
  for (double v : empty.q_hat.values()) CHECK(v == 0.0);
}

TEST_CASE("build_regressors: single type reciprocity equals q") {
  const auto ts = TypeSpace::abs_diff({0.0}, {1.0});
  const auto reg = build_regressors(BeliefMatrix(1, 0.42), std::vector<std::int64_t>{7}, ts);
  CHECK(reg.z(0, 0)[1] == 0.42);
  CHECK(reg.z(0, 0)[2] == doctest::Approx(0.42).epsilon(1e-15));
}

TEST_CASE("build_regressors: every ordered pair matches the definition") {
  // n = 3, types (0, 0, 1): hand values for Z_01 and Z_02.
  BeliefMatrix q(2, 0.0);
  q(0, 0) = 0.1;
  q(0, 1) = 0.2;
  q(1, 0) = 0.3;
  q(1, 1) = 0.4;
  const std::vector<TypeIndex> types{0, 0, 1};
  const auto reg = build_regressors(q, std::vector<std::int64_t>{2, 1}, kBinary);
  // Z_01: w = 0, reciprocity q[0][0] = 0.1, popularity over k = 2: q[0][1] = 0.2.
  CHECK(std::vector<double>(reg.z(0, 0).begin(), reg.z(0, 0).end()) ==
        std::vector<double>{0.0, 0.1, 0.2});
  // Z_02: w = 2, reciprocity q[1][0] = 0.3, popularity over k = 1: q[1][0] = 0.3.
  CHECK(reg.z(0, 1)[0] == 2.0);
  CHECK(reg.z(0, 1)[1] == 0.3);
  CHECK(reg.z(0, 1)[2] == doctest::Approx(0.3).epsilon(1e-15));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      const auto expect = pair_regressor(i, j, q, types, kBinary);
      const auto got = reg.z(types[i], types[j]);
      for (std::size_t k = 0; k < 3; ++k) CHECK(got[k] == doctest::Approx(expect[k]).epsilon(1e-15));
    }
  }
}

TEST_CASE("build_regressors: perturbing q moves Z by at most twice as much") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    BeliefMatrix q(3, 0.0), q2(3, 0.0);
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t t = 0; t < 3; ++t) {
        q(s, t) = unif(rng);
        q2(s, t) = std::clamp(q(s, t) + 0.1 * (unif(rng) - 0.5), 0.0, 1.0);
      }
    }
    const std::vector<std::int64_t> counts{4, 7, 5};
    const auto a = build_regressors(q, counts, kThree);
    const auto b = build_regressors(q2, counts, kThree);
    double dz = 0.0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t k = 0; k < 3; ++k) dz = std::max(dz, std::abs(a.z(s, t)[k] - b.z(s, t)[k]));
      }
    }
    CHECK(dz <= 2.0 * q.sup_distance(q2) + 1e-15);
  }
}

TEST_CASE("loglik: beta = 0 and a = 0 gives log one half") {
  const auto inst = random_instance(1, 12, 2);
  const auto data = dyad_data(inst, kBinary);
  CHECK(loglik(std::vector<double>{0.0, 0.0, 0.0}, std::vector<double>(12, 0.0), data) ==
        doctest::Approx(-0.6931471805599453).epsilon(1e-15));
}

TEST_CASE("loglik: agrees with the pairwise sum") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const auto inst = random_instance(100 + static_cast<std::uint64_t>(rep), 6 + static_cast<std::size_t>(rep) * 3, 3);
    const auto data = dyad_data(inst, kThree);
    const auto fs = first_step(inst.network, inst.types, kThree);
    const auto beta = random_beta(rng);
    const double expect = brute_loglik(beta, inst.a_true, inst.network, inst.types, kThree, fs.q_hat);
    CHECK(loglik(beta, inst.a_true, data) == doctest::Approx(expect).epsilon(1e-13));
    CHECK(loglik(beta, inst.a_true, data) < 0.0);
  }
}

TEST_CASE("loglik: invariant to relabelling agents") {
  const auto inst = random_instance(21, 15, 3);
  std::vector<std::size_t> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(2);
  std::shuffle(perm.begin(), perm.end(), rng);
  Instance moved;
  moved.types.resize(15);
  moved.a_true.resize(15);
  moved.network = Network(15);
  for (std::size_t i = 0; i < 15; ++i) {
    moved.types[perm[i]] = inst.types[i];
    moved.a_true[perm[i]] = inst.a_true[i];
    for (std::size_t j = 0; j < 15; ++j) {
      if (inst.network(i, j)) moved.network.set(perm[i], perm[j], true);
    }
  }
  const std::vector<double> beta{-0.7, 0.4, 0.9};
  CHECK(loglik(beta, inst.a_true, dyad_data(inst, kThree)) ==
        doctest::Approx(loglik(beta, moved.a_true, dyad_data(moved, kThree))).epsilon(1e-14));
}

TEST_CASE("fixed_point_a: intercept-only closed form") {
  const auto inst = random_instance(3, 25, 2);
  const auto data = dyad_data(inst, kBinary);
  const auto fit = fixed_point_a(std::vector<double>{0.0, 0.0, 0.0}, data, {});
  const double m = 24.0;
  for (std::size_t i = 0; i < 25; ++i) {
    const double d = static_cast<double>(inst.network.out_degree(i));
    if (d == 0.0 || d == m) continue;
    CHECK(std::abs(fit.a_hat[i] - std::log(d / (m - d))) <= 1e-10);
  }
}

TEST_CASE("fixed_point_a: degenerate out-degrees are pinned and flagged") {
  auto inst = random_instance(6, 10, 2);
  for (std::size_t j = 0; j < 10; ++j) {
    if (j != 3) inst.network.set(3, j, false);
    if (j != 4) inst.network.set(4, j, true);
  }
  const auto data = dyad_data(inst, kBinary);
  const auto fit = fixed_point_a(std::vector<double>{-1.0, 0.5, 0.5}, data, {});
  CHECK(fit.a_hat[3] == -8.0);
  CHECK(fit.a_hat[4] == 8.0);
  CHECK(std::find(fit.boundary_agents.begin(), fit.boundary_agents.end(), 3u) != fit.boundary_agents.end());
  CHECK(std::find(fit.boundary_agents.begin(), fit.boundary_agents.end(), 4u) != fit.boundary_agents.end());
}

TEST_CASE("fixed_point_a: matches per-agent Newton and satisfies the first-order condition") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = random_instance(200 + static_cast<std::uint64_t>(rep), 30, 3);
    const auto data = dyad_data(inst, kThree);
    const auto fs = first_step(inst.network, inst.types, kThree);
    const auto beta = random_beta(rng);
    const auto fit = fixed_point_a(beta, data, {});
    for (std::size_t i = 0; i < 30; ++i) {
      const double oracle = agent_newton(i, beta, inst.network, inst.types, kThree, fs.q_hat, -8.0, 8.0);
      CHECK(std::abs(fit.a_hat[i] - oracle) <= 1e-8);
      if (fit.at_bound[i]) continue;
      double foc = 0.0;
      for (std::size_t j = 0; j < 30; ++j) {
        if (j == i) continue;
        const auto z = pair_regressor(i, j, fs.q_hat, inst.types, kThree);
        foc += inst.network(i, j) - 1.0 / (1.0 + std::exp(-(dot(z, beta) + fit.a_hat[i])));
      }
      CHECK(std::abs(foc) <= 1e-8);
    }
  }
}

TEST_CASE("concentrated score: central differences on random instances") {
  std::mt19937_64 rng(31);
  const MleConfig cfg;
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = random_instance(300 + static_cast<std::uint64_t>(rep), 30, 3);
    const auto data = dyad_data(inst, kThree);
    const auto beta = random_beta(rng);
    const auto g = concentrated_score(beta, data, cfg);
    const auto fd = central_gradient(
        [&](const std::vector<double>& b) { return concentrated_loglik(b, data, cfg); }, beta, 1e-5);
    std::vector<double> diff(3), gv(3);
    for (std::size_t k = 0; k < 3; ++k) {
      diff[k] = g(static_cast<Eigen::Index>(k)) - fd[k];
      gv[k] = g(static_cast<Eigen::Index>(k));
    }
    CHECK(sup(diff) <= 1e-6 * sup(gv));
  }
}

TEST_CASE("concentrated score: envelope and pairwise score agree") {
  const auto inst = random_instance(41, 20, 3);
  const auto data = dyad_data(inst, kThree);
  const auto fs = first_step(inst.network, inst.types, kThree);
  const std::vector<double> beta{-0.8, 0.3, 0.6};
  const auto fit = fixed_point_a(beta, data, {});
  const auto total = score_at(beta, fit.a_hat, data);
  const auto conc = concentrated_score(beta, data, {});
  std::vector<double> brute(3, 0.0);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 20; ++j) {
      if (i == j) continue;
      const auto z = pair_regressor(i, j, fs.q_hat, inst.types, kThree);
      const double r = inst.network(i, j) - 1.0 / (1.0 + std::exp(-(dot(z, beta) + fit.a_hat[i])));
      for (std::size_t k = 0; k < 3; ++k) brute[k] += r * z[k] / (20.0 * 19.0);
    }
  }
  for (Eigen::Index k = 0; k < 3; ++k) {
    CHECK(total(k) == conc(k));
    CHECK(total(k) == doctest::Approx(brute[static_cast<std::size_t>(k)]).epsilon(1e-11));
  }
}

TEST_CASE("concentrated hessian: differences of the score, symmetry") {
  std::mt19937_64 rng(37);
  const MleConfig cfg;
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = random_instance(400 + static_cast<std::uint64_t>(rep), 30, 3);
    const auto data = dyad_data(inst, kThree);
    const auto beta = random_beta(rng);
    const Eigen::MatrixXd h = concentrated_hessian(beta, data, cfg);
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const double scale = h.cwiseAbs().maxCoeff();
    for (std::size_t k = 0; k < 3; ++k) {
      const auto col = central_gradient(
          [&](const std::vector<double>& b) { return concentrated_score(b, data, cfg)(static_cast<Eigen::Index>(k)); },
          beta, 1e-5);
      for (std::size_t l = 0; l < 3; ++l) {
        CHECK(std::abs(h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) - col[l]) <= 1e-5 * scale);
      }
    }
  }
}

TEST_CASE("concentrated hessian: hand-assembled blocks on four agents") {
  Network g(4);
  g.set(0, 1, true);
  g.set(0, 2, true);
  g.set(1, 2, true);
  g.set(2, 0, true);
  g.set(3, 1, true);
  const std::vector<TypeIndex> types{0, 0, 1, 1};
  const Instance inst{types, g, {}};
  const auto data = dyad_data(inst, kBinary);
  const auto fs = first_step(g, types, kBinary);
  const std::vector<double> beta{-0.4, 0.2, 0.3};
  const auto fit = fixed_point_a(beta, data, {});
  // H_bb - sum_i H_bAi H_bAi' / H_AiAi from the pairwise terms.
  Eigen::Matrix3d hbb = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d correction = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < 4; ++i) {
    Eigen::Vector3d hba = Eigen::Vector3d::Zero();
    double haa = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == j) continue;
      const auto zv = pair_regressor(i, j, fs.q_hat, types, kBinary);
      const Eigen::Vector3d z(zv[0], zv[1], zv[2]);
      const double p = 1.0 / (1.0 + std::exp(-(dot(zv, beta) + fit.a_hat[i])));
      const double w = p * (1.0 - p);
      hbb -= w * z * z.transpose();
      hba -= w * z;
      haa -= w;
    }
    if (!fit.at_bound[i]) correction += hba * hba.transpose() / haa;
  }
  const Eigen::Matrix3d expect = (hbb - correction) / 12.0;
  const Eigen::MatrixXd got = concentrated_hessian(beta, data, {});
  CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("estimate: identified design converges with zero score and beats the truth") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto spec = three_type_spec(200, seed);
    const auto sim = simulate(spec, kThree);
    const auto fit = fit_two_step(sim.network, sim.population.types(), kThree, {});
    REQUIRE(fit.result.converged);
    CHECK(fit.result.status == "converged");
    CHECK(fit.result.score_norm <= 1e-9);
    CHECK(concentrated_score(fit.result.beta_hat, fit.data, {}).lpNorm<Eigen::Infinity>() <= 1e-9);
    const double at_truth = loglik(spec.params.beta, sim.population.fixed_effects(), fit.data);
    CHECK(at_truth <= fit.result.loglik);
    for (double b : fit.result.beta_hat) CHECK(std::isfinite(b));
  }
}

TEST_CASE("estimate: Newton steps never lower the concentrated likelihood") {
  const auto sim = simulate(three_type_spec(150, 4), kThree);
  const auto fs = first_step(sim.network, sim.population.types(), kThree);
  std::vector<std::int64_t> counts(3, 0);
  for (auto s : sim.population.types()) ++counts[s];
  const DyadData data(build_regressors(fs.q_hat, counts, kThree), sim.network, sim.population.types());
  double prev = -1e300;
  for (int iters = 0; iters <= 6; ++iters) {
    MleConfig cfg;
    cfg.beta_max_iterations = iters;
    const auto r = estimate(data, cfg);
    CHECK(r.loglik >= prev - 1e-15);
    prev = r.loglik;
  }
}

TEST_CASE("estimate: two-point support leaves beta unidentified") {
  // With two covariate values the within-agent contrasts span one direction
  // fewer than beta has coordinates.
  const auto sim = simulate(preset_scenario(1, 100, 1), kBinary);
  const auto r = estimate(sim.network, sim.population.types(), kBinary, {});
  CHECK_FALSE(r.converged);
  CHECK(r.status.find("singular concentrated Hessian") != std::string::npos);
}

TEST_CASE("estimate: iteration budget exhaustion is reported") {
  const auto sim = simulate(three_type_spec(150, 5), kThree);
  MleConfig cfg;
  cfg.beta_max_iterations = 1;
  const auto r = estimate(sim.network, sim.population.types(), kThree, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.status == "no convergence");
  MleConfig bad;
  bad.beta_init = {1.0};
  CHECK_THROWS_AS(estimate(sim.network, sim.population.types(), kThree, bad), InputError);
}
