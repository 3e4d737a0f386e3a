#include <doctest.h>

#include <cmath>

#include "netform/baseline.hpp"
#include "netform/estimate.hpp"
#include "netform/inference.hpp"
#include "netform/simulate.hpp"
#include "support.hpp"

using namespace netform;
using namespace netform::testing;

namespace {

const TypeSpace kThree = three_type_space();

// Per-pair pooled-logit score at the returned coefficients.
std::vector<double> pooled_score(const LeungResult& r, const Network& g,
                                 const std::vector<TypeIndex>& types, const BeliefMatrix& q) {
  const std::size_t n = types.size();
  std::vector<double> score(4, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      auto z = pair_regressor(i, j, q, types, kThree);
      z.insert(z.begin(), 1.0);
      std::vector<double> b{r.intercept};
      b.insert(b.end(), r.slopes.begin(), r.slopes.end());
      const double resid = g(i, j) - 1.0 / (1.0 + std::exp(-dot(z, b)));
      for (std::size_t k = 0; k < 4; ++k) score[k] += resid * z[k];
    }
  }
  for (auto& s : score) s /= static_cast<double>(n * (n - 1));
  return score;
}

}  // namespace

TEST_CASE("estimate_leung: pooled score vanishes at the estimate") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto sim = simulate(three_type_spec(150, seed), kThree);
    const auto& types = sim.population.types();
    const auto fs = first_step(sim.network, types, kThree);
    const auto r = estimate_leung(sim.network, types, kThree, fs.q_hat);
    REQUIRE(r.slopes.size() == 3);
    CHECK(r.score_norm <= 1e-9);
    for (double s : pooled_score(r, sim.network, types, fs.q_hat)) CHECK(std::abs(s) <= 1e-9);
  }
}

TEST_CASE("estimate_leung: recovers beta when the fixed effect is a constant") {
  // A = c for everyone: the pooled logit is correctly specified with the
  // intercept absorbing c.
  double sum[3] = {0.0, 0.0, 0.0};
  double intercept = 0.0;
  const int reps = 30;
  for (int rep = 0; rep < reps; ++rep) {
    auto spec = three_type_spec(400, 50 + static_cast<std::uint64_t>(rep));
    spec.laws = {{-0.5, 0.0}, {-0.5, 0.0}, {-0.5, 0.0}};
    spec.var_a = spec.var_V = 0.0;
    const auto sim = simulate(spec, kThree);
    const auto fs = first_step(sim.network, sim.population.types(), kThree);
    const auto r = estimate_leung(sim.network, sim.population.types(), kThree, fs.q_hat);
    for (int k = 0; k < 3; ++k) sum[k] += r.slopes[static_cast<std::size_t>(k)] / reps;
    intercept += r.intercept / reps;
  }
  CHECK(sum[0] == doctest::Approx(-1.0).epsilon(0.05));
  CHECK(std::abs(sum[1] - 0.8) <= 0.25);
  CHECK(std::abs(sum[2] - 1.2) <= 0.25);
  CHECK(std::abs(intercept + 0.5) <= 0.25);
}

TEST_CASE("estimate_leung: separation and rank deficiency are errors") {
  // Every pair linked: the MLE is at infinity.
  Network full(6);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      if (i != j) full.set(i, j, true);
    }
  }
  const std::vector<TypeIndex> types{0, 1, 2, 0, 1, 2};
  const auto fs = first_step(full, types, kThree);
  CHECK_THROWS_AS(estimate_leung(full, types, kThree, fs.q_hat), std::runtime_error);

  // Constant beliefs make the reciprocity column collinear with the intercept.
  const auto inst = random_instance(3, 12, 3);
  CHECK_THROWS_AS(estimate_leung(inst.network, inst.types, kThree, BeliefMatrix(3, 0.4)), InputError);
}

TEST_CASE("estimate_leung: agrees with the main estimator when the fixed effect is constant") {
  const int reps = 40;
  std::vector<std::vector<double>> main_draws, leung_draws;
  for (int rep = 0; rep < reps; ++rep) {
    auto spec = three_type_spec(500, 900 + static_cast<std::uint64_t>(rep));
    spec.laws = {{-0.5, 0.0}, {-0.5, 0.0}, {-0.5, 0.0}};
    spec.var_a = spec.var_V = 0.0;
    const auto sim = simulate(spec, kThree);
    const auto& types = sim.population.types();
    const auto main = fit_two_step(sim.network, types, kThree, {});
    if (!main.result.converged) continue;
    const auto leung = estimate_leung(sim.network, types, kThree, main.first.q_hat);
    main_draws.push_back(main.result.beta_hat);
    leung_draws.push_back(leung.slopes);
  }
  REQUIRE(main_draws.size() >= 30);
  const double m = static_cast<double>(main_draws.size());
  const auto se_main = empirical_variance(main_draws).se;
  const auto se_leung = empirical_variance(leung_draws).se;
  for (std::size_t k = 0; k < 3; ++k) {
    double gap = 0.0;
    for (std::size_t r = 0; r < main_draws.size(); ++r) {
      gap += (leung_draws[r][k] - main_draws[r][k]) / m;
    }
    const double joint = std::sqrt((se_main[k] * se_main[k] + se_leung[k] * se_leung[k]) / m);
    CAPTURE(k);
    CHECK(std::abs(gap) <= 2.0 * joint);
  }
}
