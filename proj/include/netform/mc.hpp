#pragma once

// Monte Carlo harness: replications over an n grid, deterministic seeding,
// worker pool, and table-style summaries.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "netform/equilibrium.hpp"
#include "netform/estimate.hpp"
#include "netform/simulate.hpp"

namespace netform::mc {

struct McConfig {
  ScenarioSpec scenario;
  TypeSpace type_space = binary_type_space();
  std::vector<int> n_list{100};
  int replications = 200;
  std::uint64_t base_seed = 1;
  bool run_main = true;
  bool run_leung = true;
  bool analytic_se = true;
  int workers = 1;
  int quadrature_nodes = 15;
  SolverConfig solver;
  MleConfig mle;
};

void validate(const McConfig& config);

// Seed of replication `rep` at agent count n. Independent of the worker count.
std::uint64_t replication_seed(std::uint64_t base_seed, int n, int rep);

struct Row {
  std::string estimator;  // "main" or "leung"
  int n = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  std::string status;
  std::vector<double> beta_hat;  // empty on failure
  std::vector<double> se;        // main estimator only, may be empty
  std::optional<double> intercept;
  int iterations = 0;
  double seconds = 0.0;  // wall time, kept out of the deterministic tables
};

// One row per replication and requested estimator, ordered by
// (n, replication, estimator).
std::vector<Row> run(const McConfig& config);

struct Cell {
  std::string estimator;
  int n = 0;
  std::string coordinate;
  std::optional<double> mean;
  std::optional<double> quantile_sd;
  int replications = 0;
  int failures = 0;
};

inline constexpr double kZ95 = 1.6448536269514722;

// Linear interpolation between order statistics (type 7).
double quantile(std::vector<double> values, double p);
// (Q_0.95 - Q_0.05) / (2 z_0.95).
double quantile_sd(const std::vector<double>& values);

// Cells with fewer than two successes have no mean or quantile_sd.
std::vector<Cell> summarize(const std::vector<Row>& rows, std::size_t dim);

void write_raw_csv(std::ostream& out, const std::vector<Row>& rows, std::size_t dim,
                   const std::string& scenario);
void write_summary_csv(std::ostream& out, const std::vector<Cell>& cells);
void write_timings_csv(std::ostream& out, const std::vector<Row>& rows);

std::string sha256_hex(const std::string& bytes);

}  // namespace netform::mc
