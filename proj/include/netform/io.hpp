#pragma once

// JSON run configuration and the CSV formats shared by the CLI commands.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netform/core.hpp"
#include "netform/equilibrium.hpp"
#include "netform/estimate.hpp"
#include "netform/mc.hpp"
#include "netform/simulate.hpp"

namespace netform::io {

// Sections: parameters, type_space, scenario, solver, mle, mc. Unknown keys
// and invalid values are collected and reported together.
struct RunConfig {
  ScenarioSpec scenario;  // scenario.params holds the parameters section
  TypeSpace type_space = binary_type_space();
  std::optional<std::vector<std::int64_t>> type_counts;
  SolverConfig solver;
  MleConfig mle;
  mc::McConfig mc;  // scenario, type_space, solver and mle mirror the above
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& config);

// Largest-remainder split of n by the type probabilities.
std::vector<std::int64_t> apportion(std::int64_t n, const std::vector<double>& probabilities);
// Explicit type_counts if given, otherwise the apportioned scenario n.
std::vector<std::int64_t> type_counts_for(const RunConfig& config);

struct Attributes {
  std::vector<TypeIndex> types;
  std::vector<double> a_values;  // NaN where the column is empty
};

// "agent_id,x_value,a_value"; ids must be exactly 0..n-1 in any order.
Attributes read_attributes_csv(std::istream& in, const TypeSpace& type_space);
// "src,dst" with ids in [0, n).
Network read_edges_csv(std::istream& in, std::size_t n);

std::string read_file(const std::string& path);
// Throws InputError if the file cannot be written.
void write_file(const std::string& path, const std::string& contents);

}  // namespace netform::io
