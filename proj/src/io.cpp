#include "netform/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace netform::io {
namespace {

using nlohmann::json;

// Collects every violation so the user sees them all at once.
class Reader {
 public:
  void check_keys(const json& obj, const std::string& section,
                  std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
      errors_.push_back(fmt::format("{}: expected an object", section));
      return;
    }
    for (const auto& [key, value] : obj.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        errors_.push_back(fmt::format("{}.{}: unknown key", section, key));
      }
    }
  }

  template <typename T>
  void get(const json& obj, const std::string& section, const char* key, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      errors_.push_back(fmt::format("{}.{}: wrong type", section, key));
    }
  }

  void fail(std::string message) { errors_.push_back(std::move(message)); }
  void finish() const {
    if (errors_.empty()) return;
    std::string msg = "invalid config:";
    for (const auto& e : errors_) msg += "\n  " + e;
    throw InputError(msg);
  }

 private:
  std::vector<std::string> errors_;
};

const json& section(const json& doc, const char* name) {
  static const json empty = json::object();
  return doc.contains(name) ? doc.at(name) : empty;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  return s.substr(start);
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw InputError(fmt::format("{}: cannot parse '{}'", what, text));
  }
  return value;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw InputError("invalid config: top level must be an object");
  Reader r;
  r.check_keys(doc, "config", {"parameters", "type_space", "scenario", "solver", "mle", "mc"});

  RunConfig cfg;
  const json& scen = section(doc, "scenario");
  r.check_keys(scen, "scenario",
               {"preset", "name", "alpha_L", "alpha_H", "gamma", "var_a", "var_V", "n", "seed",
                "laws", "type_counts"});
  int preset = 0;
  r.get(scen, "scenario", "preset", preset);
  if (preset != 0) {
    try {
      cfg.scenario = preset_scenario(preset, cfg.scenario.n, cfg.scenario.seed);
    } catch (const InputError& e) {
      r.fail(fmt::format("scenario.preset: {}", e.what()));
    }
  }
  r.get(scen, "scenario", "name", cfg.scenario.name);
  r.get(scen, "scenario", "alpha_L", cfg.scenario.alpha_L);
  r.get(scen, "scenario", "alpha_H", cfg.scenario.alpha_H);
  r.get(scen, "scenario", "gamma", cfg.scenario.gamma);
  r.get(scen, "scenario", "var_a", cfg.scenario.var_a);
  r.get(scen, "scenario", "var_V", cfg.scenario.var_V);
  r.get(scen, "scenario", "n", cfg.scenario.n);
  r.get(scen, "scenario", "seed", cfg.scenario.seed);
  if (scen.is_object() && scen.contains("laws")) {
    const json& laws = scen.at("laws");
    if (!laws.is_array()) {
      r.fail("scenario.laws: expected an array");
    } else {
      for (const auto& law : laws) {
        r.check_keys(law, "scenario.laws[]", {"mean", "gamma"});
        FixedEffectLaw l;
        r.get(law, "scenario.laws[]", "mean", l.mean);
        r.get(law, "scenario.laws[]", "gamma", l.gamma);
        cfg.scenario.laws.push_back(l);
      }
    }
  }
  if (scen.is_object() && scen.contains("type_counts")) {
    std::vector<std::int64_t> counts;
    r.get(scen, "scenario", "type_counts", counts);
    cfg.type_counts = counts;
  }
  if (cfg.scenario.n < 3) r.fail("scenario.n: must be at least 3");
  if (!(cfg.scenario.var_a >= 0.0)) r.fail("scenario.var_a: must be nonnegative");
  if (!(cfg.scenario.var_V >= 0.0)) r.fail("scenario.var_V: must be nonnegative");

  const json& par = section(doc, "parameters");
  r.check_keys(par, "parameters", {"beta", "a_bounds"});
  r.get(par, "parameters", "beta", cfg.scenario.params.beta);
  if (par.is_object() && par.contains("a_bounds")) {
    std::vector<double> b;
    r.get(par, "parameters", "a_bounds", b);
    if (b.size() != 2 || !(b[0] < b[1])) {
      r.fail("parameters.a_bounds: expected [lo, hi] with lo < hi");
    } else {
      cfg.scenario.params.a_bounds = {b[0], b[1]};
    }
  }
  if (cfg.scenario.params.beta.size() < 3) r.fail("parameters.beta: needs at least 3 entries");

  const json& ts = section(doc, "type_space");
  r.check_keys(ts, "type_space", {"support", "probabilities", "w"});
  if (ts.is_object() && !ts.empty()) {
    std::vector<double> support{-1.0, 1.0}, probs{0.5, 0.5};
    r.get(ts, "type_space", "support", support);
    r.get(ts, "type_space", "probabilities", probs);
    try {
      if (!ts.contains("w") || ts.at("w") == "abs_diff") {
        cfg.type_space = TypeSpace::abs_diff(support, probs);
      } else {
        // One list of w_dim values per ordered pair (s, t), row-major.
        std::vector<std::vector<double>> rows;
        r.get(ts, "type_space", "w", rows);
        const std::size_t w_dim = rows.empty() ? 0 : rows.front().size();
        std::vector<double> flat;
        for (const auto& row : rows) {
          if (row.size() != w_dim) r.fail("type_space.w: rows differ in length");
          flat.insert(flat.end(), row.begin(), row.end());
        }
        if (rows.size() != support.size() * support.size()) {
          r.fail("type_space.w: expected one row per ordered type pair");
        } else {
          cfg.type_space = TypeSpace(support, probs, w_dim, flat);
        }
      }
    } catch (const InputError& e) {
      r.fail(fmt::format("type_space: {}", e.what()));
    }
  }

  const json& sol = section(doc, "solver");
  r.check_keys(sol, "solver", {"tolerance", "max_iterations", "damping", "multistart_count"});
  r.get(sol, "solver", "tolerance", cfg.solver.tolerance);
  r.get(sol, "solver", "max_iterations", cfg.solver.max_iterations);
  r.get(sol, "solver", "damping", cfg.solver.damping);
  r.get(sol, "solver", "multistart_count", cfg.solver.multistart_count);
  if (!(cfg.solver.tolerance > 0.0)) r.fail("solver.tolerance: must be positive");
  if (cfg.solver.max_iterations < 1) r.fail("solver.max_iterations: must be positive");
  if (!(cfg.solver.damping > 0.0 && cfg.solver.damping <= 1.0)) {
    r.fail("solver.damping: must lie in (0, 1]");
  }
  if (cfg.solver.multistart_count < 1) r.fail("solver.multistart_count: must be positive");

  const json& mle = section(doc, "mle");
  r.check_keys(mle, "mle", {"a_tolerance", "a_max_iterations", "beta_tolerance",
                            "beta_max_iterations", "beta_init"});
  r.get(mle, "mle", "a_tolerance", cfg.mle.a_tolerance);
  r.get(mle, "mle", "a_max_iterations", cfg.mle.a_max_iterations);
  r.get(mle, "mle", "beta_tolerance", cfg.mle.beta_tolerance);
  r.get(mle, "mle", "beta_max_iterations", cfg.mle.beta_max_iterations);
  r.get(mle, "mle", "beta_init", cfg.mle.beta_init);
  cfg.mle.a_bounds = cfg.scenario.params.a_bounds;
  if (!(cfg.mle.a_tolerance > 0.0)) r.fail("mle.a_tolerance: must be positive");
  if (!(cfg.mle.beta_tolerance > 0.0)) r.fail("mle.beta_tolerance: must be positive");
  if (!cfg.mle.beta_init.empty() && cfg.mle.beta_init.size() != cfg.scenario.params.beta.size()) {
    r.fail("mle.beta_init: length differs from parameters.beta");
  }

  const json& mc = section(doc, "mc");
  r.check_keys(mc, "mc", {"n_list", "replications", "base_seed", "estimators", "workers",
                          "analytic_se", "quadrature_nodes"});
  cfg.mc.n_list = {cfg.scenario.n};
  r.get(mc, "mc", "n_list", cfg.mc.n_list);
  r.get(mc, "mc", "replications", cfg.mc.replications);
  cfg.mc.base_seed = cfg.scenario.seed;
  r.get(mc, "mc", "base_seed", cfg.mc.base_seed);
  r.get(mc, "mc", "workers", cfg.mc.workers);
  r.get(mc, "mc", "analytic_se", cfg.mc.analytic_se);
  r.get(mc, "mc", "quadrature_nodes", cfg.mc.quadrature_nodes);
  if (mc.is_object() && mc.contains("estimators")) {
    std::vector<std::string> names;
    r.get(mc, "mc", "estimators", names);
    cfg.mc.run_main = cfg.mc.run_leung = false;
    for (const auto& name : names) {
      if (name == "main") {
        cfg.mc.run_main = true;
      } else if (name == "leung") {
        cfg.mc.run_leung = true;
      } else {
        r.fail(fmt::format("mc.estimators: unknown estimator '{}'", name));
      }
    }
    if (names.empty()) r.fail("mc.estimators: empty");
  }
  if (cfg.mc.replications < 1) r.fail("mc.replications: must be at least 1");
  for (int n : cfg.mc.n_list) {
    if (n < 3) r.fail(fmt::format("mc.n_list: entry {} is below 3", n));
  }
  if (cfg.mc.workers < 1) r.fail("mc.workers: must be at least 1");
  r.finish();

  const auto problems = validate(cfg.scenario.params, cfg.type_space);
  if (!problems.empty()) {
    throw InputError(fmt::format("invalid config:\n  {}", fmt::join(problems, "\n  ")));
  }
  if (!cfg.scenario.laws.empty() && cfg.scenario.laws.size() != cfg.type_space.size()) {
    throw InputError("invalid config:\n  scenario.laws: need one law per type");
  }
  if (cfg.type_counts && cfg.type_counts->size() != cfg.type_space.size()) {
    throw InputError("invalid config:\n  scenario.type_counts: need one count per type");
  }

  cfg.mc.scenario = cfg.scenario;
  cfg.mc.type_space = cfg.type_space;
  cfg.mc.solver = cfg.solver;
  cfg.mc.mle = cfg.mle;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path, e.what()));
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json laws = json::array();
  for (const auto& l : c.scenario.laws) laws.push_back({{"mean", l.mean}, {"gamma", l.gamma}});
  json w = json::array();
  for (std::size_t s = 0; s < c.type_space.size(); ++s) {
    for (std::size_t t = 0; t < c.type_space.size(); ++t) {
      const auto row = c.type_space.w(s, t);
      w.push_back(std::vector<double>(row.begin(), row.end()));
    }
  }
  json estimators = json::array();
  if (c.mc.run_main) estimators.push_back("main");
  if (c.mc.run_leung) estimators.push_back("leung");
  json scenario = {{"name", c.scenario.name},   {"alpha_L", c.scenario.alpha_L},
                   {"alpha_H", c.scenario.alpha_H}, {"gamma", c.scenario.gamma},
                   {"var_a", c.scenario.var_a}, {"var_V", c.scenario.var_V},
                   {"n", c.scenario.n},         {"seed", c.scenario.seed},
                   {"laws", laws}};
  if (c.type_counts) scenario["type_counts"] = *c.type_counts;
  return {
      {"parameters",
       {{"beta", c.scenario.params.beta},
        {"a_bounds", {c.scenario.params.a_bounds.lo, c.scenario.params.a_bounds.hi}}}},
      {"type_space",
       {{"support", c.type_space.support()},
        {"probabilities", c.type_space.probabilities()},
        {"w", w}}},
      {"scenario", scenario},
      {"solver",
       {{"tolerance", c.solver.tolerance},
        {"max_iterations", c.solver.max_iterations},
        {"damping", c.solver.damping},
        {"multistart_count", c.solver.multistart_count}}},
      {"mle",
       {{"a_tolerance", c.mle.a_tolerance},
        {"a_max_iterations", c.mle.a_max_iterations},
        {"beta_tolerance", c.mle.beta_tolerance},
        {"beta_max_iterations", c.mle.beta_max_iterations},
        {"beta_init", c.mle.beta_init}}},
      {"mc",
       {{"n_list", c.mc.n_list},
        {"replications", c.mc.replications},
        {"base_seed", c.mc.base_seed},
        {"estimators", estimators},
        {"analytic_se", c.mc.analytic_se},
        {"quadrature_nodes", c.mc.quadrature_nodes}}},
  };
}

std::vector<std::int64_t> apportion(std::int64_t n, const std::vector<double>& probabilities) {
  const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  std::vector<std::int64_t> counts(probabilities.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t s = 0; s < probabilities.size(); ++s) {
    const double exact = static_cast<double>(n) * probabilities[s] / total;
    counts[s] = static_cast<std::int64_t>(std::floor(exact));
    assigned += counts[s];
    remainders.emplace_back(exact - std::floor(exact), s);
  }
  // Larger remainder first, ties to the lower type index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[remainders[k].second];
  return counts;
}

std::vector<std::int64_t> type_counts_for(const RunConfig& config) {
  if (config.type_counts) return *config.type_counts;
  return apportion(config.scenario.n, config.type_space.probabilities());
}

Attributes read_attributes_csv(std::istream& in, const TypeSpace& type_space) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "agent_id,x_value,a_value") {
    throw InputError("attributes: expected header agent_id,x_value,a_value");
  }
  std::vector<std::pair<std::size_t, std::pair<TypeIndex, double>>> rows;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 3) {
      throw InputError(fmt::format("attributes line {}: expected 3 fields", lineno));
    }
    const auto id = parse_number<std::size_t>(trim(f[0]), fmt::format("attributes line {}", lineno));
    const auto x = parse_number<double>(trim(f[1]), fmt::format("attributes line {}", lineno));
    const auto s = type_space.find(x);
    if (!s) throw InputError(fmt::format("attributes line {}: x_value {} not in support", lineno, x));
    const std::string a_text = trim(f[2]);
    const double a = a_text.empty() ? std::nan("")
                                    : parse_number<double>(a_text, fmt::format("attributes line {}", lineno));
    rows.push_back({id, {static_cast<TypeIndex>(*s), a}});
  }
  Attributes out{std::vector<TypeIndex>(rows.size()), std::vector<double>(rows.size())};
  std::vector<bool> seen(rows.size(), false);
  for (const auto& [id, v] : rows) {
    if (id >= rows.size() || seen[id]) {
      throw InputError(fmt::format("attributes: agent ids must be 0..{} without repeats", rows.size() - 1));
    }
    seen[id] = true;
    out.types[id] = v.first;
    out.a_values[id] = v.second;
  }
  return out;
}

Network read_edges_csv(std::istream& in, std::size_t n) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "src,dst") {
    throw InputError("edges: expected header src,dst");
  }
  Network g(n);
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 2) throw InputError(fmt::format("edges line {}: expected 2 fields", lineno));
    const auto what = fmt::format("edges line {}", lineno);
    const auto i = parse_number<std::size_t>(trim(f[0]), what);
    const auto j = parse_number<std::size_t>(trim(f[1]), what);
    if (i >= n || j >= n) {
      throw InputError(fmt::format("edges line {}: agent id not in attributes", lineno));
    }
    if (i == j) throw InputError(fmt::format("edges line {}: self-loop", lineno));
    g.set(i, j, true);
  }
  return g;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read {}", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write {}", path));
  out << contents;
  if (!out) throw InputError(fmt::format("write failed: {}", path));
}

}  // namespace netform::io
