// netform: equilibrium, simulate, estimate and mc commands.
//
// Exit codes: 0 success, 1 input/config error, 2 numerical non-convergence.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "netform/baseline.hpp"
#include "netform/inference.hpp"
#include "netform/io.hpp"
#include "netform/kernels.hpp"
#include "netform/mc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace netform;

namespace {

struct Options {
  std::string config;
  std::string edges;
  std::string attributes;
  std::string out;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string estimator = "main";
  int quadrature_nodes = 15;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("netform");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("NETFORM_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

fs::path output_dir(const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
  return dir;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

int cmd_equilibrium(const Options& opt) {
  const io::RunConfig cfg = io::load_config(opt.config);
  const auto counts = io::type_counts_for(cfg);
  const ADistribution dist = scenario_a_dist(cfg.scenario, cfg.type_space, opt.quadrature_nodes);
  const fs::path dir = output_dir(opt.out);
  spdlog::info("solving equilibrium for {} types", cfg.type_space.size());
  EquilibriumResult eq;
  try {
    eq = solve_equilibrium(counts, cfg.scenario.params, cfg.type_space, dist, cfg.solver);
  } catch (const ConvergenceError& e) {
    io::write_file((dir / "diagnostics.json").string(),
                   dump({{"converged", false}, {"status", e.what()}}));
    throw;
  }
  std::ostringstream beliefs;
  write_belief_csv(beliefs, eq.q, cfg.type_space);
  io::write_file((dir / "beliefs.csv").string(), beliefs.str());
  io::write_file((dir / "diagnostics.json").string(),
                 dump({{"converged", true},
                       {"iterations", eq.iterations},
                       {"residual", eq.residual},
                       {"damping", eq.damping},
                       {"distinct_fixed_points", eq.distinct_fixed_points},
                       {"type_counts", counts},
                       {"quadrature_nodes", opt.quadrature_nodes}}));
  return 0;
}

int cmd_simulate(const Options& opt) {
  io::RunConfig cfg = io::load_config(opt.config);
  if (opt.seed) cfg.scenario.seed = *opt.seed;
  const fs::path dir = output_dir(opt.out);
  spdlog::info("simulating n={} seed={}", cfg.scenario.n, cfg.scenario.seed);
  const SimulatedData sim = simulate(cfg.scenario, cfg.type_space, cfg.solver, opt.quadrature_nodes);
  std::ostringstream edges, attrs;
  write_edges_csv(edges, sim.network);
  write_attributes_csv(attrs, sim.population, cfg.type_space);
  io::write_file((dir / "edges.csv").string(), edges.str());
  io::write_file((dir / "attributes.csv").string(), attrs.str());
  return 0;
}

json main_result(const Network& g, const io::Attributes& attrs, const io::RunConfig& cfg,
                 bool& converged) {
  const TwoStepFit fit = fit_two_step(g, attrs.types, cfg.type_space, cfg.mle);
  const auto& r = fit.result;
  converged = r.converged;
  json inference = nullptr;
  if (r.converged) {
    try {
      const VarianceReport v = analytic_variance(fit, g);
      json i0 = json::array(), omega = json::array();
      for (Eigen::Index k = 0; k < v.i0_hat.rows(); ++k) {
        i0.push_back(std::vector<double>(v.i0_hat.row(k).begin(), v.i0_hat.row(k).end()));
        omega.push_back(std::vector<double>(v.omega_hat.row(k).begin(), v.omega_hat.row(k).end()));
      }
      inference = {{"method", v.method}, {"se", v.se}, {"i0_hat", i0}, {"omega_hat", omega}};
    } catch (const InputError& e) {
      inference = {{"method", "analytic-plugin"}, {"error", e.what()}};
    }
  }
  return {{"estimator", "main"},
          {"beta_hat", r.beta_hat},
          {"a_hat", r.a_hat},
          {"inference", inference},
          {"diagnostics",
           {{"converged", r.converged},
            {"status", r.status},
            {"iterations", r.iterations},
            {"loglik", r.loglik},
            {"score_norm", r.score_norm},
            {"boundary_agents", r.boundary_agents},
            {"q_hat", fit.first.q_hat.values()}}}};
}

json leung_result(const Network& g, const io::Attributes& attrs, const io::RunConfig& cfg) {
  const FirstStep first = first_step(g, attrs.types, cfg.type_space);
  const LeungResult r = estimate_leung(g, attrs.types, cfg.type_space, first.q_hat);
  return {{"estimator", "leung"},
          {"beta_hat", r.slopes},
          {"intercept", r.intercept},
          {"a_hat", nullptr},
          {"inference", nullptr},
          {"diagnostics",
           {{"converged", true},
            {"status", "converged"},
            {"iterations", r.iterations},
            {"loglik", r.loglik},
            {"score_norm", r.score_norm},
            {"q_hat", first.q_hat.values()}}}};
}

int cmd_estimate(const Options& opt) {
  const io::RunConfig cfg = io::load_config(opt.config);
  std::ifstream attr_in(opt.attributes), edge_in(opt.edges);
  if (!attr_in) throw InputError("cannot read " + opt.attributes);
  if (!edge_in) throw InputError("cannot read " + opt.edges);
  const io::Attributes attrs = io::read_attributes_csv(attr_in, cfg.type_space);
  const Network g = io::read_edges_csv(edge_in, attrs.types.size());

  bool converged = true;
  json out;
  if (opt.estimator == "main") {
    out = main_result(g, attrs, cfg, converged);
  } else if (opt.estimator == "leung") {
    out = leung_result(g, attrs, cfg);
  } else {
    out = json::array({main_result(g, attrs, cfg, converged), leung_result(g, attrs, cfg)});
  }
  const std::string text = dump(out);
  if (opt.out.empty()) {
    std::cout << text;
  } else {
    io::write_file(opt.out, text);
  }
  if (!converged) {
    spdlog::error("estimation did not converge");
    return 2;
  }
  return 0;
}

int cmd_mc(const Options& opt, bool estimator_given) {
  io::RunConfig cfg = io::load_config(opt.config);
  cfg.mc.workers = opt.workers;
  cfg.mc.quadrature_nodes = opt.quadrature_nodes;
  if (opt.seed) cfg.mc.base_seed = *opt.seed;
  if (estimator_given) {
    cfg.mc.run_main = opt.estimator != "leung";
    cfg.mc.run_leung = opt.estimator != "main";
  }
  const fs::path dir = output_dir(opt.out);
  spdlog::info("mc: {} replications x {} sizes, {} workers", cfg.mc.replications,
               cfg.mc.n_list.size(), cfg.mc.workers);

  const auto rows = mc::run(cfg.mc);
  const std::size_t dim = cfg.scenario.params.dim();
  std::ostringstream raw, summary, timings;
  mc::write_raw_csv(raw, rows, dim, cfg.scenario.name);
  mc::write_summary_csv(summary, mc::summarize(rows, dim));
  mc::write_timings_csv(timings, rows);
  io::write_file((dir / "raw.csv").string(), raw.str());
  io::write_file((dir / "summary.csv").string(), summary.str());
  io::write_file((dir / "timings.csv").string(), timings.str());

  // Worker count and timings are left out so the manifest is reproducible.
  json manifest = {{"config", io::to_json(cfg)},
                   {"artifacts",
                    {{"raw.csv", mc::sha256_hex(raw.str())},
                     {"summary.csv", mc::sha256_hex(summary.str())}}}};
  io::write_file((dir / "manifest.json").string(), dump(manifest));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Network formation: equilibrium, simulation, estimation, Monte Carlo"};
  app.require_subcommand(1);
  Options opt;

  auto add_nodes = [&](CLI::App* cmd) {
    cmd->add_option("--quadrature-nodes", opt.quadrature_nodes, "Gauss-Hermite nodes for the A law")
        ->check(CLI::PositiveNumber);
  };

  auto* eq = app.add_subcommand("equilibrium", "Solve for equilibrium beliefs");
  eq->add_option("config", opt.config)->required();
  eq->add_option("--out", opt.out, "Output directory");
  add_nodes(eq);

  auto* sim = app.add_subcommand("simulate", "Draw a population and network");
  sim->add_option("config", opt.config)->required();
  sim->add_option("--seed", opt.seed, "64-bit seed");
  sim->add_option("--out", opt.out, "Output directory");
  add_nodes(sim);

  auto* est = app.add_subcommand("estimate", "Estimate beta from edges and attributes");
  est->add_option("edges", opt.edges)->required();
  est->add_option("attributes", opt.attributes)->required();
  est->add_option("config", opt.config)->required();
  est->add_option("--out", opt.out, "Result JSON path (default stdout)");
  est->add_option("--estimator", opt.estimator)->check(CLI::IsMember({"main", "leung", "both"}));

  auto* mcc = app.add_subcommand("mc", "Run a Monte Carlo experiment");
  mcc->add_option("config", opt.config)->required();
  mcc->add_option("--workers", opt.workers)->check(CLI::PositiveNumber);
  mcc->add_option("--out", opt.out, "Output directory");
  mcc->add_option("--seed", opt.seed, "Base seed override");
  auto* mc_estimator =
      mcc->add_option("--estimator", opt.estimator)->check(CLI::IsMember({"main", "leung", "both"}));
  add_nodes(mcc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    spdlog::debug("kernels: {}", kernels::name(kernels::active().isa));
    if (*eq) return cmd_equilibrium(opt);
    if (*sim) return cmd_simulate(opt);
    if (*est) return cmd_estimate(opt);
    return cmd_mc(opt, mc_estimator->count() > 0);
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const ConvergenceError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
