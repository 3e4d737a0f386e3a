#include "netform/mc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "netform/baseline.hpp"
#include "netform/inference.hpp"

namespace netform::mc {
namespace {

std::string number(double v) { return std::isfinite(v) ? fmt::format("{:.17g}", v) : "NA"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// All rows of one replication; failures before estimation mark every row.
std::vector<Row> replicate(const McConfig& config, int n, int rep) {
  ScenarioSpec spec = config.scenario;
  spec.n = n;
  spec.seed = replication_seed(config.base_seed, n, rep);

  std::vector<Row> rows;
  auto make_row = [&](const char* estimator) {
    Row row;
    row.estimator = estimator;
    row.n = n;
    row.replication = rep;
    row.seed = spec.seed;
    return row;
  };
  if (config.run_main) rows.push_back(make_row("main"));
  if (config.run_leung) rows.push_back(make_row("leung"));
  auto fail_all = [&](const std::string& status) {
    for (auto& row : rows) row.status = status;
    return rows;
  };

  std::optional<SimulatedData> sim;
  std::optional<FirstStep> first;
  try {
    sim.emplace(simulate(spec, config.type_space, config.solver, config.quadrature_nodes));
    first.emplace(first_step(sim->network, sim->population.types(), config.type_space));
  } catch (const std::exception& e) {
    return fail_all(e.what());
  }

  const auto& types = sim->population.types();
  for (auto& row : rows) {
    const auto start = std::chrono::steady_clock::now();
    if (row.estimator == "main") {
      try {
        const TwoStepFit fit = fit_two_step(sim->network, types, config.type_space, config.mle);
        row.converged = fit.result.converged;
        row.status = fit.result.status;
        row.iterations = fit.result.iterations;
        if (row.converged) {
          row.beta_hat = fit.result.beta_hat;
          if (config.analytic_se) {
            try {
              row.se = analytic_variance(fit, sim->network).se;
            } catch (const InputError&) {
              row.se.clear();
            }
          }
        }
      } catch (const std::exception& e) {
        row.status = e.what();
      }
    } else {
      try {
        const LeungResult fit =
            estimate_leung(sim->network, types, config.type_space, first->q_hat);
        row.converged = true;
        row.status = "converged";
        row.iterations = fit.iterations;
        row.beta_hat = fit.slopes;
        row.intercept = fit.intercept;
      } catch (const std::exception& e) {
        row.status = e.what();
      }
    }
    row.seconds = seconds_since(start);
  }
  return rows;
}

}  // namespace

void validate(const McConfig& config) {
  if (config.replications < 1) throw InputError("mc: replications must be at least 1");
  if (config.n_list.empty()) throw InputError("mc: n_list is empty");
  for (int n : config.n_list) {
    if (n < 3) throw InputError(fmt::format("mc: n_list entry {} is below 3", n));
  }
  if (!config.run_main && !config.run_leung) throw InputError("mc: no estimator selected");
  if (config.workers < 1) throw InputError("mc: workers must be at least 1");
  if (config.quadrature_nodes < 1) throw InputError("mc: quadrature_nodes must be positive");
  validate(config.scenario.params, config.type_space);
}

std::uint64_t replication_seed(std::uint64_t base_seed, int n, int rep) {
  return substream_seed(substream_seed(base_seed, static_cast<std::uint64_t>(n)),
                        static_cast<std::uint64_t>(rep));
}

std::vector<Row> run(const McConfig& config) {
  validate(config);
  struct Task {
    int n;
    int rep;
  };
  std::vector<Task> tasks;
  for (int n : config.n_list) {
    for (int rep = 0; rep < config.replications; ++rep) tasks.push_back({n, rep});
  }

  // Each task owns its slot; the reduction below is in task order.
  std::vector<std::vector<Row>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) {
      slots[k] = replicate(config, tasks[k].n, tasks[k].rep);
    }
  };
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(config.workers), tasks.size());
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < count; ++w) pool.emplace_back(worker);
  }

  std::vector<Row> rows;
  for (auto& slot : slots) {
    for (auto& row : slot) rows.push_back(std::move(row));
  }
  return rows;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double quantile_sd(const std::vector<double>& values) {
  return std::max(0.0, (quantile(values, 0.95) - quantile(values, 0.05)) / (2.0 * kZ95));
}

std::vector<Cell> summarize(const std::vector<Row>& rows, std::size_t dim) {
  // Keyed by (estimator, n) so the output order does not depend on row order.
  std::map<std::tuple<std::string, int>, std::vector<const Row*>> groups;
  for (const auto& row : rows) groups[{row.estimator, row.n}].push_back(&row);

  std::vector<Cell> cells;
  for (const auto& [key, members] : groups) {
    const auto& [estimator, n] = key;
    std::vector<const Row*> ok;
    for (const Row* r : members) {
      if (r->converged && r->beta_hat.size() == dim) ok.push_back(r);
    }
    auto add = [&](std::string name, auto value_of) {
      Cell cell{estimator, n, std::move(name), {}, {}, static_cast<int>(members.size()),
                static_cast<int>(members.size() - ok.size())};
      if (ok.size() >= 2) {
        std::vector<double> v;
        for (const Row* r : ok) v.push_back(value_of(*r));
        // Sorted before summing so the mean is permutation-invariant bit for bit.
        std::sort(v.begin(), v.end());
        double sum = 0.0;
        for (double x : v) sum += x;
        cell.mean = sum / static_cast<double>(v.size());
        cell.quantile_sd = quantile_sd(v);
      }
      cells.push_back(std::move(cell));
    };
    for (std::size_t k = 0; k < dim; ++k) {
      add(fmt::format("beta_{}", k + 1), [k](const Row& r) { return r.beta_hat[k]; });
    }
    if (estimator == "leung") {
      add("intercept", [](const Row& r) { return r.intercept.value_or(NAN); });
    }
  }
  return cells;
}

void write_raw_csv(std::ostream& out, const std::vector<Row>& rows, std::size_t dim,
                   const std::string& scenario) {
  out << "estimator,n,replication,seed,scenario,converged,status,iterations";
  for (std::size_t k = 1; k <= dim; ++k) out << ",beta_" << k;
  for (std::size_t k = 1; k <= dim; ++k) out << ",se_" << k;
  out << ",intercept\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.n << ',' << r.replication << ',' << r.seed << ','
        << csv_field(scenario) << ',' << (r.converged ? 1 : 0) << ',' << csv_field(r.status)
        << ',' << r.iterations;
    for (std::size_t k = 0; k < dim; ++k) {
      out << ',' << (k < r.beta_hat.size() ? number(r.beta_hat[k]) : "NA");
    }
    for (std::size_t k = 0; k < dim; ++k) {
      out << ',' << (k < r.se.size() ? number(r.se[k]) : "NA");
    }
    out << ',' << (r.intercept ? number(*r.intercept) : "NA") << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<Cell>& cells) {
  out << "estimator,n,coordinate,mean,quantile_sd,failures\n";
  for (const auto& c : cells) {
    out << c.estimator << ',' << c.n << ',' << c.coordinate << ','
        << (c.mean ? number(*c.mean) : "NA") << ','
        << (c.quantile_sd ? number(*c.quantile_sd) : "NA") << ',' << c.failures << '\n';
  }
}

void write_timings_csv(std::ostream& out, const std::vector<Row>& rows) {
  out << "estimator,n,replication,seconds\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.n << ',' << r.replication << ',' << fmt::format("{:.6f}", r.seconds)
        << '\n';
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace netform::mc
