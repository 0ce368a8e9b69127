// Command-line front end: scheme runs, parameter sweeps, Rician evaluation,
// graph dumps and the acceptance suite.

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "acceptance/criteria.hpp"
#include "mamp/scenario.hpp"

namespace fs = std::filesystem;
using namespace mamp;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ScenarioError(what + ": '" + text + "' is not a number");
  return v;
}

// VAR=v1,v2,...
Sweep parse_sweep(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ScenarioError("sweep: expected VAR=v1,v2,...");
  const auto var = parse_sweep_variable(spec.substr(0, eq));
  if (!var) throw ScenarioError("sweep: unknown variable '" + spec.substr(0, eq) + "'");
  Sweep s{*var, {}};
  std::string rest = spec.substr(eq + 1);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    const auto comma = rest.find(',', pos);
    const std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    s.values.push_back(parse_number(item, "sweep"));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return s;
}

std::vector<Scheme> parse_schemes(const std::vector<std::string>& names) {
  std::vector<Scheme> out;
  for (const auto& n : names) {
    const auto s = parse_scheme(n);
    if (!s) throw ScenarioError("schemes: unknown scheme '" + n + "'");
    out.push_back(*s);
  }
  return out;
}

struct RunArgs {
  std::string topology;
  std::string params;
  std::vector<std::string> schemes{"Proposed"};
  std::string sweep;
  std::uint64_t seed = 1;
  std::string out;
  unsigned workers = 0;
  int draws = 500;
  std::optional<double> k_db;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--topology", a.topology, "Topology JSON file")->required();
  cmd->add_option("--params", a.params, "System parameter JSON file")->required();
  cmd->add_option("--schemes", a.schemes, "Comma-separated schemes")->delimiter(',');
  cmd->add_option("--sweep", a.sweep, "VAR=v1,v2,... with VAR in p_amp_dbm, n_elements, m_elements, j_active, rician_k_db");
  cmd->add_option("--seed", a.seed, "Seed for the random benchmark and channel draws");
  cmd->add_option("--out", a.out, "Directory for results.csv and results.json (default: CSV to stdout)");
  cmd->add_option("--workers", a.workers, "Worker threads (default: hardware concurrency)");
}

int execute(const RunArgs& a, bool rician) {
  Scenario sc;
  sc.topology_path = a.topology;
  sc.params_path = a.params;
  sc.schemes = parse_schemes(a.schemes);
  if (!a.sweep.empty()) sc.sweep = parse_sweep(a.sweep);
  sc.seed = a.seed;
  sc.output_dir = a.out;

  const Topology topo = load_topology_file(sc.topology_path);
  SystemParams params = load_params_file(sc.params_path);
  RunOptions opts;
  opts.max_workers = a.workers;
  if (rician) {
    if (a.k_db) params.rician_k = db_to_linear(*a.k_db);
    opts.rician_draws = a.draws;
  }
  const ScenarioBundle bundle = run_scenario(sc, topo, params, opts);

  if (a.out.empty()) {
    write_csv(bundle, std::cout);
  } else {
    fs::create_directories(a.out);
    std::ofstream csv(fs::path(a.out) / "results.csv", std::ios::binary);
    write_csv(bundle, csv);
    std::ofstream json(fs::path(a.out) / "results.json", std::ios::binary);
    json << bundle_to_json(bundle).dump(2) << '\n';
    if (!csv || !json) throw std::runtime_error("could not write results to " + a.out);
    std::cerr << "wrote " << bundle.rows.size() << " rows to " << a.out << '\n';
  }
  for (const auto& row : bundle.rows)
    if (!row.result)
      std::cerr << "no feasible path: " << to_string(row.scheme)
                << (row.sweep_value ? " at " + format_fixed(*row.sweep_value) : std::string()) << ": " << row.error
                << '\n';
  return bundle.any_infeasible() ? kExitInfeasible : 0;
}

int dump_graph(const std::string& topology, const std::string& params_path) {
  const Topology topo = load_topology_file(topology);
  const SystemParams params = load_params_file(params_path);
  write_edge_csv(mixed_graph(params, topo), std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beam routing over active and passive IRSs"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Route every scheme at every sweep point");
  add_run_options(run, run_args);

  RunArgs rician_args;
  auto* rician = app.add_subcommand("rician", "Monte-Carlo rate of LoS-designed routes under Rician fading");
  add_run_options(rician, rician_args);
  rician->add_option("--draws", rician_args.draws, "Channel draws per row")->check(CLI::PositiveNumber);
  rician->add_option("--k-db", rician_args.k_db, "Rician factor in dB (unless swept)");

  std::string scenario_dir = MAMP_SCENARIO_DIR;
  auto* verify = app.add_subcommand("verify", "Run the acceptance criteria");
  verify->add_option("--scenarios", scenario_dir, "Directory with replica.json, replica_extended.json, params.json");

  std::string g_topology, g_params;
  auto* graph = app.add_subcommand("graph", "Print the mixed routing graph as from,to,weight CSV");
  graph->add_option("--topology", g_topology)->required();
  graph->add_option("--params", g_params)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) return execute(run_args, false);
    if (*rician) return execute(rician_args, true);
    if (*graph) return dump_graph(g_topology, g_params);
    if (*verify) return acceptance::run_all(acceptance::Context{scenario_dir}, std::cout) ? 0 : 1;
  } catch (const DocumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
