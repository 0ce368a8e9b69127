#pragma once

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mamp/io.hpp"
#include "mamp/oracle.hpp"
#include "mamp/report.hpp"
#include "mamp/routing.hpp"

namespace mamp {

enum class SweepVariable { PAmpDbm, NElements, MElements, JActive, RicianKDb };

inline const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::PAmpDbm: return "p_amp_dbm";
    case SweepVariable::NElements: return "n_elements";
    case SweepVariable::MElements: return "m_elements";
    case SweepVariable::JActive: return "j_active";
    case SweepVariable::RicianKDb: return "rician_k_db";
  }
  return "?";
}

inline std::optional<SweepVariable> parse_sweep_variable(const std::string& s) {
  for (auto v : {SweepVariable::PAmpDbm, SweepVariable::NElements, SweepVariable::MElements, SweepVariable::JActive,
                 SweepVariable::RicianKDb})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

struct Sweep {
  SweepVariable variable = SweepVariable::PAmpDbm;
  std::vector<double> values;  // strictly increasing
};

struct Scenario {
  std::string topology_path;
  std::string params_path;
  std::vector<Scheme> schemes;
  std::optional<Sweep> sweep;
  std::uint64_t seed = 1;
  std::string output_dir;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void validate_scenario(const Scenario& s) {
  if (s.schemes.empty()) throw ScenarioError("schemes: at least one scheme is required");
  if (s.sweep) {
    if (s.sweep->values.empty()) throw ScenarioError("sweep: no values");
    for (std::size_t k = 1; k < s.sweep->values.size(); ++k)
      if (!(s.sweep->values[k] > s.sweep->values[k - 1])) throw ScenarioError("sweep: values must be strictly increasing");
  }
}

namespace detail {
inline int integral_value(double v, const char* what) {
  if (v != std::floor(v) || v < 0) throw ScenarioError(std::string("sweep: ") + what + " must be a non-negative integer");
  return static_cast<int>(v);
}
}  // namespace detail

// Topology and parameters for one sweep point. j_active = v keeps the v
// active surfaces with the smallest ids and drops the rest.
inline std::pair<Topology, SystemParams> apply_sweep(const Topology& topo, const SystemParams& params,
                                                     SweepVariable var, double value) {
  Topology t = topo;
  SystemParams p = params;
  auto resize = [&](bool active, int elements) {
    if (elements < 1) throw ScenarioError("sweep: element count must be positive");
    for (NodeId id : active ? t.active_ids() : t.passive_ids()) {
      Node n = t.node(id);
      n.elements = elements;
      n.grid = near_square_grid(elements);
      t = t.with_node(n);
    }
  };
  switch (var) {
    case SweepVariable::PAmpDbm:
      p.p_amp_default = dbm_to_watts(value);
      p.p_amp_override.clear();
      break;
    case SweepVariable::NElements: resize(true, detail::integral_value(value, "n_elements")); break;
    case SweepVariable::MElements: resize(false, detail::integral_value(value, "m_elements")); break;
    case SweepVariable::JActive: {
      const int keep = detail::integral_value(value, "j_active");
      const auto actives = topo.active_ids();
      if (keep > static_cast<int>(actives.size())) throw ScenarioError("sweep: j_active exceeds the active IRS count");
      std::set<NodeId> kept;
      for (NodeId j : topo.passive_ids()) kept.insert(j);
      for (int k = 0; k < keep; ++k) kept.insert(actives[static_cast<std::size_t>(k)]);
      // Drop the extra actives' amplification overrides along with the nodes.
      std::map<NodeId, NodeId> renumber;
      NodeId next = 1;
      for (NodeId j : topo.irs_ids())
        if (kept.count(j)) renumber[j] = next++;
      std::map<NodeId, double> overrides;
      for (auto [id, w] : p.p_amp_override)
        if (renumber.count(id)) overrides[renumber[id]] = w;
      p.p_amp_override = overrides;
      t = topo.restricted_to(kept);
      break;
    }
    case SweepVariable::RicianKDb: p.rician_k = db_to_linear(value); break;
  }
  p.validate();
  return {std::move(t), std::move(p)};
}

struct RicianStats {
  double mean_rate = 0.0;
  double std_rate = 0.0;  // sample standard deviation over draws
  int draws = 0;
  double los_rate = 0.0;  // same beamformer on the pure LoS channel
};

struct ScenarioRow {
  Scheme scheme = Scheme::Proposed;
  std::optional<double> sweep_value;
  std::optional<RoutingResult> result;
  std::optional<RicianStats> rician;
  std::string error;  // set when the scheme produced no path
};

struct ScenarioBundle {
  std::optional<SweepVariable> sweep_variable;
  std::vector<ScenarioRow> rows;
  bool any_infeasible() const {
    return std::any_of(rows.begin(), rows.end(), [](const ScenarioRow& r) { return !r.result; });
  }
};

// Runs tasks on a bounded pool; results land in their own slot so the output
// order never depends on completion order.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task, unsigned max_workers = 0) {
  unsigned workers = max_workers ? max_workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) task(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Monte-Carlo rate of a fixed (LoS-designed) route over Rician draws.
inline RicianStats rician_rate(const SystemParams& params, const Topology& topo, const RoutingResult& route,
                               int draws, std::uint64_t seed) {
  if (draws < 1) throw ScenarioError("draws must be >= 1");
  if (!params.rician_k) throw ChannelError(ChannelErrc::MissingRicianFactor, "rician_k is not set");
  RicianStats s;
  s.draws = draws;
  s.los_rate = achievable_rate(end_to_end_oracle(params, topo, route.path, route.solution).snr());
  double sum = 0.0, sum2 = 0.0;
  for (int d = 0; d < draws; ++d) {
    const auto o = end_to_end_oracle(params, topo, route.path, route.solution,
                                     rician_link_channel(params, topo, seed, static_cast<std::uint64_t>(d)));
    const double r = achievable_rate(o.snr());
    sum += r;
    sum2 += r * r;
  }
  s.mean_rate = sum / draws;
  s.std_rate = draws > 1 ? std::sqrt(std::max(0.0, (sum2 - draws * s.mean_rate * s.mean_rate) / (draws - 1))) : 0.0;
  return s;
}

struct RunOptions {
  std::optional<int> rician_draws;  // set: Monte-Carlo evaluation per row
  unsigned max_workers = 0;         // 0: hardware concurrency
};

inline ScenarioBundle run_scenario(const Scenario& sc, const Topology& topo, const SystemParams& params,
                                   RunOptions options = {}) {
  validate_scenario(sc);
  ScenarioBundle bundle;
  if (sc.sweep) bundle.sweep_variable = sc.sweep->variable;
  std::vector<std::optional<double>> points;
  if (sc.sweep)
    for (double v : sc.sweep->values) points.emplace_back(v);
  else
    points.emplace_back(std::nullopt);

  // Validate every sweep point up front so bad values fail before any work.
  std::vector<std::pair<Topology, SystemParams>> setups;
  for (const auto& v : points) setups.push_back(v ? apply_sweep(topo, params, sc.sweep->variable, *v)
                                                  : std::pair<Topology, SystemParams>{topo, params});
  if (options.rician_draws)
    for (const auto& [t, p] : setups)
      if (!p.rician_k) throw ScenarioError("rician evaluation needs rician_k_db (params, --k-db or sweep)");

  for (Scheme s : sc.schemes)
    for (const auto& v : points) bundle.rows.push_back(ScenarioRow{s, v, std::nullopt, std::nullopt, {}});

  parallel_for(
      bundle.rows.size(),
      [&](std::size_t i) {
        ScenarioRow& row = bundle.rows[i];
        const auto& [t, p] = setups[i % points.size()];
        try {
          row.result = route_scheme(row.scheme, p, t, sc.seed);
          if (options.rician_draws) row.rician = rician_rate(p, t, *row.result, *options.rician_draws, sc.seed);
        } catch (const RoutingError& e) {
          row.error = e.what();
        }
      },
      options.max_workers);
  return bundle;
}

inline ScenarioBundle run_scenario(const Scenario& sc, RunOptions options = {}) {
  return run_scenario(sc, load_topology_file(sc.topology_path), load_params_file(sc.params_path), options);
}

inline void write_csv(const ScenarioBundle& b, std::ostream& os) {
  const bool rician = std::any_of(b.rows.begin(), b.rows.end(), [](const ScenarioRow& r) { return r.rician.has_value(); });
  os << "scheme,sweep_value,rate_bps_hz,exact_snr_db,approx_snr_db,path";
  if (rician) os << ",mean_rate,std_rate,draws";
  os << '\n';
  const double nan = std::nan("");
  for (const ScenarioRow& r : b.rows) {
    os << to_string(r.scheme) << ',' << (r.sweep_value ? format_fixed(*r.sweep_value) : std::string()) << ',';
    if (r.result) {
      const auto& rep = r.result->report;
      os << format_fixed(rep.rate_bps_hz) << ',' << format_fixed(linear_to_db(rep.exact_snr)) << ','
         << format_fixed(linear_to_db(rep.approx_snr)) << ',' << join_path(r.result->path.hops);
    } else {
      os << format_fixed(nan) << ',' << format_fixed(nan) << ',' << format_fixed(nan) << ',';
    }
    if (rician) {
      if (r.rician)
        os << ',' << format_fixed(r.rician->mean_rate) << ',' << format_fixed(r.rician->std_rate) << ','
           << r.rician->draws;
      else
        os << ",nan,nan,0";
    }
    os << '\n';
  }
}

inline nlohmann::json bundle_to_json(const ScenarioBundle& b) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ScenarioRow& r : b.rows) {
    nlohmann::json j = r.result ? result_to_json(*r.result) : nlohmann::json{{"scheme", to_string(r.scheme)}};
    j["sweep_value"] = r.sweep_value ? nlohmann::json(*r.sweep_value) : nlohmann::json(nullptr);
    if (!r.result) j["error"] = r.error;
    if (r.rician)
      j["rician"] = {{"mean_rate", r.rician->mean_rate},
                     {"std_rate", r.rician->std_rate},
                     {"draws", r.rician->draws},
                     {"los_rate", r.rician->los_rate}};
    rows.push_back(j);
  }
  return {{"sweep_variable", b.sweep_variable ? nlohmann::json(to_string(*b.sweep_variable)) : nlohmann::json(nullptr)},
          {"results", rows}};
}

}  // namespace mamp
