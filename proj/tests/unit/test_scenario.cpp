#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <sstream>

#include "mamp/scenario.hpp"
#include "support/fixtures.hpp"

using namespace mamp;
using mamp::support::scenario_file;

namespace {

Scenario make_scenario(const std::string& topology, std::vector<Scheme> schemes, std::optional<Sweep> sweep = {}) {
  Scenario s;
  s.topology_path = scenario_file(topology);
  s.params_path = scenario_file("params.json");
  s.schemes = std::move(schemes);
  s.sweep = std::move(sweep);
  s.seed = 7;
  return s;
}

std::string csv(const ScenarioBundle& b) {
  std::ostringstream os;
  write_csv(b, os);
  return os.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  for (std::string f; std::getline(is, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const std::vector<Scheme> kFigureSchemes{Scheme::Proposed, Scheme::Exhaustive, Scheme::Myopic, Scheme::Random,
                                         Scheme::AllPassive};

Sweep power_sweep() {
  Sweep s{SweepVariable::PAmpDbm, {}};
  for (int v = 0; v <= 20; v += 2) s.values.push_back(v);
  return s;
}

}  // namespace

TEST(RunScenario, MinimalPassiveOnly) {
  const ScenarioBundle b = run_scenario(make_scenario("minimal.json", {Scheme::PassiveOnlyP1}));
  ASSERT_EQ(b.rows.size(), 1u);
  const auto ls = lines(csv(b));
  ASSERT_EQ(ls.size(), 2u);
  const auto f = fields(ls[1]);
  ASSERT_EQ(f.size(), 6u);
  EXPECT_EQ(f[0], "PassiveOnlyP1");
  EXPECT_EQ(f[1], "");
  EXPECT_EQ(f[5], "1");
  // P_B M^2 T beta^2 / (sigma^2 d1^2 d2^2) with d1^2 = 52, d2^2 = 54.25.
  const double beta = std::pow(10.0, -4.6);
  const double snr = 0.1 * 400.0 * 400 * 4 * beta * beta / (1e-11 * 52.0 * 54.25);
  EXPECT_NEAR(std::stod(f[2]), std::log2(1 + snr), 1e-6);
  EXPECT_NEAR(b.rows[0].result->report.rate_bps_hz, std::log2(1 + snr), 1e-12);
  EXPECT_NEAR(std::stod(f[3]), 10 * std::log10(snr), 1e-6);
  EXPECT_FALSE(b.any_infeasible());
}

TEST(RunScenario, ReplicaPowerSweep) {
  const Scenario sc = make_scenario("replica.json", kFigureSchemes, power_sweep());
  const ScenarioBundle b = run_scenario(sc);
  ASSERT_EQ(b.rows.size(), 55u);
  const std::string text = csv(b);
  const auto ls = lines(text);
  ASSERT_EQ(ls.size(), 56u);
  EXPECT_EQ(ls[0], "scheme,sweep_value,rate_bps_hz,exact_snr_db,approx_snr_db,path");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(fields(ls[1])[1], "0.000000");

  // Rows are scheme-major in sweep order.
  std::map<Scheme, std::vector<double>> rates;
  for (std::size_t i = 0; i < b.rows.size(); ++i) {
    const ScenarioRow& r = b.rows[i];
    EXPECT_EQ(r.scheme, kFigureSchemes[i / 11]);
    EXPECT_EQ(*r.sweep_value, 2.0 * static_cast<double>(i % 11));
    ASSERT_TRUE(r.result) << r.error;
    rates[r.scheme].push_back(r.result->report.rate_bps_hz);
  }
  for (std::size_t k = 0; k < 11; ++k) {
    EXPECT_GE(rates[Scheme::Exhaustive][k] + 1e-12, rates[Scheme::Proposed][k]);
    EXPECT_GE(rates[Scheme::Proposed][k] + 1e-12, rates[Scheme::Myopic][k]);
    EXPECT_GT(rates[Scheme::Proposed][k], rates[Scheme::AllPassive][k]);
    if (k) {
      EXPECT_GE(rates[Scheme::Proposed][k] + 1e-12, rates[Scheme::Proposed][k - 1]);
    }
  }
  // All-passive ignores the amplifier budget.
  for (double r : rates[Scheme::AllPassive]) EXPECT_EQ(r, rates[Scheme::AllPassive].front());
  EXPECT_GT(rates[Scheme::Proposed].back(), rates[Scheme::Proposed].front());

  EXPECT_EQ(csv(run_scenario(sc)), text);
  EXPECT_EQ(csv(run_scenario(sc, RunOptions{std::nullopt, 1})), text);
}

TEST(RunScenario, InfeasibleRowsCarryNan) {
  // No LoS from the BS to anything.
  const Topology t = load_topology(R"({"nodes": [
      {"id": 0, "kind": "bs", "position": [0, 0, 3], "elements": 4},
      {"id": 1, "kind": "passive", "position": [6, 4, 3], "elements": 16},
      {"id": 2, "kind": "user", "position": [12, 0, 1.5], "elements": 1}],
    "los_edges": [[1, 2]]})");
  Scenario sc;
  sc.schemes = {Scheme::PassiveOnlyP1, Scheme::Proposed};
  const ScenarioBundle b = run_scenario(sc, t, support::default_params());
  EXPECT_TRUE(b.any_infeasible());
  const auto ls = lines(csv(b));
  ASSERT_EQ(ls.size(), 3u);
  EXPECT_EQ(ls[1], "PassiveOnlyP1,,nan,nan,nan,");
  EXPECT_FALSE(b.rows[0].error.empty());
  const nlohmann::json j = bundle_to_json(b);
  EXPECT_TRUE(j["sweep_variable"].is_null());
  EXPECT_TRUE(j["results"][0]["sweep_value"].is_null());
  EXPECT_TRUE(j["results"][0].contains("error"));
}

TEST(RunScenario, JsonSidecar) {
  const ScenarioBundle b = run_scenario(make_scenario("replica.json", {Scheme::Proposed}));
  const nlohmann::json j = bundle_to_json(b);
  ASSERT_EQ(j["results"].size(), 1u);
  const auto& r = j["results"][0];
  for (const char* key : {"scheme", "path", "active_positions", "rate_bps_hz", "exact_snr_db", "approx_snr_db",
                          "per_hop_snr_db", "repairs_triggered"})
    EXPECT_TRUE(r.contains(key)) << key;
  EXPECT_EQ(r["scheme"], "Proposed");
  EXPECT_EQ(r["path"].get<std::vector<NodeId>>(), b.rows[0].result->path.hops);
}

TEST(RunScenario, Validation) {
  Scenario sc = make_scenario("minimal.json", {});
  EXPECT_THROW(run_scenario(sc), ScenarioError);
  sc.schemes = {Scheme::Proposed};
  sc.sweep = Sweep{SweepVariable::PAmpDbm, {0, 4, 4}};
  EXPECT_THROW(run_scenario(sc), ScenarioError);
  sc.sweep = Sweep{SweepVariable::NElements, {10, 20.5}};
  EXPECT_THROW(run_scenario(sc), ScenarioError);
  sc.sweep = std::nullopt;
  sc.topology_path = scenario_file("does_not_exist.json");
  EXPECT_THROW(run_scenario(sc), DocumentError);
}

// ---------------------------------------------------------------------------
// Rician evaluation

TEST(RicianEval, LargeFactorMatchesLos) {
  Scenario sc = make_scenario("replica.json", {Scheme::Proposed}, Sweep{SweepVariable::RicianKDb, {100.0}});
  const ScenarioBundle b = run_scenario(sc, RunOptions{50});
  ASSERT_TRUE(b.rows[0].rician);
  const RicianStats& s = *b.rows[0].rician;
  EXPECT_EQ(s.draws, 50);
  EXPECT_NEAR(s.mean_rate / s.los_rate, 1.0, 0.005);
  // LoS reference: the route's own beamformer on the deterministic channel.
  const auto [t, p] = apply_sweep(load_topology_file(sc.topology_path), load_params_file(sc.params_path),
                                  SweepVariable::RicianKDb, 100.0);
  const RoutingResult& r = *b.rows[0].result;
  EXPECT_NEAR(s.los_rate, achievable_rate(end_to_end_oracle(p, t, r.path, r.solution).snr()), 1e-12);
  EXPECT_NEAR(s.los_rate, r.report.rate_bps_hz, 1e-4);
  const auto ls = lines(csv(b));
  EXPECT_EQ(ls[0], "scheme,sweep_value,rate_bps_hz,exact_snr_db,approx_snr_db,path,mean_rate,std_rate,draws");
  EXPECT_EQ(fields(ls[1]).back(), "50");
}

TEST(RicianEval, SingleDrawReproducible) {
  Scenario sc = make_scenario("replica.json", {Scheme::Proposed}, Sweep{SweepVariable::RicianKDb, {0.0, 10.0}});
  const ScenarioBundle a = run_scenario(sc, RunOptions{1});
  const ScenarioBundle b = run_scenario(sc, RunOptions{1});
  EXPECT_EQ(csv(a), csv(b));
  EXPECT_EQ(a.rows[0].rician->std_rate, 0.0);
  sc.seed = 8;
  EXPECT_NE(run_scenario(sc, RunOptions{1}).rows[0].rician->mean_rate, a.rows[0].rician->mean_rate);
}

TEST(RicianEval, NeedsFactor) {
  EXPECT_THROW(run_scenario(make_scenario("replica.json", {Scheme::Proposed}), RunOptions{10}), ScenarioError);
  const SystemParams p = support::default_params();
  const Topology t = load_topology_file(scenario_file("minimal.json"));
  const RoutingResult r = route_passive_only(p, t);
  EXPECT_THROW(rician_rate(p, t, r, 10, 1), ChannelError);
  SystemParams q = p;
  q.rician_k = 10.0;
  EXPECT_THROW(rician_rate(q, t, r, 0, 1), ScenarioError);
}

// ---------------------------------------------------------------------------
// Sweep plumbing

TEST(ApplySweep, Variables) {
  const Topology t = load_topology_file(scenario_file("replica.json"));
  const SystemParams p = load_params_file(scenario_file("params.json"));
  {
    const auto [t2, p2] = apply_sweep(t, p, SweepVariable::PAmpDbm, 4.0);
    EXPECT_NEAR(watts_to_dbm(p2.p_amp_default), 4.0, 1e-12);
  }
  {
    const auto [t2, p2] = apply_sweep(t, p, SweepVariable::MElements, 1500);
    for (NodeId j : t2.passive_ids()) EXPECT_EQ(t2.node(j).elements, 1500);
    for (NodeId j : t2.active_ids()) EXPECT_EQ(t2.node(j).elements, t.node(j).elements);
  }
  {
    const auto [t2, p2] = apply_sweep(t, p, SweepVariable::RicianKDb, 10.0);
    ASSERT_TRUE(p2.rician_k);
    EXPECT_NEAR(*p2.rician_k, 10.0, 1e-12);
  }
  EXPECT_THROW(apply_sweep(t, p, SweepVariable::NElements, 0), ScenarioError);
  EXPECT_THROW(apply_sweep(t, p, SweepVariable::JActive, 99), ScenarioError);
}

TEST(ApplySweep, ActiveCountKeepsLowestIds) {
  const Topology t = load_topology_file(scenario_file("replica.json"));
  SystemParams p = load_params_file(scenario_file("params.json"));
  const auto actives = t.active_ids();
  ASSERT_EQ(actives.size(), 3u);
  p.p_amp_override[actives[0]] = 0.02;
  p.p_amp_override[actives[2]] = 0.03;
  const auto [t1, p1] = apply_sweep(t, p, SweepVariable::JActive, 1);
  EXPECT_EQ(t1.active_ids().size(), 1u);
  EXPECT_EQ(t1.passive_ids().size(), t.passive_ids().size());
  EXPECT_EQ(t1.irs_count(), static_cast<int>(t.passive_ids().size()) + 1);
  // The kept active keeps its override under its new id; the dropped one's goes.
  ASSERT_EQ(p1.p_amp_override.size(), 1u);
  EXPECT_EQ(p1.p_amp_override.begin()->first, t1.active_ids().front());
  EXPECT_EQ(p1.p_amp_override.begin()->second, 0.02);
  EXPECT_EQ((t1.node(t1.active_ids().front()).position - t.node(actives[0]).position).norm(), 0.0);
  const auto [t0, p0] = apply_sweep(t, p, SweepVariable::JActive, 0);
  EXPECT_TRUE(t0.active_ids().empty());
}

TEST(ParallelFor, SlotsFollowIndexOrder) {
  std::vector<int> out(200, -1);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i % 97); }, 4);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i % 97));
  std::atomic<int> calls{0};
  parallel_for(0, [&](std::size_t) { ++calls; }, 4);
  EXPECT_EQ(calls.load(), 0);
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(
                   10, [](std::size_t i) { if (i == 7) throw std::runtime_error("boom"); }, 3),
               std::runtime_error);
}

TEST(SweepNames, RoundTrip) {
  for (auto v : {SweepVariable::PAmpDbm, SweepVariable::NElements, SweepVariable::MElements, SweepVariable::JActive,
                 SweepVariable::RicianKDb})
    EXPECT_EQ(parse_sweep_variable(to_string(v)), v);
  EXPECT_FALSE(parse_sweep_variable("bogus"));
}

TEST(Csv, FixedFormatting) {
  EXPECT_EQ(format_fixed(1.5), "1.500000");
  EXPECT_EQ(format_fixed(-0.25, 2), "-0.25");
  EXPECT_EQ(format_fixed(std::nan("")), "nan");
  EXPECT_EQ(format_fixed(INFINITY), "inf");
  EXPECT_EQ(join_path({3, 1, 4}), "3-1-4");
}
