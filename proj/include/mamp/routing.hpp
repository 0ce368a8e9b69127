#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mamp/beamforming.hpp"
#include "mamp/graph.hpp"
#include "mamp/model.hpp"
#include "mamp/snr.hpp"

namespace mamp {

enum class Scheme { Proposed, Exhaustive, Myopic, Random, AllPassive, PassiveOnlyP1 };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Proposed: return "Proposed";
    case Scheme::Exhaustive: return "Exhaustive";
    case Scheme::Myopic: return "Myopic";
    case Scheme::Random: return "Random";
    case Scheme::AllPassive: return "AllPassive";
    case Scheme::PassiveOnlyP1: return "PassiveOnlyP1";
  }
  return "?";
}

// Case-insensitive; underscores and dashes ignored.
inline std::optional<Scheme> parse_scheme(const std::string& name) {
  std::string key;
  for (char c : name)
    if (c != '_' && c != '-') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "proposed" || key == "mamp") return Scheme::Proposed;
  if (key == "exhaustive" || key == "optimal") return Scheme::Exhaustive;
  if (key == "myopic") return Scheme::Myopic;
  if (key == "random") return Scheme::Random;
  if (key == "allpassive") return Scheme::AllPassive;
  if (key == "passiveonlyp1" || key == "passiveonly" || key == "passive") return Scheme::PassiveOnlyP1;
  return std::nullopt;
}

enum class RoutingErrc { NoFeasiblePath, NoActiveReachable, TopologyTooLarge, NotActive };

class RoutingError : public std::runtime_error {
 public:
  RoutingError(RoutingErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  RoutingErrc code() const noexcept { return code_; }

 private:
  RoutingErrc code_;
};

struct RoutingResult {
  Scheme scheme = Scheme::Proposed;
  RoutingPath path;
  BeamformingSolution solution;
  SnrReport report;
  int repairs_triggered = 0;
};

inline RoutingResult make_result(const SystemParams& params, const Topology& topo, RoutingPath path, Scheme scheme,
                                 int repairs = 0) {
  RoutingResult r;
  r.scheme = scheme;
  r.report = evaluate_path(params, topo, path);
  r.solution = optimal_beamforming(params, topo, path, AmplificationRule::Exact);
  r.path = std::move(path);
  r.repairs_triggered = repairs;
  return r;
}

// Max-gain passive stretch between two endpoints; K = 0 (direct link) is
// allowed when `allow_direct` is set and the endpoints see each other.
inline std::optional<Segment> best_passive_segment(const SystemParams& params, const Topology& topo, NodeId from,
                                                   NodeId to, const std::set<NodeId>& excluded = {},
                                                   bool allow_direct = true) {
  std::vector<NodeId> cand;
  for (NodeId p : topo.passive_ids())
    if (!excluded.count(p)) cand.push_back(p);
  const RoutingGraph g = build_log_distance_graph(params, topo, from, to, cand, GraphOptions{allow_direct});
  const auto sp = shortest_simple_path(g);
  if (!sp) return std::nullopt;
  Segment seg{from, to, std::vector<NodeId>(sp->nodes.begin() + 1, sp->nodes.end() - 1), 0.0};
  seg.gain = segment_gain(params, topo, seg);
  return seg;
}

inline RoutingResult route_passive_only(const SystemParams& params, const Topology& topo) {
  const auto seg = best_passive_segment(params, topo, topo.bs(), topo.user(), {}, false);
  if (!seg) throw RoutingError(RoutingErrc::NoFeasiblePath, "no passive-only path from BS to user");
  return make_result(params, topo, RoutingPath::from_hops(topo, seg->inner), Scheme::PassiveOnlyP1);
}

// ---------------------------------------------------------------------------
// Active-vs-passive selection for a single active surface.

enum class Selection { Active, Passive, PassivePreferredForAllP };

struct SelectionThresholds {
  double min_p_amp = 0.0;  // W; +inf when no finite budget suffices
  double min_n = 0.0;
  double theorem1_lhs = 0.0;
  double theorem1_rhs = 0.0;
};

struct SelectionOutcome {
  Selection decision = Selection::Passive;
  SelectionThresholds thresholds;
};

// Active wins iff N/sF2 >= f_bu/(f_ba s2) + P_B f_bu/(P f_au sF2) + f_bu/(P f_ba f_au),
// which is the single-active SNR being at least the passive-only SNR.
inline SelectionOutcome select_active_or_passive(const SystemParams& params, double f_ba, double f_au, double f_bu,
                                                 double n, double p_amp) {
  const double s2 = params.sigma2, sf2 = params.sigma2_f, pb = params.p_bs;
  SelectionOutcome out;
  auto& t = out.thresholds;
  t.theorem1_lhs = n / sf2;
  t.theorem1_rhs = f_bu / (f_ba * s2) + pb * f_bu / (p_amp * f_au * sf2) + f_bu / (p_amp * f_ba * f_au);
  const double denom = f_au * (n * f_ba * s2 - f_bu * sf2);
  t.min_p_amp = denom > 0.0 ? f_bu * s2 * (pb * f_ba + sf2) / denom : std::numeric_limits<double>::infinity();
  t.min_n = f_bu * sf2 / (f_ba * s2) + pb * f_bu / (p_amp * f_au) + f_bu * sf2 / (p_amp * f_ba * f_au);
  if (denom <= 0.0)
    out.decision = Selection::PassivePreferredForAllP;
  else
    out.decision = t.theorem1_lhs >= t.theorem1_rhs ? Selection::Active : Selection::Passive;
  return out;
}

// ---------------------------------------------------------------------------
// Two-phase planner.

namespace detail {

using PairKey = std::pair<NodeId, NodeId>;

// Lazily solved best passive stretch per ordered endpoint pair, with
// per-pair exclusions added by the conflict repair.
class SegmentTable {
 public:
  SegmentTable(const SystemParams& params, const Topology& topo) : params_(&params), topo_(&topo) {}

  const std::optional<Segment>& get(NodeId from, NodeId to) {
    const PairKey key{from, to};
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      auto ex = excluded_.find(key);
      it = cache_.emplace(key, best_passive_segment(*params_, *topo_, from, to,
                                                    ex == excluded_.end() ? std::set<NodeId>{} : ex->second))
               .first;
    }
    return it->second;
  }

  void exclude(NodeId from, NodeId to, NodeId passive) {
    excluded_[{from, to}].insert(passive);
    cache_.erase({from, to});
  }

 private:
  const SystemParams* params_;
  const Topology* topo_;
  std::map<PairKey, std::optional<Segment>> cache_;
  std::map<PairKey, std::set<NodeId>> excluded_;
};

struct ActivePlan {
  std::vector<NodeId> actives;
  std::vector<Segment> segments;  // actives.size() + 1
};

// Additive form of the high-SNR objective: the inverse SNR splits into one
// term per active-to-active hop.
inline double hop_inverse_snr(const SystemParams& params, const Topology& topo, NodeId from, NodeId to, double gain) {
  const bool from_bs = from == topo.bs();
  const bool to_user = to == topo.user();
  const double p = from_bs ? params.p_bs : params.amp_power(from);
  const double gamma = p * gain / (to_user ? params.sigma2 : params.sigma2_f);
  double n = 1.0;
  if (!from_bs) n *= topo.node(from).elements;
  if (!to_user) n *= topo.node(to).elements;
  return 1.0 / (n * gamma);
}

inline std::vector<NodeId> expand(const ActivePlan& plan) {
  std::vector<NodeId> hops;
  for (std::size_t k = 0; k < plan.segments.size(); ++k) {
    hops.insert(hops.end(), plan.segments[k].inner.begin(), plan.segments[k].inner.end());
    if (k < plan.actives.size()) hops.push_back(plan.actives[k]);
  }
  return hops;
}

inline double plan_exact_snr(const SystemParams& params, const Topology& topo, const ActivePlan& plan) {
  std::vector<double> gamma, n;
  for (std::size_t k = 0; k < plan.segments.size(); ++k) {
    const Segment& s = plan.segments[k];
    const double p = k == 0 ? params.p_bs : params.amp_power(s.from);
    gamma.push_back(p * s.gain / (k + 1 == plan.segments.size() ? params.sigma2 : params.sigma2_f));
  }
  for (NodeId a : plan.actives) n.push_back(topo.node(a).elements);
  return cascade_snr(gamma, n);
}

// First passive surface used by two segments: (node, earlier idx, later idx).
struct Conflict {
  NodeId node;
  std::size_t first;
  std::size_t second;
};

inline std::optional<Conflict> find_conflict(const ActivePlan& plan) {
  std::map<NodeId, std::size_t> owner;
  for (std::size_t k = 0; k < plan.segments.size(); ++k)
    for (NodeId p : plan.segments[k].inner) {
      auto [it, fresh] = owner.emplace(p, k);
      if (!fresh) return Conflict{p, it->second, k};
    }
  return std::nullopt;
}

inline std::optional<ActivePlan> plan_for_sequence(SegmentTable& table, const Topology& topo,
                                                   const std::vector<NodeId>& actives) {
  ActivePlan plan{actives, {}};
  NodeId prev = topo.bs();
  for (std::size_t k = 0; k <= actives.size(); ++k) {
    const NodeId next = k < actives.size() ? actives[k] : topo.user();
    const auto& seg = table.get(prev, next);
    if (!seg) return std::nullopt;
    plan.segments.push_back(*seg);
    prev = next;
  }
  return plan;
}

struct PlannerOptions {
  bool rerank_exact = false;  // pick among per-K_a candidates by exact SNR
};

// Best active sequence over the active graph (BS, actives, user) whose edges
// exist when the pair has a passive stretch and, between actives, the head
// lies strictly farther from the BS.
inline std::optional<ActivePlan> plan_active_route(const SystemParams& params, const Topology& topo,
                                                   SegmentTable& table, PlannerOptions options = {}) {
  const auto actives = topo.active_ids();
  RoutingGraph g(actives, topo.bs(), topo.user());
  std::vector<std::pair<PairKey, double>> raw;
  auto link = [&](NodeId i, NodeId j) {
    if (const auto& seg = table.get(i, j)) raw.push_back({{i, j}, hop_inverse_snr(params, topo, i, j, seg->gain)});
  };
  for (NodeId a : actives) link(topo.bs(), a);
  for (NodeId a : actives)
    for (NodeId b : actives)
      if (a != b && topo.distance(topo.bs(), b) > topo.distance(topo.bs(), a)) link(a, b);
  for (NodeId a : actives) link(a, topo.user());

  // Inverse SNRs are tiny; rescale so the absolute tie tolerance of the
  // solver acts as a relative one. The argmin is unchanged.
  double scale = 0.0;
  for (const auto& [key, w] : raw) scale = std::max(scale, w);
  std::map<PairKey, double> weight;
  for (const auto& [key, w] : raw) {
    weight[key] = w / scale;
    g.add_edge(key.first, key.second, w / scale);
  }

  const AhspResult res =
      ahsp(g, static_cast<int>(actives.size()), [&](int, NodeId i, NodeId j) { return weight.at({i, j}); });

  std::optional<ActivePlan> best;
  double best_score = 0.0;
  std::vector<NodeId> best_nodes;
  for (const auto& [k, sp] : res.by_intermediates) {
    if (k == 0) continue;  // at least one active surface
    const std::vector<NodeId> seq(sp.nodes.begin() + 1, sp.nodes.end() - 1);
    auto plan = plan_for_sequence(table, topo, seq);
    if (!plan) continue;
    // Lower is better in both cases.
    const double score = options.rerank_exact ? 1.0 / plan_exact_snr(params, topo, *plan) : sp.cost;
    const bool take = !best || score < best_score * (1.0 - 1e-12) ||
                      (score <= best_score * (1.0 + 1e-12) && sp.nodes < best_nodes);
    if (take) {
      best = std::move(plan);
      best_score = score;
      best_nodes = sp.nodes;
    }
  }
  return best;
}

// Resolve passive surfaces claimed by two segments: try removing the shared
// surface from either segment's pair, keep the alternative with the higher
// exact SNR, and re-plan. At most `budget` rounds.
template <class Solve>
std::optional<ActivePlan> repair_conflicts(const SystemParams& params, const Topology& topo, SegmentTable& table,
                                           Solve solve, int budget, int& repairs) {
  auto plan = solve(table);
  repairs = 0;
  while (plan) {
    const auto conflict = find_conflict(*plan);
    if (!conflict) return plan;
    if (repairs >= budget) return std::nullopt;
    ++repairs;
    std::optional<ActivePlan> chosen;
    std::optional<SegmentTable> chosen_table;
    double chosen_snr = -1.0;
    for (std::size_t idx : {conflict->first, conflict->second}) {
      SegmentTable trial = table;
      trial.exclude(plan->segments[idx].from, plan->segments[idx].to, conflict->node);
      auto alt = solve(trial);
      if (!alt) continue;
      const double snr = plan_exact_snr(params, topo, *alt);
      if (snr > chosen_snr) {
        chosen_snr = snr;
        chosen = std::move(alt);
        chosen_table = std::move(trial);
      }
    }
    if (!chosen) return std::nullopt;
    table = std::move(*chosen_table);
    plan = std::move(chosen);
  }
  return std::nullopt;
}

}  // namespace detail

inline RoutingResult route_samp(const SystemParams& params, const Topology& topo, NodeId active_id) {
  if (!topo.contains(active_id) || !topo.node(active_id).is_active())
    throw RoutingError(RoutingErrc::NotActive, "node " + std::to_string(active_id) + " is not an active IRS");
  detail::SegmentTable table(params, topo);
  int repairs = 0;
  const auto plan = detail::repair_conflicts(
      params, topo, table,
      [&](detail::SegmentTable& t) { return detail::plan_for_sequence(t, topo, {active_id}); },
      static_cast<int>(topo.passive_ids().size()), repairs);
  if (!plan)
    throw RoutingError(RoutingErrc::NoFeasiblePath, "no feasible path through active IRS " + std::to_string(active_id));
  return make_result(params, topo, RoutingPath::from_hops(topo, detail::expand(*plan)), Scheme::Proposed, repairs);
}

struct MampOptions {
  bool compare_passive_only = true;
  bool rerank_exact = false;
};

inline RoutingResult route_mamp(const SystemParams& params, const Topology& topo, MampOptions options = {}) {
  std::optional<RoutingResult> mixed;
  if (!topo.active_ids().empty()) {
    detail::SegmentTable table(params, topo);
    int repairs = 0;
    const auto plan = detail::repair_conflicts(
        params, topo, table,
        [&](detail::SegmentTable& t) {
          return detail::plan_active_route(params, topo, t, {options.rerank_exact});
        },
        static_cast<int>(topo.passive_ids().size()), repairs);
    if (plan)
      mixed = make_result(params, topo, RoutingPath::from_hops(topo, detail::expand(*plan)), Scheme::Proposed, repairs);
  }
  if (!options.compare_passive_only) {
    if (!mixed) throw RoutingError(RoutingErrc::NoActiveReachable, "no feasible route through any active IRS");
    return *mixed;
  }
  std::optional<RoutingResult> passive;
  try {
    passive = route_passive_only(params, topo);
    passive->scheme = Scheme::Proposed;
  } catch (const RoutingError&) {
  }
  if (!mixed && !passive) throw RoutingError(RoutingErrc::NoFeasiblePath, "no feasible path from BS to user");
  if (!mixed) return *passive;
  if (!passive) return *mixed;
  return passive->report.exact_snr > mixed->report.exact_snr ? *passive : *mixed;
}

// ---------------------------------------------------------------------------
// Exhaustive search.

inline int default_exhaustive_cap() {
  if (const char* env = std::getenv("ROUTE_MAX_EXHAUSTIVE")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return 12;
}

namespace detail {

// Depth-first enumeration of every feasible path in ascending-id order, with
// the cascade SNR folded incrementally so each extension is O(1).
class ExhaustiveSearch {
 public:
  ExhaustiveSearch(const SystemParams& params, const Topology& topo) : params_(params), topo_(topo) {
    visited_.assign(static_cast<std::size_t>(topo.size()), false);
  }

  std::optional<std::vector<NodeId>> run() {
    State s;
    s.seg_log_gain = std::log(static_cast<double>(topo_.node(topo_.bs()).elements));
    s.p_prev = params_.p_bs;
    dfs(topo_.bs(), s);
    return best_;
  }
  double best_snr() const { return best_snr_; }

 private:
  struct State {
    double seg_log_gain = 0.0;  // log gain of the open segment so far
    double inv = 0.0;           // accumulated sum u_k / N_k
    double u_prev = 0.0;
    double n_prev = 1.0;
    double p_prev = 0.0;
    bool has_active = false;
  };

  double link_log_gain(NodeId a, NodeId b) const {
    return std::log(params_.beta) - 2.0 * std::log(topo_.distance(a, b));
  }

  void dfs(NodeId u, const State& s) {
    if (!path_.empty() && topo_.los(u, topo_.user())) {
      const double f = std::exp(s.seg_log_gain + link_log_gain(u, topo_.user()));
      const double gamma = s.p_prev * f / params_.sigma2;
      const double snr = s.has_active ? 1.0 / (s.inv + (1.0 + s.u_prev) / (s.n_prev * gamma)) : gamma;
      consider(snr);
    }
    for (NodeId v : topo_.irs_ids()) {
      if (visited_[static_cast<std::size_t>(v)] || !topo_.los(u, v)) continue;
      const Node& node = topo_.node(v);
      State t = s;
      t.seg_log_gain += link_log_gain(u, v);
      if (node.is_passive()) {
        t.seg_log_gain += 2.0 * std::log(static_cast<double>(node.elements));
      } else {
        const double gamma = s.p_prev * std::exp(t.seg_log_gain) / params_.sigma2_f;
        const double uk = s.has_active ? (1.0 + s.u_prev) / (s.n_prev * gamma) : 1.0 / gamma;
        t.inv += uk / node.elements;
        t.u_prev = uk;
        t.n_prev = node.elements;
        t.p_prev = params_.amp_power(v);
        t.has_active = true;
        t.seg_log_gain = 0.0;
      }
      visited_[static_cast<std::size_t>(v)] = true;
      path_.push_back(v);
      dfs(v, t);
      path_.pop_back();
      visited_[static_cast<std::size_t>(v)] = false;
    }
  }

  // Paths arrive in lexicographic order, so ties keep the earlier one.
  void consider(double snr) {
    if (!best_ || snr > best_snr_ * (1.0 + 1e-12)) {
      best_ = path_;
      best_snr_ = snr;
    }
  }

  const SystemParams& params_;
  const Topology& topo_;
  std::vector<bool> visited_;
  std::vector<NodeId> path_;
  std::optional<std::vector<NodeId>> best_;
  double best_snr_ = 0.0;
};

}  // namespace detail

inline RoutingResult route_exhaustive(const SystemParams& params, const Topology& topo,
                                      int max_irs = default_exhaustive_cap()) {
  if (topo.irs_count() > max_irs)
    throw RoutingError(RoutingErrc::TopologyTooLarge, "exhaustive search capped at " + std::to_string(max_irs) +
                                                          " IRSs; topology has " + std::to_string(topo.irs_count()));
  detail::ExhaustiveSearch search(params, topo);
  const auto best = search.run();
  if (!best) throw RoutingError(RoutingErrc::NoFeasiblePath, "no feasible path from BS to user");
  return make_result(params, topo, RoutingPath::from_hops(topo, *best), Scheme::Exhaustive);
}

// ---------------------------------------------------------------------------
// Benchmark walks on the full mixed graph.

inline RoutingGraph mixed_graph(const SystemParams& params, const Topology& topo) {
  return build_log_distance_graph(params, topo, topo.bs(), topo.user(), topo.irs_ids(), GraphOptions{false});
}

inline RoutingResult route_myopic(const SystemParams& params, const Topology& topo) {
  const RoutingGraph g = mixed_graph(params, topo);
  std::vector<NodeId> hops;
  NodeId u = g.source();
  while (u != g.sink()) {
    std::optional<Edge> pick;
    for (std::size_t e : g.out_edges(u)) {
      const Edge& edge = g.edges()[e];
      if (!pick || edge.weight < pick->weight - kCostTieTolerance ||
          (std::abs(edge.weight - pick->weight) <= kCostTieTolerance && edge.to < pick->to))
        pick = edge;
    }
    if (!pick) throw RoutingError(RoutingErrc::NoFeasiblePath, "greedy walk reached a dead end");
    u = pick->to;
    if (u != g.sink()) hops.push_back(u);
  }
  return make_result(params, topo, RoutingPath::from_hops(topo, hops), Scheme::Myopic);
}

inline constexpr int kRandomWalkRetries = 100;

inline RoutingResult route_random(const SystemParams& params, const Topology& topo, std::uint64_t seed) {
  const RoutingGraph g = mixed_graph(params, topo);
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kRandomWalkRetries; ++attempt) {
    std::vector<NodeId> hops;
    NodeId u = g.source();
    bool stuck = false;
    while (u != g.sink()) {
      const auto& out = g.out_edges(u);
      if (out.empty()) {
        stuck = true;
        break;
      }
      std::uniform_int_distribution<std::size_t> pick(0, out.size() - 1);
      u = g.edges()[out[pick(rng)]].to;
      if (u != g.sink()) hops.push_back(u);
    }
    if (!stuck) return make_result(params, topo, RoutingPath::from_hops(topo, hops), Scheme::Random);
  }
  throw RoutingError(RoutingErrc::NoFeasiblePath, "random walk found no path within the retry budget");
}

// Every active surface re-typed passive with the reference passive size.
inline Topology all_passive_topology(const Topology& topo) {
  const int m = static_cast<int>(reference_elements(topo));
  Topology out = topo;
  for (NodeId a : topo.active_ids()) {
    Node n = topo.node(a);
    n.kind = NodeKind::PassiveIrs;
    n.elements = m;
    n.grid = near_square_grid(m);
    out = out.with_node(n);
  }
  return out;
}

inline RoutingResult route_all_passive(const SystemParams& params, const Topology& topo) {
  const Topology retyped = all_passive_topology(topo);
  RoutingResult r = route_passive_only(params, retyped);
  r.scheme = Scheme::AllPassive;
  return r;
}

inline RoutingResult route_scheme(Scheme scheme, const SystemParams& params, const Topology& topo,
                                  std::uint64_t seed = 0) {
  switch (scheme) {
    case Scheme::Proposed: return route_mamp(params, topo);
    case Scheme::Exhaustive: return route_exhaustive(params, topo);
    case Scheme::Myopic: return route_myopic(params, topo);
    case Scheme::Random: return route_random(params, topo, seed);
    case Scheme::AllPassive: return route_all_passive(params, topo);
    case Scheme::PassiveOnlyP1: return route_passive_only(params, topo);
  }
  throw std::logic_error("unknown scheme");
}

}  // namespace mamp
