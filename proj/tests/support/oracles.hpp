#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. Nothing here calls the routing or graph solvers under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "mamp/graph.hpp"
#include "mamp/model.hpp"

namespace mamp::support {

// ---------------------------------------------------------------------------
// Topologies

struct TopologySpec {
  int passive = 4;
  int active = 1;
  double length = 40.0;        // BS at x = 0, user at x = length
  double half_width = 8.0;     // IRS y in [-half_width, half_width]
  double los_radius = 18.0;    // LoS possible only within this range
  double los_probability = 0.75;
  int bs_elements = 4;
  std::pair<int, int> passive_elements{400, 400};  // inclusive range
  std::pair<int, int> active_elements{100, 100};
  bool random_grid = false;     // random factorisation instead of near-square
  bool uniform_elements = true; // one draw per kind instead of per node
};

inline Grid random_grid(int n, std::mt19937_64& rng) {
  std::vector<int> divisors;
  for (int h = 1; h <= n; ++h)
    if (n % h == 0) divisors.push_back(h);
  std::uniform_int_distribution<std::size_t> pick(0, divisors.size() - 1);
  const int h = divisors[pick(rng)];
  return Grid{h, n / h};
}

// Corridor layout: the BS on the left, the user on the right, surfaces
// scattered in between. Kinds are shuffled over the IRS ids.
inline Topology random_topology(std::uint64_t seed, const TopologySpec& spec) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(2.0, spec.length - 2.0), uy(-spec.half_width, spec.half_width),
      uz(2.5, 3.5), coin(0.0, 1.0);
  const int j = spec.passive + spec.active;
  std::vector<NodeKind> kinds(static_cast<std::size_t>(spec.passive), NodeKind::PassiveIrs);
  kinds.insert(kinds.end(), static_cast<std::size_t>(spec.active), NodeKind::ActiveIrs);
  std::shuffle(kinds.begin(), kinds.end(), rng);
  auto draw = [&](std::pair<int, int> r) { return std::uniform_int_distribution<int>(r.first, r.second)(rng); };
  const int m_all = draw(spec.passive_elements), n_all = draw(spec.active_elements);

  std::vector<Node> nodes;
  Node bs;
  bs.id = 0;
  bs.kind = NodeKind::BaseStation;
  bs.position = {0.0, 0.0, 3.0};
  bs.elements = spec.bs_elements;
  nodes.push_back(bs);
  for (int k = 0; k < j; ++k) {
    Node n;
    n.id = k + 1;
    n.kind = kinds[static_cast<std::size_t>(k)];
    n.position = {ux(rng), uy(rng), uz(rng)};
    const bool active = n.kind == NodeKind::ActiveIrs;
    n.elements = spec.uniform_elements ? (active ? n_all : m_all)
                                       : draw(active ? spec.active_elements : spec.passive_elements);
    n.grid = spec.random_grid ? random_grid(n.elements, rng) : near_square_grid(n.elements);
    nodes.push_back(n);
  }
  Node user;
  user.id = j + 1;
  user.kind = NodeKind::User;
  user.position = {spec.length, 0.0, 1.5};
  user.elements = 1;
  nodes.push_back(user);

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int a = 0; a < j + 2; ++a)
    for (int b = a + 1; b < j + 2; ++b) {
      if (a == 0 && b == j + 1) continue;  // direct link blocked
      const double d = (nodes[static_cast<std::size_t>(a)].position - nodes[static_cast<std::size_t>(b)].position).norm();
      if (d <= spec.los_radius && coin(rng) < spec.los_probability) edges.emplace_back(a, b);
    }
  return Topology(std::move(nodes), edges);
}

// ---------------------------------------------------------------------------
// Feasible paths

// Direct transcription of the three feasibility rules.
inline bool brute_force_feasible(const Topology& topo, const std::vector<NodeId>& hops) {
  if (hops.empty()) return false;
  for (std::size_t a = 0; a < hops.size(); ++a) {
    if (hops[a] < 1 || hops[a] > topo.irs_count()) return false;
    for (std::size_t b = a + 1; b < hops.size(); ++b)
      if (hops[a] == hops[b]) return false;
  }
  std::vector<NodeId> chain{0};
  chain.insert(chain.end(), hops.begin(), hops.end());
  chain.push_back(topo.irs_count() + 1);
  for (std::size_t k = 0; k + 1 < chain.size(); ++k)
    if (!topo.los(chain[k], chain[k + 1])) return false;
  return true;
}

// Edge-set rule applied segment by segment: inside each stretch between
// endpoints (BS, active surfaces, user) the passive surfaces must lie at
// strictly increasing distance from the stretch's starting endpoint.
inline bool obeys_forward_progress(const Topology& topo, const std::vector<NodeId>& hops) {
  NodeId start = topo.bs();
  double last = 0.0;
  for (NodeId h : hops) {
    if (topo.node(h).is_active()) {
      start = h;
      last = 0.0;
      continue;
    }
    const double d = topo.distance(start, h);
    if (!(d > last)) return false;
    last = d;
  }
  return true;
}

// The routing graphs' edge sets: forward progress inside every stretch, and
// active surfaces visited at strictly increasing distance from the BS.
inline bool within_edge_sets(const Topology& topo, const std::vector<NodeId>& hops) {
  double last = -1.0;
  for (NodeId h : hops)
    if (topo.node(h).is_active()) {
      const double d = topo.distance(topo.bs(), h);
      if (!(d > last)) return false;
      last = d;
    }
  return obeys_forward_progress(topo, hops);
}

// Every feasible path, in lexicographic order of the hop list.
inline std::vector<std::vector<NodeId>> enumerate_feasible_paths(const Topology& topo) {
  std::vector<std::vector<NodeId>> out;
  std::vector<NodeId> cur;
  std::vector<bool> used(static_cast<std::size_t>(topo.size()), false);
  std::function<void(NodeId)> dfs = [&](NodeId u) {
    if (!cur.empty() && topo.los(u, topo.user())) out.push_back(cur);
    for (NodeId v = 1; v <= topo.irs_count(); ++v) {
      if (used[static_cast<std::size_t>(v)] || !topo.los(u, v)) continue;
      used[static_cast<std::size_t>(v)] = true;
      cur.push_back(v);
      dfs(v);
      cur.pop_back();
      used[static_cast<std::size_t>(v)] = false;
    }
  };
  dfs(topo.bs());
  return out;
}

// ---------------------------------------------------------------------------
// Reference SNR: explicit per-element power bookkeeping along the path with
// amplification factors that ignore forwarded noise.

inline double reference_snr(const SystemParams& p, const Topology& topo, const std::vector<NodeId>& hops) {
  double signal = p.p_bs * topo.node(0).elements;  // per-element power after the BS array gain
  double noise = 0.0;
  NodeId prev = 0;
  std::vector<NodeId> chain = hops;
  chain.push_back(topo.user());
  for (NodeId cur : chain) {
    const double link = p.beta / std::pow(topo.distance(prev, cur), 2.0);
    signal *= link;
    noise *= link;
    const Node& n = topo.node(cur);
    if (n.is_passive()) {
      signal *= double(n.elements) * n.elements;
      noise *= double(n.elements) * n.elements;
    } else if (n.is_active()) {
      const double eta2 = p.amp_power(cur) / (n.elements * (signal + p.sigma2_f));
      signal *= eta2 * n.elements * n.elements;
      noise = eta2 * (noise * n.elements * n.elements + p.sigma2_f * n.elements);
    }
    prev = cur;
  }
  return signal / (noise + p.sigma2);
}

struct BestPath {
  std::vector<NodeId> hops;
  double snr = 0.0;
};

// Maximum over the given candidates; ties (1e-12 relative) keep the
// lexicographically smallest hop list.
inline std::optional<BestPath> best_by_reference(const SystemParams& p, const Topology& topo,
                                                 const std::vector<std::vector<NodeId>>& candidates) {
  std::optional<BestPath> best;
  for (const auto& c : candidates) {
    const double s = reference_snr(p, topo, c);
    if (!best || s > best->snr * (1.0 + 1e-12) || (s >= best->snr * (1.0 - 1e-12) && c < best->hops))
      best = BestPath{c, s};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Graphs

struct DagSpec {
  int vertices = 8;             // including source and sink
  double edge_probability = 0.5;
  double weight_lo = 0.0;
  double weight_hi = 3.0;
  bool integer_weights = false; // encourages exact ties
};

// Vertex ids 0..n-1 in topological order; source 0, sink n-1. Vertex ids are
// shuffled so the topological order differs from the id order.
inline RoutingGraph random_dag(std::uint64_t seed, const DagSpec& spec) {
  std::mt19937_64 rng(seed);
  std::vector<NodeId> order(static_cast<std::size_t>(spec.vertices));
  for (int k = 0; k < spec.vertices; ++k) order[static_cast<std::size_t>(k)] = k;
  std::shuffle(order.begin() + 1, order.end() - 1, rng);
  std::uniform_real_distribution<double> coin(0.0, 1.0), w(spec.weight_lo, spec.weight_hi);
  std::uniform_int_distribution<int> wi(static_cast<int>(spec.weight_lo), static_cast<int>(spec.weight_hi));
  const NodeId source = order.front(), sink = order.back();
  RoutingGraph g(order, source, sink);
  for (std::size_t a = 0; a < order.size(); ++a)
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      if (order[a] == sink || order[b] == source) continue;
      if (coin(rng) < spec.edge_probability)
        g.add_edge(order[a], order[b], spec.integer_weights ? double(wi(rng)) : w(rng));
    }
  return g;
}

struct EnumeratedPath {
  std::vector<NodeId> nodes;
  double cost = 0.0;
};

// All simple source->sink paths with their costs; `hop_weight` (1-based edge
// position) overrides the stored weight when given.
inline std::vector<EnumeratedPath> enumerate_simple_paths(const RoutingGraph& g, const HopWeightFn& hop_weight = {}) {
  std::vector<EnumeratedPath> out;
  std::vector<NodeId> cur{g.source()};
  std::function<void(NodeId, double)> dfs = [&](NodeId u, double cost) {
    if (u == g.sink()) {
      out.push_back({cur, cost});
      return;
    }
    for (const Edge& e : g.edges()) {
      if (e.from != u || std::find(cur.begin(), cur.end(), e.to) != cur.end()) continue;
      const int hop = static_cast<int>(cur.size());
      const double w = hop_weight ? hop_weight(hop, e.from, e.to) : e.weight;
      cur.push_back(e.to);
      dfs(e.to, cost + w);
      cur.pop_back();
    }
  };
  dfs(g.source(), 0.0);
  return out;
}

// Minimum cost with ties (absolute 1e-12) broken lexicographically.
inline std::optional<EnumeratedPath> best_enumerated(const std::vector<EnumeratedPath>& paths,
                                                     std::optional<int> intermediates = std::nullopt) {
  std::optional<EnumeratedPath> best;
  for (const auto& p : paths) {
    if (intermediates && static_cast<int>(p.nodes.size()) - 2 != *intermediates) continue;
    if (!best || p.cost < best->cost - 1e-12 || (p.cost <= best->cost + 1e-12 && p.nodes < best->nodes)) best = p;
  }
  return best;
}

}  // namespace mamp::support
