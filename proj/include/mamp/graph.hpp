#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

#include "mamp/model.hpp"

namespace mamp {

enum class GraphErrc { SourceSinkNotDistinct, UnknownVertex, NegativeWeightPresent };

class GraphError : public std::runtime_error {
 public:
  GraphError(GraphErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  GraphErrc code() const noexcept { return code_; }

 private:
  GraphErrc code_;
};

// Absolute tolerance under which two path costs count as tied.
inline constexpr double kCostTieTolerance = 1e-12;

struct Edge {
  NodeId from = 0;
  NodeId to = 0;
  double weight = 0.0;
};

class RoutingGraph {
 public:
  RoutingGraph(std::vector<NodeId> vertices, NodeId source, NodeId sink) : source_(source), sink_(sink) {
    if (source == sink) throw GraphError(GraphErrc::SourceSinkNotDistinct, "source and sink coincide");
    vertices.push_back(source);
    vertices.push_back(sink);
    std::sort(vertices.begin(), vertices.end());
    vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
    vertices_ = std::move(vertices);
    for (std::size_t i = 0; i < vertices_.size(); ++i) index_[vertices_[i]] = i;
    out_.resize(vertices_.size());
    in_.resize(vertices_.size());
  }

  void add_edge(NodeId from, NodeId to, double weight) {
    const std::size_t e = edges_.size();
    edges_.push_back({from, to, weight});
    out_[index_of(from)].push_back(e);
    in_[index_of(to)].push_back(e);
  }

  NodeId source() const { return source_; }
  NodeId sink() const { return sink_; }
  const std::vector<NodeId>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_vertex(NodeId v) const { return index_.count(v) != 0; }

  std::size_t index_of(NodeId v) const {
    auto it = index_.find(v);
    if (it == index_.end()) throw GraphError(GraphErrc::UnknownVertex, "vertex " + std::to_string(v) + " not in graph");
    return it->second;
  }
  const std::vector<std::size_t>& out_edges(NodeId v) const { return out_[index_of(v)]; }
  const std::vector<std::size_t>& in_edges(NodeId v) const { return in_[index_of(v)]; }

  bool has_negative_weight() const {
    return std::any_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.weight < 0.0; });
  }

 private:
  NodeId source_;
  NodeId sink_;
  std::vector<NodeId> vertices_;
  std::map<NodeId, std::size_t> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

struct ShortestPath {
  std::vector<NodeId> nodes;  // source first, sink last
  double cost = 0.0;
};

// True when `a` is the preferred of two paths: cheaper beyond the tie
// tolerance, or tied and lexicographically smaller.
inline bool better_path(double cost_a, const std::vector<NodeId>& a, double cost_b, const std::vector<NodeId>& b) {
  if (cost_a < cost_b - kCostTieTolerance) return true;
  if (cost_a > cost_b + kCostTieTolerance) return false;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

namespace detail {

inline std::vector<double> dijkstra_labels(const RoutingGraph& g, NodeId start, bool reverse) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.vertices().size(), inf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[g.index_of(start)] = 0.0;
  pq.emplace(0.0, g.index_of(start));
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    const NodeId uid = g.vertices()[u];
    // Paths never continue through the sink (forward) or the source (backward).
    if (!reverse && uid == g.sink() && uid != start) continue;
    if (reverse && uid == g.source() && uid != start) continue;
    for (std::size_t e : reverse ? g.in_edges(uid) : g.out_edges(uid)) {
      const Edge& edge = g.edges()[e];
      const std::size_t v = g.index_of(reverse ? edge.from : edge.to);
      if (dist[u] + edge.weight < dist[v]) {
        dist[v] = dist[u] + edge.weight;
        pq.emplace(dist[v], v);
      }
    }
  }
  return dist;
}

}  // namespace detail

// Nonnegative weights only. Among optimal paths the lexicographically
// smallest node sequence is returned: a forward walk that always takes the
// smallest next vertex still able to finish at the optimal cost.
inline std::optional<ShortestPath> dijkstra(const RoutingGraph& g) {
  if (g.has_negative_weight())
    throw GraphError(GraphErrc::NegativeWeightPresent, "negative edge weight; use the all-hops solver");
  const auto fwd = detail::dijkstra_labels(g, g.source(), false);
  const double best = fwd[g.index_of(g.sink())];
  if (!std::isfinite(best)) return std::nullopt;
  const auto bwd = detail::dijkstra_labels(g, g.sink(), true);

  ShortestPath out{{g.source()}, 0.0};
  std::set<NodeId> visited{g.source()};
  NodeId u = g.source();
  while (u != g.sink()) {
    std::optional<NodeId> pick;
    double pick_w = 0.0;
    for (std::size_t e : g.out_edges(u)) {
      const Edge& edge = g.edges()[e];
      if (visited.count(edge.to)) continue;
      const double rest = bwd[g.index_of(edge.to)];
      if (!std::isfinite(rest)) continue;
      if (out.cost + edge.weight + rest > best + kCostTieTolerance) continue;
      if (!pick || edge.to < *pick || (edge.to == *pick && edge.weight < pick_w)) {
        pick = edge.to;
        pick_w = edge.weight;
      }
    }
    if (!pick) return std::nullopt;  // only reachable through a zero-weight cycle
    out.cost += pick_w;
    out.nodes.push_back(*pick);
    visited.insert(*pick);
    u = *pick;
  }
  return out;
}

// Weight of the edge when it is the `hop`-th edge (1-based) of the path.
using HopWeightFn = std::function<double(int hop, NodeId from, NodeId to)>;

struct AhspResult {
  std::map<int, ShortestPath> by_intermediates;  // keyed by intermediate-vertex count
  std::size_t relaxations = 0;

  std::optional<ShortestPath> best() const {
    std::optional<ShortestPath> out;
    for (const auto& [k, p] : by_intermediates)
      if (!out || better_path(p.cost, p.nodes, out->cost, out->nodes)) out = p;
    return out;
  }
};

// Layered dynamic program over the number of edges. Layer h relaxes every
// edge as the h-th hop, so hop-indexed and negative weights are handled.
// Intended for DAGs; on other graphs walks that revisit a vertex are skipped.
inline AhspResult ahsp(const RoutingGraph& g, int max_hops, const HopWeightFn& hop_weight = {}) {
  if (max_hops < 0) throw std::invalid_argument("max_hops must be non-negative");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t nv = g.vertices().size();
  struct Label {
    double cost = inf;
    std::vector<NodeId> nodes;
  };
  std::vector<Label> layer(nv);
  layer[g.index_of(g.source())] = {0.0, {g.source()}};
  AhspResult out;
  for (int h = 1; h <= max_hops + 1; ++h) {
    std::vector<Label> next(nv);
    for (std::size_t u = 0; u < nv; ++u) {
      const Label& lu = layer[u];
      if (!std::isfinite(lu.cost)) continue;
      const NodeId uid = g.vertices()[u];
      if (uid == g.sink()) continue;
      for (std::size_t e : g.out_edges(uid)) {
        const Edge& edge = g.edges()[e];
        ++out.relaxations;
        if (edge.to == g.source()) continue;
        if (std::find(lu.nodes.begin(), lu.nodes.end(), edge.to) != lu.nodes.end()) continue;
        const double w = hop_weight ? hop_weight(h, edge.from, edge.to) : edge.weight;
        const double cand = lu.cost + w;
        Label& lv = next[g.index_of(edge.to)];
        std::vector<NodeId> nodes = lu.nodes;
        nodes.push_back(edge.to);
        if (!std::isfinite(lv.cost) || better_path(cand, nodes, lv.cost, lv.nodes)) {
          lv.cost = cand;
          lv.nodes = std::move(nodes);
        }
      }
    }
    const Label& at_sink = next[g.index_of(g.sink())];
    if (std::isfinite(at_sink.cost)) out.by_intermediates[h - 1] = {at_sink.nodes, at_sink.cost};
    layer = std::move(next);
  }
  return out;
}

// Dijkstra when all weights are nonnegative, otherwise the all-hops solver
// over every possible path length.
inline std::optional<ShortestPath> shortest_simple_path(const RoutingGraph& g) {
  if (!g.has_negative_weight()) return dijkstra(g);
  return ahsp(g, static_cast<int>(g.vertices().size()) - 2).best();
}

// Element count that normalises edges into non-passive vertices: the largest
// passive surface, or the largest surface of any kind if none is passive.
inline double reference_elements(const Topology& topo) {
  int m = 0;
  for (NodeId j : topo.passive_ids()) m = std::max(m, topo.node(j).elements);
  if (m == 0)
    for (NodeId j : topo.irs_ids()) m = std::max(m, topo.node(j).elements);
  return std::max(m, 1);
}

struct GraphOptions {
  bool allow_direct = true;  // keep a source->sink edge when LoS allows
};

// W_ij = ln(d_ij / (m_j sqrt(beta))) with m_j the element count of passive
// receiver j (the reference count otherwise). Minimising the sum maximises
// the passive cascade gain prod m_j^2 beta / d^2. Edges between candidates
// must make strict progress away from the source, so the graph is a DAG.
inline RoutingGraph build_log_distance_graph(const SystemParams& params, const Topology& topo, NodeId source,
                                             NodeId sink, const std::vector<NodeId>& candidates,
                                             GraphOptions options = {}) {
  if (source == sink) throw GraphError(GraphErrc::SourceSinkNotDistinct, "source and sink coincide");
  std::vector<NodeId> cand;
  for (NodeId c : candidates) {
    if (!topo.contains(c) || !topo.node(c).is_irs())
      throw GraphError(GraphErrc::UnknownVertex, "candidate " + std::to_string(c) + " is not an IRS");
    if (c != source && c != sink) cand.push_back(c);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  RoutingGraph g(cand, source, sink);
  const double ref = reference_elements(topo);
  const double sqrt_beta = std::sqrt(params.beta);
  auto weight = [&](NodeId i, NodeId j) {
    const double m = topo.node(j).is_passive() && j != sink ? topo.node(j).elements : ref;
    return std::log(topo.distance(i, j) / (m * sqrt_beta));
  };
  for (NodeId j : cand)
    if (topo.los(source, j)) g.add_edge(source, j, weight(source, j));
  for (NodeId i : cand)
    for (NodeId j : cand)
      if (i != j && topo.los(i, j) && topo.distance(source, j) > topo.distance(source, i))
        g.add_edge(i, j, weight(i, j));
  for (NodeId j : cand)
    if (topo.los(j, sink)) g.add_edge(j, sink, weight(j, sink));
  if (options.allow_direct && topo.los(source, sink)) g.add_edge(source, sink, weight(source, sink));
  return g;
}

inline void write_edge_csv(const RoutingGraph& g, std::ostream& os) {
  os << "from,to,weight\n";
  char buf[64];
  for (const Edge& e : g.edges()) {
    auto res = std::to_chars(buf, buf + sizeof buf, e.weight, std::chars_format::general, 17);
    os << e.from << ',' << e.to << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
  }
}

}  // namespace mamp
