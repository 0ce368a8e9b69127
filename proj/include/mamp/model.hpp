#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mamp {

using NodeId = int;

enum class NodeKind { BaseStation, User, ActiveIrs, PassiveIrs };

inline const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::BaseStation: return "bs";
    case NodeKind::User: return "user";
    case NodeKind::ActiveIrs: return "active";
    case NodeKind::PassiveIrs: return "passive";
  }
  return "?";
}

enum class ModelErrc {
  DuplicateId,
  MissingBaseStation,
  MissingUser,
  BadNodeId,
  AsymmetricLos,
  SelfLoop,
  NonPositiveElements,
  BadGrid,
  UnknownNode,
  InvalidParams,
};

class ModelError : public std::runtime_error {
 public:
  ModelError(ModelErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ModelErrc code() const noexcept { return code_; }

 private:
  ModelErrc code_;
};

struct Grid {
  int horizontal = 1;
  int vertical = 1;
  int size() const { return horizontal * vertical; }
  bool operator==(const Grid&) const = default;
};

// Deterministic near-square factorisation: start at ceil(sqrt(n)) and walk
// down to the first divisor.
inline Grid near_square_grid(int elements) {
  if (elements < 1) throw ModelError(ModelErrc::NonPositiveElements, "grid of non-positive size");
  int h = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(elements))));
  while (h > 1 && elements % h != 0) --h;
  return Grid{h, elements / h};
}

struct Node {
  NodeId id = 0;
  NodeKind kind = NodeKind::PassiveIrs;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  int elements = 1;
  Grid grid{};

  bool is_irs() const { return kind == NodeKind::ActiveIrs || kind == NodeKind::PassiveIrs; }
  bool is_active() const { return kind == NodeKind::ActiveIrs; }
  bool is_passive() const { return kind == NodeKind::PassiveIrs; }
};

// Immutable after construction. Node i lives at index i; the base station is
// node 0 and the user node J+1.
class Topology {
 public:
  // `los` is a dense (J+2)x(J+2) row-major boolean matrix.
  Topology(std::vector<Node> nodes, const std::vector<std::vector<bool>>& los) {
    init_nodes(std::move(nodes));
    const auto n = static_cast<std::size_t>(size_);
    if (los.size() != n) throw ModelError(ModelErrc::AsymmetricLos, "LoS matrix has wrong row count");
    los_.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (los[i].size() != n) throw ModelError(ModelErrc::AsymmetricLos, "LoS matrix has wrong column count");
      for (std::size_t j = 0; j < n; ++j) {
        if (los[i][j] != los[j][i])
          throw ModelError(ModelErrc::AsymmetricLos,
                           "LoS matrix not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        if (i == j && los[i][j])
          throw ModelError(ModelErrc::SelfLoop, "LoS self-link on node " + std::to_string(i));
        los_[i * n + j] = los[i][j] ? 1 : 0;
      }
    }
  }

  // Undirected edge list.
  Topology(std::vector<Node> nodes, const std::vector<std::pair<NodeId, NodeId>>& edges) {
    init_nodes(std::move(nodes));
    const auto n = static_cast<std::size_t>(size_);
    los_.assign(n * n, 0);
    for (auto [i, j] : edges) {
      if (!contains(i) || !contains(j))
        throw ModelError(ModelErrc::UnknownNode,
                         "LoS edge references unknown node (" + std::to_string(i) + "," + std::to_string(j) + ")");
      if (i == j) throw ModelError(ModelErrc::SelfLoop, "LoS self-link on node " + std::to_string(i));
      los_[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] = 1;
      los_[static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i)] = 1;
    }
  }

  int size() const { return size_; }
  int irs_count() const { return size_ - 2; }
  NodeId bs() const { return 0; }
  NodeId user() const { return size_ - 1; }
  bool contains(NodeId id) const { return id >= 0 && id < size_; }

  const Node& node(NodeId id) const {
    if (!contains(id)) throw ModelError(ModelErrc::UnknownNode, "unknown node " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id)];
  }
  std::span<const Node> nodes() const { return nodes_; }

  bool los(NodeId i, NodeId j) const {
    return contains(i) && contains(j) && los_[index(i, j)] != 0;
  }
  double distance(NodeId i, NodeId j) const { return dist_[index(i, j)]; }

  std::vector<NodeId> irs_ids() const { return ids_where([](const Node& n) { return n.is_irs(); }); }
  std::vector<NodeId> active_ids() const { return ids_where([](const Node& n) { return n.is_active(); }); }
  std::vector<NodeId> passive_ids() const { return ids_where([](const Node& n) { return n.is_passive(); }); }

  std::vector<std::pair<NodeId, NodeId>> los_edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (NodeId i = 0; i < size_; ++i)
      for (NodeId j = i + 1; j < size_; ++j)
        if (los(i, j)) out.emplace_back(i, j);
    return out;
  }

  // False when no IRS sees the BS or none sees the user: then no feasible
  // path exists. Not an error.
  bool has_endpoint_coverage() const {
    bool bs_side = false, user_side = false;
    for (NodeId j : irs_ids()) {
      bs_side = bs_side || los(bs(), j);
      user_side = user_side || los(j, user());
    }
    return bs_side && user_side;
  }

  // Copy with node `id` replaced (kind/elements/grid); LoS and geometry kept.
  Topology with_node(const Node& replacement) const {
    Topology copy = *this;
    if (!contains(replacement.id)) throw ModelError(ModelErrc::UnknownNode, "unknown node");
    Node n = replacement;
    validate_node(n);
    copy.nodes_[static_cast<std::size_t>(n.id)] = n;
    return copy;
  }

  // Sub-topology keeping the given IRS ids (BS and user are always kept).
  // Nodes are renumbered densely in ascending order of their old id.
  Topology restricted_to(const std::set<NodeId>& keep_irs) const {
    std::vector<NodeId> old_ids{bs()};
    for (NodeId j : irs_ids())
      if (keep_irs.count(j)) old_ids.push_back(j);
    old_ids.push_back(user());
    std::vector<Node> ns;
    for (std::size_t k = 0; k < old_ids.size(); ++k) {
      Node n = node(old_ids[k]);
      n.id = static_cast<NodeId>(k);
      ns.push_back(n);
    }
    std::vector<std::vector<bool>> l(old_ids.size(), std::vector<bool>(old_ids.size(), false));
    for (std::size_t a = 0; a < old_ids.size(); ++a)
      for (std::size_t b = 0; b < old_ids.size(); ++b) l[a][b] = los(old_ids[a], old_ids[b]);
    return Topology(std::move(ns), l);
  }

 private:
  std::size_t index(NodeId i, NodeId j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(size_) + static_cast<std::size_t>(j);
  }

  template <class Pred>
  std::vector<NodeId> ids_where(Pred pred) const {
    std::vector<NodeId> out;
    for (const Node& n : nodes_)
      if (pred(n)) out.push_back(n.id);
    return out;
  }

  static void validate_node(Node& n) {
    if (n.elements < 1)
      throw ModelError(ModelErrc::NonPositiveElements,
                       "node " + std::to_string(n.id) + " has non-positive element count");
    if (!n.position.allFinite())
      throw ModelError(ModelErrc::InvalidParams, "node " + std::to_string(n.id) + " has non-finite position");
    if (n.is_irs()) {
      if (n.grid.horizontal < 1 || n.grid.vertical < 1 || n.grid.size() != n.elements)
        throw ModelError(ModelErrc::BadGrid, "node " + std::to_string(n.id) + " grid does not match element count");
    } else {
      n.grid = Grid{n.elements, 1};
    }
  }

  void init_nodes(std::vector<Node> nodes) {
    std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
    for (std::size_t k = 1; k < nodes.size(); ++k)
      if (nodes[k].id == nodes[k - 1].id)
        throw ModelError(ModelErrc::DuplicateId, "duplicate node id " + std::to_string(nodes[k].id));
    const auto count = [&](NodeKind kind) {
      return std::count_if(nodes.begin(), nodes.end(), [&](const Node& n) { return n.kind == kind; });
    };
    if (count(NodeKind::BaseStation) != 1)
      throw ModelError(ModelErrc::MissingBaseStation, "topology needs exactly one base station");
    if (count(NodeKind::User) != 1) throw ModelError(ModelErrc::MissingUser, "topology needs exactly one user");
    size_ = static_cast<int>(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k].id != static_cast<NodeId>(k))
        throw ModelError(ModelErrc::BadNodeId, "node ids must be 0..J+1 without gaps");
      const bool is_bs = nodes[k].kind == NodeKind::BaseStation;
      const bool is_user = nodes[k].kind == NodeKind::User;
      if (is_bs != (k == 0)) throw ModelError(ModelErrc::BadNodeId, "base station must have id 0");
      if (is_user != (k + 1 == nodes.size()))
        throw ModelError(ModelErrc::BadNodeId, "user must have the largest id J+1");
      validate_node(nodes[k]);
    }
    nodes_ = std::move(nodes);
    const auto n = static_cast<std::size_t>(size_);
    dist_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        dist_[i * n + j] = i == j ? 0.0 : (nodes_[i].position - nodes_[j].position).norm();
  }

  std::vector<Node> nodes_;
  std::vector<char> los_;
  std::vector<double> dist_;
  int size_ = 0;
};

struct SystemParams {
  double p_bs = 0.1;                       // W
  double p_amp_default = 0.01;             // W, for actives without an override
  std::map<NodeId, double> p_amp_override; // W
  double sigma2 = 1e-11;                   // W
  double sigma2_f = 1e-10;                 // W
  double wavelength = 0.06;                // m
  double beta = 2.5118864315095823e-05;    // linear, at 1 m
  std::optional<double> element_spacing;   // m; half-wavelength when absent
  std::optional<double> rician_k;          // linear

  double amp_power(NodeId id) const {
    auto it = p_amp_override.find(id);
    return it == p_amp_override.end() ? p_amp_default : it->second;
  }
  double spacing() const { return element_spacing.value_or(wavelength / 2.0); }

  void validate() const {
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(p_bs)) throw ModelError(ModelErrc::InvalidParams, "p_bs must be positive");
    if (!positive(p_amp_default)) throw ModelError(ModelErrc::InvalidParams, "p_amp must be positive");
    for (auto [id, p] : p_amp_override)
      if (!positive(p)) throw ModelError(ModelErrc::InvalidParams, "p_amp of node " + std::to_string(id) + " must be positive");
    if (!positive(sigma2)) throw ModelError(ModelErrc::InvalidParams, "sigma2 must be positive");
    if (!positive(sigma2_f)) throw ModelError(ModelErrc::InvalidParams, "sigma2_f must be positive");
    if (!positive(wavelength)) throw ModelError(ModelErrc::InvalidParams, "wavelength must be positive");
    if (!positive(beta)) throw ModelError(ModelErrc::InvalidParams, "beta must be positive");
    if (element_spacing && !positive(*element_spacing))
      throw ModelError(ModelErrc::InvalidParams, "element_spacing must be positive");
    if (rician_k && !(std::isfinite(*rician_k) && *rician_k >= 0.0))
      throw ModelError(ModelErrc::InvalidParams, "rician_k must be non-negative");
  }

  // Same ratios, every power multiplied by `c`.
  SystemParams scaled_powers(double c) const {
    SystemParams s = *this;
    s.p_bs *= c;
    s.p_amp_default *= c;
    for (auto& [id, p] : s.p_amp_override) p *= c;
    s.sigma2 *= c;
    s.sigma2_f *= c;
    return s;
  }
};

struct RoutingPath {
  std::vector<NodeId> hops;           // s_1..s_K
  std::vector<int> active_positions;  // 1-based positions in `hops`

  static RoutingPath from_hops(const Topology& topo, std::vector<NodeId> hops) {
    RoutingPath p;
    p.hops = std::move(hops);
    for (std::size_t k = 0; k < p.hops.size(); ++k)
      if (topo.contains(p.hops[k]) && topo.node(p.hops[k]).is_active())
        p.active_positions.push_back(static_cast<int>(k) + 1);
    return p;
  }

  std::size_t active_count() const { return active_positions.size(); }
  std::vector<NodeId> active_nodes() const {
    std::vector<NodeId> out;
    for (int pos : active_positions) out.push_back(hops[static_cast<std::size_t>(pos - 1)]);
    return out;
  }
  bool operator==(const RoutingPath&) const = default;
};

enum class PathCondition {
  RepeatedIrs,          // an IRS appears more than once
  MissingHopLink,       // no LoS between consecutive IRSs
  MissingEndpointLink,  // no LoS on BS->s_1 or s_K->user
  NotAnIrs,             // hop refers to the BS or the user
  EmptyPath,
  ActiveIndexMismatch,  // active_positions disagrees with node kinds
};

struct PathViolation {
  PathCondition condition;
  std::size_t position;  // 1-based hop position; 0 for the BS->s_1 link
  std::string message;
};

struct PathCheck {
  bool feasible = true;
  std::vector<PathViolation> violations;
  explicit operator bool() const { return feasible; }
};

inline PathCheck validate_path(const Topology& topo, const RoutingPath& path) {
  PathCheck out;
  auto fail = [&](PathCondition c, std::size_t pos, std::string msg) {
    out.feasible = false;
    out.violations.push_back({c, pos, std::move(msg)});
  };
  for (NodeId id : path.hops)
    if (!topo.contains(id)) throw ModelError(ModelErrc::UnknownNode, "path references unknown node " + std::to_string(id));
  if (path.hops.empty()) {
    fail(PathCondition::EmptyPath, 0, "path has no IRS");
    return out;
  }
  std::set<NodeId> seen;
  for (std::size_t k = 0; k < path.hops.size(); ++k) {
    const NodeId id = path.hops[k];
    const std::string at = "hop " + std::to_string(k + 1) + " (node " + std::to_string(id) + ")";
    if (!topo.node(id).is_irs()) fail(PathCondition::NotAnIrs, k + 1, at + " is not an IRS");
    if (!seen.insert(id).second) fail(PathCondition::RepeatedIrs, k + 1, at + " repeats an IRS");
    if (k == 0 && !topo.los(topo.bs(), id)) fail(PathCondition::MissingEndpointLink, 0, "no LoS from BS to " + at);
    if (k > 0 && !topo.los(path.hops[k - 1], id))
      fail(PathCondition::MissingHopLink, k + 1, "no LoS into " + at + " from previous hop");
    if (k + 1 == path.hops.size() && !topo.los(id, topo.user()))
      fail(PathCondition::MissingEndpointLink, k + 1, "no LoS from " + at + " to user");
  }
  std::vector<int> expected = RoutingPath::from_hops(topo, path.hops).active_positions;
  if (expected != path.active_positions)
    fail(PathCondition::ActiveIndexMismatch, 0, "active positions do not match node kinds");
  return out;
}

}  // namespace mamp
