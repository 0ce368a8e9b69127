#pragma once

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include "mamp/model.hpp"
#include "mamp/units.hpp"

namespace mamp {

// Malformed document. `field` is a JSON-pointer-like location ("nodes[2].kind").
class DocumentError : public std::runtime_error {
 public:
  DocumentError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw DocumentError(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw DocumentError(where.empty() ? key : where + "." + key, "missing field");
  return *it;
}

inline double number(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw DocumentError(where, "expected a number");
  return v.get<double>();
}

inline int integer(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number_integer()) throw DocumentError(where, "expected an integer");
  return v.get<int>();
}

inline nlohmann::json parse_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DocumentError("", e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DocumentError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline NodeKind parse_node_kind(const std::string& s, const std::string& where) {
  if (s == "bs") return NodeKind::BaseStation;
  if (s == "user") return NodeKind::User;
  if (s == "active") return NodeKind::ActiveIrs;
  if (s == "passive") return NodeKind::PassiveIrs;
  throw DocumentError(where, "unknown node kind '" + s + "'");
}

// Structural problems raise DocumentError; semantic ones (duplicate ids,
// missing BS, ...) raise ModelError from the Topology constructor.
inline Topology topology_from_json(const nlohmann::json& doc) {
  using detail::require;
  const auto& jnodes = require(doc, "nodes", "");
  if (!jnodes.is_array()) throw DocumentError("nodes", "expected an array");
  std::vector<Node> nodes;
  for (std::size_t k = 0; k < jnodes.size(); ++k) {
    const std::string at = "nodes[" + std::to_string(k) + "]";
    const auto& jn = jnodes[k];
    Node n;
    n.id = detail::integer(require(jn, "id", at), at + ".id");
    const auto& kind = require(jn, "kind", at);
    if (!kind.is_string()) throw DocumentError(at + ".kind", "expected a string");
    n.kind = parse_node_kind(kind.get<std::string>(), at + ".kind");
    const auto& pos = require(jn, "position", at);
    if (!pos.is_array() || pos.size() != 3) throw DocumentError(at + ".position", "expected [x, y, z]");
    for (int c = 0; c < 3; ++c)
      n.position[c] = detail::number(pos[static_cast<std::size_t>(c)], at + ".position[" + std::to_string(c) + "]");
    n.elements = detail::integer(require(jn, "elements", at), at + ".elements");
    if (n.elements < 1)
      throw ModelError(ModelErrc::NonPositiveElements, at + ".elements: element count must be positive");
    if (auto g = jn.find("grid"); g != jn.end()) {
      if (!g->is_array() || g->size() != 2) throw DocumentError(at + ".grid", "expected [h, v]");
      n.grid = Grid{detail::integer((*g)[0], at + ".grid[0]"), detail::integer((*g)[1], at + ".grid[1]")};
    } else {
      n.grid = near_square_grid(n.elements);
    }
    nodes.push_back(n);
  }
  const auto& jedges = require(doc, "los_edges", "");
  if (!jedges.is_array()) throw DocumentError("los_edges", "expected an array");
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t k = 0; k < jedges.size(); ++k) {
    const std::string at = "los_edges[" + std::to_string(k) + "]";
    const auto& e = jedges[k];
    if (!e.is_array() || e.size() != 2) throw DocumentError(at, "expected [i, j]");
    edges.emplace_back(detail::integer(e[0], at + "[0]"), detail::integer(e[1], at + "[1]"));
  }
  return Topology(std::move(nodes), edges);
}

inline nlohmann::json topology_to_json(const Topology& topo) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& n : topo.nodes()) {
    nlohmann::json jn{{"id", n.id},
                      {"kind", to_string(n.kind)},
                      {"position", {n.position.x(), n.position.y(), n.position.z()}},
                      {"elements", n.elements}};
    if (n.is_irs()) jn["grid"] = {n.grid.horizontal, n.grid.vertical};
    nodes.push_back(jn);
  }
  nlohmann::json edges = nlohmann::json::array();
  for (auto [i, j] : topo.los_edges()) edges.push_back({i, j});
  return {{"nodes", nodes}, {"los_edges", edges}};
}

inline SystemParams params_from_json(const nlohmann::json& doc) {
  using detail::number;
  using detail::require;
  SystemParams p;
  p.p_bs = dbm_to_watts(number(require(doc, "p_bs_dbm", ""), "p_bs_dbm"));
  const auto& amp = require(doc, "p_amp_dbm", "");
  if (amp.is_number()) {
    p.p_amp_default = dbm_to_watts(amp.get<double>());
  } else if (amp.is_object()) {
    bool have_default = false;
    for (auto it = amp.begin(); it != amp.end(); ++it) {
      const std::string at = "p_amp_dbm." + it.key();
      const double w = dbm_to_watts(number(it.value(), at));
      if (it.key() == "default") {
        p.p_amp_default = w;
        have_default = true;
        continue;
      }
      std::size_t used = 0;
      int id = 0;
      try {
        id = std::stoi(it.key(), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != it.key().size()) throw DocumentError(at, "map keys must be node ids or 'default'");
      p.p_amp_override[id] = w;
    }
    // Without an explicit default, nodes missing from the map fall back to
    // the smallest listed budget.
    if (!have_default && !p.p_amp_override.empty()) {
      double lo = p.p_amp_override.begin()->second;
      for (auto& kv : p.p_amp_override) lo = std::min(lo, kv.second);
      p.p_amp_default = lo;
    }
  } else {
    throw DocumentError("p_amp_dbm", "expected a number or an object");
  }
  p.sigma2 = dbm_to_watts(number(require(doc, "sigma2_dbm", ""), "sigma2_dbm"));
  p.sigma2_f = dbm_to_watts(number(require(doc, "sigma2_f_dbm", ""), "sigma2_f_dbm"));
  p.wavelength = number(require(doc, "wavelength_m", ""), "wavelength_m");
  p.beta = db_to_linear(number(require(doc, "beta_db", ""), "beta_db"));
  if (auto it = doc.find("element_spacing_m"); it != doc.end())
    p.element_spacing = number(*it, "element_spacing_m");
  if (auto it = doc.find("rician_k_db"); it != doc.end()) p.rician_k = db_to_linear(number(*it, "rician_k_db"));
  p.validate();
  return p;
}

inline nlohmann::json params_to_json(const SystemParams& p) {
  nlohmann::json j{{"p_bs_dbm", watts_to_dbm(p.p_bs)},
                   {"sigma2_dbm", watts_to_dbm(p.sigma2)},
                   {"sigma2_f_dbm", watts_to_dbm(p.sigma2_f)},
                   {"wavelength_m", p.wavelength},
                   {"beta_db", linear_to_db(p.beta)}};
  if (p.p_amp_override.empty()) {
    j["p_amp_dbm"] = watts_to_dbm(p.p_amp_default);
  } else {
    nlohmann::json m{{"default", watts_to_dbm(p.p_amp_default)}};
    for (auto [id, w] : p.p_amp_override) m[std::to_string(id)] = watts_to_dbm(w);
    j["p_amp_dbm"] = m;
  }
  if (p.element_spacing) j["element_spacing_m"] = *p.element_spacing;
  if (p.rician_k) j["rician_k_db"] = linear_to_db(*p.rician_k);
  return j;
}

inline Topology load_topology(const std::string& text) { return topology_from_json(detail::parse_text(text)); }
inline SystemParams load_params(const std::string& text) { return params_from_json(detail::parse_text(text)); }
inline Topology load_topology_file(const std::string& path) { return load_topology(detail::read_file(path)); }
inline SystemParams load_params_file(const std::string& path) { return load_params(detail::read_file(path)); }

}  // namespace mamp
