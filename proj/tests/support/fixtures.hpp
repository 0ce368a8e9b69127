#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mamp/io.hpp"
#include "mamp/model.hpp"
#include "mamp/units.hpp"

namespace mamp::support {

inline Node make_node(NodeId id, NodeKind kind, Eigen::Vector3d pos, int elements) {
  Node n;
  n.id = id;
  n.kind = kind;
  n.position = pos;
  n.elements = elements;
  n.grid = near_square_grid(elements);
  return n;
}

// Simulation defaults: 20 dBm BS, 10 dBm amplifiers, -80/-70 dBm noise,
// 6 cm wavelength, -46 dB reference gain.
inline SystemParams default_params() {
  SystemParams p;
  p.p_bs = dbm_to_watts(20);
  p.p_amp_default = dbm_to_watts(10);
  p.sigma2 = dbm_to_watts(-80);
  p.sigma2_f = dbm_to_watts(-70);
  p.wavelength = 0.06;
  p.beta = db_to_linear(-46);
  return p;
}

inline std::string scenario_file(const std::string& name) { return std::string(MAMP_SCENARIO_DIR) + "/" + name; }

}  // namespace mamp::support
