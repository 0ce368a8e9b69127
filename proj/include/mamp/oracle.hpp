#pragma once

#include <functional>
#include <vector>

#include "mamp/beamforming.hpp"
#include "mamp/channel.hpp"

namespace mamp {

// Supplies the channel matrix of one ordered link (rows: receiver elements).
using LinkChannel = std::function<CMatrix(NodeId from, NodeId to)>;

inline LinkChannel los_link_channel(const SystemParams& params, const Topology& topo) {
  return [&params, &topo](NodeId from, NodeId to) { return los_channel(params, topo, from, to).entries; };
}

inline LinkChannel rician_link_channel(const SystemParams& params, const Topology& topo, std::uint64_t seed,
                                       std::uint64_t draw) {
  return [&params, &topo, seed, draw](NodeId from, NodeId to) {
    return rician_channel(params, topo, from, to, seed, draw).entries;
  };
}

struct OracleOptions {
  // Also compute the total input power at every active surface (signal,
  // forwarded noise and own noise) so the output budget can be checked.
  bool amplifier_power = false;
};

struct OracleResult {
  double signal_power = 0.0;  // W at the user
  double noise_power = 0.0;   // W at the user, receiver noise included
  std::vector<double> amplifier_output_power;  // W per active surface, path order
  double snr() const { return signal_power / noise_power; }
};

// Direct evaluation of the signal model: every channel, reflection and
// amplification matrix is built explicitly and multiplied out.
inline OracleResult end_to_end_oracle(const SystemParams& params, const Topology& topo, const RoutingPath& path,
                                      const BeamformingSolution& sol, const LinkChannel& channel,
                                      OracleOptions options = {}) {
  require_feasible(topo, path);
  const auto dim_error = [](const std::string& what) { return ChannelError(ChannelErrc::DimensionMismatch, what); };
  if (sol.bs_weights.size() != topo.node(topo.bs()).elements) throw dim_error("BS weight length mismatch");

  std::vector<NodeId> chain{topo.bs()};
  chain.insert(chain.end(), path.hops.begin(), path.hops.end());
  chain.push_back(topo.user());

  // Reflection-amplification diagonal of each surface on the path.
  std::vector<CVector> diag(chain.size());
  for (std::size_t k = 1; k + 1 < chain.size(); ++k) {
    const Node& node = topo.node(chain[k]);
    auto it = sol.irs_phases.find(node.id);
    if (it == sol.irs_phases.end() || static_cast<int>(it->second.size()) != node.elements)
      throw dim_error("phase vector missing or wrong length for node " + std::to_string(node.id));
    double eta = 1.0;
    if (node.is_active()) {
      auto e = sol.amp_factors.find(node.id);
      if (e == sol.amp_factors.end()) throw dim_error("missing amplification factor for node " + std::to_string(node.id));
      eta = e->second;
    }
    diag[k].resize(node.elements);
    for (int m = 0; m < node.elements; ++m) diag[k][m] = std::polar(eta, it->second[static_cast<std::size_t>(m)]);
  }

  std::vector<CMatrix> h(chain.size());  // h[k]: chain[k-1] -> chain[k]
  for (std::size_t k = 1; k < chain.size(); ++k) {
    h[k] = channel(chain[k - 1], chain[k]);
    if (h[k].rows() != topo.node(chain[k]).elements || h[k].cols() != topo.node(chain[k - 1]).elements)
      throw dim_error("channel matrix has wrong shape");
  }

  OracleResult out;
  CVector x = sol.bs_weights;
  for (std::size_t k = 1; k < chain.size(); ++k) {
    x = h[k] * x;
    if (k + 1 < chain.size()) x = diag[k].cwiseProduct(x);
  }
  out.signal_power = params.p_bs * x.squaredNorm();

  // Backward pass: r is the row vector from the output of chain[k] to the user.
  out.noise_power = params.sigma2;
  CMatrix r = h.back();
  for (std::size_t k = chain.size() - 2; k >= 1; --k) {
    const CMatrix rd = r * diag[k].asDiagonal();
    if (topo.node(chain[k]).is_active()) out.noise_power += params.sigma2_f * rd.squaredNorm();
    r = rd * h[k];
  }

  if (options.amplifier_power) {
    // Input covariance at each active surface, carried forward explicitly.
    CMatrix cov = params.p_bs * (sol.bs_weights * sol.bs_weights.adjoint());
    for (std::size_t k = 1; k + 1 < chain.size(); ++k) {
      cov = h[k] * cov * h[k].adjoint();
      const Node& node = topo.node(chain[k]);
      if (node.is_active()) cov += params.sigma2_f * CMatrix::Identity(node.elements, node.elements);
      cov = diag[k].asDiagonal() * cov * diag[k].conjugate().asDiagonal();
      if (node.is_active()) out.amplifier_output_power.push_back(cov.trace().real());
    }
  }
  return out;
}

inline OracleResult end_to_end_oracle(const SystemParams& params, const Topology& topo, const RoutingPath& path,
                                      const BeamformingSolution& sol, OracleOptions options = {}) {
  return end_to_end_oracle(params, topo, path, sol, los_link_channel(params, topo), options);
}

}  // namespace mamp
