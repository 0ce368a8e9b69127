#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mamp/channel.hpp"
#include "mamp/model.hpp"
#include "mamp/snr.hpp"
#include "mamp/units.hpp"

namespace mamp {

enum class BeamformingErrc { InfeasiblePath, SplitNotActive, NonPassiveInnerHop, MissingSegmentGain };

class BeamformingError : public std::runtime_error {
 public:
  BeamformingError(BeamformingErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  BeamformingErrc code() const noexcept { return code_; }

 private:
  BeamformingErrc code_;
};

// Exact: saturate the output power budget including forwarded noise.
// Approximate: ignore forwarded noise (the form routing relies on).
enum class AmplificationRule { Approximate, Exact };

struct BeamformingSolution {
  CVector bs_weights;                                 // unit norm, length T
  std::map<NodeId, std::vector<double>> irs_phases;   // radians in [0, 2pi)
  std::map<NodeId, double> amp_factors;               // active surfaces only
};

// One stretch of the path between two endpoints (BS, active surface or user)
// with only passive surfaces in between.
struct Segment {
  NodeId from = 0;
  NodeId to = 0;
  std::vector<NodeId> inner;
  double gain = 0.0;
};

struct SubpathGains {
  double f_ba = 0.0;              // BS -> first active (or user if none)
  double f_au = 0.0;              // last active -> user
  std::vector<Segment> segments;  // K_a + 1 of them, in path order
};

// Per-element power gain of a segment: T (if it starts at the BS) times
// M_k^2 for every inner passive surface times beta^{K+1} / prod d^2.
// Receive-array gain and the transmitting active array are not included.
inline double segment_gain(const SystemParams& params, const Topology& topo, NodeId from,
                           std::span<const NodeId> inner, NodeId to) {
  double log_gain = 0.0;
  if (topo.node(from).kind == NodeKind::BaseStation) log_gain += std::log(topo.node(from).elements);
  NodeId prev = from;
  auto hop = [&](NodeId next) {
    require_link(topo, prev, next);
    const double d = topo.distance(prev, next);
    log_gain += std::log(params.beta) - 2.0 * std::log(d);
    prev = next;
  };
  for (NodeId s : inner) {
    if (!topo.node(s).is_passive())
      throw BeamformingError(BeamformingErrc::NonPassiveInnerHop,
                             "node " + std::to_string(s) + " inside a segment is not a passive IRS");
    hop(s);
    log_gain += 2.0 * std::log(topo.node(s).elements);
  }
  hop(to);
  return std::exp(log_gain);
}

inline double segment_gain(const SystemParams& params, const Topology& topo, const Segment& seg) {
  return segment_gain(params, topo, seg.from, seg.inner, seg.to);
}

// Split the path at its active surfaces.
inline SubpathGains path_gains(const SystemParams& params, const Topology& topo, const RoutingPath& path) {
  SubpathGains out;
  Segment cur{topo.bs(), 0, {}, 0.0};
  auto close = [&](NodeId to) {
    cur.to = to;
    cur.gain = segment_gain(params, topo, cur);
    out.segments.push_back(cur);
    cur = Segment{to, 0, {}, 0.0};
  };
  for (NodeId s : path.hops) {
    if (topo.node(s).is_active())
      close(s);
    else
      cur.inner.push_back(s);
  }
  close(topo.user());
  out.f_ba = out.segments.front().gain;
  out.f_au = out.segments.back().gain;
  return out;
}

// Single-active decomposition; `split` is the 1-based position of that active.
inline SubpathGains subpath_gain_samp(const SystemParams& params, const Topology& topo, const RoutingPath& path,
                                      int split) {
  if (split < 1 || split > static_cast<int>(path.hops.size()) ||
      !topo.node(path.hops[static_cast<std::size_t>(split - 1)]).is_active())
    throw BeamformingError(BeamformingErrc::SplitNotActive, "split position does not hold an active IRS");
  for (std::size_t k = 0; k < path.hops.size(); ++k)
    if (static_cast<int>(k) + 1 != split && topo.node(path.hops[k]).is_active())
      throw BeamformingError(BeamformingErrc::SplitNotActive, "path has more than one active IRS");
  return path_gains(params, topo, path);
}

// eta for an active surface given per-element incident signal and forwarded
// noise powers.
inline double amplification_factor(const SystemParams& params, double incident_signal, double accumulated_noise,
                                   int n_elements, double p_amp,
                                   AmplificationRule rule = AmplificationRule::Exact) {
  const double noise = rule == AmplificationRule::Exact ? accumulated_noise : 0.0;
  return std::sqrt(p_amp / (n_elements * (incident_signal + noise + params.sigma2_f)));
}

// Per-element powers along the cascade.
struct CascadeTrace {
  std::vector<double> incident_signal;    // per active, per element
  std::vector<double> accumulated_noise;  // per active, per element, coherent part from upstream
  std::vector<double> eta;
  double snr = 0.0;
};

inline CascadeTrace propagate_cascade(const SystemParams& params, const Topology& topo, const RoutingPath& path,
                                      const SubpathGains& gains, AmplificationRule rule) {
  const auto actives = path.active_nodes();
  if (gains.segments.size() != actives.size() + 1)
    throw BeamformingError(BeamformingErrc::MissingSegmentGain, "need one gain per segment");
  CascadeTrace t;
  double s = params.p_bs * gains.segments[0].gain;
  double z = 0.0;
  for (std::size_t k = 0; k < actives.size(); ++k) {
    const double n = topo.node(actives[k]).elements;
    const double eta = amplification_factor(params, s, z, static_cast<int>(n), params.amp_power(actives[k]), rule);
    t.incident_signal.push_back(s);
    t.accumulated_noise.push_back(z);
    t.eta.push_back(eta);
    const double f = gains.segments[k + 1].gain;
    s = f * eta * eta * n * n * s;
    z = f * eta * eta * n * (n * z + params.sigma2_f);
  }
  t.snr = s / (z + params.sigma2);
  return t;
}

// gamma_1 = P_B f_0 / sigma_F^2, middle hops P_prev f / sigma_F^2, last hop
// P_last f / sigma^2. With no active surface: the single P_B f / sigma^2.
inline std::vector<double> per_hop_snr(const SystemParams& params, const Topology& /*topo*/, const RoutingPath& path,
                                       const SubpathGains& gains) {
  const auto actives = path.active_nodes();
  if (gains.segments.size() != actives.size() + 1)
    throw BeamformingError(BeamformingErrc::MissingSegmentGain, "need one gain per segment");
  std::vector<double> g;
  for (std::size_t k = 0; k < gains.segments.size(); ++k) {
    const double p = k == 0 ? params.p_bs : params.amp_power(actives[k - 1]);
    const double noise = k + 1 == gains.segments.size() ? params.sigma2 : params.sigma2_f;
    g.push_back(p * gains.segments[k].gain / noise);
  }
  return g;
}

inline std::vector<double> active_element_counts(const Topology& topo, const RoutingPath& path) {
  std::vector<double> n;
  for (NodeId a : path.active_nodes()) n.push_back(topo.node(a).elements);
  return n;
}

struct SnrReport {
  std::vector<double> per_hop;
  double exact_snr = 0.0;   // closed form, forwarded-noise-free amplification
  double approx_snr = 0.0;  // high-SNR form
  double rate_bps_hz = 0.0; // log2(1 + exact_snr)
  std::optional<double> oracle_snr;
  std::map<NodeId, double> amp_factors;  // budget-saturating factors
  double exact_amp_snr = 0.0;            // SNR with those factors
  double relative_amp_gap = 0.0;         // max |eta_approx / eta_exact - 1|
};

inline SnrReport exact_snr(const SystemParams& params, const Topology& topo, const RoutingPath& path,
                           const SubpathGains& gains) {
  SnrReport r;
  r.per_hop = per_hop_snr(params, topo, path, gains);
  const auto n = active_element_counts(topo, path);
  r.exact_snr = cascade_snr(r.per_hop, n);
  r.approx_snr = cascade_snr_approx(r.per_hop, n);
  r.rate_bps_hz = achievable_rate(r.exact_snr);
  const CascadeTrace exact = propagate_cascade(params, topo, path, gains, AmplificationRule::Exact);
  const CascadeTrace approx = propagate_cascade(params, topo, path, gains, AmplificationRule::Approximate);
  const auto actives = path.active_nodes();
  for (std::size_t k = 0; k < actives.size(); ++k) {
    r.amp_factors[actives[k]] = exact.eta[k];
    r.relative_amp_gap = std::max(r.relative_amp_gap, std::abs(approx.eta[k] / exact.eta[k] - 1.0));
  }
  r.exact_amp_snr = exact.snr;
  return r;
}

inline void require_feasible(const Topology& topo, const RoutingPath& path) {
  const PathCheck check = validate_path(topo, path);
  if (!check) throw BeamformingError(BeamformingErrc::InfeasiblePath, check.violations.front().message);
}

inline SnrReport evaluate_path(const SystemParams& params, const Topology& topo, const RoutingPath& path) {
  require_feasible(topo, path);
  return exact_snr(params, topo, path, path_gains(params, topo, path));
}

inline double wrap_phase(double x) {
  double y = std::fmod(x, 2.0 * kPi);
  if (y < 0.0) y += 2.0 * kPi;
  if (y >= 2.0 * kPi) y = 0.0;
  return y;
}

// Each surface maps its arrival steering phases onto its departure steering
// phases; the BS does maximum-ratio transmission toward the first hop.
inline BeamformingSolution optimal_beamforming(const SystemParams& params, const Topology& topo,
                                               const RoutingPath& path,
                                               AmplificationRule rule = AmplificationRule::Exact) {
  require_feasible(topo, path);
  BeamformingSolution sol;
  const CVector at0 = transmit_steering(params, topo, topo.bs(), path.hops.front());
  sol.bs_weights = at0 / at0.norm();
  for (std::size_t k = 0; k < path.hops.size(); ++k) {
    const NodeId prev = k == 0 ? topo.bs() : path.hops[k - 1];
    const NodeId cur = path.hops[k];
    const NodeId next = k + 1 == path.hops.size() ? topo.user() : path.hops[k + 1];
    const CVector ar = receive_steering(params, topo, prev, cur);
    const CVector at = transmit_steering(params, topo, cur, next);
    std::vector<double> phases(static_cast<std::size_t>(ar.size()));
    for (Eigen::Index m = 0; m < ar.size(); ++m)
      phases[static_cast<std::size_t>(m)] = wrap_phase(std::arg(at[m]) - std::arg(ar[m]));
    sol.irs_phases[cur] = std::move(phases);
  }
  const CascadeTrace trace = propagate_cascade(params, topo, path, path_gains(params, topo, path), rule);
  const auto actives = path.active_nodes();
  for (std::size_t k = 0; k < actives.size(); ++k) sol.amp_factors[actives[k]] = trace.eta[k];
  return sol;
}

}  // namespace mamp
