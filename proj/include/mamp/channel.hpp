#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

#include "mamp/model.hpp"
#include "mamp/units.hpp"

namespace mamp {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

enum class ChannelErrc { NoLosLink, SelfLink, MissingRicianFactor, DimensionMismatch };

class ChannelError : public std::runtime_error {
 public:
  ChannelError(ChannelErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ChannelErrc code() const noexcept { return code_; }

 private:
  ChannelErrc code_;
};

// Angles for one ordered link. Every IRS faces +x; elevation is the polar
// angle from +z and azimuth runs from +y toward +x, so
//   sin(elev) cos(azim) = direction.y,  cos(elev) = direction.z.
// Departure angles describe the direction to the receiver as seen from the
// transmitter; arrival angles the direction back to the transmitter.
struct Geometry {
  double azimuth_aod = 0.0;
  double elevation_aod = 0.0;
  double azimuth_aoa = 0.0;
  double elevation_aoa = 0.0;
};

namespace detail {
inline void direction_angles(const Eigen::Vector3d& u, double& elevation, double& azimuth) {
  elevation = std::acos(std::clamp(u.z(), -1.0, 1.0));
  azimuth = std::atan2(u.x(), u.y());
}
}  // namespace detail

inline Geometry geometry(const Topology& topo, NodeId from, NodeId to) {
  if (from == to) throw ChannelError(ChannelErrc::SelfLink, "link from a node to itself");
  const Eigen::Vector3d u = (topo.node(to).position - topo.node(from).position).normalized();
  Geometry g;
  detail::direction_angles(u, g.elevation_aod, g.azimuth_aod);
  detail::direction_angles(-u, g.elevation_aoa, g.azimuth_aoa);
  return g;
}

// Entry k is exp(-j*pi*zeta*k).
inline CVector steering_1d(double zeta, int count) {
  CVector v(count);
  for (int k = 0; k < count; ++k) v[k] = std::polar(1.0, -kPi * zeta * k);
  return v;
}

inline CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

// u(2 r sin(elev) cos(azim), h) kron u(2 r cos(elev), v), r = spacing/wavelength.
inline CVector steering_ura(double elevation, double azimuth, Grid grid, double spacing_over_wavelength) {
  const double r = spacing_over_wavelength;
  return kron(steering_1d(2.0 * r * std::sin(elevation) * std::cos(azimuth), grid.horizontal),
              steering_1d(2.0 * r * std::cos(elevation), grid.vertical));
}

// BS linear array along z.
inline CVector steering_ula(double elevation, int count, double spacing_over_wavelength) {
  return steering_1d(2.0 * spacing_over_wavelength * std::cos(elevation), count);
}

inline CVector array_response(const SystemParams& params, const Node& node, double elevation, double azimuth) {
  const double r = params.spacing() / params.wavelength;
  switch (node.kind) {
    case NodeKind::BaseStation: return steering_ula(elevation, node.elements, r);
    case NodeKind::User: return CVector::Ones(node.elements);
    default: return steering_ura(elevation, azimuth, node.grid, r);
  }
}

// a_t at `from` toward `to`.
inline CVector transmit_steering(const SystemParams& params, const Topology& topo, NodeId from, NodeId to) {
  const Geometry g = geometry(topo, from, to);
  return array_response(params, topo.node(from), g.elevation_aod, g.azimuth_aod);
}

// a_r at `to` for a wave arriving from `from`.
inline CVector receive_steering(const SystemParams& params, const Topology& topo, NodeId from, NodeId to) {
  const Geometry g = geometry(topo, from, to);
  return array_response(params, topo.node(to), g.elevation_aoa, g.azimuth_aoa);
}

struct ChannelMatrix {
  CMatrix entries;  // rows: receiver elements, cols: transmitter elements
  NodeId from = 0;
  NodeId to = 0;
};

// sqrt(beta)/d * exp(-j 2 pi d / lambda).
inline cdouble path_coefficient(const SystemParams& params, double d) {
  return std::polar(std::sqrt(params.beta) / d, -2.0 * kPi * d / params.wavelength);
}

inline void require_link(const Topology& topo, NodeId from, NodeId to) {
  if (from == to) throw ChannelError(ChannelErrc::SelfLink, "link from a node to itself");
  if (!topo.los(from, to))
    throw ChannelError(ChannelErrc::NoLosLink,
                       "no LoS link " + std::to_string(from) + " -> " + std::to_string(to));
}

inline ChannelMatrix los_channel(const SystemParams& params, const Topology& topo, NodeId from, NodeId to) {
  require_link(topo, from, to);
  const cdouble h = path_coefficient(params, topo.distance(from, to));
  const CVector ar = receive_steering(params, topo, from, to);
  const CVector at = transmit_steering(params, topo, from, to);
  return {h * ar * at.adjoint(), from, to};
}

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Stream key for one (seed, draw, link) triple.
inline std::uint64_t channel_stream_key(std::uint64_t seed, std::uint64_t draw, NodeId from, NodeId to) {
  std::uint64_t k = detail::splitmix64(seed);
  k = detail::splitmix64(k ^ draw);
  k = detail::splitmix64(k ^ static_cast<std::uint64_t>(from));
  return detail::splitmix64(k ^ (static_cast<std::uint64_t>(to) << 32));
}

// NLoS part only: i.i.d. CN(0, beta/d^2) entries.
inline CMatrix scattered_component(const SystemParams& params, const Topology& topo, NodeId from, NodeId to,
                                   std::uint64_t seed, std::uint64_t draw) {
  const double d = topo.distance(from, to);
  std::mt19937_64 rng(channel_stream_key(seed, draw, from, to));
  std::normal_distribution<double> normal(0.0, std::sqrt(params.beta / (2.0 * d * d)));
  CMatrix m(topo.node(to).elements, topo.node(from).elements);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double re = normal(rng);
      m(r, c) = cdouble(re, normal(rng));
    }
  return m;
}

inline ChannelMatrix rician_channel(const SystemParams& params, const Topology& topo, NodeId from, NodeId to,
                                    std::uint64_t seed, std::uint64_t draw = 0) {
  if (!params.rician_k) throw ChannelError(ChannelErrc::MissingRicianFactor, "rician_k is not set");
  require_link(topo, from, to);
  const double k = *params.rician_k;
  ChannelMatrix los = los_channel(params, topo, from, to);
  if (std::isinf(k)) return los;
  los.entries *= std::sqrt(k / (k + 1.0));
  los.entries += std::sqrt(1.0 / (k + 1.0)) * scattered_component(params, topo, from, to, seed, draw);
  return los;
}

}  // namespace mamp
