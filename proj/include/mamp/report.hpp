#pragma once

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <string>

#include "mamp/routing.hpp"
#include "mamp/units.hpp"

namespace mamp {

// Locale-independent fixed-point text; "nan"/"inf" for non-finite values.
inline std::string format_fixed(double v, int precision = 6) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[128];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

// JSON has no NaN/inf; those become null.
inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline std::string join_path(const std::vector<NodeId>& hops, char sep = '-') {
  std::string s;
  for (std::size_t k = 0; k < hops.size(); ++k) {
    if (k) s.push_back(sep);
    s += std::to_string(hops[k]);
  }
  return s;
}

inline nlohmann::json report_to_json(const SnrReport& r) {
  nlohmann::json per_hop = nlohmann::json::array();
  for (double g : r.per_hop) per_hop.push_back(json_number(linear_to_db(g)));
  nlohmann::json amps = nlohmann::json::object();
  for (auto [id, eta] : r.amp_factors) amps[std::to_string(id)] = eta;
  nlohmann::json j{{"per_hop_db", per_hop},
                   {"exact_snr_db", json_number(linear_to_db(r.exact_snr))},
                   {"approx_snr_db", json_number(linear_to_db(r.approx_snr))},
                   {"rate_bps_hz", json_number(r.rate_bps_hz)},
                   {"amp_factors", amps},
                   {"relative_amp_gap", json_number(r.relative_amp_gap)}};
  if (r.oracle_snr) j["oracle_snr_db"] = json_number(linear_to_db(*r.oracle_snr));
  return j;
}

inline nlohmann::json result_to_json(const RoutingResult& r) {
  nlohmann::json per_hop = nlohmann::json::array();
  for (double g : r.report.per_hop) per_hop.push_back(json_number(linear_to_db(g)));
  return {{"scheme", to_string(r.scheme)},
          {"path", r.path.hops},
          {"active_positions", r.path.active_positions},
          {"rate_bps_hz", json_number(r.report.rate_bps_hz)},
          {"exact_snr_db", json_number(linear_to_db(r.report.exact_snr))},
          {"approx_snr_db", json_number(linear_to_db(r.report.approx_snr))},
          {"per_hop_snr_db", per_hop},
          {"repairs_triggered", r.repairs_triggered},
          {"report", report_to_json(r.report)}};
}

}  // namespace mamp
