// Plans a route on the shipped replica topology and prints how it compares
// with the passive-only and all-passive alternatives.

#include <iostream>
#include <string>

#include "mamp/report.hpp"
#include "mamp/routing.hpp"
#include "mamp/io.hpp"

int main(int argc, char** argv) {
  using namespace mamp;
  const std::string dir = argc > 1 ? argv[1] : MAMP_SCENARIO_DIR;
  const Topology topo = load_topology_file(dir + "/replica.json");
  const SystemParams params = load_params_file(dir + "/params.json");

  const RoutingResult best = route_mamp(params, topo);
  std::cout << "route BS";
  for (NodeId h : best.path.hops) std::cout << " -> " << h << (topo.node(h).is_active() ? "(A)" : "(P)");
  std::cout << " -> user\n";
  std::cout << "per-hop SNR (dB):";
  for (double g : best.report.per_hop) std::cout << ' ' << format_fixed(linear_to_db(g), 2);
  std::cout << "\nreceive SNR " << format_fixed(linear_to_db(best.report.exact_snr), 2) << " dB (high-SNR form "
            << format_fixed(linear_to_db(best.report.approx_snr), 2) << " dB), rate "
            << format_fixed(best.report.rate_bps_hz, 3) << " bps/Hz\n";

  const RoutingResult passive = route_passive_only(params, topo);
  const RoutingResult retyped = route_all_passive(params, topo);
  std::cout << "passive-only rate " << format_fixed(passive.report.rate_bps_hz, 3) << " via " << join_path(passive.path.hops)
            << "\nall-passive rate  " << format_fixed(retyped.report.rate_bps_hz, 3) << " via "
            << join_path(retyped.path.hops) << '\n';
}
