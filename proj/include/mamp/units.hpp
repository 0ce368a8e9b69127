#pragma once

#include <cmath>

namespace mamp {

// Power and gain conversions. Everything inside the library is linear
// (watts, dimensionless); dB/dBm only appear at the document/CLI boundary.

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace mamp
