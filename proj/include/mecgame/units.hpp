#pragma once

#include <cmath>

// Conversions from the native units used in scenario files to SI.
namespace mecgame::units {

inline constexpr double per_min = 1.0 / 60.0;
inline constexpr double mega = 1e6;
inline constexpr double giga = 1e9;
inline constexpr double kilo = 1e3;

constexpr double tasks_per_min(double v) { return v / 60.0; }
constexpr double mcycles(double v) { return v * mega; }
constexpr double kilobits(double v) { return v * kilo; }
constexpr double mhz(double v) { return v * mega; }
constexpr double ghz(double v) { return v * giga; }
constexpr double gbps(double v) { return v * giga; }
/// $/Gcycle -> $/cycle
constexpr double usd_per_gcycle(double v) { return v / giga; }
constexpr double to_usd_per_gcycle(double v) { return v * giga; }
/// Gain given in dB (Table-style "-50") -> linear ratio.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace mecgame::units
