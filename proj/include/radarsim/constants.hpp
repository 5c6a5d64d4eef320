#pragma once

#include <numbers>

namespace radarsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299'792'458.0;   // m/s
inline constexpr double kBoltzmann = 1.380649e-23;       // J/K
inline constexpr double kRoomTemperature = 290.0;        // K, noise reference T0
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline constexpr double wavelength(double frequency_hz) { return kSpeedOfLight / frequency_hz; }

}  // namespace radarsim
