#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

#include "radarsim/errors.hpp"

namespace radarsim {

enum class Dimension { kFrequency, kTime, kLength, kVelocity, kPower, kDecibel, kResistance, kAngle };

inline std::string_view to_string(Dimension d) {
    switch (d) {
        case Dimension::kFrequency: return "frequency (Hz, kHz, MHz, GHz)";
        case Dimension::kTime: return "time (s, ms, us, ns)";
        case Dimension::kLength: return "length (m, cm, mm)";
        case Dimension::kVelocity: return "velocity (m/s, cm/s)";
        case Dimension::kPower: return "power (W, mW, uW, dBm)";
        case Dimension::kDecibel: return "level (dB)";
        case Dimension::kResistance: return "resistance (ohm)";
        case Dimension::kAngle: return "angle (deg, rad)";
    }
    return "?";
}

/// Parses "<number> <unit>" (space optional) into SI base units. A bare
/// number is rejected: every physical quantity must name its unit.
inline double parse_quantity(std::string_view text, Dimension dim) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{}) throw ValidationError("'" + std::string(text) + "' is not a quantity");
    std::string_view unit(ptr, static_cast<std::size_t>(text.data() + text.size() - ptr));
    while (!unit.empty() && unit.front() == ' ') unit.remove_prefix(1);
    if (unit.empty()) {
        throw ValidationError("'" + std::string(text) + "' has no unit; expected " +
                              std::string(to_string(dim)));
    }
    auto scaled = [&](std::initializer_list<std::pair<std::string_view, double>> table) {
        for (const auto& [name, factor] : table) {
            if (unit == name) return value * factor;
        }
        throw ValidationError("unit '" + std::string(unit) + "' in '" + std::string(text) +
                              "' is not a " + std::string(to_string(dim)));
    };
    switch (dim) {
        case Dimension::kFrequency:
            return scaled({{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}});
        case Dimension::kTime:
            return scaled({{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"µs", 1e-6}, {"ns", 1e-9}});
        case Dimension::kLength:
            return scaled({{"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}});
        case Dimension::kVelocity:
            return scaled({{"m/s", 1.0}, {"cm/s", 1e-2}});
        case Dimension::kPower:
            if (unit == "dBm") return 1e-3 * std::pow(10.0, value / 10.0);
            return scaled({{"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}});
        case Dimension::kDecibel:
            return scaled({{"dB", 1.0}});
        case Dimension::kResistance:
            return scaled({{"ohm", 1.0}, {"Ohm", 1.0}, {"Ω", 1.0}});
        case Dimension::kAngle:
            return scaled({{"rad", 1.0}, {"deg", 3.14159265358979323846 / 180.0}});
    }
    throw ValidationError("unsupported dimension");
}

}  // namespace radarsim
