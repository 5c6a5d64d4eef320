#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "radarsim/constants.hpp"
#include "radarsim/errors.hpp"
#include "radarsim/text_io.hpp"
#include "radarsim/vec3.hpp"

namespace radarsim {

/// Two-way gain floor applied outside the measured angular coverage.
inline constexpr double kPatternFloorDb = -60.0;

/// Direction in the radar frame. Boresight is +z (the radar faces the
/// ceiling). `elevation` is the polar angle from boresight in [0, 180] deg;
/// `azimuth` is atan2(-y, x) in (-180, 180] deg, x being the robot's forward axis.
struct RadarAngles {
    double azimuth{0.0};    // deg
    double elevation{0.0};  // deg
};

/// Normalized two-way antenna gain G_T*G_R (dB) on a uniform az/el grid.
class AntennaPattern {
public:
    AntennaPattern() = default;

    /// Builds a pattern from raw dB values (rows = elevation, columns = azimuth)
    /// and renormalizes so the maximum entry is 0 dB.
    AntennaPattern(text::AxisSpec azimuth, text::AxisSpec elevation, std::vector<double> gain_db,
                   int receiver = 1, double f0 = 59e9, double bandwidth = 2e9)
        : azimuth_(azimuth), elevation_(elevation), gain_db_(std::move(gain_db)),
          receiver_(receiver), f0_(f0), bandwidth_(bandwidth) {
        if (azimuth_.count < 2 || elevation_.count < 2) {
            throw ValidationError("antenna pattern needs at least a 2x2 grid");
        }
        if (gain_db_.size() != azimuth_.count * elevation_.count) {
            throw ValidationError("antenna pattern dimensions do not match its grid");
        }
        double peak = -std::numeric_limits<double>::infinity();
        for (double g : gain_db_) {
            if (!std::isfinite(g)) throw ValidationError("antenna pattern has a non-finite entry");
            peak = std::max(peak, g);
        }
        for (double& g : gain_db_) g -= peak;
    }

    const text::AxisSpec& azimuth_axis() const { return azimuth_; }
    const text::AxisSpec& elevation_axis() const { return elevation_; }
    int receiver() const { return receiver_; }
    double f0() const { return f0_; }
    double bandwidth() const { return bandwidth_; }
    double floor_db() const { return floor_db_; }
    void set_floor_db(double floor_db) { floor_db_ = floor_db; }

    double at(std::size_t el_index, std::size_t az_index) const {
        return gain_db_[el_index * azimuth_.count + az_index];
    }
    std::span<const double> values_db() const { return gain_db_; }

    bool covers(double az_deg, double el_deg) const {
        constexpr double tol = 1e-9;
        return az_deg >= azimuth_.start - tol && az_deg <= azimuth_.stop() + tol &&
               el_deg >= elevation_.start - tol && el_deg <= elevation_.stop() + tol;
    }

    /// Bilinear interpolation of the dB grid; floor outside coverage.
    double gain_db(double az_deg, double el_deg) const {
        if (!covers(az_deg, el_deg)) return floor_db_;
        const auto [i, fx] = locate(azimuth_, az_deg);
        const auto [j, fy] = locate(elevation_, el_deg);
        const double g00 = at(j, i), g01 = at(j, i + 1);
        const double g10 = at(j + 1, i), g11 = at(j + 1, i + 1);
        const double lower = (1.0 - fx) * g00 + fx * g01;
        const double upper = (1.0 - fx) * g10 + fx * g11;
        return (1.0 - fy) * lower + fy * upper;
    }

private:
    static std::pair<std::size_t, double> locate(const text::AxisSpec& axis, double value) {
        const double pos = std::clamp((value - axis.start) / axis.step, 0.0,
                                      static_cast<double>(axis.count - 1));
        auto cell = static_cast<std::size_t>(std::floor(pos));
        if (cell >= axis.count - 1) cell = axis.count - 2;
        return {cell, pos - static_cast<double>(cell)};
    }

    text::AxisSpec azimuth_;
    text::AxisSpec elevation_;
    std::vector<double> gain_db_;
    int receiver_{1};
    double f0_{59e9};
    double bandwidth_{2e9};
    double floor_db_{kPatternFloorDb};
};

/// Linear two-way gain G_T*G_R toward (az, el); at most 1.
inline double two_way_gain(const AntennaPattern& p, double az_deg, double el_deg) {
    return std::pow(10.0, p.gain_db(az_deg, el_deg) / 10.0);
}

inline double two_way_gain(const AntennaPattern& p, const RadarAngles& a) {
    return two_way_gain(p, a.azimuth, a.elevation);
}

/// Expresses a world-frame unit direction in the radar frame of a robot
/// with the given heading (rotation about +z).
inline RadarAngles world_to_radar_angles(const Vec3& direction, double heading) {
    if (std::abs(norm(direction) - 1.0) > 1e-9) {
        throw DomainError("world_to_radar_angles: direction is not a unit vector");
    }
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    const double x = c * direction.x + s * direction.y;
    const double y = -s * direction.x + c * direction.y;
    const double z = std::clamp(direction.z, -1.0, 1.0);
    // Azimuth is undefined on the axis; report 0 there.
    if (std::hypot(x, y) < 1e-12) return {0.0, z > 0.0 ? 0.0 : 180.0};
    double az = rad_to_deg(std::atan2(-y, x));
    if (az <= -180.0) az = 180.0;
    return {az, rad_to_deg(std::acos(z))};
}

/// Pattern file reader. Header records: receiver, f0 (Hz), bandwidth (Hz),
/// azimuth|elevation "start stop step" (deg) or azimuth_values|elevation_values
/// lists; then "data" followed by one row per elevation of dB values.
inline AntennaPattern load_pattern(const std::filesystem::path& path) {
    const std::string file = path.string();
    const auto lines = text::read_lines(path);
    std::optional<text::AxisSpec> az, el;
    int receiver = 1;
    double f0 = 59e9, bandwidth = 2e9;
    std::size_t k = 0;
    for (; k < lines.size(); ++k) {
        const auto& line = lines[k];
        const auto& key = line.tokens.front();
        if (key == "data") break;
        if (key == "receiver") {
            text::expect_arity(line, 2, 2, file);
            receiver = static_cast<int>(text::parse_int(line.tokens[1], file, line.number));
        } else if (key == "f0") {
            text::expect_arity(line, 2, 2, file);
            f0 = text::parse_double(line.tokens[1], file, line.number);
        } else if (key == "bandwidth") {
            text::expect_arity(line, 2, 2, file);
            bandwidth = text::parse_double(line.tokens[1], file, line.number);
        } else if (key == "azimuth" || key == "azimuth_values") {
            az = text::parse_axis(line, key == "azimuth_values", file);
        } else if (key == "elevation" || key == "elevation_values") {
            el = text::parse_axis(line, key == "elevation_values", file);
        } else {
            throw FormatError(file, line.number, "unknown pattern header '" + key + "'");
        }
    }
    if (!az || !el) throw FormatError(file, 0, "missing azimuth or elevation axis");
    if (k == lines.size()) throw FormatError(file, 0, "missing data section");
    std::vector<double> values;
    values.reserve(az->count * el->count);
    std::size_t rows = 0;
    for (++k; k < lines.size(); ++k, ++rows) {
        const auto& line = lines[k];
        if (rows >= el->count) throw FormatError(file, line.number, "more rows than elevations");
        if (line.tokens.size() != az->count) {
            throw FormatError(file, line.number,
                              "row has " + std::to_string(line.tokens.size()) + " cells, expected " +
                                  std::to_string(az->count));
        }
        for (const auto& tok : line.tokens) {
            values.push_back(text::parse_double(tok, file, line.number));
        }
    }
    if (rows != el->count) {
        throw FormatError(file, lines.empty() ? 0 : lines.back().number,
                          "grid has " + std::to_string(rows) + " rows, expected " +
                              std::to_string(el->count));
    }
    return AntennaPattern(*az, *el, std::move(values), receiver, f0, bandwidth);
}

/// Picks the pattern for (receiver, bandwidth); bandwidth matched to 1 Hz.
inline const AntennaPattern* select_pattern(std::span<const AntennaPattern> patterns, int receiver,
                                            double bandwidth) {
    for (const auto& p : patterns) {
        if (p.receiver() == receiver && std::abs(p.bandwidth() - bandwidth) < 1.0) return &p;
    }
    return nullptr;
}

}  // namespace radarsim
