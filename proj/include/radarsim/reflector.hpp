#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "radarsim/antenna.hpp"
#include "radarsim/channel.hpp"
#include "radarsim/constants.hpp"
#include "radarsim/errors.hpp"
#include "radarsim/scene.hpp"
#include "radarsim/text_io.hpp"

namespace radarsim {

enum class Polarization : std::size_t { kVV = 0, kHH = 1, kVH = 2, kHV = 3 };
enum class BandEdge : std::size_t { kStart = 0, kEnd = 1 };

/// RCS patterns (m^2) over (az, el) in the reflector frame, for the four
/// polarization channels at the chirp start and end frequencies.
struct RcsTable {
    text::AxisSpec azimuth;
    text::AxisSpec elevation;
    double f0{59e9};
    double bandwidth{2e9};
    /// channels[pol][edge] holds elevation-major grids of sigma in m^2.
    std::array<std::array<std::vector<double>, 2>, 4> channels;

    const std::vector<double>& channel(Polarization pol, BandEdge edge) const {
        return channels[static_cast<std::size_t>(pol)][static_cast<std::size_t>(edge)];
    }
    std::vector<double>& channel(Polarization pol, BandEdge edge) {
        return channels[static_cast<std::size_t>(pol)][static_cast<std::size_t>(edge)];
    }

    bool covers(double az, double el) const {
        constexpr double tol = 1e-9;
        return az >= azimuth.start - tol && az <= azimuth.stop() + tol &&
               el >= elevation.start - tol && el <= elevation.stop() + tol;
    }

    /// Bilinear interpolation of one channel in linear sigma.
    double interpolate(Polarization pol, BandEdge edge, double az, double el) const {
        const auto& grid = channel(pol, edge);
        const auto locate = [](const text::AxisSpec& axis, double value) {
            const double pos = std::clamp((value - axis.start) / axis.step, 0.0,
                                          static_cast<double>(axis.count - 1));
            auto cell = static_cast<std::size_t>(std::floor(pos));
            if (cell >= axis.count - 1) cell = axis.count - 2;
            return std::pair{cell, pos - static_cast<double>(cell)};
        };
        const auto [i, fx] = locate(azimuth, az);
        const auto [j, fy] = locate(elevation, el);
        const std::size_t w = azimuth.count;
        const double lower = (1.0 - fx) * grid[j * w + i] + fx * grid[j * w + i + 1];
        const double upper = (1.0 - fx) * grid[(j + 1) * w + i] + fx * grid[(j + 1) * w + i + 1];
        return (1.0 - fy) * lower + fy * upper;
    }

    void validate() const {
        if (azimuth.count < 2 || elevation.count < 2) {
            throw ValidationError("RCS table needs at least a 2x2 grid");
        }
        for (const auto& pol : channels) {
            for (const auto& grid : pol) {
                if (grid.size() != azimuth.count * elevation.count) {
                    throw ValidationError("RCS table channel is incomplete");
                }
                for (double s : grid) {
                    if (!(s >= 0.0) || !std::isfinite(s)) {
                        throw ValidationError("RCS table values must be finite and >= 0 m^2");
                    }
                }
            }
        }
    }
};

/// Peak RCS of a triangular trihedral corner reflector with edge length a.
inline double trihedral_rcs(double edge_length, double lambda) {
    return 4.0 * kPi * std::pow(edge_length, 4) / (3.0 * lambda * lambda);
}

/// Scalar reflector RCS model: a measured/simulated table or a trihedral.
class RcsModel {
public:
    static RcsModel table(RcsTable t) {
        t.validate();
        RcsModel m;
        m.model_ = std::move(t);
        return m;
    }

    /// Aspect-independent trihedral peak evaluated at the band center.
    static RcsModel trihedral(double edge_length, double f0, double bandwidth) {
        if (!(edge_length > 0.0)) throw ValidationError("trihedral edge length must be positive");
        RcsModel m;
        m.model_ = Trihedral{edge_length, f0 + bandwidth / 2.0};
        return m;
    }

    bool is_table() const { return std::holds_alternative<RcsTable>(model_); }
    const RcsTable* as_table() const { return std::get_if<RcsTable>(&model_); }

    /// sigma = (VV_start + VV_end + HH_start + HH_end) / 4 at (az, el);
    /// cross-polar channels do not contribute.
    double scalar(double az, double el) const {
        if (const auto* t = std::get_if<RcsTable>(&model_)) {
            if (!t->covers(az, el)) {
                throw DomainError("rcs_scalar: direction (" + std::to_string(az) + ", " +
                                  std::to_string(el) + ") deg outside the table");
            }
            const double vv = 0.5 * (t->interpolate(Polarization::kVV, BandEdge::kStart, az, el) +
                                     t->interpolate(Polarization::kVV, BandEdge::kEnd, az, el));
            const double hh = 0.5 * (t->interpolate(Polarization::kHH, BandEdge::kStart, az, el) +
                                     t->interpolate(Polarization::kHH, BandEdge::kEnd, az, el));
            return 0.5 * (vv + hh);
        }
        const auto& tri = std::get<Trihedral>(model_);
        return trihedral_rcs(tri.edge_length, wavelength(tri.center_frequency));
    }

private:
    struct Trihedral {
        double edge_length;
        double center_frequency;
    };
    std::variant<Trihedral, RcsTable> model_{Trihedral{0.1, 60e9}};
};

inline double rcs_scalar(const RcsModel& model, double az, double el) {
    return model.scalar(az, el);
}

/// RCS table reader. Header: f0, bandwidth, azimuth/elevation axes (as in
/// pattern files); then eight blocks "block <VV|HH|VH|HV> <start|end>", each
/// one row per elevation of dBsm values.
inline RcsTable load_rcs_table(const std::filesystem::path& path) {
    const std::string file = path.string();
    const auto lines = text::read_lines(path);
    RcsTable t;
    std::optional<text::AxisSpec> az, el;
    std::array<std::array<bool, 2>, 4> seen{};
    std::size_t k = 0;
    for (; k < lines.size() && lines[k].tokens.front() != "block"; ++k) {
        const auto& line = lines[k];
        const auto& key = line.tokens.front();
        if (key == "f0") {
            text::expect_arity(line, 2, 2, file);
            t.f0 = text::parse_double(line.tokens[1], file, line.number);
        } else if (key == "bandwidth") {
            text::expect_arity(line, 2, 2, file);
            t.bandwidth = text::parse_double(line.tokens[1], file, line.number);
        } else if (key == "azimuth" || key == "azimuth_values") {
            az = text::parse_axis(line, key == "azimuth_values", file);
        } else if (key == "elevation" || key == "elevation_values") {
            el = text::parse_axis(line, key == "elevation_values", file);
        } else {
            throw FormatError(file, line.number, "unknown RCS header '" + key + "'");
        }
    }
    if (!az || !el) throw FormatError(file, 0, "missing azimuth or elevation axis");
    t.azimuth = *az;
    t.elevation = *el;
    while (k < lines.size()) {
        const auto& head = lines[k];
        text::expect_arity(head, 3, 3, file);
        static constexpr std::array<const char*, 4> names{"VV", "HH", "VH", "HV"};
        std::size_t pol = 4;
        for (std::size_t i = 0; i < 4; ++i) {
            if (head.tokens[1] == names[i]) pol = i;
        }
        const std::size_t edge = head.tokens[2] == "start" ? 0 : (head.tokens[2] == "end" ? 1 : 2);
        if (pol == 4 || edge == 2) {
            throw FormatError(file, head.number, "block needs <VV|HH|VH|HV> <start|end>");
        }
        if (seen[pol][edge]) throw FormatError(file, head.number, "duplicate block");
        seen[pol][edge] = true;
        auto& grid = t.channels[pol][edge];
        ++k;
        for (std::size_t row = 0; row < el->count; ++row, ++k) {
            if (k >= lines.size() || lines[k].tokens.front() == "block") {
                throw FormatError(file, head.number, "block has missing rows");
            }
            const auto& line = lines[k];
            if (line.tokens.size() != az->count) {
                throw FormatError(file, line.number,
                                  "row has " + std::to_string(line.tokens.size()) +
                                      " cells, expected " + std::to_string(az->count));
            }
            for (const auto& tok : line.tokens) {
                grid.push_back(std::pow(10.0, text::parse_double(tok, file, line.number) / 10.0));
            }
        }
    }
    for (const auto& pol : seen) {
        for (bool s : pol) {
            if (!s) throw FormatError(file, 0, "RCS table needs all eight channel blocks");
        }
    }
    t.validate();
    return t;
}

/// Direction of the radar seen from the reflector, in the reflector frame
/// (boresight -z, rotated by yaw). Same az/el convention as RadarAngles.
inline RadarAngles reflector_aspect(const Vec3& radar, const Reflector& refl) {
    const Vec3 d = normalized(radar - refl.position);
    const double c = std::cos(refl.yaw), s = std::sin(refl.yaw);
    const double x = c * d.x + s * d.y;
    const double y = -s * d.x + c * d.y;
    return {rad_to_deg(std::atan2(-y, x)), rad_to_deg(std::acos(std::clamp(-d.z, -1.0, 1.0)))};
}

/// Two-way loss from the monostatic radar equation, in dB.
inline double radar_equation_loss_db(double two_way_gain_linear, double lambda, double sigma,
                                     double range) {
    return -10.0 * std::log10(two_way_gain_linear * lambda * lambda * sigma /
                              (std::pow(4.0 * kPi, 3) * std::pow(range, 4)));
}

/// Contribution of one reflector landmark, or nothing without line of sight.
inline std::optional<PathContribution> reflector_contribution(const Pose& radar,
                                                              const Reflector& refl,
                                                              const Scene& scene,
                                                              const AntennaPattern& pattern,
                                                              const RcsModel& rcs, double f0) {
    if (!los_visible(radar.position, refl.position, scene)) return std::nullopt;
    const Vec3 offset = refl.position - radar.position;
    const double range = norm(offset);
    const Vec3 toward = offset / range;
    const double lambda = wavelength(f0);
    const auto aspect = reflector_aspect(radar.position, refl);

    PathContribution pc;
    pc.source = PathSource::kReflector;
    pc.reflector_id = refl.id;
    pc.range = range;
    pc.distance = 2.0 * range;
    pc.arrival_world = toward;
    pc.departure_world = toward;
    pc.velocity = ray_doppler(toward, radar.velocity);
    pc.aoa = world_to_radar_angles(toward, radar.heading);
    pc.phase_cycles = 2.0 * range / lambda;
    pc.loss_db = radar_equation_loss_db(two_way_gain(pattern, pc.aoa), lambda,
                                        rcs.scalar(aspect.azimuth, aspect.elevation), range);
    return pc;
}

}  // namespace radarsim
