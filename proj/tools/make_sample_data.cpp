// Writes the bundled sample data: room meshes, scenarios, synthetic
// antenna patterns for each bandwidth preset and an octahedral RCS table.
//
// usage: make_sample_data [output_dir]   (default: ./data)

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "radarsim/constants.hpp"
#include "radarsim/reflector.hpp"
#include "radarsim/rooms.hpp"

namespace fs = std::filesystem;
using namespace radarsim;

namespace {

std::ofstream open(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << std::setprecision(10);
    return out;
}

// Two-way gain in dB: cos-power main lobe around boresight, slightly
// squinted toward +x and narrowing with bandwidth (the on-chip antennas
// get more directive toward the top of the band).
double pattern_db(double az_deg, double el_deg, double bandwidth) {
    const double az = deg_to_rad(az_deg);
    const double el = deg_to_rad(el_deg);
    const double squint = deg_to_rad(6.0);
    // Direction in the radar frame, tilted by the squint about the y axis.
    const double x = std::sin(el) * std::cos(az), z = std::cos(el);
    const double c = z * std::cos(squint) + x * std::sin(squint);
    const double q = 2.0 + 0.25 * bandwidth / 1e9;
    const double lobe = std::max(c, 0.0);
    const double ripple = 0.4 * std::cos(4.0 * az) * std::sin(el);
    return std::max(10.0 * q * std::log10(std::max(lobe, 1e-4)) + ripple, -45.0);
}

void write_pattern(const fs::path& p, double bandwidth) {
    auto out = open(p);
    out << "# synthetic two-way antenna gain, dB\n"
        << "receiver 1\nf0 59e9\nbandwidth " << bandwidth << "\n"
        << "azimuth -180 180 2\nelevation 0 90 2\ndata\n";
    for (int el = 0; el <= 90; el += 2) {
        for (int az = -180; az <= 180; az += 2) {
            out << (az == -180 ? "" : " ") << std::fixed << std::setprecision(3)
                << pattern_db(az, el, bandwidth);
        }
        out << '\n';
    }
}

// Octahedral corner: eight trihedral corners, so the response has a lobe per
// quadrant in azimuth and falls off toward grazing elevation.
double octahedral_dbsm(double az_deg, double el_deg, double f, double edge) {
    const double peak = trihedral_rcs(edge, wavelength(f));
    const double az = deg_to_rad(az_deg);
    const double el = deg_to_rad(el_deg);
    const double quad = 0.5 * (1.0 + std::cos(4.0 * az));
    const double taper = std::pow(std::cos(0.8 * el), 2.0);
    return 10.0 * std::log10(peak * taper * (0.35 + 0.65 * quad) + 1e-6);
}

void write_rcs_table(const fs::path& p, double edge) {
    const double f0 = 59e9, bandwidth = 4e9;
    auto out = open(p);
    out << "# synthetic octahedral reflector, edge " << edge << " m, dBsm\n"
        << "f0 " << f0 << "\nbandwidth " << bandwidth << "\n"
        << "azimuth -180 180 5\nelevation 0 90 5\n";
    const char* pols[] = {"VV", "HH", "VH", "HV"};
    for (int pol = 0; pol < 4; ++pol) {
        for (int edge_i = 0; edge_i < 2; ++edge_i) {
            const double f = edge_i == 0 ? f0 : f0 + bandwidth;
            const double offset = pol < 2 ? 0.0 : -25.0;
            out << "block " << pols[pol] << ' ' << (edge_i == 0 ? "start" : "end") << '\n';
            for (int el = 0; el <= 90; el += 5) {
                for (int az = -180; az <= 180; az += 5) {
                    out << (az == -180 ? "" : " ") << std::fixed << std::setprecision(3)
                        << octahedral_dbsm(az, el, f, edge) + offset + (pol == 1 ? -0.3 : 0.0);
                }
                out << '\n';
            }
        }
    }
}

void write_l_room(const fs::path& dir) {
    const std::vector<Material> mats{{"concrete", 5.31, 0.48}};
    rooms::write_mesh(dir / "l_room.mesh", rooms::l_room(20.0, 10.0, 5.0), mats);
    auto out = open(dir / "l_room.scenario");
    out << "# L-shaped concrete room, 20 x 20 x 5 m; inner corner at (10, 10)\n"
        << "mesh l_room.mesh\n"
        << "material concrete 5.31 0.48\n"
        << "# reflector id x y z table|trihedral ... [yaw_deg]\n"
        << "reflector 1 6 4 4.95 table octahedral.rcs\n"
        << "reflector 2 14 6 4.95 table octahedral.rcs 30\n"
        << "reflector 3 4 13 4.95 table octahedral.rcs\n"
        << "reflector 4 7 17 4.95 table octahedral.rcs 15\n"
        << "# waypoint t x y z heading_rad; radar 0.5 m above the floor, 0.5 m/s\n"
        << "waypoint 0 16 4 0.5 3.141592653589793\n"
        << "waypoint 22 5 4 0.5 3.141592653589793\n"
        << "waypoint 26 4 5 0.5 1.5707963267948966\n"
        << "waypoint 46 4 15 0.5 1.5707963267948966\n";
}

void write_desk_room(const fs::path& dir) {
    const std::vector<Material> mats{{"concrete", 5.31, 0.48}};
    rooms::write_mesh(dir / "desk_room.mesh", rooms::box_room({8.0, 6.0, 3.0}), mats);
    auto out = open(dir / "desk_room.scenario");
    out << "# 8 x 6 x 3 m concrete box with four ceiling trihedrals (10 cm edge)\n"
        << "mesh desk_room.mesh\n"
        << "material concrete 5.31 0.48\n"
        << "reflector 1 2 1.5 2.95 trihedral 0.1\n"
        << "reflector 2 6 1.5 2.95 trihedral 0.1\n"
        << "reflector 3 2 4.5 2.95 trihedral 0.1\n"
        << "reflector 4 6 4.5 2.95 trihedral 0.1\n"
        << "# rectangle loop at 0.4 m/s with turns in place\n"
        << "waypoint 0 2.5 2 0.5 0\n"
        << "waypoint 7.5 5.5 2 0.5 0\n"
        << "waypoint 8.5 5.5 2 0.5 1.5707963267948966\n"
        << "waypoint 13.5 5.5 4 0.5 1.5707963267948966\n"
        << "waypoint 14.5 5.5 4 0.5 3.141592653589793\n"
        << "waypoint 22 2.5 4 0.5 3.141592653589793\n";
}

}  // namespace

int main(int argc, char** argv) {
    try {
        const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("data");
        fs::create_directories(dir / "patterns");
        for (const double b : {0.5e9, 1e9, 2e9, 4e9}) {
            std::ostringstream name;
            name << "rx1_" << b / 1e9 << "GHz.pattern";
            write_pattern(dir / "patterns" / name.str(), b);
        }
        write_rcs_table(dir / "octahedral.rcs", 0.06);
        write_l_room(dir);
        write_desk_room(dir);
        std::cout << "sample data written to " << dir.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
