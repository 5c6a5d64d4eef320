#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "radarsim/antenna.hpp"
#include "radarsim/constants.hpp"
#include "radarsim/errors.hpp"
#include "radarsim/parallel.hpp"
#include "radarsim/scene.hpp"
#include "radarsim/vec3.hpp"

namespace radarsim {

enum class PathSource { kRaytraced, kReflector };

inline const char* to_string(PathSource s) {
    return s == PathSource::kRaytraced ? "raytraced" : "reflector";
}

/// One point-target reflection k of the baseband model.
struct PathContribution {
    double loss_db{0.0};        // L_k
    double distance{0.0};       // d_k = 2 r_k, m
    double range{0.0};          // r_k, m
    double velocity{0.0};       // v_k, m/s, positive = closing
    RadarAngles aoa;            // arrival direction in the radar frame
    double phase_cycles{0.0};   // phi_k
    PathSource source{PathSource::kRaytraced};

    Vec3 arrival_world;         // unit vector from the radar toward the last scatterer
    Vec3 departure_world;       // unit vector from the radar toward the first scatterer
    std::vector<std::size_t> faces;  // reflection face sequence (raytraced only)
    int reflector_id{-1};            // reflector only
};

// ---------------------------------------------------------------------------
// Launch directions

/// Approximately uniform ray directions from a subdivided icosahedron.
struct RayBundle {
    std::vector<Vec3> directions;
    /// Effective angular spacing (rad): twice the largest angular distance
    /// from any point of the sphere to its nearest launched direction.
    double spacing{0.0};

    std::size_t count() const { return directions.size(); }
};

inline constexpr int kMaxSubdivision = 8;

/// Geodesic icosphere with 10*4^n + 2 vertices. Vertex order is fixed: the
/// 12 base vertices, then midpoints in the order they are first created.
inline RayBundle launch_directions(int subdivision) {
    if (subdivision < 0) throw DomainError("launch_directions: subdivision must be >= 0");
    if (subdivision > kMaxSubdivision) {
        throw ResourceError("launch_directions: subdivision " + std::to_string(subdivision) +
                            " exceeds the limit of " + std::to_string(kMaxSubdivision));
    }
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                           {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                           {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& p : v) p = normalized(p);
    std::vector<std::array<std::uint32_t, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int level = 0; level < subdivision; ++level) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
            v.push_back(normalized(v[a] + v[b]));
            const auto idx = static_cast<std::uint32_t>(v.size() - 1);
            midpoints.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<std::uint32_t, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const auto ab = midpoint(f[0], f[1]);
            const auto bc = midpoint(f[1], f[2]);
            const auto ca = midpoint(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    // Covering radius: the spherical circumradius of the largest face.
    double covering = 0.0;
    for (const auto& f : faces) {
        Vec3 center = cross(v[f[1]] - v[f[0]], v[f[2]] - v[f[0]]);
        center = normalized(center);
        if (dot(center, v[f[0]]) < 0.0) center = -center;
        covering = std::max(covering, std::acos(std::clamp(dot(center, v[f[0]]), -1.0, 1.0)));
    }
    return {std::move(v), 2.0 * covering};
}

// ---------------------------------------------------------------------------
// Reflection and loss

struct FresnelCoefficients {
    std::complex<double> perpendicular;  // s / TE
    std::complex<double> parallel;       // p / TM
};

/// Fresnel reflection coefficients at a half-space with complex permittivity
/// eps_r - j*sigma/(omega*eps0), for incidence angle with cosine `cos_incidence`.
inline FresnelCoefficients fresnel(const Material& m, double frequency, double cos_incidence) {
    using cd = std::complex<double>;
    const double c = std::clamp(std::abs(cos_incidence), 0.0, 1.0);
    const double sin2 = 1.0 - c * c;
    const cd eps{m.relative_permittivity,
                 -m.conductivity / (2.0 * kPi * frequency * kVacuumPermittivity)};
    const cd root = std::sqrt(eps - sin2);
    return {(c - root) / (c + root), (eps * c - root) / (eps * c + root)};
}

/// Polarization-averaged reflection magnitude sqrt((|Gs|^2 + |Gp|^2) / 2).
inline double reflection_magnitude(const Material& m, double frequency, double cos_incidence) {
    const auto g = fresnel(m, frequency, cos_incidence);
    return std::sqrt(0.5 * (std::norm(g.perpendicular) + std::norm(g.parallel)));
}

struct Bounce {
    std::size_t material{0};
    double cos_incidence{1.0};
};

/// Unfolded path length plus the bounces along it.
struct PathGeometry {
    double distance{0.0};
    std::vector<Bounce> bounces;
};

/// Free-space spreading over the unfolded distance plus the reflection loss
/// of every bounce, in dB.
inline double path_loss(const PathGeometry& path, const std::vector<Material>& materials,
                        double f0) {
    double loss = 20.0 * std::log10(4.0 * kPi * path.distance / wavelength(f0));
    for (const auto& b : path.bounces) {
        loss -= 20.0 * std::log10(reflection_magnitude(materials.at(b.material), f0, b.cos_incidence));
    }
    return loss;
}

/// Radial velocity of the radar toward the arrival direction (positive = closing).
inline double ray_doppler(const Vec3& aoa_world, const Vec3& radar_velocity) {
    return dot(radar_velocity, aoa_world);
}

// ---------------------------------------------------------------------------
// Shooting and bouncing rays

struct TraceOptions {
    int max_order{2};
    double frequency{59e9};
    /// Multiplier on the reception-sphere radius d * spacing / 2.
    double rx_radius_scale{1.0};
    /// Fixed reception radius (m); used instead of the adaptive rule when > 0.
    double fixed_rx_radius{0.0};
    std::size_t workers{1};
};

namespace detail {

struct Plane {
    Vec3 normal;
    double offset{0.0};  // dot(normal, x) = offset
};

inline Plane plane_of(const Triangle& tri) {
    const Vec3 n = tri.unit_normal();
    return {n, dot(n, tri.vertices[0])};
}

inline Vec3 mirror(const Vec3& p, const Plane& pl) {
    return p - pl.normal * (2.0 * (dot(pl.normal, p) - pl.offset));
}

inline bool inside_triangle(const Triangle& tri, const Vec3& p, double tol) {
    const Vec3 e1 = tri.edge1(), e2 = tri.edge2(), w = p - tri.vertices[0];
    const double d11 = dot(e1, e1), d12 = dot(e1, e2), d22 = dot(e2, e2);
    const double w1 = dot(w, e1), w2 = dot(w, e2);
    const double den = d11 * d22 - d12 * d12;
    const double v = (d22 * w1 - d12 * w2) / den;
    const double u = (d11 * w2 - d12 * w1) / den;
    return v >= -tol && u >= -tol && u + v <= 1.0 + tol;
}

/// For each triangle, the lowest-index triangle lying in the same plane.
inline std::vector<std::vector<std::size_t>> coplanar_groups(const Scene& scene) {
    const std::size_t n = scene.triangles.size();
    std::vector<Plane> planes(n);
    for (std::size_t i = 0; i < n; ++i) planes[i] = plane_of(scene.triangles[i]);
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double align = dot(planes[i].normal, planes[j].normal);
            const double dist = std::abs(dot(planes[i].normal, scene.triangles[j].vertices[0]) -
                                         planes[i].offset);
            if (std::abs(std::abs(align) - 1.0) < 1e-12 && dist < 1e-9) groups[i].push_back(j);
        }
    }
    return groups;
}

struct CorrectedPath {
    std::vector<std::size_t> faces;
    std::vector<Vec3> points;  // reflection points in propagation order
    double distance{0.0};
};

/// Exact specular path through the planes of `faces` (image method), or
/// nothing if a reflection point falls outside its surface, a leg is
/// blocked, or the geometry is inconsistent.
inline std::optional<CorrectedPath> correct_path(const Scene& scene,
                                                 const std::vector<std::vector<std::size_t>>& groups,
                                                 const Vec3& radar,
                                                 const std::vector<std::size_t>& faces) {
    constexpr double kInsideTol = 1e-9;
    const std::size_t n = faces.size();
    std::vector<Plane> planes(n);
    std::vector<Vec3> images(n + 1);
    images[0] = radar;
    for (std::size_t i = 0; i < n; ++i) {
        planes[i] = plane_of(scene.triangles[faces[i]]);
        images[i + 1] = mirror(images[i], planes[i]);
    }
    CorrectedPath out;
    out.faces.resize(n);
    out.points.resize(n);
    Vec3 cur = radar;
    for (std::size_t k = n; k-- > 0;) {
        const Vec3 toward = images[k + 1] - cur;
        const double den = dot(planes[k].normal, toward);
        if (std::abs(den) < 1e-15) return std::nullopt;
        const double s = (planes[k].offset - dot(planes[k].normal, cur)) / den;
        if (s < -1e-12 || s > 1.0 + 1e-12) return std::nullopt;
        const Vec3 p = cur + toward * s;
        std::optional<std::size_t> owner;
        for (const std::size_t cand : groups[faces[k]]) {
            if (inside_triangle(scene.triangles[cand], p, kInsideTol)) {
                owner = cand;
                break;
            }
        }
        if (!owner) return std::nullopt;
        out.faces[k] = *owner;
        out.points[k] = p;
        cur = p;
    }
    // Every leg must be unobstructed.
    Vec3 prev = radar;
    for (std::size_t k = 0; k <= n; ++k) {
        const Vec3 next = k < n ? out.points[k] : radar;
        const Vec3 leg = next - prev;
        const double len = norm(leg);
        if (len > 1e-9) {
            for (const auto& tri : scene.triangles) {
                if (segment_triangle(prev, leg, tri, 1e-7)) return std::nullopt;
            }
        }
        out.distance += len;
        prev = next;
    }
    return out;
}

inline bool same_points(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (norm(a[i] - b[i]) > 1e-6) return false;
    }
    return true;
}

}  // namespace detail

/// Monostatic shooting-and-bouncing-rays trace from the radar pose. Returns
/// exact specular paths of order 1..max_order (no direct path), sorted by
/// distance then face sequence. Output is independent of `workers`.
inline std::vector<PathContribution> trace_paths(const Scene& scene, const Pose& radar,
                                                 const RayBundle& bundle,
                                                 const TraceOptions& opt = {}) {
    if (opt.max_order < 1 || opt.max_order > 3) {
        throw DomainError("trace_paths: max_order must be in [1, 3]");
    }
    if (scene.triangles.empty()) return {};
    const Vec3 rx = radar.position;
    if (!scene.bounds.contains(rx)) throw DomainError("trace_paths: radar lies outside the scene");

    const double far = 4.0 * norm(scene.bounds.extent()) + 1.0;
    auto capture_radius = [&](double unfolded) {
        if (opt.fixed_rx_radius > 0.0) return opt.fixed_rx_radius;
        return opt.rx_radius_scale * unfolded * bundle.spacing / 2.0;
    };

    // Per-ray candidate face sequences, merged in ray order afterwards.
    std::vector<std::vector<std::vector<std::size_t>>> per_ray(bundle.count());
    parallel_for(bundle.count(), opt.workers, [&](std::size_t r) {
        Vec3 origin = rx;
        Vec3 dir = bundle.directions[r];
        double travelled = 0.0;
        std::vector<std::size_t> faces;
        auto hit = first_hit(scene, origin, dir, kSegmentEndTolerance, far);
        for (int order = 1; order <= opt.max_order && hit; ++order) {
            const auto& tri = scene.triangles[hit->triangle];
            origin = origin + dir * hit->distance;
            travelled += hit->distance;
            faces.push_back(hit->triangle);
            dir = normalized(reflect(dir, tri.unit_normal()));
            hit = first_hit(scene, origin, dir, kSegmentEndTolerance, far);
            const double leg = hit ? hit->distance : far;
            const Vec3 w = rx - origin;
            const double along = dot(w, dir);
            if (along > 0.0 && along < leg) {
                const double miss = norm(w - dir * along);
                if (miss <= capture_radius(travelled + along)) per_ray[r].push_back(faces);
            }
        }
    });

    std::set<std::vector<std::size_t>> candidates;
    for (auto& list : per_ray) {
        for (auto& f : list) candidates.insert(std::move(f));
    }

    const auto groups = detail::coplanar_groups(scene);
    std::map<std::vector<std::size_t>, detail::CorrectedPath> corrected;
    for (const auto& faces : candidates) {
        if (auto path = detail::correct_path(scene, groups, rx, faces)) {
            // Consecutive bounces at one point (an edge return) have no
            // physical order; list their faces ascending.
            auto& f = path->faces;
            for (std::size_t i = 0; i < f.size();) {
                std::size_t j = i + 1;
                while (j < f.size() && norm(path->points[j] - path->points[i]) <= 1e-6) ++j;
                std::sort(f.begin() + static_cast<std::ptrdiff_t>(i), f.begin() + static_cast<std::ptrdiff_t>(j));
                i = j;
            }
            corrected.emplace(path->faces, std::move(*path));
        }
    }
    // Paths with identical reflection points (e.g. both orderings of a
    // dihedral edge return) are one physical path; keep the smallest key.
    std::vector<const detail::CorrectedPath*> unique;
    for (const auto& [key, path] : corrected) {
        const bool dup = std::any_of(unique.begin(), unique.end(), [&](const auto* u) {
            return detail::same_points(u->points, path.points);
        });
        if (!dup) unique.push_back(&path);
    }

    const double lambda = wavelength(opt.frequency);
    std::vector<PathContribution> out;
    out.reserve(unique.size());
    for (const auto* path : unique) {
        PathContribution pc;
        pc.source = PathSource::kRaytraced;
        pc.faces = path->faces;
        pc.distance = path->distance;
        pc.range = path->distance / 2.0;
        pc.departure_world = normalized(path->points.front() - rx);
        pc.arrival_world = normalized(path->points.back() - rx);

        PathGeometry geom{path->distance, {}};
        Vec3 dir = pc.departure_world;
        double reflection_phase = 0.0;
        for (const std::size_t f : path->faces) {
            const auto& tri = scene.triangles[f];
            const Vec3 n = tri.unit_normal();
            const double cos_inc = std::abs(dot(dir, n));
            geom.bounces.push_back({tri.material, cos_inc});
            const auto g = fresnel(scene.materials[tri.material], opt.frequency, cos_inc);
            reflection_phase += std::arg(g.perpendicular) / (2.0 * kPi);
            dir = normalized(reflect(dir, n));
        }
        pc.loss_db = path_loss(geom, scene.materials, opt.frequency);
        pc.phase_cycles = path->distance / lambda + reflection_phase;
        pc.velocity = ray_doppler(pc.arrival_world, radar.velocity);
        pc.aoa = world_to_radar_angles(pc.arrival_world, radar.heading);
        out.push_back(std::move(pc));
    }
    std::sort(out.begin(), out.end(), [](const PathContribution& a, const PathContribution& b) {
        return std::tie(a.distance, a.faces) < std::tie(b.distance, b.faces);
    });
    return out;
}

/// Extra loss (dB) from the two-way antenna pattern for a path leaving along
/// `departure` and arriving along `arrival`: the geometric mean of the two
/// monostatic two-way gains, which is exact for single-bounce paths.
inline double antenna_loss_db(const AntennaPattern& pattern, const Vec3& departure,
                              const Vec3& arrival, double heading) {
    const auto d = world_to_radar_angles(departure, heading);
    const auto a = world_to_radar_angles(arrival, heading);
    const double g_dep = pattern.gain_db(d.azimuth, d.elevation);
    const double g_arr = pattern.gain_db(a.azimuth, a.elevation);
    return -0.5 * (g_dep + g_arr);
}

/// Path dump: header line then one whitespace-separated record per path.
inline void write_path_dump(std::ostream& out, const std::vector<PathContribution>& paths) {
    out << "# source loss_db distance_m range_m velocity_mps az_deg el_deg phase_cycles "
           "reflector_id faces\n";
    out << std::setprecision(17);
    for (const auto& p : paths) {
        out << to_string(p.source) << ' ' << p.loss_db << ' ' << p.distance << ' ' << p.range << ' '
            << p.velocity << ' ' << p.aoa.azimuth << ' ' << p.aoa.elevation << ' '
            << p.phase_cycles << ' ' << p.reflector_id << ' ';
        if (p.faces.empty()) out << '-';
        for (std::size_t i = 0; i < p.faces.size(); ++i) out << (i ? "," : "") << p.faces[i];
        out << '\n';
    }
}

}  // namespace radarsim
