#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "radarsim/constants.hpp"
#include "radarsim/errors.hpp"
#include "radarsim/text_io.hpp"
#include "radarsim/vec3.hpp"

namespace radarsim {

/// Hits closer than this to either end of a segment are ignored (meters).
inline constexpr double kSegmentEndTolerance = 1e-9;

struct Material {
    std::string name;
    double relative_permittivity{1.0};
    double conductivity{0.0};  // S/m
};

struct Triangle {
    std::array<Vec3, 3> vertices;
    std::size_t material{0};

    Vec3 edge1() const { return vertices[1] - vertices[0]; }
    Vec3 edge2() const { return vertices[2] - vertices[0]; }
    double area() const { return 0.5 * norm(cross(edge1(), edge2())); }
    Vec3 unit_normal() const { return normalized(cross(edge1(), edge2())); }
};

struct Aabb {
    Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
    Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};

    bool empty() const { return !(min.x <= max.x && min.y <= max.y && min.z <= max.z); }
    Vec3 extent() const { return empty() ? Vec3{} : max - min; }

    void expand(const Vec3& p) {
        min = {std::min(min.x, p.x), std::min(min.y, p.y), std::min(min.z, p.z)};
        max = {std::max(max.x, p.x), std::max(max.y, p.y), std::max(max.z, p.z)};
    }

    bool contains(const Vec3& p) const {
        return !empty() && p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
               p.z >= min.z && p.z <= max.z;
    }
};

/// Closed-form trihedral corner reflector with the given edge length (m).
struct AnalyticRcs {
    double edge_length{0.1};
};

/// RCS table file, resolved relative to the scenario file.
struct TableRcs {
    std::filesystem::path path;
};

using RcsSource = std::variant<AnalyticRcs, TableRcs>;

struct Reflector {
    int id{0};
    Vec3 position;
    RcsSource rcs_source{AnalyticRcs{}};
    /// Rotation of the reflector frame about +z (rad). The reflector boresight is -z.
    double yaw{0.0};
};

struct Scene {
    std::vector<Triangle> triangles;
    std::vector<Material> materials;
    std::vector<Reflector> reflectors;
    Aabb bounds;

    /// Recomputes bounds from the triangles and checks every invariant.
    void finalize();
};

/// Wraps an angle to [-pi, pi).
inline double wrap_angle(double a) {
    if (a >= -kPi && a < kPi) return a;
    double w = std::fmod(a + kPi, 2.0 * kPi);
    if (w < 0.0) w += 2.0 * kPi;
    w -= kPi;
    return w >= kPi ? -kPi : w;
}

struct Pose {
    Vec3 position;
    double heading{0.0};  // rad, [-pi, pi)
    Vec3 velocity;        // m/s
};

struct Waypoint {
    double time{0.0};
    Pose pose;
};

struct Trajectory {
    std::vector<Waypoint> waypoints;

    double start_time() const { return waypoints.front().time; }
    double end_time() const { return waypoints.back().time; }

    /// Checks ordering and count invariants; normalizes headings.
    void validate();
};

inline void Scene::finalize() {
    bounds = Aabb{};
    for (std::size_t i = 0; i < triangles.size(); ++i) {
        const auto& tri = triangles[i];
        for (const auto& v : tri.vertices) {
            if (!is_finite(v)) {
                throw ValidationError("triangle " + std::to_string(i) + " has a non-finite vertex");
            }
            bounds.expand(v);
        }
        if (!(tri.area() > 0.0)) {
            throw ValidationError("triangle " + std::to_string(i) + " is degenerate (zero area)");
        }
        if (tri.material >= materials.size()) {
            throw ValidationError("triangle " + std::to_string(i) + " references unknown material " +
                                  std::to_string(tri.material));
        }
    }
    std::set<int> ids;
    for (const auto& r : reflectors) {
        if (!is_finite(r.position)) {
            throw ValidationError("reflector " + std::to_string(r.id) + " position is not finite");
        }
        if (!ids.insert(r.id).second) {
            throw ValidationError("duplicate reflector id " + std::to_string(r.id));
        }
        if (!bounds.contains(r.position)) {
            throw ValidationError("reflector " + std::to_string(r.id) + " lies outside scene bounds");
        }
    }
}

inline void Trajectory::validate() {
    if (waypoints.size() < 2) throw ValidationError("trajectory needs at least 2 waypoints");
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        auto& w = waypoints[i];
        if (!std::isfinite(w.time) || !is_finite(w.pose.position) || !std::isfinite(w.pose.heading)) {
            throw ValidationError("waypoint " + std::to_string(i) + " is not finite");
        }
        w.pose.heading = wrap_angle(w.pose.heading);
        if (i > 0 && !(w.time > waypoints[i - 1].time)) {
            throw ValidationError("waypoint times must be strictly increasing (index " +
                                  std::to_string(i) + ")");
        }
    }
}

// ---------------------------------------------------------------------------
// Intersection queries

namespace detail {

/// Division-free segment/triangle test. The segment is origin + s*dir for
/// s in [0, 1]; a hit requires s*|dir| inside [tol, |dir| - tol]. Edges and
/// vertices count as hits; segments parallel to the plane never hit.
/// Returns the parameter s on hit.
inline std::optional<double> segment_triangle(const Vec3& origin, const Vec3& dir,
                                              const Triangle& tri, double tol) {
    const Vec3 e1 = tri.edge1();
    const Vec3 e2 = tri.edge2();
    const Vec3 p = cross(dir, e2);
    double det = dot(e1, p);
    if (det == 0.0) return std::nullopt;
    Vec3 s = origin - tri.vertices[0];
    Vec3 q = cross(s, e1);
    double u = dot(s, p);
    double v = dot(dir, q);
    double t = dot(e2, q);
    if (det < 0.0) {
        det = -det;
        u = -u;
        v = -v;
        t = -t;
    }
    if (u < 0.0 || v < 0.0 || u + v > det) return std::nullopt;
    const double length = norm(dir);
    if (t * length < tol * det || t * length > (length - tol) * det) return std::nullopt;
    return t / det;
}

}  // namespace detail

/// True iff the open segment (a, b) crosses no scene triangle.
/// Endpoints are ordered canonically first so the result is symmetric.
inline bool los_visible(const Vec3& a, const Vec3& b, const Scene& scene) {
    const bool swap = std::tie(b.x, b.y, b.z) < std::tie(a.x, a.y, a.z);
    const Vec3& from = swap ? b : a;
    const Vec3& to = swap ? a : b;
    const Vec3 dir = to - from;
    if (!(norm(dir) > 0.0)) throw DomainError("los_visible: degenerate segment");
    for (const auto& tri : scene.triangles) {
        if (detail::segment_triangle(from, dir, tri, kSegmentEndTolerance)) return false;
    }
    return true;
}

struct RayHit {
    double distance{0.0};
    std::size_t triangle{0};
};

/// First triangle hit along origin + t*unit_dir for t in [t_min, t_max].
/// Ties at equal distance resolve to the lowest triangle index.
inline std::optional<RayHit> first_hit(const Scene& scene, const Vec3& origin, const Vec3& unit_dir,
                                       double t_min, double t_max) {
    std::optional<RayHit> best;
    const Vec3 span = unit_dir * t_max;
    for (std::size_t i = 0; i < scene.triangles.size(); ++i) {
        const auto s = detail::segment_triangle(origin, span, scene.triangles[i], 0.0);
        if (!s) continue;
        const double t = *s * t_max;
        if (t < t_min) continue;
        if (!best || t < best->distance) best = RayHit{t, i};
    }
    return best;
}

// ---------------------------------------------------------------------------
// Trajectory

inline Pose trajectory_state(const Trajectory& traj, double t) {
    const auto& w = traj.waypoints;
    if (w.size() < 2) throw DomainError("trajectory_state: trajectory has fewer than 2 waypoints");
    if (!(t >= w.front().time && t <= w.back().time)) {
        throw DomainError("trajectory_state: t = " + std::to_string(t) + " s outside [" +
                          std::to_string(w.front().time) + ", " + std::to_string(w.back().time) +
                          "]");
    }
    // Segment whose start is the last waypoint with time <= t; the final
    // waypoint uses the preceding segment.
    auto it = std::upper_bound(w.begin(), w.end(), t,
                               [](double value, const Waypoint& wp) { return value < wp.time; });
    std::size_t i = static_cast<std::size_t>(std::distance(w.begin(), it)) - 1;
    if (i + 1 >= w.size()) i = w.size() - 2;
    const auto& a = w[i];
    const auto& b = w[i + 1];
    const double dt = b.time - a.time;
    const Vec3 velocity = (b.pose.position - a.pose.position) / dt;

    Pose out;
    out.velocity = velocity;
    if (t == a.time) {
        out.position = a.pose.position;
        out.heading = a.pose.heading;
        return out;
    }
    if (t == b.time) {
        out.position = b.pose.position;
        out.heading = b.pose.heading;
        return out;
    }
    const double s = (t - a.time) / dt;
    out.position = a.pose.position + (b.pose.position - a.pose.position) * s;
    out.heading = wrap_angle(a.pose.heading + s * wrap_angle(b.pose.heading - a.pose.heading));
    return out;
}

// ---------------------------------------------------------------------------
// File loading

/// Reads a mesh file: "v x y z" vertex lines and "f i j k material" faces
/// (1-based vertex indices). Material names are resolved against `materials`.
inline std::vector<Triangle> load_mesh(const std::filesystem::path& path,
                                       const std::map<std::string, std::size_t>& materials) {
    const std::string file = path.string();
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    for (const auto& line : text::read_lines(path)) {
        const auto& key = line.tokens.front();
        if (key == "v") {
            text::expect_arity(line, 4, 4, file);
            vertices.push_back({text::parse_double(line.tokens[1], file, line.number),
                                text::parse_double(line.tokens[2], file, line.number),
                                text::parse_double(line.tokens[3], file, line.number)});
        } else if (key == "f") {
            text::expect_arity(line, 5, 5, file);
            Triangle tri;
            for (std::size_t k = 0; k < 3; ++k) {
                const long long idx = text::parse_int(line.tokens[k + 1], file, line.number);
                if (idx < 1 || static_cast<std::size_t>(idx) > vertices.size()) {
                    throw FormatError(file, line.number,
                                      "vertex index " + std::to_string(idx) + " out of range");
                }
                tri.vertices[k] = vertices[static_cast<std::size_t>(idx - 1)];
            }
            const auto mat = materials.find(line.tokens[4]);
            if (mat == materials.end()) {
                throw ValidationError(file + ":" + std::to_string(line.number) +
                                      ": face references undefined material '" + line.tokens[4] +
                                      "'");
            }
            tri.material = mat->second;
            triangles.push_back(tri);
        } else {
            throw FormatError(file, line.number, "unknown mesh record '" + key + "'");
        }
    }
    return triangles;
}

struct ScenarioFile {
    Scene scene;
    Trajectory trajectory;  // empty when the file declares no waypoints
    std::filesystem::path mesh_path;
};

/// Reads a scenario file (see README for the record list) and the mesh it
/// references. The scene is validated; the trajectory is validated when present.
inline ScenarioFile load_scenario(const std::filesystem::path& path,
                                  const std::optional<std::filesystem::path>& mesh_override = {}) {
    const std::string file = path.string();
    const auto base = path.parent_path();
    ScenarioFile out;
    std::map<std::string, std::size_t> material_ids;
    std::optional<std::filesystem::path> mesh;

    for (const auto& line : text::read_lines(path)) {
        const auto& key = line.tokens.front();
        const auto num = [&](std::size_t i) { return text::parse_double(line.tokens[i], file, line.number); };
        if (key == "mesh") {
            text::expect_arity(line, 2, 2, file);
            mesh = base / line.tokens[1];
        } else if (key == "material") {
            text::expect_arity(line, 4, 4, file);
            Material m{line.tokens[1], num(2), num(3)};
            if (!(m.relative_permittivity >= 1.0) || !(m.conductivity >= 0.0)) {
                throw ValidationError(file + ":" + std::to_string(line.number) +
                                      ": material needs eps_r >= 1 and conductivity >= 0");
            }
            if (material_ids.count(m.name)) {
                throw ValidationError(file + ":" + std::to_string(line.number) +
                                      ": duplicate material '" + m.name + "'");
            }
            material_ids[m.name] = out.scene.materials.size();
            out.scene.materials.push_back(m);
        } else if (key == "reflector") {
            text::expect_arity(line, 7, 8, file);
            Reflector r;
            r.id = static_cast<int>(text::parse_int(line.tokens[1], file, line.number));
            r.position = {num(2), num(3), num(4)};
            const auto& kind = line.tokens[5];
            if (kind == "trihedral") {
                const double edge = num(6);
                if (!(edge > 0.0)) {
                    throw ValidationError(file + ":" + std::to_string(line.number) +
                                          ": trihedral edge length must be positive");
                }
                r.rcs_source = AnalyticRcs{edge};
            } else if (kind == "table") {
                r.rcs_source = TableRcs{base / line.tokens[6]};
            } else {
                throw FormatError(file, line.number, "unknown RCS source '" + kind + "'");
            }
            if (line.tokens.size() == 8) r.yaw = deg_to_rad(num(7));
            out.scene.reflectors.push_back(std::move(r));
        } else if (key == "waypoint") {
            text::expect_arity(line, 6, 6, file);
            Waypoint w;
            w.time = num(1);
            w.pose.position = {num(2), num(3), num(4)};
            w.pose.heading = num(5);
            out.trajectory.waypoints.push_back(w);
        } else {
            throw FormatError(file, line.number, "unknown scenario record '" + key + "'");
        }
    }
    if (mesh_override) mesh = *mesh_override;
    if (mesh) {
        out.mesh_path = *mesh;
        out.scene.triangles = load_mesh(*mesh, material_ids);
    }
    out.scene.finalize();
    if (!out.trajectory.waypoints.empty()) out.trajectory.validate();
    return out;
}

inline Scene load_scene(const std::filesystem::path& scenario_path) {
    return load_scenario(scenario_path).scene;
}

}  // namespace radarsim
