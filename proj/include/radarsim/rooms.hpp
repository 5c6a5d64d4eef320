#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <vector>

#include "radarsim/scene.hpp"

namespace radarsim::rooms {

namespace detail {

inline void add_quad(std::vector<Triangle>& out, const Vec3& a, const Vec3& b, const Vec3& c,
                     const Vec3& d, std::size_t material) {
    out.push_back({{a, b, c}, material});
    out.push_back({{a, c, d}, material});
}

// Vertical wall quad along the floor edge p -> q.
inline void add_wall(std::vector<Triangle>& out, double px, double py, double qx, double qy,
                     double height, std::size_t material) {
    add_quad(out, {px, py, 0.0}, {qx, qy, 0.0}, {qx, qy, height}, {px, py, height}, material);
}

}  // namespace detail

/// Closed box [0,sx] x [0,sy] x [0,sz]; 12 triangles, faces ordered
/// floor, ceiling, y=0, x=sx, y=sy, x=0.
inline std::vector<Triangle> box_room(const Vec3& size, std::size_t material = 0) {
    std::vector<Triangle> t;
    const double sx = size.x, sy = size.y, sz = size.z;
    detail::add_quad(t, {0, 0, 0}, {sx, 0, 0}, {sx, sy, 0}, {0, sy, 0}, material);
    detail::add_quad(t, {0, 0, sz}, {0, sy, sz}, {sx, sy, sz}, {sx, 0, sz}, material);
    detail::add_wall(t, 0, 0, sx, 0, sz, material);
    detail::add_wall(t, sx, 0, sx, sy, sz, material);
    detail::add_wall(t, sx, sy, 0, sy, sz, material);
    detail::add_wall(t, 0, sy, 0, 0, sz, material);
    return t;
}

/// L-shaped room: the square [0,outer]^2 minus the quadrant [notch,outer]^2,
/// height `height`. The inner corner sits at (notch, notch).
inline std::vector<Triangle> l_room(double outer, double notch, double height,
                                    std::size_t material = 0) {
    std::vector<Triangle> t;
    // Floor and ceiling as two rectangles each: [0,outer]x[0,notch] and [0,notch]x[notch,outer].
    for (const double z : {0.0, height}) {
        detail::add_quad(t, {0, 0, z}, {outer, 0, z}, {outer, notch, z}, {0, notch, z}, material);
        detail::add_quad(t, {0, notch, z}, {notch, notch, z}, {notch, outer, z}, {0, outer, z},
                         material);
    }
    detail::add_wall(t, 0, 0, outer, 0, height, material);
    detail::add_wall(t, outer, 0, outer, notch, height, material);
    detail::add_wall(t, outer, notch, notch, notch, height, material);
    detail::add_wall(t, notch, notch, notch, outer, height, material);
    detail::add_wall(t, notch, outer, 0, outer, height, material);
    detail::add_wall(t, 0, outer, 0, 0, height, material);
    return t;
}

/// Writes triangles in the mesh format read by load_mesh (one vertex line
/// per triangle corner, no vertex sharing).
inline void write_mesh(const std::filesystem::path& path, const std::vector<Triangle>& triangles,
                       const std::vector<Material>& materials) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << std::setprecision(17);
    out << "# radarsim mesh: v x y z (m); f i j k material (1-based)\n";
    for (const auto& tri : triangles) {
        for (const auto& v : tri.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    }
    for (std::size_t i = 0; i < triangles.size(); ++i) {
        out << "f " << 3 * i + 1 << ' ' << 3 * i + 2 << ' ' << 3 * i + 3 << ' '
            << materials.at(triangles[i].material).name << '\n';
    }
}

}  // namespace radarsim::rooms
