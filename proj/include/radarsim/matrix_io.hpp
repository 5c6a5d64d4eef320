#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>

#include "radarsim/errors.hpp"
#include "radarsim/matrix.hpp"

namespace radarsim {

enum class MatrixKind : std::uint32_t { kFrame = 0, kPowerMap = 1 };

/// Metadata stored in front of every exported matrix.
///
/// Binary layout (little-endian):
///   char[4] "RSMX", u32 version (1), u32 kind, u32 reserved,
///   u64 rows, u64 cols, u64 M, u64 N,
///   f64 T_m, f64 T_n, f64 f0, f64 B, f64 T_chirp, f64 timestamp,
///   then rows*cols f64 values, row-major.
struct MatrixHeader {
    MatrixKind kind{MatrixKind::kFrame};
    std::uint64_t samples{0};  // M
    std::uint64_t chirps{0};   // N
    double sample_interval{0.0};
    double chirp_interval{0.0};
    double f0{0.0};
    double bandwidth{0.0};
    double chirp_duration{0.0};
    double timestamp{0.0};
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::ostream& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_uint(std::istream& in, int bytes, const std::string& file) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) throw FormatError(file, 0, "truncated matrix file");
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
}
inline double get_f64(std::istream& in, const std::string& file) {
    return std::bit_cast<double>(get_uint(in, 8, file));
}

}  // namespace detail

inline void write_matrix(const std::filesystem::path& path, const Matrix<double>& m,
                         const MatrixHeader& h) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write("RSMX", 4);
    detail::put_u32(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(h.kind));
    detail::put_u32(out, 0);
    detail::put_u64(out, m.rows());
    detail::put_u64(out, m.cols());
    detail::put_u64(out, h.samples);
    detail::put_u64(out, h.chirps);
    for (double v : {h.sample_interval, h.chirp_interval, h.f0, h.bandwidth, h.chirp_duration,
                     h.timestamp}) {
        detail::put_f64(out, v);
    }
    for (double v : m.data()) detail::put_f64(out, v);
}

inline Matrix<double> read_matrix(const std::filesystem::path& path, MatrixHeader& h) {
    const std::string file = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(file, 0, "cannot open file");
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (!in || std::memcmp(magic.data(), "RSMX", 4) != 0) {
        throw FormatError(file, 0, "not a radarsim matrix file");
    }
    if (detail::get_uint(in, 4, file) != 1) throw FormatError(file, 0, "unsupported version");
    h.kind = static_cast<MatrixKind>(detail::get_uint(in, 4, file));
    detail::get_uint(in, 4, file);
    const auto rows = detail::get_uint(in, 8, file);
    const auto cols = detail::get_uint(in, 8, file);
    h.samples = detail::get_uint(in, 8, file);
    h.chirps = detail::get_uint(in, 8, file);
    h.sample_interval = detail::get_f64(in, file);
    h.chirp_interval = detail::get_f64(in, file);
    h.f0 = detail::get_f64(in, file);
    h.bandwidth = detail::get_f64(in, file);
    h.chirp_duration = detail::get_f64(in, file);
    h.timestamp = detail::get_f64(in, file);
    if (rows > (1u << 24) || cols > (1u << 24)) throw FormatError(file, 0, "implausible matrix size");
    Matrix<double> m(rows, cols);
    for (double& v : m.data()) v = detail::get_f64(in, file);
    return m;
}

/// Plain CSV, one matrix row per line, full double precision.
inline void write_matrix_csv(const std::filesystem::path& path, const Matrix<double>& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << std::setprecision(17);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
        out << '\n';
    }
}

}  // namespace radarsim
