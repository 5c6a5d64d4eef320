#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "radarsim/errors.hpp"

namespace radarsim::text {

/// A non-blank, comment-stripped input line split on whitespace.
struct Line {
    std::size_t number{0};
    std::vector<std::string> tokens;
};

/// Reads `path` and returns its meaningful lines. '#' starts a comment.
inline std::vector<Line> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string(), 0, "cannot open file");
    std::vector<Line> lines;
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ss(raw);
        Line line{number, {}};
        for (std::string tok; ss >> tok;) line.tokens.push_back(std::move(tok));
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

inline double parse_double(std::string_view tok, const std::string& file, std::size_t line) {
    double value = 0.0;
    const auto* end = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(tok.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw FormatError(file, line, "expected a number, got '" + std::string(tok) + "'");
    }
    return value;
}

inline long long parse_int(std::string_view tok, const std::string& file, std::size_t line) {
    long long value = 0;
    const auto* end = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(tok.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw FormatError(file, line, "expected an integer, got '" + std::string(tok) + "'");
    }
    return value;
}

inline void expect_arity(const Line& line, std::size_t min_tokens, std::size_t max_tokens,
                         const std::string& file) {
    if (line.tokens.size() < min_tokens || line.tokens.size() > max_tokens) {
        throw FormatError(file, line.number,
                          "'" + line.tokens.front() + "' expects " +
                              std::to_string(min_tokens - 1) +
                              (max_tokens != min_tokens ? "+" : "") + " arguments");
    }
}

/// Uniform axis declared either as "start stop step" or as an explicit list
/// of values (used by pattern and RCS tables).
struct AxisSpec {
    double start{0.0};
    double step{1.0};
    std::size_t count{0};

    double value(std::size_t i) const { return start + step * static_cast<double>(i); }
    double stop() const { return value(count - 1); }
};

inline AxisSpec parse_axis(const Line& line, bool explicit_values, const std::string& file) {
    std::vector<double> v;
    for (std::size_t i = 1; i < line.tokens.size(); ++i) {
        v.push_back(parse_double(line.tokens[i], file, line.number));
    }
    if (!explicit_values) {
        if (v.size() != 3) throw FormatError(file, line.number, "axis expects: start stop step");
        const double start = v[0], stop = v[1], step = v[2];
        if (!(step > 0.0) || stop < start) {
            throw ValidationError(file + ":" + std::to_string(line.number) +
                                  ": axis step must be positive and stop >= start");
        }
        const double span = (stop - start) / step;
        const double rounded = std::round(span);
        if (std::abs(span - rounded) > 1e-9 * std::max(1.0, span)) {
            throw ValidationError(file + ":" + std::to_string(line.number) +
                                  ": axis span is not a whole number of steps (non-uniform grid)");
        }
        return {start, step, static_cast<std::size_t>(rounded) + 1};
    }
    if (v.size() < 2) throw FormatError(file, line.number, "axis needs at least two values");
    const double step = v[1] - v[0];
    if (!(step > 0.0)) {
        throw ValidationError(file + ":" + std::to_string(line.number) +
                              ": axis values must increase");
    }
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (std::abs((v[i] - v[i - 1]) - step) > 1e-9 * std::max(1.0, std::abs(step))) {
            throw ValidationError(file + ":" + std::to_string(line.number) +
                                  ": non-uniform grid step at value " + std::to_string(i));
        }
    }
    return {v[0], step, v.size()};
}

}  // namespace radarsim::text
