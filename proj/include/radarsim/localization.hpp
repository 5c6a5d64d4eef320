#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "radarsim/constants.hpp"
#include "radarsim/dsp.hpp"
#include "radarsim/errors.hpp"
#include "radarsim/rng.hpp"
#include "radarsim/scene.hpp"
#include "radarsim/vec3.hpp"

namespace radarsim::pf {

/// Planar robot pose.
struct Pose2 {
    double x{0.0};
    double y{0.0};
    double heading{0.0};
};

struct Particle {
    Pose2 pose;
    double weight{0.0};
};

using ParticleSet = std::vector<Particle>;

struct LandmarkMap {
    std::vector<Vec3> positions;

    static LandmarkMap from_scene(const Scene& scene) {
        LandmarkMap m;
        for (const auto& r : scene.reflectors) m.positions.push_back(r.position);
        if (m.positions.empty()) throw ValidationError("landmark map is empty");
        return m;
    }
};

struct Odometry {
    double forward{0.0};   // m travelled along the previous heading
    double dheading{0.0};  // rad
};

/// Per-step Gaussian process noise.
struct MotionNoise {
    double sigma_x{0.0};        // m
    double sigma_y{0.0};        // m
    double sigma_heading{0.0};  // rad
};

struct MeasurementModel {
    double sigma_range{0.1};     // m
    double sigma_velocity{0.1};  // m/s
    double clutter_floor{1e-3};  // per-feature likelihood floor
    double radar_height{0.5};    // m
    /// Robot speed along its heading (m/s), used for predicted Doppler.
    double speed{0.0};
    /// When set, landmarks hidden from a particle are not candidates.
    const Scene* occluders{nullptr};
};

/// Particles drawn around `center` with the given spreads; equal weights.
inline ParticleSet init_particles(std::size_t count, const Pose2& center, double sigma_xy,
                                  double sigma_heading, Philox& rng) {
    if (count == 0) throw DomainError("init_particles: count must be positive");
    ParticleSet ps(count);
    for (auto& p : ps) {
        p.pose.x = center.x + sigma_xy * rng.normal();
        p.pose.y = center.y + sigma_xy * rng.normal();
        p.pose.heading = wrap_angle(center.heading + sigma_heading * rng.normal());
        p.weight = 1.0 / static_cast<double>(count);
    }
    return ps;
}

/// Moves each particle by the odometry (forward along its own heading, then
/// turn) plus zero-mean Gaussian noise. Weights are untouched.
inline void predict(ParticleSet& particles, const Odometry& odom, const MotionNoise& noise,
                    Philox& rng) {
    if (particles.empty()) throw DomainError("predict: empty particle set");
    for (auto& p : particles) {
        const double nx = noise.sigma_x > 0.0 ? noise.sigma_x * rng.normal() : 0.0;
        const double ny = noise.sigma_y > 0.0 ? noise.sigma_y * rng.normal() : 0.0;
        const double nh = noise.sigma_heading > 0.0 ? noise.sigma_heading * rng.normal() : 0.0;
        p.pose.x += odom.forward * std::cos(p.pose.heading) + nx;
        p.pose.y += odom.forward * std::sin(p.pose.heading) + ny;
        p.pose.heading = wrap_angle(p.pose.heading + odom.dheading + nh);
    }
}

/// Rescales weights to sum 1. Returns false (and resets to uniform) when
/// the total is zero or not finite.
inline bool normalize_weights(ParticleSet& particles) {
    double sum = 0.0;
    for (const auto& p : particles) sum += p.weight;
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        for (auto& p : particles) p.weight = 1.0 / static_cast<double>(particles.size());
        return false;
    }
    for (auto& p : particles) p.weight /= sum;
    return true;
}

/// Likelihood of one feature for one particle: the best landmark match
/// exp(-dr^2 / 2 sr^2 - dv^2 / 2 sv^2), never below the clutter floor.
inline double feature_likelihood(const Pose2& pose, const Feature& f, const LandmarkMap& map,
                                 const MeasurementModel& model) {
    const Vec3 radar{pose.x, pose.y, model.radar_height};
    const Vec3 velocity{model.speed * std::cos(pose.heading), model.speed * std::sin(pose.heading),
                        0.0};
    double best = model.clutter_floor;
    for (const auto& lm : map.positions) {
        const Vec3 offset = lm - radar;
        const double range = norm(offset);
        if (!(range > 0.0)) continue;
        const double dr = (f.range - range) / model.sigma_range;
        const double dv = (f.velocity - dot(velocity, offset / range)) / model.sigma_velocity;
        const double g = std::exp(-0.5 * (dr * dr + dv * dv));
        if (g <= best) continue;
        if (model.occluders && !los_visible(radar, lm, *model.occluders)) continue;
        best = g;
    }
    return best;
}

struct UpdateResult {
    bool diverged{false};
};

/// Multiplies each weight by the product of its feature likelihoods and
/// renormalizes. Computed in the log domain relative to the best particle.
inline UpdateResult update(ParticleSet& particles, std::span<const Feature> features,
                           const LandmarkMap& map, const MeasurementModel& model) {
    if (particles.empty()) throw DomainError("update: empty particle set");
    UpdateResult result;
    if (!features.empty()) {
        std::vector<double> loglik(particles.size(), 0.0);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < particles.size(); ++i) {
            for (const auto& f : features) {
                loglik[i] += std::log(feature_likelihood(particles[i].pose, f, map, model));
            }
            if (particles[i].weight > 0.0) best = std::max(best, loglik[i]);
        }
        for (std::size_t i = 0; i < particles.size(); ++i) {
            particles[i].weight *= std::isfinite(best) ? std::exp(loglik[i] - best) : 0.0;
        }
    }
    result.diverged = !normalize_weights(particles);
    return result;
}

inline double effective_sample_size(const ParticleSet& particles) {
    double s = 0.0;
    for (const auto& p : particles) s += p.weight * p.weight;
    return s > 0.0 ? 1.0 / s : 0.0;
}

/// Source indices chosen by systematic resampling with offset u0 in [0, 1).
/// Pointer i takes the first particle whose cumulative weight reaches (u0 + i) / n.
inline std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u0) {
    const std::size_t n = weights.size();
    std::vector<std::size_t> idx(n);
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (weights[j] > 0.0) last_positive = j;
    }
    double cumulative = weights.empty() ? 0.0 : weights[0];
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pointer = (u0 + static_cast<double>(i)) / static_cast<double>(n);
        while (pointer > cumulative && j < last_positive) cumulative += weights[++j];
        idx[i] = j;
    }
    return idx;
}

/// Systematic resampling, only when ESS < n / 2. Returns whether it resampled.
inline bool resample(ParticleSet& particles, Philox& rng) {
    const std::size_t n = particles.size();
    if (n == 0 || effective_sample_size(particles) >= static_cast<double>(n) / 2.0) return false;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = particles[i].weight;
    const auto idx = systematic_indices(w, rng.uniform());
    ParticleSet out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].pose = particles[idx[i]].pose;
        out[i].weight = 1.0 / static_cast<double>(n);
    }
    particles = std::move(out);
    return true;
}

/// Weighted mean position and circular weighted mean heading.
inline Pose2 estimate(const ParticleSet& particles) {
    if (particles.empty()) throw DomainError("estimate: empty particle set");
    double sw = 0.0, x = 0.0, y = 0.0, s = 0.0, c = 0.0;
    for (const auto& p : particles) {
        sw += p.weight;
        x += p.weight * p.pose.x;
        y += p.weight * p.pose.y;
        s += p.weight * std::sin(p.pose.heading);
        c += p.weight * std::cos(p.pose.heading);
    }
    return {x / sw, y / sw, std::atan2(s, c)};
}

/// Mean 2D Euclidean position error over aligned trajectories.
inline double rmse(std::span<const Pose2> estimated, std::span<const Pose2> truth) {
    if (estimated.size() != truth.size()) {
        throw DomainError("rmse: trajectories have " + std::to_string(estimated.size()) + " and " +
                          std::to_string(truth.size()) + " poses");
    }
    if (estimated.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < estimated.size(); ++i) {
        sum += std::hypot(estimated[i].x - truth[i].x, estimated[i].y - truth[i].y);
    }
    return sum / static_cast<double>(estimated.size());
}

}  // namespace radarsim::pf
