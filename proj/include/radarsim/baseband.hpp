#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "radarsim/channel.hpp"
#include "radarsim/constants.hpp"
#include "radarsim/errors.hpp"
#include "radarsim/matrix.hpp"
#include "radarsim/parallel.hpp"
#include "radarsim/rng.hpp"

namespace radarsim {

/// Chirp-sequence radar parameters. Times in s, frequencies in Hz.
struct RadarConfig {
    double f0{59e9};               // chirp start frequency
    double bandwidth{2e9};         // B
    double chirp_duration{100e-6}; // T_chirp
    double sample_interval{100e-6 / 256};  // T_m
    double chirp_interval{200e-6}; // T_n
    std::size_t samples{256};      // M
    std::size_t chirps{64};        // N
    double tx_power{1e-3};         // P_T, W
    double noise_figure_db{10.0};  // F
    double impedance{50.0};        // R, ohm
    std::uint64_t seed{1};
    bool noise_enabled{true};
    std::size_t workers{1};

    double wavelength() const { return radarsim::wavelength(f0); }

    /// Meters per range bin: T_chirp c / (2 B M T_m).
    double range_bin_size() const {
        return chirp_duration * kSpeedOfLight /
               (2.0 * bandwidth * static_cast<double>(samples) * sample_interval);
    }

    /// m/s per Doppler bin: c / (2 f0 N T_n).
    double velocity_bin_size() const {
        return kSpeedOfLight / (2.0 * f0 * static_cast<double>(chirps) * chirp_interval);
    }

    /// All invariant violations, empty when the configuration is usable.
    std::vector<std::string> diagnostics() const {
        std::vector<std::string> out;
        if (!(f0 > 0.0)) out.emplace_back("radar.f0 must be positive");
        if (!(bandwidth > 0.0)) out.emplace_back("radar.bandwidth must be positive");
        if (f0 > 0.0 && !(bandwidth / f0 < 0.2)) {
            out.emplace_back("radar.bandwidth / radar.f0 = " + std::to_string(bandwidth / f0) +
                             " violates the narrowband assumption (must be < 0.2)");
        }
        if (samples < 2 || samples % 2 != 0) out.emplace_back("radar.samples must be even and >= 2");
        if (chirps < 1) out.emplace_back("radar.chirps must be >= 1");
        if (!(sample_interval > 0.0)) out.emplace_back("radar.sample_interval must be positive");
        if (!(static_cast<double>(samples) * sample_interval <= chirp_duration * (1.0 + 1e-12))) {
            out.emplace_back("radar: samples * sample_interval exceeds chirp_duration");
        }
        if (!(chirp_duration <= chirp_interval)) {
            out.emplace_back("radar.chirp_duration exceeds radar.chirp_interval");
        }
        if (!(tx_power > 0.0)) out.emplace_back("radar.tx_power must be positive");
        if (!(impedance > 0.0)) out.emplace_back("radar.impedance must be positive");
        if (!std::isfinite(noise_figure_db)) out.emplace_back("radar.noise_figure must be finite");
        return out;
    }

    void check() const {
        if (const auto d = diagnostics(); !d.empty()) throw ValidationError(d.front());
    }
};

/// Default preset for one of the supported bandwidths (0.5, 1, 2, 4 GHz):
/// f0 = 59 GHz, M = 256, N = 64, T_chirp = 100 us, T_m = T_chirp / M,
/// T_n = 2 T_chirp, P_T = 1 mW, F = 10 dB, R = 50 ohm.
inline RadarConfig radar_preset(double bandwidth) {
    RadarConfig cfg;
    cfg.bandwidth = bandwidth;
    cfg.sample_interval = cfg.chirp_duration / static_cast<double>(cfg.samples);
    cfg.chirp_interval = 2.0 * cfg.chirp_duration;
    return cfg;
}

/// Real-valued receive matrix X (volts); samples(m, n) with m = fast time.
struct BasebandFrame {
    Matrix<double> samples;
    RadarConfig config;
    double timestamp{0.0};
};

/// Thermal noise voltage std: sqrt(k_B T0 F B_R R) with B_R = 1 / (2 T_m).
inline double noise_sigma(const RadarConfig& cfg) {
    const double noise_power = kBoltzmann * kRoomTemperature *
                               std::pow(10.0, cfg.noise_figure_db / 10.0) /
                               (2.0 * cfg.sample_interval);
    return std::sqrt(noise_power * cfg.impedance);
}

/// Voltage amplitude sqrt(2 P_T 10^(-L/10) R).
inline double amplitude_from_loss(double loss_db, const RadarConfig& cfg) {
    return std::sqrt(2.0 * cfg.tx_power * std::pow(10.0, -loss_db / 10.0) * cfg.impedance);
}

/// Superposition of point-target reflections plus white Gaussian noise.
/// Column n draws its noise from Philox stream (kNoise, frame_index, n),
/// fast-time order, so the frame is identical for any worker count.
inline BasebandFrame synthesize_frame(const std::vector<PathContribution>& contribs,
                                      const RadarConfig& cfg, std::uint64_t frame_index = 0,
                                      double timestamp = 0.0) {
    cfg.check();
    const std::size_t M = cfg.samples, N = cfg.chirps;
    struct Tone {
        double amplitude;
        double fast_rate;  // cycles per fast-time sample
        double slow_rate;  // cycles per chirp
        double phase;      // cycles, reduced to [0, 1)
    };
    std::vector<Tone> tones;
    tones.reserve(contribs.size());
    for (const auto& c : contribs) {
        const double beat = 2.0 * cfg.bandwidth * c.range / (cfg.chirp_duration * kSpeedOfLight);
        const double doppler = 2.0 * cfg.f0 * c.velocity / kSpeedOfLight;
        tones.push_back({amplitude_from_loss(c.loss_db, cfg),
                         (beat + doppler) * cfg.sample_interval, doppler * cfg.chirp_interval,
                         c.phase_cycles - std::floor(c.phase_cycles)});
    }
    const double sigma = cfg.noise_enabled ? noise_sigma(cfg) : 0.0;

    BasebandFrame frame{Matrix<double>(M, N), cfg, timestamp};
    parallel_for(N, cfg.workers, [&](std::size_t n) {
        Philox rng(cfg.seed, stream_id(StreamDomain::kNoise, frame_index, n));
        for (std::size_t m = 0; m < M; ++m) {
            double x = 0.0;
            for (const auto& t : tones) {
                const double cycles = t.fast_rate * static_cast<double>(m) +
                                      t.slow_rate * static_cast<double>(n) + t.phase;
                x += t.amplitude * std::cos(-2.0 * kPi * cycles);
            }
            if (sigma > 0.0) x += sigma * rng.normal();
            frame.samples(m, n) = x;
        }
    });
    return frame;
}

}  // namespace radarsim
