#pragma once

#include <yaml-cpp/yaml.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "radarsim/antenna.hpp"
#include "radarsim/baseband.hpp"
#include "radarsim/channel.hpp"
#include "radarsim/dsp.hpp"
#include "radarsim/errors.hpp"
#include "radarsim/localization.hpp"
#include "radarsim/matrix_io.hpp"
#include "radarsim/reflector.hpp"
#include "radarsim/rng.hpp"
#include "radarsim/scene.hpp"
#include "radarsim/units.hpp"
#include "radarsim/version.hpp"

namespace radarsim {

namespace fs = std::filesystem;

struct ChannelOptions {
    bool enabled{true};
    int subdivision{4};
    int max_order{2};
    double rx_radius_scale{1.0};
};

struct DspOptions {
    Window range_window{Window::kHamming};
    Window doppler_window{Window::kHamming};
    bool blur{true};
    double blur_sigma{1.0};          // bins
    double detection_margin_db{15.0};
    std::size_t max_features{16};
};

struct PfOptions {
    bool enabled{true};
    std::size_t particles{2000};
    double sigma_range{0.1};
    double sigma_velocity{0.1};
    double clutter_floor{1e-3};
    double init_sigma_xy{0.2};
    double init_sigma_heading{0.05};
    pf::MotionNoise motion{0.02, 0.02, 0.01};
    double odometry_sigma_forward{0.005};
    double odometry_sigma_heading{0.005};
    bool use_occlusion{true};
};

struct ExportOptions {
    bool frames{false};
    bool maps{true};
    bool csv{false};
    bool paths{false};
};

/// Everything needed to run one simulation. Paths are absolute or relative
/// to the working directory (relative entries in a config file are resolved
/// against the file's directory on load).
struct ScenarioConfig {
    fs::path scenario;
    std::optional<fs::path> scene;  // mesh override
    fs::path antenna_pattern;
    std::optional<fs::path> rcs_table;  // replaces every table-mode reflector's table
    RadarConfig radar;
    int receiver{1};  // must match the pattern file
    double start_time{0.0};
    double frame_period{0.1};
    std::size_t frames{1};
    ChannelOptions channel;
    DspOptions dsp;
    PfOptions pf;
    ExportOptions exports;
    fs::path output_dir{"radarsim_out"};
    std::uint64_t seed{1};
    std::size_t workers{1};
    std::string source_text;  // verbatim config file, echoed to the manifest
};

// ---------------------------------------------------------------------------
// Config loading

namespace detail {

inline double quantity(const YAML::Node& node, const char* key, Dimension dim, double fallback) {
    if (!node || !node[key]) return fallback;
    try {
        return parse_quantity(node[key].as<std::string>(), dim);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(key) + ": " + e.what());
    }
}

template <typename T>
T plain(const YAML::Node& node, const char* key, T fallback) {
    if (!node || !node[key]) return fallback;
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ValidationError(std::string(key) + ": cannot parse '" + node[key].as<std::string>() + "'");
    }
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Reads a YAML run configuration. Physical quantities must carry units,
/// e.g. "59 GHz", "100 us", "0.1 m". Throws ValidationError on bad syntax or units.
inline ScenarioConfig load_config(const fs::path& path) {
    ScenarioConfig cfg;
    {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open config file " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        cfg.source_text = ss.str();
    }
    YAML::Node root;
    try {
        root = YAML::Load(cfg.source_text);
    } catch (const YAML::Exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    const fs::path base = path.parent_path();
    using detail::plain;
    using detail::quantity;

    if (!root["scenario"]) throw ValidationError("config: 'scenario' is required");
    if (!root["antenna_pattern"]) throw ValidationError("config: 'antenna_pattern' is required");
    cfg.scenario = detail::resolve(base, root["scenario"].as<std::string>());
    cfg.antenna_pattern = detail::resolve(base, root["antenna_pattern"].as<std::string>());
    if (root["scene"]) cfg.scene = detail::resolve(base, root["scene"].as<std::string>());
    if (root["rcs_table"]) cfg.rcs_table = detail::resolve(base, root["rcs_table"].as<std::string>());
    if (root["output_dir"]) cfg.output_dir = detail::resolve(base, root["output_dir"].as<std::string>());
    cfg.seed = plain<std::uint64_t>(root, "seed", cfg.seed);
    cfg.frames = plain<std::size_t>(root, "frames", cfg.frames);
    cfg.workers = plain<std::size_t>(root, "workers", cfg.workers);
    cfg.receiver = plain<int>(root, "receiver", cfg.receiver);
    cfg.frame_period = quantity(root, "frame_period", Dimension::kTime, cfg.frame_period);
    cfg.start_time = quantity(root, "start_time", Dimension::kTime, cfg.start_time);

    const auto radar = root["radar"];
    auto& r = cfg.radar;
    r.f0 = quantity(radar, "f0", Dimension::kFrequency, r.f0);
    r.bandwidth = quantity(radar, "bandwidth", Dimension::kFrequency, r.bandwidth);
    r.chirp_duration = quantity(radar, "chirp_duration", Dimension::kTime, r.chirp_duration);
    r.samples = plain<std::size_t>(radar, "samples", r.samples);
    r.chirps = plain<std::size_t>(radar, "chirps", r.chirps);
    r.sample_interval = quantity(radar, "sample_interval", Dimension::kTime,
                                 r.chirp_duration / static_cast<double>(r.samples));
    r.chirp_interval = quantity(radar, "chirp_interval", Dimension::kTime, 2.0 * r.chirp_duration);
    r.tx_power = quantity(radar, "tx_power", Dimension::kPower, r.tx_power);
    r.noise_figure_db = quantity(radar, "noise_figure", Dimension::kDecibel, r.noise_figure_db);
    r.impedance = quantity(radar, "impedance", Dimension::kResistance, r.impedance);
    r.noise_enabled = plain<bool>(radar, "noise", r.noise_enabled);

    const auto ch = root["channel"];
    cfg.channel.enabled = plain<bool>(ch, "enabled", cfg.channel.enabled);
    cfg.channel.subdivision = plain<int>(ch, "subdivision", cfg.channel.subdivision);
    cfg.channel.max_order = plain<int>(ch, "max_order", cfg.channel.max_order);
    cfg.channel.rx_radius_scale = plain<double>(ch, "rx_radius_scale", cfg.channel.rx_radius_scale);

    const auto dsp = root["dsp"];
    if (dsp && dsp["range_window"]) cfg.dsp.range_window = parse_window(dsp["range_window"].as<std::string>());
    if (dsp && dsp["doppler_window"]) cfg.dsp.doppler_window = parse_window(dsp["doppler_window"].as<std::string>());
    cfg.dsp.blur = plain<bool>(dsp, "blur", cfg.dsp.blur);
    cfg.dsp.blur_sigma = plain<double>(dsp, "blur_sigma_bins", cfg.dsp.blur_sigma);
    cfg.dsp.detection_margin_db = quantity(dsp, "detection_margin", Dimension::kDecibel,
                                           cfg.dsp.detection_margin_db);
    cfg.dsp.max_features = plain<std::size_t>(dsp, "max_features", cfg.dsp.max_features);

    const auto pfn = root["pf"];
    auto& p = cfg.pf;
    p.enabled = plain<bool>(pfn, "enabled", p.enabled);
    p.particles = plain<std::size_t>(pfn, "particles", p.particles);
    p.sigma_range = quantity(pfn, "sigma_range", Dimension::kLength, p.sigma_range);
    p.sigma_velocity = quantity(pfn, "sigma_velocity", Dimension::kVelocity, p.sigma_velocity);
    p.clutter_floor = plain<double>(pfn, "clutter_floor", p.clutter_floor);
    p.init_sigma_xy = quantity(pfn, "init_sigma_xy", Dimension::kLength, p.init_sigma_xy);
    p.init_sigma_heading = quantity(pfn, "init_sigma_heading", Dimension::kAngle, p.init_sigma_heading);
    p.motion.sigma_x = quantity(pfn, "motion_sigma_xy", Dimension::kLength, p.motion.sigma_x);
    p.motion.sigma_y = p.motion.sigma_x;
    p.motion.sigma_heading = quantity(pfn, "motion_sigma_heading", Dimension::kAngle, p.motion.sigma_heading);
    p.odometry_sigma_forward = quantity(pfn, "odometry_sigma_forward", Dimension::kLength, p.odometry_sigma_forward);
    p.odometry_sigma_heading = quantity(pfn, "odometry_sigma_heading", Dimension::kAngle, p.odometry_sigma_heading);
    p.use_occlusion = plain<bool>(pfn, "use_occlusion", p.use_occlusion);

    const auto ex = root["export"];
    cfg.exports.frames = plain<bool>(ex, "frames", cfg.exports.frames);
    cfg.exports.maps = plain<bool>(ex, "maps", cfg.exports.maps);
    cfg.exports.csv = plain<bool>(ex, "csv", cfg.exports.csv);
    cfg.exports.paths = plain<bool>(ex, "paths", cfg.exports.paths);
    return cfg;
}

/// All reasons the configuration cannot run; empty iff runnable.
inline std::vector<std::string> validate_config(const ScenarioConfig& cfg) {
    std::vector<std::string> out;
    bool scenario_ok = true;
    const auto need_file = [&](const fs::path& p, const char* what) {
        if (!fs::is_regular_file(p)) {
            out.push_back(std::string(what) + " not found: " + p.string());
            return false;
        }
        return true;
    };
    scenario_ok = need_file(cfg.scenario, "scenario file");
    if (cfg.scene) scenario_ok = need_file(*cfg.scene, "scene mesh") && scenario_ok;
    const bool pattern_ok = need_file(cfg.antenna_pattern, "antenna pattern file");
    if (cfg.rcs_table) need_file(*cfg.rcs_table, "RCS table file");

    for (auto& d : cfg.radar.diagnostics()) out.push_back(std::move(d));
    if (!(cfg.frame_period > 0.0)) out.emplace_back("frame_period must be positive");
    if (cfg.frames < 1) out.emplace_back("frames must be >= 1");
    if (cfg.channel.subdivision < 0 || cfg.channel.subdivision > kMaxSubdivision) {
        out.push_back("channel.subdivision must be in [0, " + std::to_string(kMaxSubdivision) + "]");
    }
    if (cfg.channel.max_order < 1 || cfg.channel.max_order > 3) {
        out.emplace_back("channel.max_order must be in [1, 3]");
    }
    if (cfg.dsp.doppler_window == Window::kFlattop) {
        out.emplace_back("dsp.doppler_window must be rectangular or hamming");
    }
    if (!(cfg.dsp.detection_margin_db >= 0.0)) out.emplace_back("dsp.detection_margin must be >= 0 dB");
    if (cfg.dsp.blur && !(cfg.dsp.blur_sigma > 0.0)) out.emplace_back("dsp.blur_sigma_bins must be positive");
    if (cfg.pf.enabled) {
        if (cfg.pf.particles < 1) out.emplace_back("pf.particles must be >= 1");
        if (!(cfg.pf.sigma_range > 0.0) || !(cfg.pf.sigma_velocity > 0.0)) {
            out.emplace_back("pf.sigma_range and pf.sigma_velocity must be positive");
        }
        if (!(cfg.pf.clutter_floor > 0.0 && cfg.pf.clutter_floor < 1.0)) {
            out.emplace_back("pf.clutter_floor must be in (0, 1)");
        }
    }

    if (scenario_ok) {
        try {
            const auto sf = load_scenario(cfg.scenario, cfg.scene);
            if (sf.trajectory.waypoints.empty()) {
                out.emplace_back("scenario declares no trajectory waypoints");
            } else {
                const double last = cfg.start_time + cfg.frame_period * static_cast<double>(cfg.frames - 1);
                if (cfg.start_time < sf.trajectory.start_time() ||
                    last > sf.trajectory.end_time() + 1e-9) {
                    out.push_back("frames span [" + std::to_string(cfg.start_time) + ", " +
                                  std::to_string(last) + "] s, outside the trajectory");
                }
            }
            if (cfg.pf.enabled && sf.scene.reflectors.empty()) {
                out.emplace_back("particle filter needs at least one reflector");
            }
            for (const auto& refl : sf.scene.reflectors) {
                if (const auto* t = std::get_if<TableRcs>(&refl.rcs_source); t && !cfg.rcs_table) {
                    need_file(t->path, "RCS table file");
                }
            }
        } catch (const Error& e) {
            out.push_back(std::string("scenario: ") + e.what());
        }
    }
    if (pattern_ok) {
        try {
            const auto pattern = load_pattern(cfg.antenna_pattern);
            if (!select_pattern(std::span(&pattern, 1), cfg.receiver, cfg.radar.bandwidth)) {
                out.push_back("antenna pattern " + cfg.antenna_pattern.string() + " is for receiver " +
                              std::to_string(pattern.receiver()) + " at " +
                              std::to_string(pattern.bandwidth() / 1e9) + " GHz, not receiver " +
                              std::to_string(cfg.receiver) + " at " +
                              std::to_string(cfg.radar.bandwidth / 1e9) + " GHz");
            }
        } catch (const Error& e) {
            out.push_back(std::string("antenna pattern: ") + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Processing

struct ProcessedFrame {
    RangeDopplerMap map;
    RangeDopplerMap blurred;  // equals map when blur is off
    double noise_floor{0.0};
    std::vector<Feature> features;
};

/// Range-Doppler processing, optional blur and peak detection on the
/// (blurred) map. At most max_features strongest peaks are kept.
inline ProcessedFrame process_frame(const BasebandFrame& frame, const DspOptions& opt) {
    ProcessedFrame out;
    out.map = range_doppler_map(frame, opt.range_window, opt.doppler_window);
    out.blurred = opt.blur ? gaussian_blur(out.map, opt.blur_sigma) : out.map;
    out.noise_floor = estimate_noise_floor(out.blurred);
    out.features = detect_peaks(out.blurred, out.noise_floor, opt.detection_margin_db);
    if (out.features.size() > opt.max_features) out.features.resize(opt.max_features);
    return out;
}

inline void write_detections_csv(const fs::path& path, const std::vector<Feature>& features) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "range_m,velocity_mps,amplitude_db\n" << std::setprecision(17);
    for (const auto& f : features) {
        out << f.range << ',' << f.velocity << ',' << 10.0 * std::log10(f.amplitude) << '\n';
    }
}

inline std::vector<Feature> read_detections_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string(), 0, "cannot open file");
    std::vector<Feature> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (number == 1 || line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
            throw FormatError(path.string(), number, "expected range,velocity,amplitude");
        }
        Feature f;
        f.range = text::parse_double(a, path.string(), number);
        f.velocity = text::parse_double(b, path.string(), number);
        f.amplitude = std::pow(10.0, text::parse_double(c, path.string(), number) / 10.0);
        out.push_back(f);
    }
    return out;
}

inline MatrixHeader header_for(const RadarConfig& cfg, MatrixKind kind, double timestamp) {
    return {kind, cfg.samples, cfg.chirps, cfg.sample_interval, cfg.chirp_interval,
            cfg.f0,   cfg.bandwidth, cfg.chirp_duration, timestamp};
}

/// Radar configuration recovered from a matrix file header (seed and
/// power-related fields keep their defaults).
inline RadarConfig radar_from_header(const MatrixHeader& h) {
    RadarConfig cfg;
    cfg.samples = h.samples;
    cfg.chirps = h.chirps;
    cfg.sample_interval = h.sample_interval;
    cfg.chirp_interval = h.chirp_interval;
    cfg.f0 = h.f0;
    cfg.bandwidth = h.bandwidth;
    cfg.chirp_duration = h.chirp_duration;
    return cfg;
}

// ---------------------------------------------------------------------------
// Localization driver

/// Particle-filter tracker fed with odometry derived from the true
/// trajectory (plus seeded noise) and detected features.
///
/// RNG streams per frame k: kParticleInit (k = 0), kOdometry, kMotion, kResample.
class Tracker {
public:
    Tracker(const PfOptions& opt, const Scene& scene, std::uint64_t seed, double radar_height)
        : opt_(opt), scene_(scene), map_(pf::LandmarkMap::from_scene(scene)), seed_(seed),
          radar_height_(radar_height) {}

    /// Advances to frame k with the true pose at that frame; returns the estimate.
    pf::Pose2 step(std::size_t k, const Pose& truth, const std::vector<Feature>& features) {
        const pf::Pose2 true2{truth.position.x, truth.position.y, truth.heading};
        if (k == 0 || particles_.empty()) {
            Philox rng(seed_, stream_id(StreamDomain::kParticleInit, k, 0));
            particles_ = pf::init_particles(opt_.particles, true2, opt_.init_sigma_xy,
                                            opt_.init_sigma_heading, rng);
        } else {
            Philox odo_rng(seed_, stream_id(StreamDomain::kOdometry, k, 0));
            const double dx = true2.x - last_truth_.x, dy = true2.y - last_truth_.y;
            pf::Odometry odom;
            odom.forward = dx * std::cos(last_truth_.heading) + dy * std::sin(last_truth_.heading) +
                           opt_.odometry_sigma_forward * odo_rng.normal();
            odom.dheading = wrap_angle(true2.heading - last_truth_.heading) +
                            opt_.odometry_sigma_heading * odo_rng.normal();
            Philox motion_rng(seed_, stream_id(StreamDomain::kMotion, k, 0));
            pf::predict(particles_, odom, opt_.motion, motion_rng);
        }
        pf::MeasurementModel model;
        model.sigma_range = opt_.sigma_range;
        model.sigma_velocity = opt_.sigma_velocity;
        model.clutter_floor = opt_.clutter_floor;
        model.radar_height = radar_height_;
        model.speed = std::hypot(truth.velocity.x, truth.velocity.y);
        model.occluders = opt_.use_occlusion ? &scene_ : nullptr;
        const auto result = pf::update(particles_, features, map_, model);
        if (result.diverged) ++divergences_;
        const pf::Pose2 est = pf::estimate(particles_);
        Philox resample_rng(seed_, stream_id(StreamDomain::kResample, k, 0));
        pf::resample(particles_, resample_rng);
        last_truth_ = true2;
        return est;
    }

    const pf::ParticleSet& particles() const { return particles_; }
    std::size_t divergences() const { return divergences_; }

private:
    PfOptions opt_;
    const Scene& scene_;
    pf::LandmarkMap map_;
    std::uint64_t seed_;
    double radar_height_;
    pf::ParticleSet particles_;
    pf::Pose2 last_truth_;
    std::size_t divergences_{0};
};

// ---------------------------------------------------------------------------
// Scenario runner

/// Error raised while processing a specific frame.
class FrameError : public Error {
public:
    FrameError(std::size_t frame, const std::string& what)
        : Error("frame " + std::to_string(frame) + ": " + what), frame_(frame) {}
    std::size_t frame() const noexcept { return frame_; }

private:
    std::size_t frame_;
};

struct ReflectorTruth {
    int id{0};
    double range{0.0};
    double velocity{0.0};
    bool visible{false};
};

struct FrameRecord {
    std::size_t index{0};
    double time{0.0};
    Pose truth;
    pf::Pose2 estimate;
    double error{0.0};  // 2D position error, m
    std::size_t raytraced_paths{0};
    std::vector<ReflectorTruth> reflectors;
    std::vector<Feature> features;
};

struct RunResult {
    std::vector<FrameRecord> frames;
    double mean_error{0.0};
    std::size_t divergences{0};
    fs::path trajectory_csv;
};

struct RunOptions {
    bool write_outputs{true};
    bool quiet{true};
    std::ostream* log{nullptr};
};

/// Resolves each reflector's RCS model once.
inline std::vector<RcsModel> build_rcs_models(const ScenarioConfig& cfg, const Scene& scene) {
    std::map<fs::path, RcsTable> tables;
    std::vector<RcsModel> out;
    for (const auto& refl : scene.reflectors) {
        if (const auto* a = std::get_if<AnalyticRcs>(&refl.rcs_source)) {
            out.push_back(RcsModel::trihedral(a->edge_length, cfg.radar.f0, cfg.radar.bandwidth));
            continue;
        }
        const fs::path p = cfg.rcs_table ? *cfg.rcs_table : std::get<TableRcs>(refl.rcs_source).path;
        auto it = tables.find(p);
        if (it == tables.end()) it = tables.emplace(p, load_rcs_table(p)).first;
        out.push_back(RcsModel::table(it->second));
    }
    return out;
}

inline RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opt = {}) {
    if (const auto diags = validate_config(cfg); !diags.empty()) throw ValidationError(diags.front());
    const auto sf = load_scenario(cfg.scenario, cfg.scene);
    const Scene& scene = sf.scene;
    const AntennaPattern pattern = load_pattern(cfg.antenna_pattern);
    const auto rcs = build_rcs_models(cfg, scene);
    const RayBundle bundle = launch_directions(cfg.channel.subdivision);
    RadarConfig radar = cfg.radar;
    radar.seed = cfg.seed;
    radar.workers = cfg.workers;

    TraceOptions trace_opt;
    trace_opt.max_order = cfg.channel.max_order;
    trace_opt.frequency = radar.f0;
    trace_opt.rx_radius_scale = cfg.channel.rx_radius_scale;
    trace_opt.workers = cfg.workers;

    if (opt.write_outputs) {
        fs::create_directories(cfg.output_dir / "detections");
        if (cfg.exports.maps) fs::create_directories(cfg.output_dir / "maps");
        if (cfg.exports.frames) fs::create_directories(cfg.output_dir / "frames");
        if (cfg.exports.paths) fs::create_directories(cfg.output_dir / "paths");
    }
    std::optional<Tracker> tracker;
    if (cfg.pf.enabled) {
        tracker.emplace(cfg.pf, scene, cfg.seed,
                        trajectory_state(sf.trajectory, cfg.start_time).position.z);
    }

    RunResult result;
    std::ostringstream csv;
    csv << "t,x_true,y_true,x_est,y_est,heading_est,rmse_running\n" << std::setprecision(12);
    double error_sum = 0.0;
    for (std::size_t k = 0; k < cfg.frames; ++k) {
        const double t = cfg.start_time + cfg.frame_period * static_cast<double>(k);
        char stem[32];
        std::snprintf(stem, sizeof stem, "frame_%04zu", k);
        try {
            FrameRecord rec;
            rec.index = k;
            rec.time = t;
            rec.truth = trajectory_state(sf.trajectory, std::min(t, sf.trajectory.end_time()));

            std::vector<PathContribution> contribs;
            if (cfg.channel.enabled) {
                contribs = trace_paths(scene, rec.truth, bundle, trace_opt);
                for (auto& pc : contribs) {
                    pc.loss_db += antenna_loss_db(pattern, pc.departure_world, pc.arrival_world,
                                                  rec.truth.heading);
                }
            }
            rec.raytraced_paths = contribs.size();
            for (std::size_t i = 0; i < scene.reflectors.size(); ++i) {
                const auto& refl = scene.reflectors[i];
                const Vec3 offset = refl.position - rec.truth.position;
                ReflectorTruth rt{refl.id, norm(offset),
                                  ray_doppler(offset / norm(offset), rec.truth.velocity), false};
                if (auto pc = reflector_contribution(rec.truth, refl, scene, pattern, rcs[i], radar.f0)) {
                    rt.visible = true;
                    contribs.push_back(std::move(*pc));
                }
                rec.reflectors.push_back(rt);
            }

            const BasebandFrame frame = synthesize_frame(contribs, radar, k, t);
            ProcessedFrame processed = process_frame(frame, cfg.dsp);
            rec.features = processed.features;

            if (tracker) {
                rec.estimate = tracker->step(k, rec.truth, rec.features);
                rec.error = std::hypot(rec.estimate.x - rec.truth.position.x,
                                       rec.estimate.y - rec.truth.position.y);
            }
            error_sum += rec.error;
            csv << t << ',' << rec.truth.position.x << ',' << rec.truth.position.y << ','
                << rec.estimate.x << ',' << rec.estimate.y << ',' << rec.estimate.heading << ','
                << error_sum / static_cast<double>(k + 1) << '\n';

            if (opt.write_outputs) {
                write_detections_csv(cfg.output_dir / "detections" / (std::string(stem) + ".csv"),
                                     rec.features);
                if (cfg.exports.maps) {
                    const auto h = header_for(radar, MatrixKind::kPowerMap, t);
                    write_matrix(cfg.output_dir / "maps" / (std::string(stem) + "_map.bin"),
                                 processed.map.values, h);
                    write_matrix(cfg.output_dir / "maps" / (std::string(stem) + "_blur.bin"),
                                 processed.blurred.values, h);
                    if (cfg.exports.csv) {
                        write_matrix_csv(cfg.output_dir / "maps" / (std::string(stem) + "_map.csv"),
                                         processed.map.values);
                        write_matrix_csv(cfg.output_dir / "maps" / (std::string(stem) + "_blur.csv"),
                                         processed.blurred.values);
                    }
                }
                if (cfg.exports.frames) {
                    write_matrix(cfg.output_dir / "frames" / (std::string(stem) + ".bin"),
                                 frame.samples, header_for(radar, MatrixKind::kFrame, t));
                    if (cfg.exports.csv) {
                        write_matrix_csv(cfg.output_dir / "frames" / (std::string(stem) + ".csv"),
                                         frame.samples);
                    }
                }
                if (cfg.exports.paths) {
                    std::ofstream dump(cfg.output_dir / "paths" / (std::string(stem) + ".txt"));
                    write_path_dump(dump, contribs);
                }
            }
            if (!opt.quiet && opt.log) {
                *opt.log << stem << " t=" << t << " s paths=" << contribs.size()
                         << " features=" << rec.features.size() << " error=" << rec.error << " m\n";
            }
            result.frames.push_back(std::move(rec));
        } catch (const FrameError&) {
            throw;
        } catch (const std::exception& e) {
            throw FrameError(k, e.what());
        }
    }
    result.mean_error = cfg.frames ? error_sum / static_cast<double>(cfg.frames) : 0.0;
    result.divergences = tracker ? tracker->divergences() : 0;

    if (opt.write_outputs) {
        result.trajectory_csv = cfg.output_dir / "trajectory.csv";
        std::ofstream(result.trajectory_csv, std::ios::binary) << csv.str();
        nlohmann::json manifest;
        manifest["tool"] = "radarsim";
        manifest["version"] = kVersion;
        manifest["seed"] = cfg.seed;
        manifest["frames"] = cfg.frames;
        manifest["workers"] = cfg.workers;
        manifest["scenario"] = cfg.scenario.string();
        manifest["antenna_pattern"] = cfg.antenna_pattern.string();
        manifest["config_text"] = cfg.source_text;
        manifest["mean_error_m"] = result.mean_error;
        std::ofstream(cfg.output_dir / "manifest.json") << manifest.dump(2) << '\n';
    }
    return result;
}

/// Re-runs localization from detection CSVs written by a previous run
/// (detections/frame_XXXX.csv under `run_dir`). Writes trajectory.csv to `out_dir`.
inline RunResult replay_localization(const ScenarioConfig& cfg, const fs::path& run_dir,
                                     const fs::path& out_dir) {
    const auto sf = load_scenario(cfg.scenario, cfg.scene);
    Tracker tracker(cfg.pf, sf.scene, cfg.seed,
                    trajectory_state(sf.trajectory, cfg.start_time).position.z);
    RunResult result;
    std::ostringstream csv;
    csv << "t,x_true,y_true,x_est,y_est,heading_est,rmse_running\n" << std::setprecision(12);
    double error_sum = 0.0;
    for (std::size_t k = 0; k < cfg.frames; ++k) {
        const double t = cfg.start_time + cfg.frame_period * static_cast<double>(k);
        char stem[32];
        std::snprintf(stem, sizeof stem, "frame_%04zu.csv", k);
        try {
            FrameRecord rec;
            rec.index = k;
            rec.time = t;
            rec.truth = trajectory_state(sf.trajectory, std::min(t, sf.trajectory.end_time()));
            rec.features = read_detections_csv(run_dir / "detections" / stem);
            rec.estimate = tracker.step(k, rec.truth, rec.features);
            rec.error = std::hypot(rec.estimate.x - rec.truth.position.x,
                                   rec.estimate.y - rec.truth.position.y);
            error_sum += rec.error;
            csv << t << ',' << rec.truth.position.x << ',' << rec.truth.position.y << ','
                << rec.estimate.x << ',' << rec.estimate.y << ',' << rec.estimate.heading << ','
                << error_sum / static_cast<double>(k + 1) << '\n';
            result.frames.push_back(std::move(rec));
        } catch (const std::exception& e) {
            throw FrameError(k, e.what());
        }
    }
    result.mean_error = cfg.frames ? error_sum / static_cast<double>(cfg.frames) : 0.0;
    result.divergences = tracker.divergences();
    fs::create_directories(out_dir);
    result.trajectory_csv = out_dir / "trajectory.csv";
    std::ofstream(result.trajectory_csv, std::ios::binary) << csv.str();
    return result;
}

}  // namespace radarsim
