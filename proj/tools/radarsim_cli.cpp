// Command-line front end for the radar simulator.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "radarsim/radarsim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> frames;
    bool quiet{false};
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
    auto* c = cmd->add_option("--config", flags.config, "YAML run configuration");
    if (config_required) c->required();
    cmd->add_option("--seed", flags.seed, "override the master seed");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--frames", flags.frames, "override the number of frames");
    cmd->add_flag("--quiet", flags.quiet, "suppress progress output");
}

radarsim::ScenarioConfig load(const CommonFlags& flags) {
    auto cfg = radarsim::load_config(flags.config);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.frames) cfg.frames = *flags.frames;
    if (!flags.out.empty()) cfg.output_dir = flags.out;
    return cfg;
}

// Prints diagnostics; returns true when the config is runnable.
bool check(const radarsim::ScenarioConfig& cfg) {
    const auto diags = radarsim::validate_config(cfg);
    for (const auto& d : diags) std::cerr << "config: " << d << '\n';
    return diags.empty();
}

int cmd_run(const CommonFlags& flags) {
    const auto cfg = load(flags);
    if (!check(cfg)) return kExitConfig;
    radarsim::RunOptions opt;
    opt.quiet = flags.quiet;
    opt.log = &std::cout;
    const auto result = radarsim::run_scenario(cfg, opt);
    if (!flags.quiet) {
        std::cout << "frames: " << result.frames.size() << "\nmean position error: "
                  << result.mean_error << " m\noutput: " << cfg.output_dir.string() << '\n';
    }
    return kExitOk;
}

int cmd_validate(const CommonFlags& flags) {
    const auto cfg = load(flags);
    if (!check(cfg)) return kExitConfig;
    if (!flags.quiet) std::cout << "ok\n";
    return kExitOk;
}

int cmd_trace_dump(const CommonFlags& flags, std::size_t frame) {
    const auto cfg = load(flags);
    if (!check(cfg)) return kExitConfig;
    const auto sf = radarsim::load_scenario(cfg.scenario, cfg.scene);
    const auto pattern = radarsim::load_pattern(cfg.antenna_pattern);
    const double t = cfg.start_time + cfg.frame_period * static_cast<double>(frame);
    const auto pose = radarsim::trajectory_state(sf.trajectory, t);
    radarsim::TraceOptions opt;
    opt.max_order = cfg.channel.max_order;
    opt.frequency = cfg.radar.f0;
    opt.rx_radius_scale = cfg.channel.rx_radius_scale;
    opt.workers = cfg.workers;
    auto paths = radarsim::trace_paths(sf.scene, pose, radarsim::launch_directions(cfg.channel.subdivision), opt);
    for (auto& p : paths) p.loss_db += radarsim::antenna_loss_db(pattern, p.departure_world, p.arrival_world, pose.heading);
    if (flags.out.empty()) {
        radarsim::write_path_dump(std::cout, paths);
    } else {
        std::ofstream out(flags.out);
        radarsim::write_path_dump(out, paths);
    }
    return kExitOk;
}

int cmd_dsp_only(const CommonFlags& flags, const std::string& input) {
    radarsim::DspOptions dsp;
    if (!flags.config.empty()) dsp = load(flags).dsp;
    radarsim::MatrixHeader header;
    radarsim::BasebandFrame frame;
    frame.samples = radarsim::read_matrix(input, header);
    if (header.kind != radarsim::MatrixKind::kFrame) {
        throw radarsim::FormatError(input, 0, "not a baseband frame file");
    }
    frame.config = radarsim::radar_from_header(header);
    frame.timestamp = header.timestamp;
    const auto processed = radarsim::process_frame(frame, dsp);
    const std::filesystem::path out = flags.out.empty() ? "." : flags.out;
    std::filesystem::create_directories(out);
    const auto h = radarsim::header_for(frame.config, radarsim::MatrixKind::kPowerMap, frame.timestamp);
    radarsim::write_matrix(out / "map.bin", processed.map.values, h);
    radarsim::write_matrix(out / "map_blur.bin", processed.blurred.values, h);
    radarsim::write_detections_csv(out / "detections.csv", processed.features);
    if (!flags.quiet) std::cout << processed.features.size() << " features\n";
    return kExitOk;
}

int cmd_pf_only(const CommonFlags& flags, const std::string& detections) {
    const auto cfg = load(flags);
    if (!check(cfg)) return kExitConfig;
    const auto result = radarsim::replay_localization(cfg, detections, cfg.output_dir);
    if (!flags.quiet) std::cout << "mean position error: " << result.mean_error << " m\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radarsim: chirp-sequence radar baseband simulator"};
    app.require_subcommand(1);

    CommonFlags run_flags, validate_flags, trace_flags, dsp_flags, pf_flags;
    std::size_t trace_frame = 0;
    std::string dsp_input, pf_detections;

    auto* run = app.add_subcommand("run", "simulate the full scenario");
    add_common(run, run_flags);
    auto* validate = app.add_subcommand("validate", "check a configuration");
    add_common(validate, validate_flags);
    auto* trace = app.add_subcommand("trace-dump", "print ray-traced channel paths for one frame");
    add_common(trace, trace_flags);
    trace->add_option("--frame", trace_frame, "frame index");
    auto* dsp = app.add_subcommand("dsp-only", "process an existing frame file");
    add_common(dsp, dsp_flags, false);
    dsp->add_option("--input", dsp_input, "frame file (.bin)")->required();
    auto* pf = app.add_subcommand("pf-only", "replay detections through the particle filter");
    add_common(pf, pf_flags);
    pf->add_option("--detections", pf_detections, "directory of a previous run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_flags);
        if (*validate) return cmd_validate(validate_flags);
        if (*trace) return cmd_trace_dump(trace_flags, trace_frame);
        if (*dsp) return cmd_dsp_only(dsp_flags, dsp_input);
        if (*pf) return cmd_pf_only(pf_flags, pf_detections);
    } catch (const radarsim::ValidationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const radarsim::FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
