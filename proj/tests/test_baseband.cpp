#include <gtest/gtest.h>

#include <cmath>

#include "radarsim/baseband.hpp"
#include "radarsim/matrix_io.hpp"
#include "test_util.hpp"

using namespace radarsim;

namespace {

PathContribution target(double range, double velocity, double loss_db, double phase = 0.0) {
    PathContribution pc;
    pc.range = range;
    pc.distance = 2 * range;
    pc.velocity = velocity;
    pc.loss_db = loss_db;
    pc.phase_cycles = phase;
    return pc;
}

RadarConfig quiet(double bandwidth = 2e9) {
    auto cfg = radar_preset(bandwidth);
    cfg.noise_enabled = false;
    return cfg;
}

// Direct evaluation of the signal model for one sample.
double model_sample(const std::vector<PathContribution>& ks, const RadarConfig& c, std::size_t m, std::size_t n) {
    double x = 0.0;
    for (const auto& k : ks) {
        const double a = std::sqrt(2.0 * c.tx_power * std::pow(10.0, -k.loss_db / 10.0) * c.impedance);
        const double tm = c.sample_interval * double(m), tn = c.chirp_interval * double(n);
        const double cycles = 2.0 * c.bandwidth * k.range / (c.chirp_duration * kSpeedOfLight) * tm +
                              2.0 * c.f0 * k.velocity / kSpeedOfLight * (tm + tn) + k.phase_cycles;
        x += a * std::cos(-2.0 * kPi * cycles);
    }
    return x;
}

}  // namespace

TEST(Noise, SigmaFormula) {
    RadarConfig c;
    c.noise_figure_db = 10.0;
    c.sample_interval = 0.25e-6;
    c.impedance = 50.0;
    const double pn = 1.380649e-23 * 290.0 * 10.0 * 2e6;
    EXPECT_NEAR(pn, 8.008e-14, 1e-17);
    EXPECT_NEAR(noise_sigma(c), std::sqrt(pn * 50.0), 1e-18);
    EXPECT_NEAR(noise_sigma(c), 2.001e-6, 1e-9);
    RadarConfig d = c;
    d.noise_figure_db = 0.0;
    EXPECT_NEAR(noise_sigma(c) / noise_sigma(d), std::sqrt(10.0), 1e-12);
    d = c;
    d.sample_interval /= 2.0;
    EXPECT_NEAR(noise_sigma(d) / noise_sigma(c), std::sqrt(2.0), 1e-12);
}

TEST(Amplitude, FromLoss) {
    RadarConfig c;
    EXPECT_NEAR(amplitude_from_loss(80.0, c), 3.162e-5, 1e-8);
    EXPECT_NEAR(amplitude_from_loss(80.0, c) / amplitude_from_loss(100.0, c), 10.0, 1e-12);
    c.tx_power = 1.0;
    EXPECT_DOUBLE_EQ(amplitude_from_loss(0.0, c), 10.0);
}

TEST(Synthesis, MatchesSignalModel) {
    const auto cfg = quiet();
    const std::vector<PathContribution> ks{target(4.5, 0.0, 90.0, 0.3), target(2.1, -0.7, 95.0, 1.9),
                                           target(7.3, 1.2, 88.0)};
    const auto f = synthesize_frame(ks, cfg);
    ASSERT_EQ(f.samples.rows(), cfg.samples);
    ASSERT_EQ(f.samples.cols(), cfg.chirps);
    for (std::size_t n = 0; n < cfg.chirps; n += 7)
        for (std::size_t m = 0; m < cfg.samples; m += 5)
            ASSERT_NEAR(f.samples(m, n), model_sample(ks, cfg, m, n), 1e-15);
}

TEST(Synthesis, BeatFrequencyAndStaticColumns) {
    const auto cfg = quiet();
    const double beat = 2.0 * cfg.bandwidth * 4.5 / (cfg.chirp_duration * kSpeedOfLight);
    EXPECT_NEAR(beat, 600e3, 0.5e3);
    const auto f = synthesize_frame({target(4.5, 0.0, 80.0)}, cfg);
    for (std::size_t n = 1; n < cfg.chirps; ++n)
        for (std::size_t m = 0; m < cfg.samples; ++m) ASSERT_EQ(f.samples(m, n), f.samples(m, 0));
    // First sample of a cosine with zero phase is the amplitude.
    EXPECT_NEAR(f.samples(0, 0), amplitude_from_loss(80.0, cfg), 1e-15);
}

TEST(Synthesis, DopplerPhaseIncrement) {
    const auto cfg = quiet();
    const double per_chirp = 2.0 * cfg.f0 * 1.0 / kSpeedOfLight * cfg.chirp_interval;
    // 7.867e-2 is the rounded value obtained with c = 3e8.
    EXPECT_NEAR(per_chirp, 2.0 * 59e9 / 3e8 * 200e-6 * 3e8 / kSpeedOfLight, 1e-15);
    EXPECT_NEAR(per_chirp, 7.867e-2, 1e-4);
    const auto f = synthesize_frame({target(3.0, 1.0, 60.0)}, cfg);
    const double a = amplitude_from_loss(60.0, cfg);
    for (std::size_t n = 0; n < 10; ++n) EXPECT_NEAR(f.samples(0, n), a * std::cos(-2.0 * kPi * per_chirp * double(n)), 1e-12);
}

TEST(Synthesis, NoiseOnlyVariance) {
    auto cfg = radar_preset(2e9);
    cfg.seed = 17;
    const auto f = synthesize_frame({}, cfg);
    double s = 0.0, s2 = 0.0;
    for (double v : f.samples.data()) {
        s += v;
        s2 += v * v;
    }
    const double n = double(f.samples.data().size());
    const double var = s2 / n - (s / n) * (s / n);
    EXPECT_NEAR(var / std::pow(noise_sigma(cfg), 2), 1.0, 0.05);
}

TEST(Synthesis, Linearity) {
    const auto cfg = quiet();
    const std::vector<PathContribution> a{target(4.5, 0.0, 90.0, 0.3)}, b{target(2.1, -0.7, 95.0), target(6.0, 0.4, 85.0)};
    std::vector<PathContribution> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const auto fa = synthesize_frame(a, cfg), fb = synthesize_frame(b, cfg), fab = synthesize_frame(ab, cfg);
    for (std::size_t i = 0; i < fab.samples.data().size(); ++i) {
        const double sum = fa.samples.data()[i] + fb.samples.data()[i];
        ASSERT_NEAR(fab.samples.data()[i], sum, 1e-12 * (std::abs(sum) + amplitude_from_loss(85.0, cfg)));
    }
}

TEST(Synthesis, BoundedByAmplitudeSum) {
    const auto cfg = quiet();
    const std::vector<PathContribution> ks{target(4.5, 0.0, 90.0), target(2.1, -0.7, 95.0)};
    const double bound = amplitude_from_loss(90.0, cfg) + amplitude_from_loss(95.0, cfg);
    const auto f = synthesize_frame(ks, cfg);
    for (double v : f.samples.data()) ASSERT_LE(std::abs(v), bound * (1 + 1e-12));
}

TEST(Synthesis, ReproducibleAcrossWorkers) {
    auto cfg = radar_preset(2e9);
    cfg.seed = 99;
    const std::vector<PathContribution> ks{target(4.5, 0.3, 90.0)};
    const auto one = synthesize_frame(ks, cfg, 3);
    cfg.workers = 4;
    const auto four = synthesize_frame(ks, cfg, 3);
    EXPECT_TRUE(one.samples == four.samples);
    const auto other_frame = synthesize_frame(ks, cfg, 4);
    EXPECT_FALSE(one.samples == other_frame.samples);
}

TEST(RadarConfig, Diagnostics) {
    EXPECT_TRUE(radar_preset(4e9).diagnostics().empty());
    auto c = radar_preset(2e9);
    c.bandwidth = 0.5 * c.f0;
    const auto d = c.diagnostics();
    ASSERT_EQ(d.size(), 1u);
    EXPECT_NE(d[0].find("narrowband"), std::string::npos);
    c = radar_preset(2e9);
    c.chirp_interval = 50e-6;
    EXPECT_FALSE(c.diagnostics().empty());
    c = radar_preset(2e9);
    c.samples = 255;
    EXPECT_THROW(c.check(), ValidationError);
}

TEST(RadarConfig, BinSizes) {
    const auto c = radar_preset(2e9);
    EXPECT_NEAR(c.range_bin_size(), kSpeedOfLight / (2 * 2e9), 1e-12);
    EXPECT_NEAR(c.velocity_bin_size(), kSpeedOfLight / (2 * 59e9 * 64 * 200e-6), 1e-12);
}

TEST(MatrixFile, RoundTrip) {
    testutil::TempDir dir;
    Matrix<double> m(3, 2);
    m(0, 0) = 1.5;
    m(2, 1) = -2.25e-7;
    m(1, 1) = 3.0;
    MatrixHeader h{MatrixKind::kFrame, 3, 2, 1e-6, 2e-4, 59e9, 2e9, 1e-4, 0.3};
    write_matrix(dir / "m.bin", m, h);
    MatrixHeader back;
    const auto r = read_matrix(dir / "m.bin", back);
    EXPECT_TRUE(r == m);
    EXPECT_EQ(back.samples, 3u);
    EXPECT_EQ(back.chirp_interval, 2e-4);
    EXPECT_EQ(back.timestamp, 0.3);
    EXPECT_EQ(testutil::read_file(dir / "m.bin").substr(0, 4), "RSMX");
    EXPECT_EQ(testutil::read_file(dir / "m.bin").size(), 4u + 12u + 32u + 48u + 6u * 8u);
    testutil::write_file(dir / "bad.bin", "RSMY");
    EXPECT_THROW(read_matrix(dir / "bad.bin", back), FormatError);
}
