#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "radarsim/localization.hpp"

using namespace radarsim;
using namespace radarsim::pf;

namespace {

ParticleSet uniform_set(std::vector<Pose2> poses) {
    ParticleSet ps;
    for (const auto& p : poses) ps.push_back({p, 1.0 / double(poses.size())});
    return ps;
}

Feature feature(double range, double velocity) {
    Feature f;
    f.range = range;
    f.velocity = velocity;
    return f;
}

double weight_sum(const ParticleSet& ps) {
    double s = 0.0;
    for (const auto& p : ps) s += p.weight;
    return s;
}

}  // namespace

TEST(Predict, ZeroOdometryNoNoiseIsIdentity) {
    Philox rng(1, 1);
    auto ps = uniform_set({{1, 2, 0.3}, {-1, 0.5, -2.0}});
    const auto before = ps;
    predict(ps, {}, {}, rng);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        EXPECT_EQ(ps[i].pose.x, before[i].pose.x);
        EXPECT_EQ(ps[i].pose.y, before[i].pose.y);
        EXPECT_EQ(ps[i].pose.heading, before[i].pose.heading);
        EXPECT_EQ(ps[i].weight, before[i].weight);
    }
}

TEST(Predict, DeterministicShiftAlongOwnHeading) {
    Philox rng(1, 2);
    auto ps = uniform_set({{0, 0, 0.0}, {1, 1, kPi / 2}, {0, 0, kPi - 0.1}});
    predict(ps, {0.5, 0.2}, {}, rng);
    EXPECT_NEAR(ps[0].pose.x, 0.5, 1e-15);
    EXPECT_NEAR(ps[0].pose.y, 0.0, 1e-15);
    EXPECT_NEAR(ps[0].pose.heading, 0.2, 1e-15);
    EXPECT_NEAR(ps[1].pose.x, 1.0, 1e-15);
    EXPECT_NEAR(ps[1].pose.y, 1.5, 1e-15);
    // Heading wraps past pi.
    EXPECT_NEAR(ps[2].pose.heading, kPi + 0.1 - 2 * kPi, 1e-12);
}

TEST(Predict, NoiseStatistics) {
    Philox rng(9, 3);
    auto ps = uniform_set(std::vector<Pose2>(10000, Pose2{}));
    const MotionNoise noise{0.02, 0.03, 0.01};
    predict(ps, {}, noise, rng);
    auto stats = [&](auto get) {
        double s = 0, s2 = 0;
        for (const auto& p : ps) s += get(p), s2 += get(p) * get(p);
        const double n = double(ps.size());
        return std::pair{s / n, std::sqrt(s2 / n - (s / n) * (s / n))};
    };
    const auto [mx, sx] = stats([](const Particle& p) { return p.pose.x; });
    const auto [my, sy] = stats([](const Particle& p) { return p.pose.y; });
    const auto [mh, sh] = stats([](const Particle& p) { return p.pose.heading; });
    EXPECT_NEAR(sx / 0.02, 1.0, 0.05);
    EXPECT_NEAR(sy / 0.03, 1.0, 0.05);
    EXPECT_NEAR(sh / 0.01, 1.0, 0.05);
    EXPECT_NEAR(mx, 0.0, 4 * 0.02 / 100);
    EXPECT_NEAR(my, 0.0, 4 * 0.03 / 100);
    EXPECT_NEAR(mh, 0.0, 4 * 0.01 / 100);
    EXPECT_NEAR(weight_sum(ps), 1.0, 1e-12);
}

TEST(Predict, EmptySetThrows) {
    Philox rng(1, 1);
    ParticleSet ps;
    EXPECT_THROW(predict(ps, {}, {}, rng), DomainError);
    EXPECT_THROW(update(ps, {}, {}, {}), DomainError);
    EXPECT_THROW(estimate(ps), DomainError);
}

TEST(Update, EmptyFeaturesLeaveWeights) {
    auto ps = uniform_set({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
    ps[0].weight = 0.2, ps[1].weight = 0.5, ps[2].weight = 0.3;
    LandmarkMap map{{{3, 0, 0.5}}};
    const auto r = update(ps, {}, map, {});
    EXPECT_FALSE(r.diverged);
    EXPECT_DOUBLE_EQ(ps[0].weight, 0.2);
    EXPECT_DOUBLE_EQ(ps[1].weight, 0.5);
    EXPECT_DOUBLE_EQ(ps[2].weight, 0.3);
}

TEST(Update, ClutterOnlyFeatureLeavesWeights) {
    auto ps = uniform_set({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
    LandmarkMap map{{{3, 0, 0.5}}};
    const std::vector<Feature> f{feature(40.0, 0.0)};
    update(ps, f, map, {});
    for (const auto& p : ps) EXPECT_NEAR(p.weight, 1.0 / 3.0, 1e-15);
}

TEST(Update, GridOracle) {
    // Particles along a line; a landmark at the origin; one feature at 2 m.
    // Expected posterior: max(floor, N(r_i - 2; 0, s)) normalized.
    MeasurementModel model;
    model.sigma_range = 0.1;
    model.clutter_floor = 1e-3;
    model.radar_height = 0.0;
    LandmarkMap map{{{0, 0, 0}}};
    std::vector<Pose2> poses;
    for (int i = 0; i <= 40; ++i) poses.push_back({1.0 + 0.05 * i, 0.0, 0.0});
    auto ps = uniform_set(poses);
    const std::vector<Feature> f{feature(2.0, 0.0)};
    update(ps, f, map, model);
    std::vector<double> expect;
    for (const auto& p : poses) {
        const double d = (p.x - 2.0) / 0.1;
        expect.push_back(std::max(1e-3, std::exp(-0.5 * d * d)));
    }
    const double total = std::accumulate(expect.begin(), expect.end(), 0.0);
    for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_NEAR(ps[i].weight, expect[i] / total, 1e-12);
    double near = 0.0;
    for (const auto& p : ps)
        if (std::abs(p.pose.x - 2.0) <= 0.2) near += p.weight;
    EXPECT_GT(near, 0.9);
}

TEST(Update, VelocityTermUsesHeading) {
    MeasurementModel model;
    model.radar_height = 0.0;
    model.speed = 0.5;
    model.sigma_velocity = 0.05;
    LandmarkMap map{{{3, 0, 0}}};
    // Facing the landmark: the landmark approaches at -0.5 m/s relative
    // radial velocity sign is dot(v, u) = +0.5 for the robot moving toward it.
    auto ps = uniform_set({{0, 0, 0.0}, {0, 0, kPi}});
    const double toward = feature_likelihood(ps[0].pose, feature(3.0, 0.5), map, model);
    const double away = feature_likelihood(ps[1].pose, feature(3.0, 0.5), map, model);
    EXPECT_NEAR(toward, 1.0, 1e-12);
    EXPECT_EQ(away, model.clutter_floor);
}

TEST(Update, DivergenceResetsToUniform) {
    auto ps = uniform_set({{0, 0, 0}, {1, 0, 0}});
    ps[0].weight = 0.0, ps[1].weight = 0.0;
    LandmarkMap map{{{3, 0, 0.5}}};
    const auto r = update(ps, {}, map, {});
    EXPECT_TRUE(r.diverged);
    EXPECT_DOUBLE_EQ(ps[0].weight, 0.5);
    EXPECT_DOUBLE_EQ(ps[1].weight, 0.5);
}

TEST(Update, ExtremeLikelihoodsStayFinite) {
    MeasurementModel model;
    model.sigma_range = 0.001;
    model.clutter_floor = 1e-300;
    model.radar_height = 0.0;
    LandmarkMap map{{{0, 0, 0}}};
    auto ps = uniform_set({{1.0, 0, 0}, {1.5, 0, 0}});
    std::vector<Feature> fs(20, feature(5.0, 0.0));
    const auto r = update(ps, fs, map, model);
    EXPECT_FALSE(r.diverged);
    EXPECT_NEAR(weight_sum(ps), 1.0, 1e-12);
}

TEST(Resample, TriggerThreshold) {
    Philox rng(2, 2);
    auto even = uniform_set(std::vector<Pose2>(4));
    EXPECT_DOUBLE_EQ(effective_sample_size(even), 4.0);
    EXPECT_FALSE(resample(even, rng));
    // ESS exactly n/2 does not trigger.
    auto half = uniform_set({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}});
    half[0].weight = 0.5, half[1].weight = 0.5, half[2].weight = 0.0, half[3].weight = 0.0;
    EXPECT_DOUBLE_EQ(effective_sample_size(half), 2.0);
    EXPECT_FALSE(resample(half, rng));
}

TEST(Resample, DegenerateWeightCopiesOneParticle) {
    Philox rng(3, 3);
    auto ps = uniform_set({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}});
    for (auto& p : ps) p.weight = 0.0;
    ps[3].weight = 1.0;
    EXPECT_TRUE(resample(ps, rng));
    for (const auto& p : ps) {
        EXPECT_EQ(p.pose.x, 3.0);
        EXPECT_DOUBLE_EQ(p.weight, 0.2);
    }
}

TEST(Resample, SystematicIndices) {
    const std::vector<double> w{0.5, 0.5, 0.0, 0.0};
    for (double u : {0.01, 0.5, 0.99}) {
        const auto idx = systematic_indices(w, u);
        EXPECT_EQ(idx, (std::vector<std::size_t>{0, 0, 1, 1}));
    }
    const std::vector<double> w2{0.1, 0.2, 0.3, 0.4};
    // Pointers 0.125, 0.375, 0.625, 0.875 against cumsum 0.1, 0.3, 0.6, 1.0.
    EXPECT_EQ(systematic_indices(w2, 0.5), (std::vector<std::size_t>{1, 2, 3, 3}));
}

TEST(Resample, CountsMatchWeights) {
    Philox rng(4, 4);
    const std::size_t n = 1000;
    ParticleSet ps(n);
    for (std::size_t i = 0; i < n; ++i) ps[i] = {{double(i / 250), 0, 0}, 0.0};
    // Particles with x = 0 carry 70% of the mass.
    for (auto& p : ps) p.weight = p.pose.x == 0.0 ? 0.7 / 250 : 0.3 / 750;
    for (auto& p : ps) if (p.pose.x == 2.0 || p.pose.x == 3.0) p.weight = 0.0;
    for (auto& p : ps) if (p.pose.x == 1.0) p.weight = 0.3 / 250;
    ASSERT_NEAR(weight_sum(ps), 1.0, 1e-12);
    ASSERT_TRUE(resample(ps, rng));
    std::size_t zeros = 0, ones = 0;
    for (const auto& p : ps) zeros += p.pose.x == 0.0, ones += p.pose.x == 1.0;
    EXPECT_NEAR(double(zeros), 700.0, 1.0);
    EXPECT_NEAR(double(ones), 300.0, 1.0);
}

TEST(Estimate, CircularMeanHeading) {
    auto ps = uniform_set({{0, 0, 3.1}, {2, 4, -3.1}});
    const auto e = estimate(ps);
    EXPECT_NEAR(e.x, 1.0, 1e-15);
    EXPECT_NEAR(e.y, 2.0, 1e-15);
    EXPECT_NEAR(std::abs(e.heading), kPi, 1e-12);
    const auto one = estimate(uniform_set({{0.3, -0.2, 1.0}}));
    EXPECT_DOUBLE_EQ(one.x, 0.3);
    EXPECT_DOUBLE_EQ(one.heading, 1.0);
}

TEST(Rmse, Examples) {
    const std::vector<Pose2> a{{0, 0, 0}, {1, 1, 0}};
    const std::vector<Pose2> b{{3, 4, 0}, {1, 1, 2}};
    EXPECT_DOUBLE_EQ(rmse(a, b), 2.5);
    EXPECT_DOUBLE_EQ(rmse(a, a), 0.0);
    EXPECT_DOUBLE_EQ(rmse(std::span<const Pose2>{}, std::span<const Pose2>{}), 0.0);
    EXPECT_THROW(rmse(a, std::span<const Pose2>(b).first(1)), DomainError);
}

TEST(Filter, ConvergesWithCleanFeatures) {
    // Robot drives a straight line among four landmarks; features are the
    // exact ranges/velocities. The filter starts 0.3 m off.
    const LandmarkMap map{{{0, 0, 2}, {6, 0, 2}, {0, 5, 2}, {6, 5, 2}}};
    MeasurementModel model;
    model.radar_height = 0.5;
    model.speed = 0.3;
    Philox init(11, 1), motion(11, 2), res(11, 3);
    Pose2 truth{1.0, 2.5, 0.0};
    auto ps = init_particles(2000, {1.3, 2.3, 0.0}, 0.3, 0.05, init);
    std::vector<Pose2> est, tru;
    for (int k = 0; k < 30; ++k) {
        if (k > 0) {
            truth.x += 0.03;
            predict(ps, {0.03, 0.0}, {0.01, 0.01, 0.005}, motion);
        }
        std::vector<Feature> fs;
        const Vec3 radar{truth.x, truth.y, model.radar_height};
        for (const auto& lm : map.positions) {
            const Vec3 d = lm - radar;
            fs.push_back(feature(norm(d), model.speed * d.x / norm(d)));
        }
        update(ps, fs, map, model);
        ASSERT_NEAR(weight_sum(ps), 1.0, 1e-9);
        resample(ps, res);
        est.push_back(estimate(ps));
        tru.push_back(truth);
    }
    EXPECT_LT(std::hypot(est.back().x - truth.x, est.back().y - truth.y), 0.05);
    EXPECT_LT(rmse(std::span(est).last(10), std::span(tru).last(10)), 0.05);
}
