#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <frmpair/analysis.hpp>

using namespace frmpair;

namespace {

std::vector<FringePoint> model_points(double a, double b, double phase_deg, int n, double start = 0.0) {
    std::vector<FringePoint> pts;
    for (int k = 0; k < n; ++k) {
        const double theta = start + 180.0 * k / n;
        pts.push_back({theta, a + b * std::cos(deg_to_rad(4.0 * theta - phase_deg))});
    }
    return pts;
}

double wrap(double x) { return std::remainder(x, 2.0 * std::numbers::pi); }

/// Expected tallies from the analytic state, scaled to `pairs` detected pairs per setting.
std::array<SettingTally, 16> analytic_tallies(const TwoPhotonState& state, double pairs) {
    const auto& q = kCanonicalChshAngles;
    std::array<SettingTally, 16> out{};
    const auto settings = chsh_settings(q[0], q[1], q[2], q[3]);
    for (std::size_t k = 0; k < 16; ++k) {
        out[k].setting = settings[k];
        out[k].coincidences = static_cast<std::uint64_t>(std::llround(pairs * coincidence_prob(state, settings[k])));
        out[k].n_gates = 1'000'000'000;
    }
    return out;
}

} // namespace

TEST(FitFringe, ExactModelRecovery) {
    const auto fit = fit_fringe(model_points(100.0, 80.0, 30.0, 16));
    EXPECT_NEAR(fit.offset, 100.0, 1e-9);
    EXPECT_NEAR(fit.amplitude, 80.0, 1e-9);
    EXPECT_NEAR(fit.phase_rad, deg_to_rad(30.0), 1e-9);
    EXPECT_NEAR(fit.visibility, 0.8, 1e-9);
    EXPECT_LT(fit.rms_residual, 1e-9);
}

TEST(FitFringe, ConstantData) {
    std::vector<FringePoint> pts;
    for (int k = 0; k < 8; ++k) pts.push_back({11.0 * k, 50.0});
    const auto fit = fit_fringe(pts);
    EXPECT_NEAR(fit.offset, 50.0, 1e-9);
    EXPECT_NEAR(fit.amplitude, 0.0, 1e-9);
}

TEST(FitFringe, ResidualZeroOnRandomModelData) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const double a = 10.0 + 1000.0 * u(rng), b = a * u(rng), ph = 360.0 * u(rng) - 180.0;
        std::vector<FringePoint> pts;
        for (int j = 0; j < 5 + k % 20; ++j) {
            const double th = 360.0 * u(rng);
            pts.push_back({th, a + b * std::cos(deg_to_rad(4.0 * th - ph))});
        }
        const auto fit = fit_fringe(pts);
        EXPECT_LT(fit.rms_residual, 1e-9 * a);
        EXPECT_NEAR(fit.offset, a, 1e-9 * a);
        EXPECT_NEAR(fit.amplitude, b, 1e-9 * a);
    }
}

TEST(FitFringe, PeriodInvarianceAndPhaseEquivariance) {
    const auto base = model_points(120.0, 40.0, 70.0, 12);
    auto shifted = base;
    for (auto& p : shifted) p.hwp_deg += 90.0;
    const auto f0 = fit_fringe(base), f1 = fit_fringe(shifted);
    EXPECT_NEAR(f0.offset, f1.offset, 1e-9);
    EXPECT_NEAR(f0.amplitude, f1.amplitude, 1e-9);
    EXPECT_NEAR(wrap(f0.phase_rad - f1.phase_rad), 0.0, 1e-9);

    const double delta = 13.0;
    auto moved = base;
    for (auto& p : moved) p.hwp_deg += delta;
    const auto f2 = fit_fringe(moved);
    EXPECT_NEAR(wrap(f2.phase_rad - f0.phase_rad - deg_to_rad(4.0 * delta)), 0.0, 1e-9);
    EXPECT_NEAR(f2.amplitude, f0.amplitude, 1e-9);
}

TEST(FitFringe, Errors) {
    EXPECT_THROW(fit_fringe(model_points(1.0, 0.5, 0.0, 3)), FitError);
    // angles congruent modulo 90 degrees
    std::vector<FringePoint> pts{{0.0, 1.0}, {90.0, 2.0}, {180.0, 3.0}, {10.0, 2.0}, {100.0, 1.0}};
    EXPECT_THROW(fit_fringe(pts), FitError);
    EXPECT_THROW(fit_fringe(model_points(-50.0, 10.0, 0.0, 8)), DegenerateData);
}

TEST(FitFringe, PoissonNoiseCalibration) {
    // 1000 seeded Poisson draws of 100 + 80 cos(4 theta) at 24 angles. The
    // estimator is unbiased, and its spread matches the Poisson propagation
    // sigma_A^2 = A / n, sigma_B^2 = 2 A / n.
    const int reps = 1000, n = 24;
    double sum_a = 0.0, sum_b = 0.0, sum_a2 = 0.0, sum_b2 = 0.0;
    int a_within_5pct = 0;
    for (int rep = 0; rep < reps; ++rep) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(rep) + 1);
        std::vector<FringePoint> pts;
        for (int k = 0; k < n; ++k) {
            const double th = 7.5 * k;
            std::poisson_distribution<int> pois(100.0 + 80.0 * std::cos(deg_to_rad(4.0 * th)));
            pts.push_back({th, static_cast<double>(pois(rng))});
        }
        const auto fit = fit_fringe(pts);
        sum_a += fit.offset;
        sum_b += fit.amplitude;
        sum_a2 += fit.offset * fit.offset;
        sum_b2 += fit.amplitude * fit.amplitude;
        a_within_5pct += std::abs(fit.offset - 100.0) < 5.0;
    }
    const double mean_a = sum_a / reps, mean_b = sum_b / reps;
    const double sd_a = std::sqrt(sum_a2 / reps - mean_a * mean_a);
    const double sd_b = std::sqrt(sum_b2 / reps - mean_b * mean_b);
    EXPECT_NEAR(mean_a, 100.0, 4.0 * std::sqrt(100.0 / n / reps));
    EXPECT_NEAR(mean_b, 80.0, 4.0 * std::sqrt(200.0 / n / reps) + 0.1);
    EXPECT_NEAR(sd_a, std::sqrt(100.0 / n), 0.15 * std::sqrt(100.0 / n));
    EXPECT_NEAR(sd_b, std::sqrt(200.0 / n), 0.15 * std::sqrt(200.0 / n));
    EXPECT_GE(a_within_5pct, 950);
}

TEST(Visibility, FromFit) {
    FringeFit f;
    f.offset = 100.0;
    f.amplitude = 80.0;
    EXPECT_DOUBLE_EQ(visibility_from_fit(f), 0.8);
    f.amplitude = 0.0;
    EXPECT_DOUBLE_EQ(visibility_from_fit(f), 0.0);
    f.offset = 0.0;
    EXPECT_THROW(visibility_from_fit(f), DegenerateData);
}

TEST(Visibility, IdealPhiPlusFringe) {
    std::vector<FringePoint> pts;
    for (int k = 0; k < 25; ++k) {
        const double hwp = 7.5 * k;
        pts.push_back({hwp, 1e4 * coincidence_prob(phi_plus(), {hwp_to_analyzer(hwp, 0.0), 22.5})});
    }
    const auto fit = fit_fringe(pts);
    EXPECT_NEAR(visibility_from_fit(fit), 1.0, 1e-9);
}

TEST(Subtract, Examples) {
    SettingTally t;
    t.coincidences = 100;
    t.singles_s = 1000;
    t.singles_i = 800;
    t.n_gates = 1'000'000;
    EXPECT_NEAR(subtract_accidentals(t), 99.2, 1e-12);
    t = {};
    t.n_gates = 10;
    EXPECT_DOUBLE_EQ(subtract_accidentals(t), 0.0);
    t.coincidences = 1;
    t.singles_s = 2;
    t.singles_i = 10; // accidentals 2.0
    EXPECT_DOUBLE_EQ(subtract_accidentals(t), -1.0);
}

TEST(ChshFromTallies, AnalyticPhiPlusLimit) {
    const auto est = chsh_from_tallies(analytic_tallies(phi_plus(), 1e12), false);
    EXPECT_NEAR(est.s, 2.0 * std::numbers::sqrt2, 1e-6);
    EXPECT_FALSE(est.subtracted);
}

TEST(ChshFromTallies, EqualCountsGiveZero) {
    auto t = analytic_tallies(phi_plus(), 1.0);
    for (auto& x : t) x.coincidences = 250;
    const auto est = chsh_from_tallies(t, false);
    EXPECT_NEAR(est.s, 0.0, 1e-15);
    // sigma_E for equal counts: (1/T)^2 sum var = 4 * 250 / 1000^2
    for (double se : est.sigma_e) EXPECT_NEAR(se, std::sqrt(1000.0) / 1000.0, 1e-12);
}

TEST(ChshFromTallies, WernerStatesWithinSigma) {
    for (double v : {0.2, 0.5, 0.831, 1.0}) {
        const auto est = chsh_from_tallies(analytic_tallies(werner_mix(phi_plus(), v), 1e6), false);
        EXPECT_LE(std::abs(est.s - 2.0 * std::numbers::sqrt2 * v), est.sigma_s) << "V=" << v;
        EXPECT_GT(est.sigma_s, 0.0);
        for (std::size_t k = 0; k < 4; ++k) EXPECT_LE(std::abs(est.e[k]), 1.0 + 3.0 * est.sigma_e[k]);
    }
}

TEST(ChshFromTallies, SubtractionOnNoiseFreeTalliesIsInert) {
    auto t = analytic_tallies(werner_mix(phi_plus(), 0.9), 1e5);
    for (auto& x : t) {
        x.singles_s = x.singles_i = 2 * x.coincidences;
        x.n_gates = 1'000'000'000;
    }
    const auto raw = chsh_from_tallies(t, false), sub = chsh_from_tallies(t, true);
    EXPECT_LE(std::abs(raw.s - sub.s), raw.sigma_s);
    EXPECT_GE(sub.sigma_s, raw.sigma_s);
    EXPECT_TRUE(sub.subtracted);
}

TEST(ChshFromTallies, OrderIndependentAndValidated) {
    auto t = analytic_tallies(phi_plus(), 1e6);
    const auto a = chsh_from_tallies(t, false);
    std::reverse(t.begin(), t.end());
    const auto b = chsh_from_tallies(t, false);
    EXPECT_DOUBLE_EQ(a.s, b.s);

    auto missing = t;
    missing[3].setting.signal_deg += 1.0;
    EXPECT_THROW(chsh_from_tallies(missing, false), std::invalid_argument);
    auto empty = t;
    for (auto& x : empty) x.coincidences = 0;
    EXPECT_THROW(chsh_from_tallies(empty, false), DegenerateMeasurement);
}
