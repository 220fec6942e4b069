#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <frmpair/analysis.hpp>
#include <frmpair/montecarlo.hpp>

#include "oracles.hpp"

using namespace frmpair;

namespace {

RunConfig quiet_run(double mu, std::uint64_t gates) {
    RunConfig r;
    r.n_gates = gates;
    r.mu_pair = mu;
    r.eta_s = r.eta_i = 1.0;
    return r;
}

double noise_click(double raman, double eta, double dark, double leak) {
    // independent Poisson thinning: P(no Raman detection) = exp(-raman * eta / 2)
    return 1.0 - std::exp(-raman * eta / 2.0) * (1.0 - dark) * (1.0 - leak);
}

oracle::GateProbabilities exact_gate(const TwoPhotonState& state, const MeasurementSetting& setting,
                                     const RunConfig& r) {
    // analyzer outcome probabilities come from the quantum module (checked in its own suite);
    // the gate process itself is enumerated independently
    const auto p = outcome_probabilities(state, setting);
    return oracle::enumerate_gate(p, r.eta_s, r.eta_i, r.mu_pair,
                                  noise_click(r.raman_s, r.eta_s, r.dark_s, r.pump_leak_s),
                                  noise_click(r.raman_i, r.eta_i, r.dark_i, r.pump_leak_i), 6);
}

void expect_within_sigma(double observed, double expected, double k_sigma) {
    const double sigma = std::sqrt(std::max(expected, 1.0));
    EXPECT_LE(std::abs(observed - expected), k_sigma * sigma) << "observed " << observed << " expected " << expected;
}

} // namespace

TEST(PeakPower, Examples) {
    EXPECT_NEAR(peak_power_w(PumpConfig{}), 0.2818, 1e-4);
    EXPECT_NEAR(peak_power_w(PumpConfig{}), std::pow(10.0, -0.55), 1e-12);
    PumpConfig p;
    p.avg_power_dbm = 0.0;
    EXPECT_NEAR(peak_power_w(p), 1.0, 1e-12);
    p.pulse_width_ns = 500.0; // duty 0.5
    EXPECT_NEAR(peak_power_w(p), 0.002, 1e-15);
    p.pulse_width_ns = 0.0;
    EXPECT_THROW(peak_power_w(p), std::invalid_argument);
}

TEST(PairProbability, Examples) {
    EXPECT_NEAR(pair_probability(20.0, 0.2818, 1.0, 1e-3), 0.03177, 1e-5);
    EXPECT_EQ(pair_probability(20.0, 0.0, 1.0, 1e-3), 0.0);
    EXPECT_THROW(pair_probability(20.0, 0.2818, 1.0, 1.0), OutOfModel);
    EXPECT_THROW(pair_probability(-1.0, 0.2818, 1.0, 1.0), std::invalid_argument);
}

TEST(Simulate, AllZeroConfigCountsNothing) {
    const auto t = simulate_setting(phi_plus(), {0.0, 0.0}, quiet_run(0.0, 100000), RngKey{1, 0});
    EXPECT_EQ(t.coincidences, 0u);
    EXPECT_EQ(t.singles_s, 0u);
    EXPECT_EQ(t.singles_i, 0u);
    EXPECT_EQ(t.n_gates, 100000u);
}

TEST(Simulate, LowMuPhiPlusMatchesFirstOrderAndExactExpectation) {
    const RunConfig r = quiet_run(0.01, 1'000'000);
    const auto t = simulate_setting(phi_plus(), {0.0, 0.0}, r, RngKey{2, 0});
    expect_within_sigma(static_cast<double>(t.coincidences), 5000.0, 4.0);
    const auto exact = exact_gate(phi_plus(), {0.0, 0.0}, r);
    EXPECT_NEAR(exact.both, 1.0 - std::exp(-0.005), 1e-12);
    expect_within_sigma(static_cast<double>(t.coincidences), exact.both * 1e6, 4.0);
    expect_within_sigma(static_cast<double>(t.singles_s), exact.s * 1e6, 4.0);
}

TEST(Simulate, DarkOnly) {
    RunConfig r = quiet_run(0.0, 1'000'000);
    r.dark_s = r.dark_i = 0.001;
    const auto t = simulate_setting(phi_plus(), {0.0, 0.0}, r, RngKey{3, 0});
    expect_within_sigma(static_cast<double>(t.coincidences), 1.0, 4.0);
    expect_within_sigma(static_cast<double>(t.singles_s), 1000.0, 4.0);
    expect_within_sigma(static_cast<double>(t.singles_i), 1000.0, 4.0);
}

TEST(Simulate, MatchesBruteForceEnumerationAcrossConfigs) {
    Engine rng = RngKey{77, 0}.engine();
    const auto state = werner_mix(bell_state(0.4, 0.6), 0.9);
    for (int k = 0; k < 8; ++k) {
        RunConfig r;
        r.n_gates = 400'000;
        r.mu_pair = 0.2 * uniform01(rng);
        r.eta_s = 0.2 + 0.8 * uniform01(rng);
        r.eta_i = 0.2 + 0.8 * uniform01(rng);
        r.raman_s = 0.05 * uniform01(rng);
        r.raman_i = 0.05 * uniform01(rng);
        r.dark_s = 0.002 * uniform01(rng);
        r.pump_leak_i = 0.002 * uniform01(rng);
        const MeasurementSetting s{180.0 * uniform01(rng), 180.0 * uniform01(rng)};
        const auto t = simulate_setting(state, s, r, RngKey{78, static_cast<std::uint64_t>(k)});
        const auto exact = exact_gate(state, s, r);
        const double n = static_cast<double>(r.n_gates);
        expect_within_sigma(static_cast<double>(t.coincidences), exact.both * n, 4.0);
        expect_within_sigma(static_cast<double>(t.singles_s), exact.s * n, 4.0);
        expect_within_sigma(static_cast<double>(t.singles_i), exact.i * n, 4.0);
        EXPECT_LE(t.coincidences, std::min(t.singles_s, t.singles_i));
        EXPECT_LE(std::min(t.singles_s, t.singles_i), t.n_gates);
    }
}

TEST(Simulate, DeterministicAndIndependentOfWorkerCount) {
    RunConfig r = quiet_run(0.05, 300'001);
    r.raman_s = 0.03;
    const auto one = simulate_setting(phi_plus(), {10.0, 30.0}, r, RngKey{5, 9});
    EXPECT_EQ(one, simulate_setting(phi_plus(), {10.0, 30.0}, r, RngKey{5, 9}));
    for (unsigned w : {2u, 3u, 8u}) {
        r.workers = w;
        EXPECT_EQ(one, simulate_setting(phi_plus(), {10.0, 30.0}, r, RngKey{5, 9}));
    }
    EXPECT_NE(one, simulate_setting(phi_plus(), {10.0, 30.0}, r, RngKey{6, 9}));
}

TEST(Simulate, RejectsInvalidRun) {
    RunConfig r = quiet_run(0.01, 10);
    r.eta_s = 1.5;
    EXPECT_THROW(simulate_setting(phi_plus(), {}, r, RngKey{}), std::invalid_argument);
    r = quiet_run(1.5, 10);
    EXPECT_THROW(simulate_setting(phi_plus(), {}, r, RngKey{}), OutOfModel);
    r = quiet_run(0.01, 0);
    EXPECT_THROW(simulate_setting(phi_plus(), {}, r, RngKey{}), std::invalid_argument);
}

TEST(Accidentals, EstimateExamples) {
    SettingTally t;
    t.singles_s = 1000;
    t.singles_i = 800;
    t.n_gates = 1'000'000;
    EXPECT_DOUBLE_EQ(estimate_accidentals(t), 0.8);
    t.singles_s = 0;
    EXPECT_DOUBLE_EQ(estimate_accidentals(t), 0.0);
    t.singles_s = t.singles_i = t.n_gates = 5000;
    EXPECT_DOUBLE_EQ(estimate_accidentals(t), 5000.0);
    t.n_gates = 0;
    EXPECT_THROW(estimate_accidentals(t), std::invalid_argument);
}

TEST(Accidentals, DelayedGateAgreesWithSinglesProduct) {
    const RunConfig r = quiet_run(0.01, 1'000'000);
    const RngKey key{21, 0};
    const auto t = simulate_setting(phi_plus(), {0.0, 0.0}, r, key);
    const double est = estimate_accidentals(t);
    const auto delayed = static_cast<double>(delayed_gate_accidentals(phi_plus(), {0.0, 0.0}, r, key));
    EXPECT_LE(std::abs(delayed - est), 4.0 * std::sqrt(std::max(est, 1.0)));
}

TEST(Accidentals, DelayedGateZeroAndDarkOnly) {
    EXPECT_EQ(delayed_gate_accidentals(phi_plus(), {}, quiet_run(0.0, 100000), RngKey{}), 0u);
    RunConfig r = quiet_run(0.0, 1'000'000);
    r.dark_s = r.dark_i = 0.001;
    const auto d = static_cast<double>(delayed_gate_accidentals(phi_plus(), {}, r, RngKey{4, 4}));
    EXPECT_LE(std::abs(d - 1.0), 4.0 * 1.0);
}

TEST(Accidentals, DelayedCountSpansBlockBoundaries) {
    // every gate clicks on both channels: n - 1 delayed pairs across all blocks
    RunConfig r = quiet_run(0.0, 3 * kGatesPerBlock + 17);
    r.dark_s = r.dark_i = 1.0;
    EXPECT_EQ(delayed_gate_accidentals(phi_plus(), {}, r, RngKey{}), r.n_gates - 1);
    r.workers = 4;
    EXPECT_EQ(delayed_gate_accidentals(phi_plus(), {}, r, RngKey{}), r.n_gates - 1);
}

namespace {

struct FringeStats {
    FringeFit fit;
    double mean_counts;
    int points;
};

FringeStats simulated_fringe(const RunConfig& r, std::uint64_t seed) {
    std::vector<FringePoint> pts;
    double total = 0.0;
    for (int k = 0; k < 24; ++k) {
        const double hwp = 7.5 * k;
        const auto t = simulate_setting(phi_plus(), {hwp_to_analyzer(hwp, 0.0), 22.5}, r,
                                        RngKey{seed, static_cast<std::uint64_t>(k)});
        pts.push_back({hwp, static_cast<double>(t.coincidences)});
        total += static_cast<double>(t.coincidences);
    }
    return {fit_fringe(pts), total / 24.0, 24};
}

} // namespace

TEST(Raman, AloneGivesFlatFringe) {
    RunConfig r = quiet_run(0.0, 200'000);
    r.raman_s = r.raman_i = 0.2;
    const auto s = simulated_fringe(r, 600);
    // each Fourier coefficient of Poisson data has variance 2 m / n
    const double sigma_c = std::sqrt(2.0 * s.mean_counts / s.points);
    EXPECT_GT(s.mean_counts, 100.0);
    EXPECT_LT(std::abs(s.fit.amplitude * std::cos(s.fit.phase_rad)), 3.0 * sigma_c);
    EXPECT_LT(std::abs(s.fit.amplitude * std::sin(s.fit.phase_rad)), 3.0 * sigma_c);
}

TEST(Raman, MonotonicallyReducesVisibility) {
    const std::vector<double> grid{0.0, 0.03, 0.1, 0.3};
    std::vector<FringeStats> stats;
    for (double raman : grid) {
        RunConfig r = quiet_run(0.01, 400'000);
        r.raman_s = r.raman_i = raman;
        stats.push_back(simulated_fringe(r, 700));
    }
    for (std::size_t k = 0; k + 1 < stats.size(); ++k) {
        auto sigma_v = [](const FringeStats& s) {
            const double a = s.fit.offset, b = s.fit.amplitude;
            const double var_a = s.mean_counts / s.points, var_b = 2.0 * s.mean_counts / s.points;
            return std::sqrt(var_b / (a * a) + b * b * var_a / (a * a * a * a));
        };
        const double gap = stats[k].fit.visibility - stats[k + 1].fit.visibility;
        EXPECT_GT(gap, 3.0 * std::hypot(sigma_v(stats[k]), sigma_v(stats[k + 1])))
            << "raman " << grid[k] << " -> " << grid[k + 1];
    }
}
