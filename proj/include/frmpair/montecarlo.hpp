#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "quantum.hpp"
#include "rng.hpp"

namespace frmpair {

struct PumpConfig {
    double avg_power_dbm = -5.5;
    double pulse_width_ns = 1.0;
    double rep_rate_hz = 1e6;
    double wavelength_nm = 1551.1;
    double signal_nm = 1549.3;
    double idler_nm = 1552.9;

    friend bool operator==(const PumpConfig&, const PumpConfig&) = default;

    [[nodiscard]] std::string validate() const {
        if (!std::isfinite(avg_power_dbm)) return "avg_power_dbm: must be finite";
        if (!(pulse_width_ns > 0.0) || !std::isfinite(pulse_width_ns)) return "pulse_width_ns: must be positive";
        if (!(rep_rate_hz > 0.0) || !std::isfinite(rep_rate_hz)) return "rep_rate_hz: must be positive";
        if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm)) return "wavelength_nm: must be positive";
        if (!(signal_nm > 0.0) || !std::isfinite(signal_nm)) return "signal_nm: must be positive";
        if (!std::isfinite(idler_nm)) return "idler_nm: must be finite";
        if (!(signal_nm < wavelength_nm && wavelength_nm < idler_nm))
            return "wavelength_nm: must lie strictly between signal_nm and idler_nm";
        return {};
    }
};

/// Gate-by-gate counting parameters. Suffix _s is the signal channel, _i the idler.
struct RunConfig {
    std::uint64_t n_gates = 20'000'000; // 20 s at 1 MHz gating
    double mu_pair = 0.0;
    double collection_kappa = 1e-3;
    double raman_s = 0.0;
    double raman_i = 0.0;
    double eta_s = 0.01;
    double eta_i = 0.01;
    double dark_s = 0.0;
    double dark_i = 0.0;
    double pump_leak_s = 0.0;
    double pump_leak_i = 0.0;
    double gate_rate_hz = 1e6;
    double gate_width_ns = 2.5;
    std::uint64_t seed = 1;
    unsigned workers = 1;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    [[nodiscard]] std::string validate() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        auto rate = [](double r) { return r >= 0.0 && std::isfinite(r); };
        if (n_gates < 1) return "n_gates: must be >= 1";
        if (!rate(mu_pair)) return "mu_pair: must be non-negative";
        if (!rate(collection_kappa)) return "collection_kappa: must be non-negative";
        if (!rate(raman_s)) return "raman_s: must be non-negative";
        if (!rate(raman_i)) return "raman_i: must be non-negative";
        if (!prob(eta_s)) return "eta_s: probability out of range";
        if (!prob(eta_i)) return "eta_i: probability out of range";
        if (!prob(dark_s)) return "dark_s: probability out of range";
        if (!prob(dark_i)) return "dark_i: probability out of range";
        if (!prob(pump_leak_s)) return "pump_leak_s: probability out of range";
        if (!prob(pump_leak_i)) return "pump_leak_i: probability out of range";
        if (!(gate_rate_hz > 0.0) || !std::isfinite(gate_rate_hz)) return "gate_rate_hz: must be positive";
        if (!(gate_width_ns > 0.0) || !std::isfinite(gate_width_ns)) return "gate_width_ns: must be positive";
        if (workers < 1) return "workers: must be >= 1";
        return {};
    }
};

struct SettingTally {
    MeasurementSetting setting;
    std::uint64_t coincidences = 0;
    std::uint64_t singles_s = 0;
    std::uint64_t singles_i = 0;
    std::uint64_t n_gates = 0;

    friend bool operator==(const SettingTally&, const SettingTally&) = default;
};

/// Peak power of rectangular pulses from the average power.
inline double peak_power_w(const PumpConfig& pump) {
    const double duty = pump.pulse_width_ns * 1e-9 * pump.rep_rate_hz;
    if (!(duty > 0.0) || duty > 1.0 || !std::isfinite(duty)) {
        throw std::invalid_argument("peak_power_w: duty cycle must lie in (0, 1]");
    }
    const double avg_w = std::pow(10.0, pump.avg_power_dbm / 10.0) * 1e-3;
    return avg_w / duty;
}

/// Mean pairs per pulse, mu = (gamma P L)^2 kappa. kappa lumps the spectral
/// collection window into one factor.
inline double pair_probability(double gamma_per_w_km, double peak_w, double length_km, double kappa) {
    if (!(gamma_per_w_km >= 0.0 && peak_w >= 0.0 && length_km >= 0.0 && kappa >= 0.0)) {
        throw std::invalid_argument("pair_probability: inputs must be non-negative");
    }
    const double phase = gamma_per_w_km * peak_w * length_km;
    const double mu = phase * phase * kappa;
    if (!(mu < 1.0)) {
        throw OutOfModel("pair_probability: mean pairs per gate " + std::to_string(mu) +
                         " >= 1, multi-pair approximation invalid");
    }
    return mu;
}

inline constexpr std::uint64_t kGatesPerBlock = 1u << 16;

namespace detail {

/// Inverse-CDF Poisson sampler for the small means used per gate.
class PoissonTable {
public:
    explicit PoissonTable(double mean) {
        double pmf = std::exp(-mean);
        double acc = pmf;
        cdf_.push_back(acc);
        for (int k = 1; k < 64 && 1.0 - acc > 1e-17; ++k) {
            pmf *= mean / k;
            acc += pmf;
            cdf_.push_back(acc);
        }
    }

    [[nodiscard]] unsigned sample(double u) const noexcept {
        unsigned k = 0;
        while (k < cdf_.size() && u >= cdf_[k]) {
            ++k;
        }
        return k;
    }

private:
    std::vector<double> cdf_;
};

struct BlockResult {
    std::uint64_t coincidences = 0;
    std::uint64_t singles_s = 0;
    std::uint64_t singles_i = 0;
    std::uint64_t delayed = 0; // s-click at g with i-click at g+1, both inside the block
    bool first_i_click = false;
    bool last_s_click = false;
};

struct GateModel {
    PoissonTable pairs;
    // cumulative {s only, i only, both} detection probabilities for one pair
    std::array<double, 3> pair_cdf{};
    double noise_s = 0.0;
    double noise_i = 0.0;
};

inline GateModel make_gate_model(const TwoPhotonState& state, const MeasurementSetting& setting,
                                 const RunConfig& run) {
    const auto p = outcome_probabilities(state, setting);
    const double pp = p[0], pb = p[1], bp = p[2];
    const double es = run.eta_s, ei = run.eta_i;
    const double both = pp * es * ei;
    const double s_only = pp * es * (1.0 - ei) + pb * es;
    const double i_only = pp * (1.0 - es) * ei + bp * ei;

    // Raman photons are unpolarized: each passes its analyzer with probability 1/2
    // and is detected with eta, so detected Raman photons are Poisson(raman eta / 2).
    auto noise = [](double raman, double eta, double dark, double leak) {
        return 1.0 - std::exp(-0.5 * raman * eta) * (1.0 - dark) * (1.0 - leak);
    };
    return GateModel{PoissonTable(run.mu_pair),
                     {s_only, s_only + i_only, s_only + i_only + both},
                     noise(run.raman_s, es, run.dark_s, run.pump_leak_s),
                     noise(run.raman_i, ei, run.dark_i, run.pump_leak_i)};
}

inline BlockResult run_block(const GateModel& model, std::uint64_t n, Engine rng) {
    BlockResult r;
    bool prev_s = false;
    for (std::uint64_t g = 0; g < n; ++g) {
        bool s = false, i = false;
        const unsigned k = model.pairs.sample(uniform01(rng));
        for (unsigned j = 0; j < k; ++j) {
            const double u = uniform01(rng);
            if (u < model.pair_cdf[0]) {
                s = true;
            } else if (u < model.pair_cdf[1]) {
                i = true;
            } else if (u < model.pair_cdf[2]) {
                s = i = true;
            }
        }
        s = (uniform01(rng) < model.noise_s) || s;
        i = (uniform01(rng) < model.noise_i) || i;

        r.singles_s += s;
        r.singles_i += i;
        r.coincidences += (s && i);
        if (g == 0) {
            r.first_i_click = i;
        } else {
            r.delayed += (prev_s && i);
        }
        prev_s = s;
    }
    r.last_s_click = prev_s;
    return r;
}

struct GateRun {
    SettingTally tally;
    std::uint64_t delayed = 0;
};

inline GateRun run_gates(const TwoPhotonState& state, const MeasurementSetting& setting, const RunConfig& run,
                         const RngKey& key) {
    if (auto why = run.validate(); !why.empty()) {
        throw std::invalid_argument("run." + why);
    }
    if (!(run.mu_pair < 1.0)) {
        throw OutOfModel("run.mu_pair: must be < 1 for the multi-pair approximation");
    }
    const GateModel model = make_gate_model(state, setting, run);
    const std::uint64_t n_blocks = (run.n_gates + kGatesPerBlock - 1) / kGatesPerBlock;
    std::vector<BlockResult> blocks(n_blocks);

    auto work = [&](std::uint64_t first, std::uint64_t stride) {
        for (std::uint64_t b = first; b < n_blocks; b += stride) {
            const std::uint64_t begin = b * kGatesPerBlock;
            const std::uint64_t n = std::min(kGatesPerBlock, run.n_gates - begin);
            blocks[b] = run_block(model, n, key.substream(b).engine());
        }
    };
    const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(run.workers, n_blocks));
    if (workers <= 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work, w, workers);
        }
    }

    GateRun out;
    out.tally.setting = setting;
    out.tally.n_gates = run.n_gates;
    for (std::uint64_t b = 0; b < n_blocks; ++b) {
        const BlockResult& r = blocks[b];
        out.tally.coincidences += r.coincidences;
        out.tally.singles_s += r.singles_s;
        out.tally.singles_i += r.singles_i;
        out.delayed += r.delayed;
        if (b > 0) {
            out.delayed += (blocks[b - 1].last_s_click && r.first_i_click);
        }
    }
    return out;
}

} // namespace detail

/// Simulates `run.n_gates` detector gates at one analyzer setting. Work is split
/// into fixed blocks of kGatesPerBlock gates, block b drawing from
/// key.substream(b), so tallies do not depend on run.workers.
inline SettingTally simulate_setting(const TwoPhotonState& state, const MeasurementSetting& setting,
                                     const RunConfig& run, const RngKey& key) {
    return detail::run_gates(state, setting, run, key).tally;
}

/// Expected accidental coincidences from uncorrelated singles.
inline double estimate_accidentals(const SettingTally& tally) {
    if (tally.n_gates < 1) {
        throw std::invalid_argument("estimate_accidentals: tally has no gates");
    }
    return static_cast<double>(tally.singles_s) * static_cast<double>(tally.singles_i) /
           static_cast<double>(tally.n_gates);
}

/// Coincidences between signal clicks in gate g and idler clicks in gate g+1
/// over the same simulated click record as simulate_setting with `key`.
/// Covers n_gates - 1 gate pairs.
inline std::uint64_t delayed_gate_accidentals(const TwoPhotonState& state, const MeasurementSetting& setting,
                                              const RunConfig& run, const RngKey& key) {
    return detail::run_gates(state, setting, run, key).delayed;
}

} // namespace frmpair
