#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "config.hpp"
#include "montecarlo.hpp"
#include "quantum.hpp"
#include "scheme.hpp"

namespace frmpair {

/// Idler polarizer angles of the published fringe measurement.
inline constexpr std::array<double, 4> kFringePolarizersDeg{-22.5, 22.5, 67.5, 112.5};

/// Fixed six-decimal rendering, independent of the global locale.
inline std::string fixed6(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
    if (ec != std::errc()) {
        throw std::runtime_error("fixed6: value does not fit");
    }
    std::string s(buf, end);
    if (s == "-0.000000") s.erase(0, 1);
    return s;
}

/// Plate angles start, start+step, ... up to stop inclusive.
inline std::vector<double> hwp_grid(const ScenarioConfig& sc) {
    std::vector<double> grid;
    const auto n = static_cast<long>(std::floor((sc.hwp_stop_deg - sc.hwp_start_deg) / sc.hwp_step_deg + 1e-9));
    for (long k = 0; k <= n; ++k) {
        grid.push_back(sc.hwp_start_deg + static_cast<double>(k) * sc.hwp_step_deg);
    }
    return grid;
}

struct FringeRow {
    double hwp_deg = 0.0;
    double polarizer_deg = 0.0;
    SettingTally tally;
    double accidentals = 0.0;
    double net = 0.0;
};

struct FringeResult {
    std::vector<FringeRow> rows;
    std::vector<std::pair<double, FringeFit>> fits; // per idler polarizer angle
};

/// Sweeps the signal-arm plate in front of a fixed polarizer for each idler
/// polarizer angle; point k draws from RngKey{seed, 0}.substream(k).
inline FringeResult run_fringe(const SimulationConfig& cfg, std::span<const double> polarizers_deg) {
    const TwoPhotonState state = build_output_state(cfg.scheme);
    const auto grid = hwp_grid(cfg.scenario);
    const RngKey base{cfg.run.seed, 0};

    FringeResult res;
    std::uint64_t point = 0;
    for (double hwp : grid) {
        for (double pol : polarizers_deg) {
            const MeasurementSetting setting{hwp_to_analyzer(hwp, cfg.scenario.signal_polarizer_deg), pol};
            FringeRow row;
            row.hwp_deg = hwp;
            row.polarizer_deg = pol;
            row.tally = simulate_setting(state, setting, cfg.run, base.substream(point++));
            row.accidentals = estimate_accidentals(row.tally);
            row.net = subtract_accidentals(row.tally);
            res.rows.push_back(row);
        }
    }
    for (double pol : polarizers_deg) {
        std::vector<FringePoint> pts;
        for (const auto& row : res.rows) {
            if (row.polarizer_deg == pol) {
                pts.push_back({row.hwp_deg, cfg.scenario.subtract_accidentals
                                                ? row.net
                                                : static_cast<double>(row.tally.coincidences)});
            }
        }
        res.fits.emplace_back(pol, fit_fringe(pts));
    }
    return res;
}

inline FringeResult run_fringe(const SimulationConfig& cfg) { return run_fringe(cfg, kFringePolarizersDeg); }

struct ChshRun {
    std::array<SettingTally, 16> tallies;
    ChshEstimate estimate;
};

/// Canonical-quadruple CHSH measurement; setting k draws from
/// RngKey{seed, 1}.substream(k).
inline ChshRun run_chsh(const SimulationConfig& cfg) {
    const TwoPhotonState state = build_output_state(cfg.scheme);
    const auto& q = kCanonicalChshAngles;
    const auto settings = chsh_settings(q[0], q[1], q[2], q[3]);
    const RngKey base{cfg.run.seed, 1};
    ChshRun out;
    for (std::size_t k = 0; k < settings.size(); ++k) {
        out.tallies[k] = simulate_setting(state, settings[k], cfg.run, base.substream(k));
    }
    out.estimate = chsh_from_tallies(out.tallies, cfg.scenario.subtract_accidentals);
    return out;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    return f;
}

inline void finish(std::ofstream& f, const std::filesystem::path& path) {
    f.flush();
    if (!f) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

} // namespace detail

inline void write_fringe(const FringeResult& res, const std::filesystem::path& dir) {
    const auto data_path = dir / "fringe.csv";
    auto data = detail::open_output(data_path);
    data << "hwp_deg,polarizer_deg,coincidences,accidental_estimate,net_counts\n";
    for (const auto& r : res.rows) {
        data << fixed6(r.hwp_deg) << ',' << fixed6(r.polarizer_deg) << ',' << r.tally.coincidences << ','
             << fixed6(r.accidentals) << ',' << fixed6(r.net) << '\n';
    }
    detail::finish(data, data_path);

    const auto fit_path = dir / "fringe_fits.csv";
    auto fits = detail::open_output(fit_path);
    fits << "polarizer_deg,A,B,phi0_rad,visibility,residual\n";
    for (const auto& [pol, f] : res.fits) {
        fits << fixed6(pol) << ',' << fixed6(f.offset) << ',' << fixed6(f.amplitude) << ',' << fixed6(f.phase_rad)
             << ',' << fixed6(f.visibility) << ',' << fixed6(f.rms_residual) << '\n';
    }
    detail::finish(fits, fit_path);
}

inline void write_chsh(const ChshRun& run, const std::filesystem::path& dir) {
    const auto path = dir / "chsh.csv";
    auto f = detail::open_output(path);
    f << "signal_deg,idler_deg,coincidences,singles_s,singles_i,n_gates\n";
    for (const auto& t : run.tallies) {
        f << fixed6(t.setting.signal_deg) << ',' << fixed6(t.setting.idler_deg) << ',' << t.coincidences << ','
          << t.singles_s << ',' << t.singles_i << ',' << t.n_gates << '\n';
    }
    f << "S,sigma_S\n" << fixed6(run.estimate.s) << ',' << fixed6(run.estimate.sigma_s) << '\n';
    detail::finish(f, path);
}

inline void write_drift(const std::vector<double>& frm, const std::vector<double>& reference,
                        const std::filesystem::path& dir) {
    const auto path = dir / "drift.csv";
    auto f = detail::open_output(path);
    f << "trial,variant,visibility\n";
    for (std::size_t t = 0; t < frm.size(); ++t) {
        f << t << ",frm," << fixed6(frm[t]) << '\n';
    }
    for (std::size_t t = 0; t < reference.size(); ++t) {
        f << t << ",reference," << fixed6(reference[t]) << '\n';
    }
    detail::finish(f, path);
}

inline void write_ideal(const SimulationConfig& cfg, const std::filesystem::path& dir) {
    const TwoPhotonState state = build_output_state(cfg.scheme);
    const auto path = dir / "ideal.txt";
    auto f = detail::open_output(path);
    f << "S = " << fixed6(chsh(state)) << '\n';
    f << "fringe_visibility = " << fixed6(fringe_visibility(state, kFringePolarizersDeg[1])) << '\n';
    f << "concurrence = " << fixed6(concurrence(state)) << '\n';
    detail::finish(f, path);
}

/// Runs the configured scenario and writes its outputs into `out_dir`.
/// Returns 0; failures surface as exceptions for the caller to map to exit codes.
inline int run_scenario(const SimulationConfig& cfg, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());
    }
    switch (cfg.scenario.type) {
    case ScenarioKind::Ideal: write_ideal(cfg, out_dir); break;
    case ScenarioKind::Fringe: write_fringe(run_fringe(cfg), out_dir); break;
    case ScenarioKind::Chsh: write_chsh(run_chsh(cfg), out_dir); break;
    case ScenarioKind::Drift: {
        const RngKey key{cfg.run.seed, 2};
        write_drift(drift_experiment(cfg.scenario.drift_trials, true, cfg.scheme, key),
                    drift_experiment(cfg.scenario.drift_trials, false, cfg.scheme, key), out_dir);
        break;
    }
    }
    return 0;
}

} // namespace frmpair
