#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jones.hpp"
#include "quantum.hpp"
#include "rng.hpp"

namespace frmpair {

/// Physical layout of the compensated source: PBS with a PMF delay loop,
/// a nonlinear fiber spool and a Faraday rotator mirror.
struct SchemeConfig {
    double pmf_delay_ns = 10.0;
    double pmf_length_m = 2.0;
    double fiber_length_km = 1.0;
    double gamma_per_w_km = 20.0;
    double launch_angle_deg = 45.0;
    double pump_phase_rad = 0.0;
    double fiber_group_delay_ns_per_km = 4900.0;

    friend bool operator==(const SchemeConfig&, const SchemeConfig&) = default;

    /// Empty string when valid, otherwise "field: reason".
    [[nodiscard]] std::string validate() const {
        if (!(pmf_delay_ns > 0.0) || !std::isfinite(pmf_delay_ns)) return "pmf_delay_ns: must be positive";
        if (!(pmf_length_m > 0.0) || !std::isfinite(pmf_length_m)) return "pmf_length_m: must be positive";
        if (!(fiber_length_km > 0.0) || !std::isfinite(fiber_length_km))
            return "fiber_length_km: must be positive";
        if (!(gamma_per_w_km >= 0.0) || !std::isfinite(gamma_per_w_km))
            return "gamma_per_w_km: must be non-negative";
        if (!std::isfinite(launch_angle_deg)) return "launch_angle_deg: must be finite";
        if (!std::isfinite(pump_phase_rad)) return "pump_phase_rad: must be finite";
        if (!(fiber_group_delay_ns_per_km > 0.0) || !std::isfinite(fiber_group_delay_ns_per_km))
            return "fiber_group_delay_ns_per_km: must be positive";
        return {};
    }
};

struct PathStep {
    std::string label;
    double delay_ns = 0.0;
    JonesMatrix jones;
};

using PathTrace = std::vector<PathStep>;

struct PumpSplit {
    Complex early; // H component, transmitted straight to the fiber
    Complex late;  // V component, detoured through the PMF
};

inline PumpSplit split_pump(double launch_angle_deg, double pump_phase_rad) {
    const double a = deg_to_rad(launch_angle_deg);
    return {Complex(std::cos(a), 0.0), std::sin(a) * std::polar(1.0, pump_phase_rad)};
}

namespace detail {
inline void require_fiber_partition(const JonesMatrix& u1, const JonesMatrix& u2, const char* what) {
    if (!u1.is_fiber() || !u2.is_fiber()) {
        throw std::invalid_argument(std::string(what) + ": fiber partitions must be unit-determinant unitaries");
    }
}
} // namespace detail

/// Photon born on the outbound pass at the point splitting the fiber into
/// `to_birth` (input -> birth point) and `to_mirror` (birth point -> FRM).
/// It starts co-polarized with the local pump, finishes the outbound leg,
/// reflects, and returns through the whole fiber.
inline JonesVector birth_roundtrip_forward(const JonesMatrix& to_birth, const JonesMatrix& to_mirror,
                                           const JonesVector& launch) {
    detail::require_fiber_partition(to_birth, to_mirror, "birth_roundtrip_forward");
    const JonesVector at_birth = to_birth * launch;
    const JonesVector at_mirror = to_mirror * at_birth;
    const JonesVector reflected = frm_matrix() * at_mirror;
    return backward_matrix(to_mirror * to_birth) * reflected;
}

/// Photon born on the return pass at the same partition point.
inline JonesVector birth_roundtrip_backward(const JonesMatrix& to_birth, const JonesMatrix& to_mirror,
                                            const JonesVector& launch) {
    detail::require_fiber_partition(to_birth, to_mirror, "birth_roundtrip_backward");
    const JonesVector pump_at_birth =
        backward_matrix(to_mirror) * (frm_matrix() * (to_mirror * (to_birth * launch)));
    return backward_matrix(to_birth) * pump_at_birth;
}

/// Early (H-launched) and late (V-launched, PMF-delayed) pump paths through
/// the scheme, with accumulated delay and Jones operator after each element.
inline std::pair<PathTrace, PathTrace> trace_paths(const SchemeConfig& config,
                                                   const JonesMatrix& fiber = JonesMatrix::identity()) {
    const double spool_ns = config.fiber_length_km * config.fiber_group_delay_ns_per_km;
    const JonesMatrix pass_h = element_matrix(PbsPort{PbsPort::Pass::H});
    const JonesMatrix pass_v = element_matrix(PbsPort{PbsPort::Pass::V});
    const JonesMatrix back = backward_matrix(fiber);

    // delays are rebuilt from element counts so equal paths give bit-equal totals
    struct Tally {
        PathTrace trace;
        int spools = 0, pmfs = 0;
    };
    auto extend = [&](Tally& t, std::string label, int spools, int pmfs, const JonesMatrix& element) {
        t.spools += spools;
        t.pmfs += pmfs;
        const double delay = t.spools * spool_ns + t.pmfs * config.pmf_delay_ns;
        t.trace.push_back({std::move(label), delay, element * t.trace.back().jones});
    };

    Tally early{{{"pbs_h_pass", 0.0, pass_h}}};
    extend(early, "fiber_forward", 1, 0, fiber);
    extend(early, "frm", 0, 0, frm_matrix());
    extend(early, "fiber_backward", 1, 0, back);
    extend(early, "pbs_v_to_pmf", 0, 0, pass_v);
    extend(early, "pmf", 0, 1, JonesMatrix::identity());
    extend(early, "exit", 0, 0, JonesMatrix::identity());

    Tally late{{{"pbs_v_to_pmf", 0.0, pass_v}}};
    extend(late, "pmf", 0, 1, JonesMatrix::identity());
    extend(late, "fiber_forward", 1, 0, fiber);
    extend(late, "frm", 0, 0, frm_matrix());
    extend(late, "fiber_backward", 1, 0, back);
    extend(late, "pbs_h_pass", 0, 0, pass_h);
    extend(late, "exit", 0, 0, JonesMatrix::identity());

    return {std::move(early.trace), std::move(late.trace)};
}

inline double output_delay_difference(const SchemeConfig& config) {
    const auto [early, late] = trace_paths(config);
    return late.back().delay_ns - early.back().delay_ns;
}

/// Output pair state after the compensated round trip through a fiber split
/// at an arbitrary birth point. Pairs inherit the pump polarization of their
/// time slot; the pair amplitude carries twice the pump relative phase.
inline TwoPhotonState roundtrip_output_state(const SchemeConfig& config, const JonesMatrix& to_birth,
                                             const JonesMatrix& to_mirror) {
    const PumpSplit pump = split_pump(config.launch_angle_deg, 0.0);
    const Complex pair_phase = std::polar(1.0, 2.0 * config.pump_phase_rad);
    const JonesVector early_out = birth_roundtrip_forward(to_birth, to_mirror, JonesVector::horizontal());
    const JonesVector late_out = birth_roundtrip_forward(to_birth, to_mirror, JonesVector::vertical());

    auto pair = [](const JonesVector& p) {
        Vector4c v;
        v << p.h * p.h, p.h * p.v, p.v * p.h, p.v * p.v;
        return v;
    };
    const Vector4c psi = pump.early * pair(early_out) + pump.late * pair_phase * pair(late_out);
    return TwoPhotonState::pure(psi);
}

/// cos(launch)|VV> + e^{2i pump_phase} sin(launch)|HH>
inline TwoPhotonState build_output_state(const SchemeConfig& config) {
    return roundtrip_output_state(config, JonesMatrix::identity(), JonesMatrix::identity());
}

inline constexpr double kDriftAnalyzerDeg = 0.0;

/// Fringe visibility per Haar-drawn fiber. The compensated variant routes
/// pairs through the FRM round trip; the reference variant sends the ideal
/// pair state once through the drifting fiber with fixed analyzers.
inline std::vector<double> drift_experiment(int n_trials, bool with_frm, const SchemeConfig& config,
                                            const RngKey& key) {
    if (n_trials < 1) {
        throw std::invalid_argument("drift_experiment: n_trials must be >= 1");
    }
    const TwoPhotonState reference_source = build_output_state(config);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_trials));
    for (int t = 0; t < n_trials; ++t) {
        Engine rng = key.substream(static_cast<std::uint64_t>(t)).engine();
        const JonesMatrix to_birth = haar_random_su2(rng);
        const JonesMatrix to_mirror = haar_random_su2(rng);
        if (with_frm) {
            out.push_back(fringe_visibility(roundtrip_output_state(config, to_birth, to_mirror),
                                            kDriftAnalyzerDeg));
        } else {
            const JonesMatrix fiber = to_mirror * to_birth;
            out.push_back(fringe_visibility(apply_local(fiber, fiber, reference_source), kDriftAnalyzerDeg));
        }
    }
    return out;
}

inline std::vector<double> drift_experiment(int n_trials, bool with_frm, const RngKey& key) {
    return drift_experiment(n_trials, with_frm, SchemeConfig{}, key);
}

} // namespace frmpair
