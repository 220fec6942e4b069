#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "montecarlo.hpp"

namespace frmpair {

struct FringePoint {
    double hwp_deg = 0.0;
    double counts = 0.0;
};

/// C(theta) = A + B cos(4 theta - phase), theta the half-wave-plate angle.
struct FringeFit {
    double offset = 0.0;
    double amplitude = 0.0;
    double phase_rad = 0.0;
    double visibility = 0.0;
    double rms_residual = 0.0;
    bool visibility_above_one = false;
};

/// Linear least squares on {1, cos 4theta, sin 4theta}; the 90 degree period
/// in plate angle is fixed, so the fit is closed-form.
inline FringeFit fit_fringe(std::span<const FringePoint> points) {
    if (points.size() < 4) {
        throw FitError("fit_fringe: need at least 4 points");
    }
    // distinct angles modulo the 90 degree period
    std::vector<double> residues;
    for (const auto& p : points) {
        if (!std::isfinite(p.hwp_deg) || !std::isfinite(p.counts)) {
            throw FitError("fit_fringe: non-finite data point");
        }
        double r = std::fmod(p.hwp_deg, 90.0);
        if (r < 0.0) r += 90.0;
        bool seen = false;
        for (double q : residues) {
            const double d = std::abs(q - r);
            seen = seen || std::min(d, 90.0 - d) < 1e-9;
        }
        if (!seen) residues.push_back(r);
    }
    if (residues.size() < 3) {
        throw FitError("fit_fringe: need at least 3 distinct angles modulo 90 degrees");
    }

    // normal equations N c = y
    double n[3][3] = {};
    double y[3] = {};
    for (const auto& p : points) {
        const double t = 4.0 * deg_to_rad(p.hwp_deg);
        const double basis[3] = {1.0, std::cos(t), std::sin(t)};
        for (int r = 0; r < 3; ++r) {
            y[r] += basis[r] * p.counts;
            for (int c = 0; c < 3; ++c) {
                n[r][c] += basis[r] * basis[c];
            }
        }
    }
    auto det3 = [](const double m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double d = det3(n);
    const double scale = static_cast<double>(points.size());
    if (std::abs(d) < 1e-12 * scale * scale * scale) {
        throw FitError("fit_fringe: rank-deficient design");
    }
    double coef[3];
    for (int k = 0; k < 3; ++k) {
        double m[3][3];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                m[r][c] = (c == k) ? y[r] : n[r][c];
        coef[k] = det3(m) / d;
    }

    FringeFit fit;
    fit.offset = coef[0];
    fit.amplitude = std::hypot(coef[1], coef[2]);
    fit.phase_rad = std::atan2(coef[2], coef[1]);
    if (!(fit.offset > 0.0)) {
        // an all-zero fringe is a valid (empty) measurement only if it is flat
        if (fit.offset < 0.0 || fit.amplitude > 0.0) {
            throw DegenerateData("fit_fringe: fitted offset is not positive");
        }
    }
    double ss = 0.0;
    for (const auto& p : points) {
        const double t = 4.0 * deg_to_rad(p.hwp_deg);
        const double r = p.counts - (coef[0] + coef[1] * std::cos(t) + coef[2] * std::sin(t));
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / scale);
    fit.visibility = fit.offset > 0.0 ? fit.amplitude / fit.offset : 0.0;
    fit.visibility_above_one = fit.visibility > 1.0;
    return fit;
}

inline double visibility_from_fit(const FringeFit& fit) {
    if (!(fit.offset > 0.0)) {
        throw DegenerateData("visibility_from_fit: offset must be positive");
    }
    return fit.amplitude / fit.offset;
}

/// Coincidences minus the singles-product accidental estimate; may be negative.
inline double subtract_accidentals(const SettingTally& tally) {
    return static_cast<double>(tally.coincidences) - estimate_accidentals(tally);
}

struct ChshEstimate {
    double s = 0.0;
    double sigma_s = 0.0;
    std::array<double, 4> e{};       // E(a,b), E(a,b'), E(a',b), E(a',b')
    std::array<double, 4> sigma_e{};
    bool subtracted = false;
};

/// The 16 analyzer settings of a CHSH run: for each of (a,b), (a,b'), (a',b),
/// (a',b') the four settings (x,y), (x+90,y+90), (x+90,y), (x,y+90).
inline std::array<MeasurementSetting, 16> chsh_settings(double a, double a_prime, double b, double b_prime) {
    std::array<MeasurementSetting, 16> out{};
    const std::array<std::array<double, 2>, 4> pairs{{{a, b}, {a, b_prime}, {a_prime, b}, {a_prime, b_prime}}};
    std::size_t k = 0;
    for (const auto& [x, y] : pairs) {
        out[k++] = {x, y};
        out[k++] = {x + 90.0, y + 90.0};
        out[k++] = {x + 90.0, y};
        out[k++] = {x, y + 90.0};
    }
    return out;
}

namespace detail {
inline bool same_axis(double x, double y) {
    double d = std::fmod(std::abs(x - y), 180.0);
    return std::min(d, 180.0 - d) < 1e-9;
}

inline const SettingTally& find_tally(std::span<const SettingTally> tallies, const MeasurementSetting& s) {
    for (const auto& t : tallies) {
        if (same_axis(t.setting.signal_deg, s.signal_deg) && same_axis(t.setting.idler_deg, s.idler_deg)) {
            return t;
        }
    }
    throw std::invalid_argument("chsh_from_tallies: missing tally for setting (" + std::to_string(s.signal_deg) +
                                ", " + std::to_string(s.idler_deg) + ")");
}
} // namespace detail

/// CHSH S from counted tallies with first-order Poisson error propagation.
/// Raw counts have variance equal to the count; subtraction adds the variance
/// of the singles-product accidental estimate.
inline ChshEstimate chsh_from_tallies(std::span<const SettingTally> tallies, double a, double a_prime, double b,
                                      double b_prime, bool subtract) {
    if (tallies.size() < 16) {
        throw std::invalid_argument("chsh_from_tallies: need 16 tallies");
    }
    const auto settings = chsh_settings(a, a_prime, b, b_prime);
    ChshEstimate est;
    est.subtracted = subtract;
    constexpr std::array<double, 4> sign{1.0, 1.0, -1.0, -1.0};
    for (std::size_t pair = 0; pair < 4; ++pair) {
        std::array<double, 4> net{}, var{};
        for (std::size_t k = 0; k < 4; ++k) {
            const SettingTally& t = detail::find_tally(tallies, settings[4 * pair + k]);
            if (t.n_gates < 1) {
                throw std::invalid_argument("chsh_from_tallies: tally with zero gates");
            }
            const double c = static_cast<double>(t.coincidences);
            net[k] = c;
            var[k] = c;
            if (subtract) {
                const double n = static_cast<double>(t.n_gates);
                const double ss = static_cast<double>(t.singles_s), si = static_cast<double>(t.singles_i);
                net[k] -= ss * si / n;
                var[k] += (si / n) * (si / n) * ss + (ss / n) * (ss / n) * si;
            }
        }
        const double total = net[0] + net[1] + net[2] + net[3];
        if (!(total > 0.0)) {
            throw DegenerateMeasurement("chsh_from_tallies: non-positive count sum for correlation " +
                                        std::to_string(pair));
        }
        const double diff = net[0] * sign[0] + net[1] * sign[1] + net[2] * sign[2] + net[3] * sign[3];
        const double e = diff / total;
        double ve = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            const double g = (sign[k] - e) / total;
            ve += g * g * var[k];
        }
        est.e[pair] = e;
        est.sigma_e[pair] = std::sqrt(ve);
    }
    est.s = std::abs(est.e[0] - est.e[1] + est.e[2] + est.e[3]);
    est.sigma_s = std::sqrt(est.sigma_e[0] * est.sigma_e[0] + est.sigma_e[1] * est.sigma_e[1] +
                            est.sigma_e[2] * est.sigma_e[2] + est.sigma_e[3] * est.sigma_e[3]);
    return est;
}

inline ChshEstimate chsh_from_tallies(std::span<const SettingTally> tallies, bool subtract) {
    const auto& q = kCanonicalChshAngles;
    return chsh_from_tallies(tallies, q[0], q[1], q[2], q[3], subtract);
}

} // namespace frmpair
