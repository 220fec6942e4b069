#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "errors.hpp"
#include "jones.hpp"

namespace frmpair {

using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Vector4c = Eigen::Matrix<Complex, 4, 1>;

inline constexpr double kStateTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;

/// Two-photon polarization density matrix over the ordered basis
/// {HH, HV, VH, VV}; first factor is the signal photon, second the idler.
class TwoPhotonState {
public:
    /// Validates Hermiticity, unit trace and positive semidefiniteness.
    static TwoPhotonState from_density(const Matrix4c& rho) {
        if (auto why = violation(rho)) {
            throw std::invalid_argument(std::string("TwoPhotonState: ") + why);
        }
        return TwoPhotonState(rho);
    }

    /// |psi><psi| for an amplitude vector; the vector is normalized first.
    static TwoPhotonState pure(const Vector4c& psi) {
        const double n = psi.norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw std::invalid_argument("TwoPhotonState::pure: zero or non-finite amplitude");
        }
        const Vector4c u = psi / n;
        return TwoPhotonState(u * u.adjoint());
    }

    /// Product of two single-photon polarizations.
    static TwoPhotonState product(const JonesVector& signal, const JonesVector& idler) {
        Vector4c psi;
        psi << signal.h * idler.h, signal.h * idler.v, signal.v * idler.h, signal.v * idler.v;
        return pure(psi);
    }

    static TwoPhotonState maximally_mixed() { return TwoPhotonState(Matrix4c::Identity() / 4.0); }

    [[nodiscard]] const Matrix4c& density() const noexcept { return rho_; }

    /// Ascending eigenvalues of the (Hermitian) density matrix.
    [[nodiscard]] std::array<double, 4> eigenvalues() const {
        Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho_, Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        return {ev(0), ev(1), ev(2), ev(3)};
    }

    [[nodiscard]] double purity() const { return (rho_ * rho_).trace().real(); }

    /// Returns nullptr when `rho` is a valid density matrix.
    static const char* violation(const Matrix4c& rho) {
        if (!rho.allFinite()) {
            return "non-finite entries";
        }
        if ((rho - rho.adjoint()).norm() > kStateTol) {
            return "not Hermitian";
        }
        if (std::abs(rho.trace() - Complex(1.0)) > kStateTol) {
            return "trace differs from 1";
        }
        const Matrix4c herm = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix4c> es(herm, Eigen::EigenvaluesOnly);
        if (es.eigenvalues()(0) < -kPsdTol) {
            return "not positive semidefinite";
        }
        return nullptr;
    }

private:
    explicit TwoPhotonState(const Matrix4c& rho) : rho_(rho) {}
    Matrix4c rho_;
};

/// Analyzer angles for one coincidence measurement (effective polarizer axes).
struct MeasurementSetting {
    double signal_deg = 0.0;
    double idler_deg = 0.0;

    friend bool operator==(const MeasurementSetting&, const MeasurementSetting&) = default;
};

inline Matrix4c kron(const JonesMatrix& a, const JonesMatrix& b) {
    const Complex A[2][2] = {{a.m00, a.m01}, {a.m10, a.m11}};
    const Complex B[2][2] = {{b.m00, b.m01}, {b.m10, b.m11}};
    Matrix4c k;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    k(2 * i + r, 2 * j + c) = A[i][j] * B[r][c];
    return k;
}

/// imbalance * e^{i phase} |HH> + sqrt(1 - imbalance^2) |VV>
inline TwoPhotonState bell_state(double phase_rad, double imbalance = std::numbers::sqrt2 / 2.0) {
    if (!(imbalance >= 0.0 && imbalance <= 1.0)) {
        throw std::invalid_argument("bell_state: imbalance must lie in [0, 1]");
    }
    Vector4c psi = Vector4c::Zero();
    psi(0) = imbalance * std::polar(1.0, phase_rad);
    psi(3) = std::sqrt(1.0 - imbalance * imbalance);
    return TwoPhotonState::pure(psi);
}

inline TwoPhotonState phi_plus() { return bell_state(0.0); }

/// Isotropic (Werner) noise: V rho + (1 - V) I / 4.
inline TwoPhotonState werner_mix(const TwoPhotonState& state, double visibility) {
    if (!(visibility >= 0.0 && visibility <= 1.0)) {
        throw std::invalid_argument("werner_mix: visibility must lie in [0, 1]");
    }
    return TwoPhotonState::from_density(visibility * state.density() +
                                        (1.0 - visibility) / 4.0 * Matrix4c::Identity());
}

inline TwoPhotonState apply_local(const JonesMatrix& signal_op, const JonesMatrix& idler_op,
                                  const TwoPhotonState& state) {
    if (!signal_op.is_unitary() || !idler_op.is_unitary()) {
        throw std::invalid_argument("apply_local: local operators must be unitary");
    }
    const Matrix4c k = kron(signal_op, idler_op);
    Matrix4c out = k * state.density() * k.adjoint();
    // re-Hermitize to keep rounding from accumulating across chained calls
    out = 0.5 * (out + out.adjoint()).eval();
    return TwoPhotonState::from_density(out);
}

/// Tr[(P(theta_s) (x) P(theta_i)) rho]
inline double coincidence_prob(const TwoPhotonState& state, const MeasurementSetting& setting) {
    const Matrix4c proj = kron(polarizer_matrix(setting.signal_deg), polarizer_matrix(setting.idler_deg));
    const double p = (proj * state.density()).trace().real();
    return std::clamp(p, 0.0, 1.0);
}

/// Joint pass/block probabilities at one setting, ordered
/// {pass-pass, pass-block, block-pass, block-block}; sums to 1.
inline std::array<double, 4> outcome_probabilities(const TwoPhotonState& state,
                                                   const MeasurementSetting& setting) {
    const double s = setting.signal_deg, i = setting.idler_deg;
    return {coincidence_prob(state, {s, i}), coincidence_prob(state, {s, i + 90.0}),
            coincidence_prob(state, {s + 90.0, i}), coincidence_prob(state, {s + 90.0, i + 90.0})};
}

/// Four-probability ratio estimator of E(a, b).
inline double correlation(const TwoPhotonState& state, double a_deg, double b_deg) {
    const auto p = outcome_probabilities(state, {a_deg, b_deg});
    const double total = p[0] + p[1] + p[2] + p[3];
    if (!(total > 0.0)) {
        throw DegenerateMeasurement("correlation: all four coincidence probabilities vanish");
    }
    return (p[0] + p[3] - p[1] - p[2]) / total;
}

/// |E(a,b) - E(a,b') + E(a',b) + E(a',b')|
inline double chsh(const TwoPhotonState& state, double a, double a_prime, double b, double b_prime) {
    return std::abs(correlation(state, a, b) - correlation(state, a, b_prime) +
                    correlation(state, a_prime, b) + correlation(state, a_prime, b_prime));
}

/// Canonical CHSH analyzer quadruple (a, a', b, b') in degrees.
inline constexpr std::array<double, 4> kCanonicalChshAngles{0.0, 45.0, 22.5, 67.5};

inline double chsh(const TwoPhotonState& state) {
    const auto& q = kCanonicalChshAngles;
    return chsh(state, q[0], q[1], q[2], q[3]);
}

inline constexpr int kFringeGridPoints = 3600;

/// Coincidence-fringe visibility with the idler analyzer held at `fixed_deg`
/// and the signal analyzer swept over half a turn.
inline double fringe_visibility(const TwoPhotonState& state, double fixed_deg) {
    double lo = 1.0, hi = 0.0;
    for (int k = 0; k < kFringeGridPoints; ++k) {
        const double swept = 180.0 * k / kFringeGridPoints;
        const double p = coincidence_prob(state, {swept, fixed_deg});
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    if (!(hi + lo > 0.0)) {
        throw DegenerateMeasurement("fringe_visibility: fringe is identically zero");
    }
    return (hi - lo) / (hi + lo);
}

/// Effective analyzer angle of a half-wave plate followed by a fixed polarizer.
inline double hwp_to_analyzer(double hwp_deg, double polarizer_deg) {
    return 2.0 * hwp_deg - polarizer_deg;
}

/// Wootters concurrence.
///
/// Uses the singular values of tau = W^T (sy x sy) W, with W the columns
/// sqrt(p_k) psi_k of the eigen-decomposition. Stable for pure states.
inline double concurrence(const TwoPhotonState& state) {
    const Matrix4c sy = kron(JonesMatrix{0.0, Complex(0, -1), Complex(0, 1), 0.0},
                             JonesMatrix{0.0, Complex(0, -1), Complex(0, 1), 0.0});
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(state.density());
    Matrix4c w = es.eigenvectors();
    for (int k = 0; k < 4; ++k) w.col(k) *= std::sqrt(std::max(0.0, es.eigenvalues()(k)));
    const Matrix4c tau = w.transpose() * sy * w;
    const Eigen::Vector4d sv = Eigen::JacobiSVD<Matrix4c>(tau).singularValues();
    return std::max(0.0, sv(0) - sv(1) - sv(2) - sv(3));
}

} // namespace frmpair
