#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "rng.hpp"

namespace frmpair {

using Complex = std::complex<double>;

inline constexpr double kConstructionTol = 1e-10;

inline double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Polarization amplitude in the fixed lab basis H = (1,0), V = (0,1).
struct JonesVector {
    Complex h{};
    Complex v{};

    static JonesVector horizontal() noexcept { return {1.0, 0.0}; }
    static JonesVector vertical() noexcept { return {0.0, 1.0}; }
    /// Linear polarization at `deg` from H, counter-clockwise.
    static JonesVector linear(double deg) {
        const double a = deg_to_rad(deg);
        return {std::cos(a), std::sin(a)};
    }

    [[nodiscard]] double norm_sq() const noexcept { return std::norm(h) + std::norm(v); }
    [[nodiscard]] bool is_finite() const noexcept {
        return std::isfinite(h.real()) && std::isfinite(h.imag()) && std::isfinite(v.real()) &&
               std::isfinite(v.imag());
    }
    [[nodiscard]] bool is_normalized(double tol = 1e-12) const noexcept {
        return is_finite() && std::abs(norm_sq() - 1.0) < tol;
    }
};

inline double distance(const JonesVector& a, const JonesVector& b) noexcept {
    return std::sqrt(std::norm(a.h - b.h) + std::norm(a.v - b.v));
}

/// 2x2 complex operator, row-major. Global phase is kept as-is everywhere.
struct JonesMatrix {
    Complex m00{}, m01{}, m10{}, m11{};

    static JonesMatrix identity() noexcept { return {1.0, 0.0, 0.0, 1.0}; }
    static JonesMatrix zero() noexcept { return {}; }
    /// Real rotation by `deg`: maps H to linear(deg).
    static JonesMatrix rotation(double deg) {
        const double a = deg_to_rad(deg);
        const double c = std::cos(a), s = std::sin(a);
        return {c, -s, s, c};
    }

    [[nodiscard]] JonesMatrix transpose() const noexcept { return {m00, m10, m01, m11}; }
    [[nodiscard]] JonesMatrix adjoint() const noexcept {
        return {std::conj(m00), std::conj(m10), std::conj(m01), std::conj(m11)};
    }
    [[nodiscard]] Complex det() const noexcept { return m00 * m11 - m01 * m10; }
    [[nodiscard]] Complex trace() const noexcept { return m00 + m11; }

    [[nodiscard]] bool is_finite() const noexcept {
        for (const Complex& z : {m00, m01, m10, m11}) {
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                return false;
            }
        }
        return true;
    }
    [[nodiscard]] bool is_unitary(double tol = kConstructionTol) const noexcept;
    /// Lossless reciprocal birefringence: unitary with unit determinant.
    [[nodiscard]] bool is_fiber(double tol = kConstructionTol) const noexcept {
        return is_unitary(tol) && std::abs(det() - 1.0) < tol;
    }
};

inline JonesMatrix operator*(const JonesMatrix& a, const JonesMatrix& b) noexcept {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
}

inline JonesVector operator*(const JonesMatrix& m, const JonesVector& x) noexcept {
    return {m.m00 * x.h + m.m01 * x.v, m.m10 * x.h + m.m11 * x.v};
}

inline JonesMatrix operator*(Complex s, const JonesMatrix& m) noexcept {
    return {s * m.m00, s * m.m01, s * m.m10, s * m.m11};
}

inline JonesMatrix operator-(const JonesMatrix& a, const JonesMatrix& b) noexcept {
    return {a.m00 - b.m00, a.m01 - b.m01, a.m10 - b.m10, a.m11 - b.m11};
}

inline double frobenius_norm(const JonesMatrix& m) noexcept {
    return std::sqrt(std::norm(m.m00) + std::norm(m.m01) + std::norm(m.m10) + std::norm(m.m11));
}

inline double distance(const JonesMatrix& a, const JonesMatrix& b) noexcept {
    return frobenius_norm(a - b);
}

inline bool JonesMatrix::is_unitary(double tol) const noexcept {
    return is_finite() && distance(adjoint() * *this, identity()) < tol;
}

namespace detail {
inline void require_finite_angle(double deg, const char* what) {
    if (!std::isfinite(deg)) {
        throw std::invalid_argument(std::string(what) + ": angle must be finite");
    }
}
} // namespace detail

/// Half-wave plate with fast axis at `axis_deg` from H.
inline JonesMatrix hwp_matrix(double axis_deg) {
    detail::require_finite_angle(axis_deg, "hwp_matrix");
    const double a = 2.0 * deg_to_rad(axis_deg);
    const double c = std::cos(a), s = std::sin(a);
    return {c, s, s, -c};
}

/// Ideal linear polarizer (projector) with transmission axis at `axis_deg`.
inline JonesMatrix polarizer_matrix(double axis_deg) {
    detail::require_finite_angle(axis_deg, "polarizer_matrix");
    const double a = deg_to_rad(axis_deg);
    const double c = std::cos(a), s = std::sin(a);
    return {c * c, s * c, s * c, s * s};
}

/// Faraday rotator mirror collapsed into one operator in the forward frame:
/// 45 deg rotator, mirror, 45 deg rotator. Sends H to -V and V to H.
inline JonesMatrix frm_matrix() noexcept { return {0.0, 1.0, -1.0, 0.0}; }

/// Product of a propagation sequence; elements.front() acts first.
inline JonesMatrix compose(std::span<const JonesMatrix> elements) {
    if (elements.empty()) {
        throw std::invalid_argument("compose: empty element sequence");
    }
    JonesMatrix acc = elements.front();
    for (auto it = elements.begin() + 1; it != elements.end(); ++it) {
        acc = *it * acc;
    }
    return acc;
}

inline JonesMatrix compose(std::initializer_list<JonesMatrix> elements) {
    return compose(std::span<const JonesMatrix>(elements.begin(), elements.size()));
}

/// Backward traversal of a reciprocal element, expressed in the forward frame.
inline JonesMatrix backward_matrix(const JonesMatrix& fiber) {
    if (!fiber.is_fiber()) {
        throw std::invalid_argument("backward_matrix: expected a unit-determinant unitary");
    }
    return fiber.transpose();
}

/// Fiber, mirror, fiber back. Equals frm_matrix() for every fiber unitary.
inline JonesMatrix frm_roundtrip(const JonesMatrix& fiber) {
    return backward_matrix(fiber) * frm_matrix() * fiber;
}

/// Haar-uniform SU(2): a uniformly distributed unit quaternion (a,b,c,d)
/// mapped to [[a+ib, c+id], [-c+id, a-ib]].
inline JonesMatrix haar_random_su2(Engine& rng) {
    double q[4];
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (double& x : q) {
            x = standard_normal(rng);
            n2 += x * x;
        }
    } while (n2 < 1e-300);
    const double inv = 1.0 / std::sqrt(n2);
    const double a = q[0] * inv, b = q[1] * inv, c = q[2] * inv, d = q[3] * inv;
    return {Complex(a, b), Complex(c, d), Complex(-c, d), Complex(a, -b)};
}

// Element catalogue for assembling paths symbolically.

struct HalfWavePlate {
    double axis_deg = 0.0;
};
struct Polarizer {
    double axis_deg = 0.0;
};
struct FaradayRotator {
    double rotation_deg = 45.0;
};
struct Mirror {};
struct Fiber {
    JonesMatrix matrix = JonesMatrix::identity();
};
struct PbsPort {
    enum class Pass { H, V } pass = Pass::H;
};

using ElementSpec = std::variant<HalfWavePlate, Polarizer, FaradayRotator, Mirror, Fiber, PbsPort>;

/// Jones matrix of one catalogue element in the fixed forward frame.
/// The Faraday rotator is non-reciprocal, so its sense is fixed in the lab
/// frame; with the mirror as identity in the unfolded frame, the sequence
/// FaradayRotator(45), Mirror, FaradayRotator(45) reproduces frm_matrix().
inline JonesMatrix element_matrix(const ElementSpec& element) {
    struct Visitor {
        JonesMatrix operator()(const HalfWavePlate& e) const { return hwp_matrix(e.axis_deg); }
        JonesMatrix operator()(const Polarizer& e) const { return polarizer_matrix(e.axis_deg); }
        JonesMatrix operator()(const FaradayRotator& e) const {
            detail::require_finite_angle(e.rotation_deg, "FaradayRotator");
            return JonesMatrix::rotation(-e.rotation_deg);
        }
        JonesMatrix operator()(const Mirror&) const { return JonesMatrix::identity(); }
        JonesMatrix operator()(const Fiber& e) const {
            if (!e.matrix.is_unitary()) {
                throw std::invalid_argument("Fiber element: matrix is not unitary");
            }
            return e.matrix;
        }
        JonesMatrix operator()(const PbsPort& e) const {
            return e.pass == PbsPort::Pass::H ? polarizer_matrix(0.0) : polarizer_matrix(90.0);
        }
    };
    return std::visit(Visitor{}, element);
}

} // namespace frmpair
