#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "resq/constants.hpp"

namespace resq::specfun {

//
// Special functions backing the loss / frequency-shift models:
//
//   * Re Psi(1/2 + i x)   -- real part of the complex digamma function on the
//                            critical line, as it appears in the TLS
//                            frequency-shift model.
//   * K0, I0              -- modified Bessel functions (plus exponentially
//                            scaled variants k0e = e^x K0, i0e = e^-x I0 used
//                            to keep the quasiparticle expressions finite at
//                            low temperature).
//   * mattis_bardeen_sigma -- complex conductivity (sigma1, sigma2)/sigma_n of
//                            a superconductor in the microwave regime
//                            (hbar*omega < 2*Delta0), in the standard
//                            low-frequency thermal closed forms
//
//                sigma1/sn = (4 D /hw) e^{-D/kT} sinh(xi) K0(xi)
//                sigma2/sn = (pi D/hw) [1 - 2 e^{-D/kT} e^{-xi} I0(xi)]
//
//                            with xi = hw/(2 kT) and D = Delta0 held
//                            temperature-independent (valid T << Tc).
//
// Note on the conductivity convention: the full Mattis-Bardeen integrals are
// approximated here by the sinh*K0 / I0 closed forms common in the resonator
// literature. Against the full integral these are good to a few percent for
// T/Tc <= 0.35 at GHz frequencies (the dominant error term is of order
// hbar*omega/2*Delta0); the test suite quantifies the deviation.
//

namespace detail {

// digamma(z) for Re z > 0 via recurrence shift + asymptotic series.
// With |z| >= 12 the B14 truncation keeps the error below ~1e-15 relative.
inline std::complex<double> digamma_right_half(std::complex<double> z)
{
    std::complex<double> shift(0.0, 0.0);
    while (std::abs(z) < 12.0) {
        shift += 1.0 / z;
        z += 1.0;
    }
    // Bernoulli coefficients B_{2k}/(2k), k = 1..7
    static constexpr double c[7] = {
        1.0 / 12.0,   -1.0 / 120.0,    1.0 / 252.0, -1.0 / 240.0,
        1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
    };
    const std::complex<double> inv  = 1.0 / z;
    const std::complex<double> inv2 = inv * inv;
    std::complex<double> sum(0.0, 0.0);
    std::complex<double> p = inv2;
    for (double ck : c) {
        sum += ck * p;
        p *= inv2;
    }
    return std::log(z) - 0.5 * inv - sum - shift;
}

// Trapezoid sum of f over [0, inf) with step h, where f decays at least
// double-exponentially. Terms are added until they underflow relative to the
// accumulated sum.
template <class F>
double trapezoid_halfline(F&& f, double h)
{
    double sum = 0.5 * f(0.0);
    for (int j = 1;; ++j) {
        const double v = f(j * h);
        sum += v;
        if (v < 1e-18 * sum && j * h > 1.0) break;
        if (j > 2000000) throw std::runtime_error("trapezoid_halfline: no decay");
    }
    return h * sum;
}

// Refine by halving h until two successive levels agree to ~1e-15 relative.
template <class F>
double trapezoid_converged(F&& f, double h0)
{
    double prev = trapezoid_halfline(f, h0);
    for (int level = 0; level < 12; ++level) {
        h0 *= 0.5;
        const double cur = trapezoid_halfline(f, h0);
        if (std::abs(cur - prev) <= 1e-15 * std::abs(cur)) return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace detail

/// Re Psi(1/2 + i x). Even in x; Re Psi(1/2) = -gamma - 2 ln 2 at x = 0.
inline double re_digamma_half_plus_ix(double x)
{
    if (!std::isfinite(x))
        throw std::invalid_argument("re_digamma_half_plus_ix: non-finite argument");
    return detail::digamma_right_half({0.5, std::abs(x)}).real();
}

/// e^x K0(x), finite for all x > 0.
///
/// Evaluated as the trapezoid sum of e^x K0(x) = int_0^inf e^{-2x sinh^2(t/2)} dt,
/// which converges double-exponentially; step halving is iterated to ~1e-15
/// self-agreement, giving ~1e-13 or better relative accuracy over x in
/// [1e-6, 1e4].
inline double bessel_k0e(double x)
{
    if (!(x > 0.0))
        throw std::invalid_argument("bessel_k0e: requires x > 0");
    const double h0 = 0.5 / std::sqrt(1.0 + x);
    return detail::trapezoid_converged(
        [x](double t) {
            const double s = std::sinh(0.5 * t);
            return std::exp(-2.0 * x * s * s);
        },
        h0);
}

/// K0(x), modified Bessel function of the second kind, order zero.
inline double bessel_k0(double x)
{
    if (!(x > 0.0))
        throw std::invalid_argument("bessel_k0: requires x > 0");
    return std::exp(-x) * bessel_k0e(x);
}

/// e^-x I0(x).
///
/// Uses e^-x I0(x) = (1/pi) int_0^pi e^{-2x sin^2(th/2)} dth; the integrand is
/// smooth and periodic so the trapezoid rule converges spectrally.
inline double bessel_i0e(double x)
{
    if (!(x >= 0.0))
        throw std::invalid_argument("bessel_i0e: requires x >= 0");
    if (x == 0.0) return 1.0;
    auto f = [x](double th) {
        const double s = std::sin(0.5 * th);
        return std::exp(-2.0 * x * s * s);
    };
    int n = 16;
    auto level = [&](int m) {
        double sum = 0.5 * (f(0.0) + f(constants::pi));
        for (int j = 1; j < m; ++j) sum += f(j * constants::pi / m);
        return sum / m;
    };
    double prev = level(n);
    for (int it = 0; it < 14; ++it) {
        n *= 2;
        const double cur = level(n);
        if (std::abs(cur - prev) <= 1e-15 * std::abs(cur)) return cur;
        prev = cur;
    }
    return prev;
}

/// I0(x), modified Bessel function of the first kind, order zero.
/// Overflows (returns +inf) for x beyond ~709.
inline double bessel_i0(double x)
{
    if (!(x >= 0.0))
        throw std::invalid_argument("bessel_i0: requires x >= 0");
    return std::exp(x) * bessel_i0e(x);
}

/// Complex conductivity of a superconductor, normalized to the normal state,
/// at one (temperature, angular frequency) point.
struct ComplexConductivityPoint {
    double sigma1;             ///< Re sigma / sigma_n, dimensionless
    double sigma2;             ///< Im sigma / sigma_n, dimensionless
    double temperature;        ///< K
    double angular_frequency;  ///< rad/s
    double gap0;               ///< J
};

/// (sigma1, sigma2)/sigma_n in the thermal low-frequency approximation with a
/// temperature-independent gap. Requires hbar*omega < 2*gap0 (microwave
/// regime); rejected otherwise.
inline ComplexConductivityPoint mattis_bardeen_sigma(double temperature_k,
                                                     double omega_rad_s,
                                                     double gap0_j)
{
    namespace c = resq::constants;
    if (!(temperature_k > 0.0) || !std::isfinite(temperature_k))
        throw std::invalid_argument("mattis_bardeen_sigma: requires T > 0");
    if (!(omega_rad_s > 0.0) || !std::isfinite(omega_rad_s))
        throw std::invalid_argument("mattis_bardeen_sigma: requires omega > 0");
    if (!(gap0_j > 0.0) || !std::isfinite(gap0_j))
        throw std::invalid_argument("mattis_bardeen_sigma: requires gap0 > 0");
    const double hw = c::hbar * omega_rad_s;
    if (!(hw < 2.0 * gap0_j))
        throw std::domain_error(
            "mattis_bardeen_sigma: hbar*omega >= 2*Delta0 (pair-breaking regime "
            "not modeled)");

    const double kt  = c::k_boltzmann * temperature_k;
    const double xi  = hw / (2.0 * kt);
    const double boltz = std::exp(-gap0_j / kt);  // underflows to 0 as T -> 0

    // sinh(xi) K0(xi) = (1 - e^{-2 xi})/2 * e^xi K0(xi), finite for all xi
    const double sinh_k0 = 0.5 * (-std::expm1(-2.0 * xi)) * bessel_k0e(xi);
    const double s1 = (4.0 * gap0_j / hw) * boltz * sinh_k0;
    const double s2 = (c::pi * gap0_j / hw) * (1.0 - 2.0 * boltz * bessel_i0e(xi));
    return {s1, s2, temperature_k, omega_rad_s, gap0_j};
}

/// sigma2/sigma_n in the T -> 0 limit: pi*Delta0/(hbar*omega). Used as the
/// zero-temperature reference of the quasiparticle frequency-shift model.
inline double mattis_bardeen_sigma2_zero_t(double omega_rad_s, double gap0_j)
{
    namespace c = resq::constants;
    if (!(omega_rad_s > 0.0) || !(gap0_j > 0.0))
        throw std::invalid_argument("mattis_bardeen_sigma2_zero_t: bad arguments");
    const double hw = c::hbar * omega_rad_s;
    if (!(hw < 2.0 * gap0_j))
        throw std::domain_error("mattis_bardeen_sigma2_zero_t: pair-breaking regime");
    return c::pi * gap0_j / hw;
}

}  // namespace resq::specfun
