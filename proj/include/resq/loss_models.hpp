#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "resq/constants.hpp"
#include "resq/specfun.hpp"

namespace resq::models {

//
// Forward models of resonator internal loss and frequency shift.
//
// Loss channels (all Q's dimensionless, inverse fractional loss per radian):
//
//   Q_TLS(n_ph, T) = Q_TLS0 * sqrt(1 + n_ph*beta2/(D*T^beta1) * tanh(xi)) / tanh(xi)
//   Q_QP(T)        = Q_QP0 * e^{Delta0/kT} / (sinh(xi) K0(xi))
//   1/Q_int        = 1/Q_TLS + 1/Q_QP + 1/Q_other
//
// with xi = hbar*omega/(2 k_B T). A separate power-only saturation model is
//
//   1/Q_int(n_ph) = tanh(xi)/(Q_TLS0 (1 + n_ph/n_c)^beta) + 1/Q_other
//
// and the fractional frequency shift is the sum of a TLS term
//
//   (df/f0)_TLS = 1/(pi Q_TLS0) * [Re Psi(1/2 + i xi) - ln xi]
//
// and a quasiparticle term driven by the complex conductivity,
//
//   (df/f0)_QP = -alpha/2 * (1 - sin(phi) sqrt(|sigma|^2_T / |sigma|^2_0)).
//
// Inverse-Q contributions smaller than 1e-18 are clamped to zero, and the
// quasiparticle exponential is evaluated in log space; Q_QP reports +inf when
// the channel is frozen out beyond double range (loss contribution 0).
//

/// Six-parameter loss model (plus fixed Tc and design frequency).
struct LossModelParams {
    double q_tls0;   ///< inverse linear TLS damping
    double d_sat;    ///< TLS saturation scale D
    double beta1;    ///< temperature exponent of the saturation scale
    double beta2;    ///< photon-number scale of the saturation term
    double q_qp0;    ///< inverse linear quasiparticle damping
    double q_other;  ///< power- and temperature-independent channel
    double tc;       ///< K, critical temperature (fixed input, not fitted)
    double f0;       ///< Hz, resonator design frequency
};

inline void validate(const LossModelParams& p)
{
    if (!(p.q_tls0 > 0.0 && p.d_sat > 0.0 && p.beta1 > 0.0 && p.beta2 > 0.0 &&
          p.q_qp0 > 0.0 && p.q_other > 0.0))
        throw std::invalid_argument("LossModelParams: all parameters must be > 0");
    if (!(p.tc > 0.0) || !(p.f0 > 0.0))
        throw std::invalid_argument("LossModelParams: tc and f0 must be > 0");
}

/// Power-saturation model of Q_int at fixed temperature.
struct PowerLawTlsParams {
    double q_tls0;
    double n_c;          ///< critical photon number
    double beta_exp;     ///< saturation exponent, fit-bounded to (0, 1]
    double q_other;
    double temperature;  ///< K, the (fixed) measurement temperature
    double f0;           ///< Hz
};

inline void validate(const PowerLawTlsParams& p)
{
    if (!(p.q_tls0 > 0.0 && p.q_other > 0.0))
        throw std::invalid_argument("PowerLawTlsParams: Q fields must be > 0");
    if (!(p.n_c > 0.0))
        throw std::invalid_argument("PowerLawTlsParams: n_c must be > 0");
    if (!(p.beta_exp > 0.0 && p.beta_exp <= 1.0))
        throw std::invalid_argument("PowerLawTlsParams: beta must be in (0, 1]");
    if (!(p.temperature > 0.0) || !(p.f0 > 0.0))
        throw std::invalid_argument("PowerLawTlsParams: temperature and f0 must be > 0");
}

/// Two-parameter frequency-shift model (TLS + quasiparticle pull).
struct ShiftModelParams {
    double q_tls0;
    double alpha_kin;  ///< kinetic inductance fraction, 0 < alpha < 1
    double tc;         ///< K
    double f0;         ///< Hz
};

inline void validate(const ShiftModelParams& p)
{
    if (!(p.q_tls0 > 0.0))
        throw std::invalid_argument("ShiftModelParams: q_tls0 must be > 0");
    if (!(p.alpha_kin > 0.0 && p.alpha_kin < 1.0))
        throw std::invalid_argument("ShiftModelParams: alpha must be in (0, 1)");
    if (!(p.tc > 0.0) || !(p.f0 > 0.0))
        throw std::invalid_argument("ShiftModelParams: tc and f0 must be > 0");
}

/// Zero-temperature gap Delta0 = 1.764 k_B Tc, in joules.
inline double gap0(double tc_k)
{
    if (!(tc_k > 0.0))
        throw std::invalid_argument("gap0: requires tc > 0");
    return constants::bcs_gap_ratio * constants::k_boltzmann * tc_k;
}

/// xi = hbar*omega / (2 k_B T) for a resonator at design frequency f0.
inline double thermal_photon_ratio(double f0_hz, double temperature_k)
{
    if (!(temperature_k > 0.0))
        throw std::invalid_argument("thermal_photon_ratio: requires T > 0");
    return constants::h_planck * f0_hz / (2.0 * constants::k_boltzmann * temperature_k);
}

/// TLS saturation denominator of the Q_TLS model, read as D * T^beta1.
///
/// The printed form of the model is typographically ambiguous between
/// D * T^beta1 and D * T * beta1; this library reads beta1 as the temperature
/// exponent. The alternative reading is a one-line change confined to this
/// function.
inline double tls_saturation_scale(double d_sat, double beta1, double temperature_k)
{
    return d_sat * std::pow(temperature_k, beta1);
}

/// Q_TLS(n_ph, T), monotone nondecreasing in n_ph.
inline double q_tls(const LossModelParams& p, double n_ph, double temperature_k)
{
    if (!(n_ph >= 0.0))
        throw std::invalid_argument("q_tls: requires n_ph >= 0");
    const double xi = thermal_photon_ratio(p.f0, temperature_k);
    const double t  = std::tanh(xi);
    const double sat = n_ph * p.beta2 / tls_saturation_scale(p.d_sat, p.beta1, temperature_k);
    return p.q_tls0 * std::sqrt(1.0 + sat * t) / t;
}

/// Q_QP(T) = Q_QP0 e^{Delta0/kT} / (sinh(xi) K0(xi)), evaluated in log space.
/// Returns +infinity when the channel is frozen out beyond double range.
inline double q_qp(const LossModelParams& p, double temperature_k)
{
    const double xi = thermal_photon_ratio(p.f0, temperature_k);
    const double d0_over_kt =
        gap0(p.tc) / (constants::k_boltzmann * temperature_k);
    // ln(sinh(xi) K0(xi)) = ln1p(-e^{-2 xi}) - ln 2 + xi + ln(e^-xi... )
    // expressed through the scaled Bessel value to stay finite at large xi:
    // sinh(xi) K0(xi) = (1 - e^{-2 xi})/2 * k0e(xi) * e^{xi} * e^{-xi} -- the
    // e^{+-xi} cancel, so the factor below is already the full product.
    const double sinh_k0 =
        0.5 * (-std::expm1(-2.0 * xi)) * specfun::bessel_k0e(xi);
    const double ln_q = std::log(p.q_qp0) + d0_over_kt - std::log(sinh_k0);
    if (ln_q >= 709.0) return std::numeric_limits<double>::infinity();
    return std::exp(ln_q);
}

namespace detail {

inline double clamp_inv(double inv_q)
{
    return inv_q < 1e-18 ? 0.0 : inv_q;
}

}  // namespace detail

/// Total internal quality factor, 1/Q_int = 1/Q_TLS + 1/Q_QP + 1/Q_other.
inline double q_int_total(const LossModelParams& p, double n_ph, double temperature_k)
{
    const double inv_tls = detail::clamp_inv(1.0 / q_tls(p, n_ph, temperature_k));
    const double inv_qp  = detail::clamp_inv(1.0 / q_qp(p, temperature_k));
    const double inv_oth = detail::clamp_inv(1.0 / p.q_other);
    return 1.0 / (inv_tls + inv_qp + inv_oth);
}

/// Analytic gradient of q_int_total with respect to
/// {q_tls0, d_sat, beta1, beta2, q_qp0, q_other}; the same closed forms drive
/// the fitter Jacobians.
inline std::array<double, 6> q_int_total_gradient(const LossModelParams& p,
                                                  double n_ph,
                                                  double temperature_k)
{
    const double xi = thermal_photon_ratio(p.f0, temperature_k);
    const double t  = std::tanh(xi);
    const double s  = n_ph * p.beta2 / tls_saturation_scale(p.d_sat, p.beta1, temperature_k);
    const double g  = 1.0 + s * t;
    const double u_tls = std::isfinite(g) ? t / (p.q_tls0 * std::sqrt(g)) : 0.0;
    const double u_qp  = 1.0 / q_qp(p, temperature_k);
    const double u_oth = 1.0 / p.q_other;
    const double q     = 1.0 / (detail::clamp_inv(u_tls) + detail::clamp_inv(u_qp) +
                                detail::clamp_inv(u_oth));

    std::array<double, 6> dinv{};
    if (std::isfinite(g) && detail::clamp_inv(u_tls) != 0.0) {
        const double du_ds = -u_tls * t / (2.0 * g);
        dinv[0] = -u_tls / p.q_tls0;
        dinv[1] = du_ds * (-s / p.d_sat);
        dinv[2] = du_ds * (-s * std::log(temperature_k));
        dinv[3] = du_ds * (s / p.beta2);
    }
    if (detail::clamp_inv(u_qp) != 0.0) dinv[4] = -u_qp / p.q_qp0;
    if (detail::clamp_inv(u_oth) != 0.0) dinv[5] = -u_oth / p.q_other;

    std::array<double, 6> grad{};
    for (int i = 0; i < 6; ++i) grad[i] = -q * q * dinv[i];
    return grad;
}

/// Q_int(n_ph) of the power-saturation model at the params' fixed temperature.
inline double q_int_power(const PowerLawTlsParams& p, double n_ph)
{
    if (!(n_ph >= 0.0))
        throw std::invalid_argument("q_int_power: requires n_ph >= 0");
    const double xi = thermal_photon_ratio(p.f0, p.temperature);
    const double inv_tls =
        std::tanh(xi) / (p.q_tls0 * std::pow(1.0 + n_ph / p.n_c, p.beta_exp));
    return 1.0 / (detail::clamp_inv(inv_tls) + detail::clamp_inv(1.0 / p.q_other));
}

/// TLS contribution to the fractional frequency shift, df/f0.
inline double freq_shift_tls(const ShiftModelParams& p, double temperature_k)
{
    const double xi = thermal_photon_ratio(p.f0, temperature_k);
    const double bracket =
        specfun::re_digamma_half_plus_ix(xi) - std::log(xi);
    return bracket / (constants::pi * p.q_tls0);
}

/// Quasiparticle contribution to the fractional frequency shift, df/f0.
/// Nonpositive for T well below Tc (quasiparticles soften the resonator).
inline double freq_shift_qp(const ShiftModelParams& p, double temperature_k)
{
    const double omega = 2.0 * constants::pi * p.f0;
    const double d0    = gap0(p.tc);
    const auto sig     = specfun::mattis_bardeen_sigma(temperature_k, omega, d0);
    const double mag2_t = sig.sigma1 * sig.sigma1 + sig.sigma2 * sig.sigma2;
    const double mag0   = specfun::mattis_bardeen_sigma2_zero_t(omega, d0);
    const double sin_phi = sig.sigma2 / std::sqrt(mag2_t);
    return -0.5 * p.alpha_kin *
           (1.0 - sin_phi * std::sqrt(mag2_t / (mag0 * mag0)));
}

/// Total fractional frequency shift, TLS + quasiparticle terms.
inline double freq_shift_total(const ShiftModelParams& p, double temperature_k)
{
    return freq_shift_tls(p, temperature_k) + freq_shift_qp(p, temperature_k);
}

}  // namespace resq::models
