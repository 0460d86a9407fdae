#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "resq/constants.hpp"
#include "resq/levmar.hpp"

namespace resq::circlefit {

//
// Notch-type S21 model and circle-fit parameter extraction.
//
// Model:
//   S21(f) = amp e^{i alpha} e^{-2 pi i f tau}
//            * [ 1 - (Q_l/|Q_c|) e^{i phi0} / (1 + 2 i Q_l (f/f_res - 1)) ]
//
// Extraction pipeline: cable-delay estimation (edge phase slope, refined by
// minimizing the algebraic-circle residual), Taubin algebraic circle fit,
// arctangent phase-vs-frequency fit for f_res and Q_l, canonical rotation for
// phi0, then |Q_c| = Q_l amp/(2 r) and the diameter-corrected
//   1/Q_i = 1/Q_l - cos(phi0)/|Q_c|.
// A weighted least-squares refinement over all seven parameters polishes the
// algebraic seed (weights rise toward resonance, capped at 10:1).
//

using cplx = std::complex<double>;

struct ComplexTrace {
    std::vector<double> freqs_hz;  ///< strictly increasing
    std::vector<cplx> s21;
    std::optional<double> drive_power_dbm;  ///< at the chip reference plane
    std::optional<double> temperature_k;
    std::string resonator_id;
};

inline void validate(const ComplexTrace& t)
{
    if (t.freqs_hz.size() != t.s21.size())
        throw std::invalid_argument("ComplexTrace: freqs/s21 length mismatch");
    if (t.freqs_hz.size() < 20)
        throw std::invalid_argument("ComplexTrace: needs >= 20 points");
    for (std::size_t i = 1; i < t.freqs_hz.size(); ++i)
        if (!(t.freqs_hz[i] > t.freqs_hz[i - 1]))
            throw std::invalid_argument("ComplexTrace: freqs not strictly increasing");
}

struct NotchModelParams {
    double f_res;      ///< Hz
    double q_l;        ///< loaded quality factor
    double q_c_mag;    ///< |Q_c|
    double phi0;       ///< rad, impedance-mismatch rotation
    double amp;        ///< environment amplitude
    double alpha_env;  ///< rad, environment phase
    double tau;        ///< s, cable delay
};

/// Internal quality factor implied by notch parameters.
inline double q_internal(const NotchModelParams& p)
{
    return 1.0 / (1.0 / p.q_l - std::cos(p.phi0) / p.q_c_mag);
}

inline void validate(const NotchModelParams& p)
{
    if (!(p.f_res > 0.0))
        throw std::invalid_argument("NotchModelParams: f_res must be > 0");
    if (!(p.q_l > 0.0) || !(p.q_c_mag > 0.0))
        throw std::invalid_argument("NotchModelParams: quality factors must be > 0");
    if (!(p.amp > 0.0))
        throw std::invalid_argument("NotchModelParams: amp must be > 0");
    if (!(1.0 / p.q_l - std::cos(p.phi0) / p.q_c_mag > 0.0))
        throw std::invalid_argument("NotchModelParams: implied Q_i not positive");
}

/// Forward model at one frequency.
inline cplx notch_s21(const NotchModelParams& p, double f_hz)
{
    const cplx env = p.amp *
                     std::exp(cplx(0.0, p.alpha_env - 2.0 * constants::pi * f_hz * p.tau));
    const cplx dip = (p.q_l / p.q_c_mag) * std::exp(cplx(0.0, p.phi0)) /
                     (1.0 + cplx(0.0, 2.0 * p.q_l * (f_hz / p.f_res - 1.0)));
    return env * (1.0 - dip);
}

/// Synthesize a trace with additive complex Gaussian noise (std noise_sigma
/// per quadrature). Deterministic for a fixed seed.
inline ComplexTrace synth_s21(const NotchModelParams& p,
                              const std::vector<double>& freqs_hz,
                              double noise_sigma,
                              std::uint64_t seed)
{
    validate(p);
    if (freqs_hz.empty())
        throw std::invalid_argument("synth_s21: empty frequency grid");
    ComplexTrace t;
    t.freqs_hz = freqs_hz;
    t.s21.reserve(freqs_hz.size());
    for (double f : freqs_hz) t.s21.push_back(notch_s21(p, f));
    if (noise_sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, noise_sigma);
        for (auto& z : t.s21) z += cplx(gauss(rng), gauss(rng));
    }
    return t;
}

enum class FitFailure { off_resonance, degenerate_circle, non_convergence };

class circle_fit_error : public std::runtime_error {
  public:
    circle_fit_error(FitFailure why, const std::string& msg)
        : std::runtime_error(msg), why_(why)
    {
    }
    FitFailure reason() const { return why_; }

  private:
    FitFailure why_;
};

inline const char* to_string(FitFailure f)
{
    switch (f) {
        case FitFailure::off_resonance: return "off-resonance";
        case FitFailure::degenerate_circle: return "degenerate-circle";
        case FitFailure::non_convergence: return "non-convergence";
    }
    return "unknown";
}

struct CircleFitResult {
    NotchModelParams params;
    NotchModelParams param_stderr;  ///< same fields, 1-sigma errors
    double q_i = 0.0;
    double q_i_stderr = 0.0;
    double rms_residual = 0.0;  ///< rms |model - data|
    double snr = 0.0;           ///< fitted circle radius over per-quadrature noise
    int iterations = 0;
};

namespace detail {

struct Circle {
    double xc, yc, r;
};

// Taubin algebraic circle fit (Newton form on the characteristic polynomial).
inline Circle taubin_fit(const std::vector<cplx>& z)
{
    const double n = double(z.size());
    double mx = 0, my = 0;
    for (const auto& p : z) {
        mx += p.real();
        my += p.imag();
    }
    mx /= n;
    my /= n;
    double mxx = 0, myy = 0, mxy = 0, mxz = 0, myz = 0, mzz = 0;
    for (const auto& p : z) {
        const double u = p.real() - mx, v = p.imag() - my;
        const double w = u * u + v * v;
        mxx += u * u;
        myy += v * v;
        mxy += u * v;
        mxz += u * w;
        myz += v * w;
        mzz += w * w;
    }
    mxx /= n;
    myy /= n;
    mxy /= n;
    mxz /= n;
    myz /= n;
    mzz /= n;

    const double mz = mxx + myy;
    const double cov_xy = mxx * myy - mxy * mxy;
    const double a3 = 4.0 * mz;
    const double a2 = -3.0 * mz * mz - mzz;
    const double a1 = mzz * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz -
                      mz * mz * mz;
    const double a0 = mxz * mxz * myy + myz * myz * mxx -
                      mzz * cov_xy - 2.0 * mxz * myz * mxy +
                      mz * mz * cov_xy;

    double t = 0.0;  // Newton from 0 converges to the smallest positive root
    for (int it = 0; it < 64; ++it) {
        const double fval = a0 + t * (a1 + t * (a2 + t * a3));
        const double fder = a1 + t * (2.0 * a2 + 3.0 * a3 * t);
        if (fder == 0.0) break;
        const double tn = t - fval / fder;
        if (!std::isfinite(tn) || std::abs(tn - t) < 1e-14 * (std::abs(t) + 1e-30)) {
            t = tn;
            break;
        }
        t = tn;
    }
    const double det = t * t - t * mz + cov_xy;
    if (det == 0.0 || !std::isfinite(det))
        throw circle_fit_error(FitFailure::degenerate_circle,
                               "algebraic circle fit is singular");
    const double uc = (mxz * (myy - t) - myz * mxy) / (2.0 * det);
    const double vc = (myz * (mxx - t) - mxz * mxy) / (2.0 * det);
    const double r2 = uc * uc + vc * vc + mz;
    if (!(r2 > 0.0) || !std::isfinite(r2))
        throw circle_fit_error(FitFailure::degenerate_circle,
                               "algebraic circle fit returned no circle");
    return {uc + mx, vc + my, std::sqrt(r2)};
}

inline double circle_rms(const std::vector<cplx>& z, const Circle& c)
{
    double s = 0.0;
    for (const auto& p : z) {
        const double d = std::abs(p - cplx(c.xc, c.yc)) - c.r;
        s += d * d;
    }
    return std::sqrt(s / double(z.size()));
}

inline std::vector<cplx> remove_delay(const ComplexTrace& t, double tau)
{
    std::vector<cplx> z(t.s21.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = t.s21[i] *
               std::exp(cplx(0.0, 2.0 * constants::pi * t.freqs_hz[i] * tau));
    return z;
}

// least-squares slope of y(x) over [i0, i1)
inline double segment_slope(const std::vector<double>& x,
                            const std::vector<double>& y, std::size_t i0,
                            std::size_t i1)
{
    const double n = double(i1 - i0);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = i0; i < i1; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

inline std::vector<double> unwrapped_phase(const std::vector<cplx>& z)
{
    std::vector<double> ph(z.size());
    double prev = std::arg(z[0]);
    ph[0] = prev;
    for (std::size_t i = 1; i < z.size(); ++i) {
        double a = std::arg(z[i]);
        while (a - prev > constants::pi) a -= 2.0 * constants::pi;
        while (a - prev < -constants::pi) a += 2.0 * constants::pi;
        ph[i] = a;
        prev = a;
    }
    return ph;
}

template <class F>
double golden_min(F&& f, double a, double b, int iters)
{
    const double g = 0.6180339887498949;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

// robust per-quadrature noise estimate from adjacent-point differences
inline double noise_from_differences(const std::vector<cplx>& z)
{
    std::vector<double> d;
    d.reserve(z.size() - 1);
    for (std::size_t i = 1; i < z.size(); ++i) d.push_back(std::abs(z[i] - z[i - 1]));
    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
    // |diff| of two iid complex-Gaussian points: Rayleigh, median sqrt(2 ln 2) * sigma*sqrt(2)
    return d[d.size() / 2] / 1.6651092223153954;
}

inline double wrap_angle(double a)
{
    while (a > constants::pi) a -= 2.0 * constants::pi;
    while (a <= -constants::pi) a += 2.0 * constants::pi;
    return a;
}

}  // namespace detail

/// Circle-fit extraction of notch parameters from a complex trace.
/// Throws circle_fit_error with a distinct reason for off-resonance traces,
/// degenerate circles (radius < 5x noise), and non-convergence.
inline CircleFitResult fit_circle(const ComplexTrace& trace)
{
    using namespace detail;
    validate(trace);
    const auto& f = trace.freqs_hz;
    const std::size_t n = f.size();
    const double f_lo = f.front(), f_hi = f.back();
    const double span = f_hi - f_lo;
    const double f_center = 0.5 * (f_lo + f_hi);

    const double sigma_n = noise_from_differences(trace.s21);

    // off-resonance gate: the |S21| dip must rise above the noise
    {
        std::vector<double> mag(n);
        for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(trace.s21[i]);
        std::size_t edge = std::max<std::size_t>(2, n / 10);
        std::vector<double> base;
        base.insert(base.end(), mag.begin(), mag.begin() + edge);
        base.insert(base.end(), mag.end() - edge, mag.end());
        std::nth_element(base.begin(), base.begin() + base.size() / 2, base.end());
        const double baseline = base[base.size() / 2];
        const double dip = baseline - *std::min_element(mag.begin(), mag.end());
        if (!(dip > 5.0 * sigma_n))
            throw circle_fit_error(FitFailure::off_resonance,
                                   "no resonance dip above the noise floor");
    }

    // cable delay: edge phase slopes (left and right separately, so the
    // estimate never unwraps through the notch), then residual minimization
    const std::size_t edge = std::max<std::size_t>(3, n / 10);
    double tau0;
    {
        const auto ph = unwrapped_phase(trace.s21);
        const double sl = segment_slope(f, ph, 0, edge);
        const double sr = segment_slope(f, ph, n - edge, n);
        tau0 = -0.5 * (sl + sr) / (2.0 * constants::pi);
    }
    auto rms_of_tau = [&](double tau) {
        const auto z = remove_delay(trace, tau);
        try {
            return circle_rms(z, taubin_fit(z));
        } catch (const circle_fit_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    const double w_tau = 0.5 / span;
    double tau_hat = golden_min(rms_of_tau, tau0 - w_tau, tau0 + w_tau, 48);

    auto z = remove_delay(trace, tau_hat);
    Circle circ = taubin_fit(z);
    if (!(circ.r > 5.0 * sigma_n))
        throw circle_fit_error(FitFailure::degenerate_circle,
                               "fitted circle radius below 5x noise");

    // phase-vs-frequency fit about the circle center
    std::vector<cplx> rel(n);
    for (std::size_t i = 0; i < n; ++i) rel[i] = z[i] - cplx(circ.xc, circ.yc);
    const auto theta = unwrapped_phase(rel);

    // initial f_res: farthest point from the off-resonant edge cluster
    cplx z_edge(0.0, 0.0);
    for (std::size_t i = 0; i < edge; ++i) z_edge += z[i] + z[n - 1 - i];
    z_edge /= double(2 * edge);
    std::size_t i_res = 0;
    double dist_best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        int cnt = 0;
        for (std::size_t j = (i >= 2 ? i - 2 : 0); j <= std::min(n - 1, i + 2); ++j, ++cnt)
            d += std::abs(z[j] - z_edge);
        d /= cnt;
        if (d > dist_best) {
            dist_best = d;
            i_res = i;
        }
    }
    double f_res0 = f[i_res];

    // initial Q_l from the +-90 degree phase points
    double q_l0 = 4.0 * f_res0 / span;
    {
        const double th_res = theta[i_res];
        std::size_t il = i_res, ir = i_res;
        while (il > 0 && std::abs(theta[il] - th_res) < 0.5 * constants::pi) --il;
        while (ir + 1 < n && std::abs(theta[ir] - th_res) < 0.5 * constants::pi) ++ir;
        if (ir > il && (std::abs(theta[il] - th_res) >= 0.5 * constants::pi ||
                        std::abs(theta[ir] - th_res) >= 0.5 * constants::pi)) {
            const double df90 = 0.5 * (f[ir] - f[il]);
            if (df90 > 0.0) q_l0 = f_res0 / (2.0 * df90);
        }
    }

    levmar::ResidualFn phase_resid = [&](const Eigen::VectorXd& x) {
        const double th0 = x[0];
        const double ql = std::exp(x[1]);
        const double fr = f_center + x[2] * span;
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i)
            r[i] = theta[i] - (th0 + 2.0 * std::atan(2.0 * ql * (1.0 - f[i] / fr)));
        return r;
    };
    levmar::Options popt;
    popt.diag_floor_rel = 1e-10;  // all phase-fit coordinates are O(1)-scaled
    popt.lower = Eigen::Vector3d(-20.0, std::log(10.0), -0.75);
    popt.upper = Eigen::Vector3d(20.0, std::log(1e12), 0.75);
    Eigen::Vector3d px(theta[i_res], std::log(q_l0), (f_res0 - f_center) / span);
    auto prep = levmar::minimize(phase_resid, px, popt);
    double theta0 = prep.params[0];
    double q_l = std::exp(prep.params[1]);
    double f_res = f_center + prep.params[2] * span;
    if (!(f_res > f_lo && f_res < f_hi))
        throw circle_fit_error(FitFailure::off_resonance,
                               "phase fit places the resonance outside the trace");

    // canonical positions: resonance and off-resonant points on the circle
    const cplx c0(circ.xc, circ.yc);
    const cplx p_res = c0 + circ.r * std::exp(cplx(0.0, theta0));
    const cplx p_off = c0 - circ.r * std::exp(cplx(0.0, theta0));
    double amp = std::abs(p_off);
    double alpha_env = std::arg(p_off);
    double phi0 = wrap_angle(std::arg(p_off - p_res) - alpha_env);
    double q_c_mag = q_l * amp / (2.0 * circ.r);

    // weighted full-model refinement; weights rise toward resonance, 10:1 cap
    const double w_floor = span / 18.0;
    std::vector<double> wts(n);
    for (std::size_t i = 0; i < n; ++i)
        wts[i] = w_floor / (std::abs(f[i] - f_res) + w_floor);

    // Internal refinement coordinates:
    //  - delay phase referenced to the trace center (alpha_c = alpha - 2 pi
    //    f_center tau), otherwise dS/dtau ~ f is nearly collinear with
    //    dS/dalpha since span << f_center;
    //  - (Q_i, Q_c) instead of (Q_l, Q_c), which keeps the diameter-corrected
    //    Q_i positive by construction even when Q_i >> Q_l makes the
    //    subtraction 1/Q_l - cos(phi0)/|Q_c| noise-dominated.
    auto decode = [&](const Eigen::VectorXd& x) {
        NotchModelParams p;
        p.f_res = f_center + x[0] * span;
        const double qi = std::exp(x[1]);
        p.q_c_mag = std::exp(x[2]);
        p.phi0 = x[3];
        p.q_l = 1.0 / (1.0 / qi + std::cos(p.phi0) / p.q_c_mag);
        p.amp = std::exp(x[4]);
        p.tau = x[6] / span;
        p.alpha_env = x[5] + 2.0 * constants::pi * f_center * p.tau;
        return p;
    };
    levmar::ResidualFn full_resid = [&](const Eigen::VectorXd& x) {
        const NotchModelParams p = decode(x);
        Eigen::VectorXd r(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            const cplx d = (notch_s21(p, f[i]) - trace.s21[i]) * wts[i];
            r[2 * i] = d.real();
            r[2 * i + 1] = d.imag();
        }
        return r;
    };
    double inv_qi0 = 1.0 / q_l - std::cos(phi0) / q_c_mag;
    const double q_i0 =
        inv_qi0 > 1e-11 ? std::min(1.0 / inv_qi0, 1e11) : 1e11;
    levmar::Options fopt;
    fopt.diag_floor_rel = 1e-10;  // refinement coordinates are O(1)-scaled
    fopt.lower.resize(7);
    fopt.upper.resize(7);
    fopt.lower << -0.75, std::log(10.0), std::log(10.0), -constants::pi,
        std::log(1e-9), -7.0, (tau_hat - 2.0 * w_tau) * span;
    fopt.upper << 0.75, std::log(1e12), std::log(1e12), constants::pi,
        std::log(1e9), 7.0, (tau_hat + 2.0 * w_tau) * span;
    Eigen::VectorXd fx(7);
    fx << (f_res - f_center) / span, std::log(q_i0), std::log(q_c_mag), phi0,
        std::log(amp),
        wrap_angle(alpha_env - 2.0 * constants::pi * f_center * tau_hat),
        tau_hat * span;
    auto frep = levmar::minimize(full_resid, fx, fopt);
    if (!frep.converged)
        throw circle_fit_error(FitFailure::non_convergence,
                               "full-model refinement did not converge");

    CircleFitResult res;
    res.params = decode(frep.params);
    res.params.phi0 = wrap_angle(res.params.phi0);
    res.params.alpha_env = wrap_angle(res.params.alpha_env);
    res.q_i = std::exp(frep.params[1]);

    // parameter errors back to physical units
    const double qi_err = frep.stderrs[1] * res.q_i;
    res.param_stderr.f_res = frep.stderrs[0] * span;
    res.param_stderr.q_c_mag = frep.stderrs[2] * res.params.q_c_mag;
    res.param_stderr.phi0 = frep.stderrs[3];
    res.param_stderr.amp = frep.stderrs[4] * res.params.amp;
    res.param_stderr.tau = frep.stderrs[6] / span;
    res.param_stderr.alpha_env =
        std::hypot(frep.stderrs[5],
                   2.0 * constants::pi * f_center * res.param_stderr.tau);
    res.q_i_stderr = qi_err;
    // 1/ql = 1/qi + cos(phi0)/qc: propagate without covariances
    {
        const double ql = res.params.q_l, qc = res.params.q_c_mag;
        const double var_inv =
            std::pow(qi_err / (res.q_i * res.q_i), 2) +
            std::pow(std::cos(res.params.phi0) * res.param_stderr.q_c_mag / (qc * qc), 2) +
            std::pow(std::sin(res.params.phi0) * res.param_stderr.phi0 / qc, 2);
        res.param_stderr.q_l = ql * ql * std::sqrt(var_inv);
    }

    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        ss += std::norm(notch_s21(res.params, f[i]) - trace.s21[i]);
    res.rms_residual = std::sqrt(ss / double(n));
    const double r_fit = res.params.amp * res.params.q_l / (2.0 * res.params.q_c_mag);
    res.snr = sigma_n > 0.0 ? r_fit / sigma_n
                            : std::numeric_limits<double>::infinity();
    res.iterations = prep.iterations + frep.iterations;
    return res;
}

/// Mean photon number in a quarter-wave notch resonator at chip power
/// P = applied - attenuation (dBm):  <n> = 2 Q_l^2 / (|Q_c| hbar w^2) * P_watt.
inline double photons_in_resonator(const CircleFitResult& fit,
                                   double applied_power_dbm,
                                   double line_attenuation_db)
{
    if (!std::isfinite(applied_power_dbm) || !std::isfinite(line_attenuation_db))
        throw std::invalid_argument("photons_in_resonator: missing power metadata");
    if (!(fit.params.f_res > 0.0))
        throw std::invalid_argument("photons_in_resonator: invalid fit result");
    const double p_chip_w =
        1e-3 * std::pow(10.0, (applied_power_dbm - line_attenuation_db) / 10.0);
    const double omega = 2.0 * constants::pi * fit.params.f_res;
    return 2.0 * fit.params.q_l * fit.params.q_l /
           (fit.params.q_c_mag * constants::hbar * omega * omega) * p_chip_w;
}

}  // namespace resq::circlefit
