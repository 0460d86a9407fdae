#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "resq/levmar.hpp"
#include "resq/loss_models.hpp"

namespace resq::sweepfit {

//
// The three fitting campaigns over (photon number, temperature) sweep data:
//
//   fit_power_sweep  -- Q_int(n_ph) at fixed T, 4 parameters {Q_TLS0, n_c, beta, Q_other}
//   fit_qint_vs_T    -- Q_int(n_ph, T), 6 parameters {Q_TLS0, D, beta1, beta2, Q_QP0, Q_other}
//   fit_freq_shift   -- df(T)/f0, 2 parameters {Q_TLS0, alpha}
//
// Q residuals are taken in log space (the data span several decades of Q);
// frequency-shift residuals are linear. Fits run, by default, on
// log-transformed parameters with box bounds, from multiple deterministic
// log-uniform starts (the six-parameter landscape is multimodal). Note that
// the saturation term depends on beta2 and D only through beta2/D, so those
// two are individually unidentifiable by construction; the degeneracy shows
// up in the reported covariance condition number.
//

struct QPoint {
    double n_ph;
    double t_k;
    double q_i;
    double q_i_sigma;
};

struct ShiftPoint {
    double t_k;
    double df_f0;
    double sigma;
};

struct SweepDataset {
    std::string resonator_id;
    double f0_hz = 0.0;
    double tc_k = 0.0;
    std::vector<QPoint> points;            // loss-fit data
    std::vector<ShiftPoint> shift_points;  // shift-fit data
};

struct FitQuality {
    double chi2_reduced = 0.0;
    int iterations = 0;
    bool converged = false;
    double covariance_condition = 0.0;
    std::vector<std::string> flags;
};

struct PowerFitReport {
    models::PowerLawTlsParams params;
    double q_tls0_stderr = 0.0;
    double n_c_stderr = 0.0;
    double beta_stderr = 0.0;
    double q_other_stderr = 0.0;
    FitQuality quality;
};

struct TempFitReport {
    models::LossModelParams params;
    // stderr per fitted parameter, order {q_tls0, d_sat, beta1, beta2, q_qp0, q_other}
    std::array<double, 6> stderrs{};
    FitQuality quality;
};

struct ShiftFitReport {
    models::ShiftModelParams params;
    double q_tls0_stderr = 0.0;
    double alpha_stderr = 0.0;
    FitQuality quality;
};

struct FitOptions {
    int multistarts = 12;        // >= 8 for the six-parameter fit
    std::uint64_t seed = 12345;  // start-sampling seed (deterministic)
    bool log_params = true;      // fit log-transformed parameters
    levmar::Options lm;          // termination settings (defaults per levmar)
};

// fit bounds (envelopes around the measured parameter ranges)
namespace bounds {
inline constexpr double q_lo = 1e4, q_hi = 1e11;
inline constexpr double d_lo = 1e-2, d_hi = 1e4;
inline constexpr double beta1_lo = 0.05, beta1_hi = 50.0;
inline constexpr double beta2_lo = 1e-2, beta2_hi = 1e3;
inline constexpr double nc_lo = 1e-2, nc_hi = 1e6;
inline constexpr double beta_exp_lo = 1e-4, beta_exp_hi = 1.0;
inline constexpr double alpha_lo = 0.0, alpha_hi = 0.5;
}  // namespace bounds

namespace detail {

// residual/jacobian pair with its box, shared by the fitters and the
// gradient-check tests
struct BoundModel {
    levmar::ResidualFn resid;
    levmar::JacobianFn jac;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

inline void require_sigmas(const std::vector<QPoint>& pts)
{
    for (const auto& p : pts)
        if (!(p.q_i_sigma > 0.0) || !(p.q_i > 0.0))
            throw std::invalid_argument("SweepDataset: q_i and q_i_sigma must be > 0");
}

// power model: u(n) = tanh(xi_T)/(Q0 (1+n/nc)^beta) + 1/Qoth, log residuals
// internal order {q_tls0, n_c, beta, q_other}
inline BoundModel make_power_model(const SweepDataset& data, double t_k, bool logp)
{
    struct Pre {
        std::vector<double> n, lnq, sig;
        double tanh_xi;
        bool logp;
    };
    auto pre = std::make_shared<Pre>();
    pre->tanh_xi = std::tanh(models::thermal_photon_ratio(data.f0_hz, t_k));
    pre->logp = logp;
    for (const auto& p : data.points) {
        pre->n.push_back(p.n_ph);
        pre->lnq.push_back(std::log(p.q_i));
        pre->sig.push_back(p.q_i_sigma / p.q_i);
    }
    auto decode = [](const Pre& c, const Eigen::VectorXd& x) {
        std::array<double, 4> p;
        for (int j = 0; j < 4; ++j) p[j] = c.logp ? std::exp(x[j]) : x[j];
        return p;
    };
    BoundModel m;
    m.resid = [pre, decode](const Eigen::VectorXd& x) {
        const auto [q0, nc, be, qo] = decode(*pre, x);
        Eigen::VectorXd r(pre->n.size());
        for (std::size_t i = 0; i < pre->n.size(); ++i) {
            const double u =
                pre->tanh_xi / (q0 * std::pow(1.0 + pre->n[i] / nc, be)) + 1.0 / qo;
            r[i] = (-std::log(u) - pre->lnq[i]) / pre->sig[i];
        }
        return r;
    };
    m.jac = [pre, decode](const Eigen::VectorXd& x) {
        const auto [q0, nc, be, qo] = decode(*pre, x);
        Eigen::MatrixXd jac(pre->n.size(), 4);
        for (std::size_t i = 0; i < pre->n.size(); ++i) {
            const double n = pre->n[i];
            const double term = pre->tanh_xi / (q0 * std::pow(1.0 + n / nc, be));
            const double u = term + 1.0 / qo;
            const std::array<double, 4> dudp = {
                -term / q0,
                term * be * n / (nc * (nc + n)),
                -term * std::log1p(n / nc),
                -1.0 / (qo * qo),
            };
            const std::array<double, 4> pv = {q0, nc, be, qo};
            for (int j = 0; j < 4; ++j) {
                double d = -dudp[j] / (u * pre->sig[i]);
                if (pre->logp) d *= pv[j];
                jac(i, j) = d;
            }
        }
        return jac;
    };
    Eigen::Vector4d lo(bounds::q_lo, bounds::nc_lo, bounds::beta_exp_lo, bounds::q_lo);
    Eigen::Vector4d hi(bounds::q_hi, bounds::nc_hi, bounds::beta_exp_hi, bounds::q_hi);
    m.lo = logp ? lo.array().log().matrix() : lo;
    m.hi = logp ? hi.array().log().matrix() : hi;
    return m;
}

// six-parameter model: per-point constants never touch the fitted parameters
// internal order {q_tls0, d_sat, beta1, beta2, q_qp0, q_other}
inline BoundModel make_temp_model(const SweepDataset& data, bool logp)
{
    struct Pre {
        std::vector<double> n, ln_t, tanh_xi, qp_base, lnq, sig;
        bool logp;
    };
    auto pre = std::make_shared<Pre>();
    pre->logp = logp;
    const double d0_over_k = models::gap0(data.tc_k) / constants::k_boltzmann;
    for (const auto& p : data.points) {
        pre->n.push_back(p.n_ph);
        pre->ln_t.push_back(std::log(p.t_k));
        const double xi = models::thermal_photon_ratio(data.f0_hz, p.t_k);
        pre->tanh_xi.push_back(std::tanh(xi));
        const double sinh_k0 =
            0.5 * (-std::expm1(-2.0 * xi)) * specfun::bessel_k0e(xi);
        pre->qp_base.push_back(std::exp(-d0_over_k / p.t_k) * sinh_k0);
        pre->lnq.push_back(std::log(p.q_i));
        pre->sig.push_back(p.q_i_sigma / p.q_i);
    }
    auto decode = [](const Pre& c, const Eigen::VectorXd& x) {
        std::array<double, 6> p;
        for (int j = 0; j < 6; ++j) p[j] = c.logp ? std::exp(x[j]) : x[j];
        return p;
    };
    BoundModel m;
    m.resid = [pre, decode](const Eigen::VectorXd& x) {
        const auto p = decode(*pre, x);
        Eigen::VectorXd r(pre->n.size());
        for (std::size_t i = 0; i < pre->n.size(); ++i) {
            const double s =
                pre->n[i] * p[3] / p[1] * std::exp(-p[2] * pre->ln_t[i]);
            const double u =
                pre->tanh_xi[i] / (p[0] * std::sqrt(1.0 + s * pre->tanh_xi[i])) +
                pre->qp_base[i] / p[4] + 1.0 / p[5];
            r[i] = (-std::log(u) - pre->lnq[i]) / pre->sig[i];
        }
        return r;
    };
    m.jac = [pre, decode](const Eigen::VectorXd& x) {
        const auto p = decode(*pre, x);
        Eigen::MatrixXd jac(pre->n.size(), 6);
        for (std::size_t i = 0; i < pre->n.size(); ++i) {
            const double th = pre->tanh_xi[i];
            const double s = pre->n[i] * p[3] / p[1] * std::exp(-p[2] * pre->ln_t[i]);
            const double g = 1.0 + s * th;
            const double u_tls = th / (p[0] * std::sqrt(g));
            const double u_qp = pre->qp_base[i] / p[4];
            const double u = u_tls + u_qp + 1.0 / p[5];
            const double du_ds = -u_tls * th / (2.0 * g);
            const std::array<double, 6> dudp = {
                -u_tls / p[0],
                du_ds * (-s / p[1]),
                du_ds * (-s * pre->ln_t[i]),
                du_ds * (s / p[3]),
                -u_qp / p[4],
                -1.0 / (p[5] * p[5]),
            };
            for (int j = 0; j < 6; ++j) {
                double d = -dudp[j] / (u * pre->sig[i]);
                if (pre->logp) d *= p[j];
                jac(i, j) = d;
            }
        }
        return jac;
    };
    Eigen::VectorXd lo(6), hi(6);
    lo << bounds::q_lo, bounds::d_lo, bounds::beta1_lo, bounds::beta2_lo,
        bounds::q_lo, bounds::q_lo;
    hi << bounds::q_hi, bounds::d_hi, bounds::beta1_hi, bounds::beta2_hi,
        bounds::q_hi, bounds::q_hi;
    m.lo = logp ? Eigen::VectorXd(lo.array().log()) : lo;
    m.hi = logp ? Eigen::VectorXd(hi.array().log()) : hi;
    return m;
}

// shift model: model(T) = B_T/(pi Q0) - (alpha/2) C_T, linear residuals
// internal order {q_tls0 (log when logp), alpha (always linear)}
inline BoundModel make_shift_model(const SweepDataset& data, bool logp)
{
    struct Pre {
        std::vector<double> b, c, y, sig;
        bool logp;
    };
    auto pre = std::make_shared<Pre>();
    pre->logp = logp;
    const double d0 = models::gap0(data.tc_k);
    const double omega = 2.0 * constants::pi * data.f0_hz;
    const double mag0 = specfun::mattis_bardeen_sigma2_zero_t(omega, d0);
    for (const auto& pt : data.shift_points) {
        if (!(pt.sigma > 0.0))
            throw std::invalid_argument("fit_freq_shift: sigmas must be > 0");
        const double xi = models::thermal_photon_ratio(data.f0_hz, pt.t_k);
        pre->b.push_back(specfun::re_digamma_half_plus_ix(xi) - std::log(xi));
        const auto sg = specfun::mattis_bardeen_sigma(pt.t_k, omega, d0);
        const double mag2 = sg.sigma1 * sg.sigma1 + sg.sigma2 * sg.sigma2;
        const double sin_phi = sg.sigma2 / std::sqrt(mag2);
        pre->c.push_back(1.0 - sin_phi * std::sqrt(mag2) / mag0);
        pre->y.push_back(pt.df_f0);
        pre->sig.push_back(pt.sigma);
    }
    BoundModel m;
    m.resid = [pre](const Eigen::VectorXd& x) {
        const double q0 = pre->logp ? std::exp(x[0]) : x[0];
        Eigen::VectorXd r(pre->b.size());
        for (std::size_t i = 0; i < pre->b.size(); ++i)
            r[i] = (pre->b[i] / (constants::pi * q0) - 0.5 * x[1] * pre->c[i] -
                    pre->y[i]) /
                   pre->sig[i];
        return r;
    };
    m.jac = [pre](const Eigen::VectorXd& x) {
        const double q0 = pre->logp ? std::exp(x[0]) : x[0];
        Eigen::MatrixXd jac(pre->b.size(), 2);
        for (std::size_t i = 0; i < pre->b.size(); ++i) {
            double dq = -pre->b[i] / (constants::pi * q0 * q0);
            if (pre->logp) dq *= q0;
            jac(i, 0) = dq / pre->sig[i];
            jac(i, 1) = -0.5 * pre->c[i] / pre->sig[i];
        }
        return jac;
    };
    m.lo = Eigen::Vector2d(logp ? std::log(bounds::q_lo) : bounds::q_lo,
                           bounds::alpha_lo);
    m.hi = Eigen::Vector2d(logp ? std::log(bounds::q_hi) : bounds::q_hi,
                           bounds::alpha_hi);
    return m;
}

// run bounded LM from several deterministic starts; keep the strictly best
// cost (ties keep the earlier start)
inline levmar::FitReport multistart_minimize(const BoundModel& model,
                                             const FitOptions& opt)
{
    levmar::Options lm = opt.lm;
    lm.lower = model.lo;
    lm.upper = model.hi;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::optional<levmar::FitReport> best;
    const int starts = std::max(1, opt.multistarts);
    // start sampling: log-uniform across wide positive ranges (the fit
    // coordinates themselves may be linear or log)
    auto draw = [&](double lo, double hi) {
        if (lo > 0.0 && hi / lo > 100.0)
            return lo * std::exp(uni(rng) * std::log(hi / lo));
        return lo + uni(rng) * (hi - lo);
    };
    auto center = [](double lo, double hi) {
        if (lo > 0.0 && hi / lo > 100.0) return std::sqrt(lo * hi);
        return 0.5 * (lo + hi);
    };
    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd x0(model.lo.size());
        if (s == 0) {
            for (Eigen::Index j = 0; j < model.lo.size(); ++j)
                x0[j] = center(model.lo[j], model.hi[j]);
        } else {
            for (Eigen::Index j = 0; j < model.lo.size(); ++j)
                x0[j] = draw(model.lo[j], model.hi[j]);
        }
        levmar::FitReport rep;
        try {
            rep = levmar::minimize(model.resid, x0, lm, model.jac);
        } catch (const std::invalid_argument&) {
            continue;  // residual non-finite at this start
        }
        if (!best || rep.chi2 < best->chi2) best = rep;
    }
    if (!best) throw std::runtime_error("sweepfit: every start failed");
    return *best;
}

inline void fill_quality(FitQuality& q, const levmar::FitReport& rep)
{
    q.chi2_reduced = rep.chi2_reduced;
    q.iterations = rep.iterations;
    q.converged = rep.converged;
    q.covariance_condition = rep.covariance_condition;
}

}  // namespace detail

/// Fit the power-saturation model to Q_int(n_ph) data taken at (approximately)
/// fixed temperature T. Residuals are log(Q_model) - log(Q_data), weighted by
/// the per-point relative uncertainty.
inline PowerFitReport fit_power_sweep(const SweepDataset& data, double t_k,
                                      const FitOptions& opt = {})
{
    if (data.points.size() < 8)
        throw std::invalid_argument("fit_power_sweep: needs >= 8 points");
    if (!(t_k > 0.0) || !(data.f0_hz > 0.0))
        throw std::invalid_argument("fit_power_sweep: needs T > 0 and f0 > 0");
    detail::require_sigmas(data.points);

    const auto model = detail::make_power_model(data, t_k, opt.log_params);
    const auto rep = detail::multistart_minimize(model, opt);

    PowerFitReport out;
    const bool logp = opt.log_params;
    auto val = [&](int j) { return logp ? std::exp(rep.params[j]) : rep.params[j]; };
    auto err = [&](int j) { return logp ? rep.stderrs[j] * val(j) : rep.stderrs[j]; };
    out.params = {val(0), val(1), val(2), val(3), t_k, data.f0_hz};
    out.q_tls0_stderr = err(0);
    out.n_c_stderr = err(1);
    out.beta_stderr = err(2);
    out.q_other_stderr = err(3);
    detail::fill_quality(out.quality, rep);

    double n_min = 1e300, n_max = 0.0;
    for (const auto& p : data.points) {
        n_min = std::min(n_min, std::max(p.n_ph, 1e-3));
        n_max = std::max(n_max, p.n_ph);
    }
    if (n_max / n_min < 1e3)
        out.quality.flags.push_back("low-dynamic-range");  // < 3 decades of n_ph
    return out;
}

/// Joint six-parameter fit of the full loss model over (n_ph, T) data.
/// Multi-start bounded LM; Tc and f0 are fixed dataset metadata.
inline TempFitReport fit_qint_vs_T(const SweepDataset& data, const FitOptions& opt = {})
{
    if (data.points.size() < 12)
        throw std::invalid_argument("fit_qint_vs_T: needs >= 12 points");
    if (!(data.f0_hz > 0.0) || !(data.tc_k > 0.0))
        throw std::invalid_argument("fit_qint_vs_T: needs f0 and tc metadata");
    detail::require_sigmas(data.points);
    {
        std::vector<double> ts;
        for (const auto& p : data.points) {
            bool seen = false;
            for (double t : ts)
                if (std::abs(t - p.t_k) <= 1e-9 * t) seen = true;
            if (!seen) ts.push_back(p.t_k);
        }
        if (ts.size() < 3)
            throw std::invalid_argument("fit_qint_vs_T: needs >= 3 distinct temperatures");
    }

    const auto model = detail::make_temp_model(data, opt.log_params);
    FitOptions mo = opt;
    mo.multistarts = std::max(opt.multistarts, 8);
    const auto rep = detail::multistart_minimize(model, mo);

    TempFitReport out;
    const bool logp = opt.log_params;
    auto val = [&](int j) { return logp ? std::exp(rep.params[j]) : rep.params[j]; };
    out.params = {val(0), val(1), val(2), val(3), val(4), val(5), data.tc_k, data.f0_hz};
    for (int j = 0; j < 6; ++j)
        out.stderrs[j] = logp ? rep.stderrs[j] * val(j) : rep.stderrs[j];
    detail::fill_quality(out.quality, rep);

    // if the quasiparticle channel never contributes visibly, Q_QP0 is only a
    // lower bound
    double qp_weight = 0.0;
    const double d0_over_k = models::gap0(data.tc_k) / constants::k_boltzmann;
    for (const auto& p : data.points) {
        const double xi = models::thermal_photon_ratio(data.f0_hz, p.t_k);
        const double sinh_k0 =
            0.5 * (-std::expm1(-2.0 * xi)) * specfun::bessel_k0e(xi);
        const double u_qp =
            std::exp(-d0_over_k / p.t_k) * sinh_k0 / out.params.q_qp0;
        const double u_tot = 1.0 / models::q_int_total(out.params, p.n_ph, p.t_k);
        qp_weight = std::max(qp_weight, u_qp / u_tot);
    }
    if (qp_weight < 0.01) out.quality.flags.push_back("qp-lower-bound-only");
    return out;
}

/// Two-parameter {Q_TLS0, alpha} fit of the frequency-shift model to
/// df/f0 versus temperature.
inline ShiftFitReport fit_freq_shift(const SweepDataset& data, const FitOptions& opt = {})
{
    if (data.shift_points.size() < 3)
        throw std::invalid_argument("fit_freq_shift: needs >= 3 points");
    if (!(data.f0_hz > 0.0) || !(data.tc_k > 0.0))
        throw std::invalid_argument("fit_freq_shift: needs f0 and tc metadata");

    const auto model = detail::make_shift_model(data, opt.log_params);
    FitOptions so = opt;
    so.multistarts = std::max(2, std::min(opt.multistarts, 6));
    const auto rep = detail::multistart_minimize(model, so);

    ShiftFitReport out;
    const double q0 = opt.log_params ? std::exp(rep.params[0]) : rep.params[0];
    // alpha may legitimately sit at the 0 bound; reported as fitted
    out.params = {q0, rep.params[1], data.tc_k, data.f0_hz};
    out.q_tls0_stderr = opt.log_params ? rep.stderrs[0] * q0 : rep.stderrs[0];
    out.alpha_stderr = rep.stderrs[1];
    detail::fill_quality(out.quality, rep);

    double t_max = 0.0;
    for (const auto& pt : data.shift_points) t_max = std::max(t_max, pt.t_k);
    if (t_max < 0.9) out.quality.flags.push_back("narrow-temperature-range");
    return out;
}

/// Comparison record of Q_TLS0 estimates from the three models.
struct TlsEstimate {
    std::string model;
    double q_tls0 = 0.0;
    double stderr_ = 0.0;
};

struct TlsComparison {
    std::vector<TlsEstimate> estimates;
    double max_pairwise_ratio = 0.0;  // >= 1 when at least two estimates exist
    bool inconsistency_warning = false;
    bool partial = false;
};

inline TlsComparison compare_tls_estimates(const std::optional<TempFitReport>& temp,
                                           const std::optional<ShiftFitReport>& shift,
                                           const std::optional<PowerFitReport>& power)
{
    TlsComparison cmp;
    if (temp)
        cmp.estimates.push_back(
            {"qint-vs-temperature", temp->params.q_tls0, temp->stderrs[0]});
    if (shift)
        cmp.estimates.push_back(
            {"freq-shift", shift->params.q_tls0, shift->q_tls0_stderr});
    if (power)
        cmp.estimates.push_back(
            {"qint-vs-power", power->params.q_tls0, power->q_tls0_stderr});
    cmp.partial = cmp.estimates.size() < 3;
    for (std::size_t i = 0; i < cmp.estimates.size(); ++i)
        for (std::size_t j = i + 1; j < cmp.estimates.size(); ++j) {
            const double a = cmp.estimates[i].q_tls0, b = cmp.estimates[j].q_tls0;
            cmp.max_pairwise_ratio =
                std::max(cmp.max_pairwise_ratio, std::max(a / b, b / a));
        }
    cmp.inconsistency_warning = cmp.max_pairwise_ratio > 2.0;
    return cmp;
}

//
// synthetic dataset builders (round-trip fixtures and the CLI `synth` command)
//

inline SweepDataset synth_temp_sweep(const models::LossModelParams& p,
                                     const std::vector<double>& n_grid,
                                     const std::vector<double>& t_grid,
                                     double rel_sigma, double noise_rel,
                                     std::uint64_t seed)
{
    models::validate(p);
    SweepDataset d;
    d.resonator_id = "synthetic";
    d.f0_hz = p.f0;
    d.tc_k = p.tc;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double n : n_grid)
        for (double t : t_grid) {
            double q = models::q_int_total(p, n, t);
            if (noise_rel > 0.0) q *= std::exp(noise_rel * gauss(rng));
            d.points.push_back({n, t, q, rel_sigma * q});
        }
    return d;
}

inline SweepDataset synth_power_sweep(const models::PowerLawTlsParams& p,
                                      const std::vector<double>& n_grid,
                                      double rel_sigma, double noise_rel,
                                      std::uint64_t seed)
{
    models::validate(p);
    SweepDataset d;
    d.resonator_id = "synthetic";
    d.f0_hz = p.f0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double n : n_grid) {
        double q = models::q_int_power(p, n);
        if (noise_rel > 0.0) q *= std::exp(noise_rel * gauss(rng));
        d.points.push_back({n, p.temperature, q, rel_sigma * q});
    }
    return d;
}

/// Power sweep synthesized from the full loss model at fixed temperature
/// (the route used for the cross-model consistency check).
inline SweepDataset synth_power_sweep_from_loss_model(
    const models::LossModelParams& p, double t_k,
    const std::vector<double>& n_grid, double rel_sigma, double noise_rel,
    std::uint64_t seed)
{
    models::validate(p);
    SweepDataset d;
    d.resonator_id = "synthetic";
    d.f0_hz = p.f0;
    d.tc_k = p.tc;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double n : n_grid) {
        double q = models::q_int_total(p, n, t_k);
        if (noise_rel > 0.0) q *= std::exp(noise_rel * gauss(rng));
        d.points.push_back({n, t_k, q, rel_sigma * q});
    }
    return d;
}

inline SweepDataset synth_shift_sweep(const models::ShiftModelParams& p,
                                      const std::vector<double>& t_grid,
                                      double abs_sigma, double noise_abs,
                                      std::uint64_t seed)
{
    models::validate(p);
    SweepDataset d;
    d.resonator_id = "synthetic";
    d.f0_hz = p.f0;
    d.tc_k = p.tc;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double t : t_grid) {
        double df = models::freq_shift_total(p, t);
        if (noise_abs > 0.0) df += noise_abs * gauss(rng);
        d.shift_points.push_back({t, df, abs_sigma});
    }
    return d;
}

/// Time-average repeated points: consecutive points with the same (n_ph, T)
/// are grouped into blocks of at most `window` repeats (0 = one block) and
/// replaced by their mean, with sigma the standard error of the mean.
inline SweepDataset average_repeats(const SweepDataset& in, std::size_t window)
{
    SweepDataset out;
    out.resonator_id = in.resonator_id;
    out.f0_hz = in.f0_hz;
    out.tc_k = in.tc_k;
    out.shift_points = in.shift_points;

    auto same = [](double a, double b) {
        return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
    };
    std::size_t i = 0;
    while (i < in.points.size()) {
        std::size_t j = i + 1;
        while (j < in.points.size() && same(in.points[j].n_ph, in.points[i].n_ph) &&
               same(in.points[j].t_k, in.points[i].t_k))
            ++j;
        std::size_t block = window == 0 ? (j - i) : std::min(window, j - i);
        for (std::size_t k = i; k < j; k += block) {
            const std::size_t e = std::min(j, k + block);
            const double cnt = double(e - k);
            double mean = 0.0, mean_sig = 0.0;
            for (std::size_t q = k; q < e; ++q) {
                mean += in.points[q].q_i;
                mean_sig += in.points[q].q_i_sigma;
            }
            mean /= cnt;
            mean_sig /= cnt;
            double var = 0.0;
            for (std::size_t q = k; q < e; ++q)
                var += (in.points[q].q_i - mean) * (in.points[q].q_i - mean);
            const double sem = cnt > 1 ? std::sqrt(var / (cnt * (cnt - 1))) : 0.0;
            out.points.push_back({in.points[i].n_ph, in.points[i].t_k, mean,
                                  std::max(sem, mean_sig / std::sqrt(cnt))});
        }
        i = j;
    }
    return out;
}

}  // namespace resq::sweepfit
