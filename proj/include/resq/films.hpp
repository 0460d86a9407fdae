#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace resq::films {

//
// Film-physics calculators: two-layer composite resistivity, Tc / RRR
// extraction from R(T) curves, Tc(thickness) interpolation, and the
// Debye-temperature phase classifier.
//

/// Bilayer stack: a thin high-resistivity underlayer below the main film,
/// treated as parallel sheet conductors.
struct FilmStack {
    double total_thickness_nm;   ///< h
    double beta_layer_nm = 10.0; ///< underlayer thickness t_beta
    double rho_beta;             ///< uOhm*cm, 150 nm-reference underlayer resistivity
    double rho_alpha;            ///< uOhm*cm, 150 nm-reference film resistivity
};

inline void validate(const FilmStack& s)
{
    if (!(s.beta_layer_nm >= 0.0) || !(s.total_thickness_nm > s.beta_layer_nm))
        throw std::invalid_argument("FilmStack: requires h > t_beta >= 0");
    if (!(s.rho_beta > 0.0) || !(s.rho_alpha > 0.0))
        throw std::invalid_argument("FilmStack: resistivities must be > 0");
    if (!(s.rho_beta > s.rho_alpha))
        throw std::invalid_argument("FilmStack: expects rho_beta > rho_alpha");
}

/// Composite film resistivity treating the two layers as parallel conductors:
///   rho(h) = h / (t_beta/rho_beta + (h - t_beta)/rho_alpha)
/// Strictly decreasing in h; tends to rho_alpha for thick films.
inline double composite_resistivity(const FilmStack& s)
{
    validate(s);
    if (!(s.total_thickness_nm > s.beta_layer_nm))
        throw std::domain_error("composite_resistivity: pure-underlayer regime (h <= t_beta)");
    const double sheet = s.beta_layer_nm / s.rho_beta +
                         (s.total_thickness_nm - s.beta_layer_nm) / s.rho_alpha;
    return s.total_thickness_nm / sheet;
}

/// Resistance-versus-temperature curve (absolute or normalized; Tc and RRR
/// extraction are scale-invariant).
struct RtCurve {
    std::vector<double> temps_k;     ///< increasing
    std::vector<double> resistance;  ///< Ohm or normalized
    std::string label;
};

inline void validate(const RtCurve& c)
{
    if (c.temps_k.size() != c.resistance.size())
        throw std::invalid_argument("RtCurve: length mismatch");
    if (c.temps_k.size() < 10)
        throw std::invalid_argument("RtCurve: needs >= 10 points");
    for (std::size_t i = 1; i < c.temps_k.size(); ++i)
        if (!(c.temps_k[i] > c.temps_k[i - 1]))
            throw std::invalid_argument("RtCurve: temperatures not strictly increasing");
}

class no_transition_error : public std::runtime_error {
  public:
    explicit no_transition_error(const std::string& m) : std::runtime_error(m) {}
};

struct TcEstimate {
    double tc_k = 0.0;
    bool multiple_crossings = false;  ///< noisy curve; highest-T crossing used
};

namespace detail {

// normal-state plateau: median resistance over the top temperature decile
inline double plateau_resistance(const RtCurve& c)
{
    const std::size_t n = c.temps_k.size();
    const std::size_t k = std::max<std::size_t>(1, n / 10);
    std::vector<double> top(c.resistance.end() - k, c.resistance.end());
    std::nth_element(top.begin(), top.begin() + top.size() / 2, top.end());
    return top[top.size() / 2];
}

inline double interp_at(const std::vector<double>& x, const std::vector<double>& y,
                        double xq)
{
    auto it = std::upper_bound(x.begin(), x.end(), xq);
    if (it == x.begin()) return y.front();
    if (it == x.end()) return y.back();
    const std::size_t i = std::size_t(it - x.begin());
    const double w = (xq - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + w * (y[i] - y[i - 1]);
}

}  // namespace detail

/// Tc as the 50%-of-normal-plateau crossing of the R(T) transition, linearly
/// interpolated between bracketing samples. Multiple crossings (noise) pick
/// the highest-T one, flagged.
inline TcEstimate extract_tc(const RtCurve& curve)
{
    validate(curve);
    const double plateau = detail::plateau_resistance(curve);
    const double r_min = *std::min_element(curve.resistance.begin(), curve.resistance.end());
    if (!(plateau > 10.0 * std::max(r_min, 0.0)) || !(plateau > 0.0))
        throw no_transition_error("extract_tc: no superconducting transition in curve");

    const double thr = 0.5 * plateau;
    TcEstimate est;
    int crossings = 0;
    for (std::size_t i = curve.temps_k.size() - 1; i >= 1; --i) {
        const double r_hi = curve.resistance[i], r_lo = curve.resistance[i - 1];
        if (r_lo < thr && thr <= r_hi) {
            ++crossings;
            if (crossings == 1) {
                const double w = (thr - r_lo) / (r_hi - r_lo);
                est.tc_k = curve.temps_k[i - 1] +
                           w * (curve.temps_k[i] - curve.temps_k[i - 1]);
            }
        }
    }
    if (crossings == 0)
        throw no_transition_error("extract_tc: resistance never crosses 50% of plateau");
    est.multiple_crossings = crossings > 1;
    return est;
}

/// Residual resistance ratio R(300 K)/R(just above Tc). The transition is
/// searched below 25 K (film Tc's sit at a few kelvin; the full curve's upper
/// decile is room-temperature ramp, not transition plateau). With no
/// transition the reference point is the lowest-temperature sample.
inline double rrr(const RtCurve& curve)
{
    validate(curve);
    if (curve.temps_k.back() < 270.0)
        throw std::invalid_argument("rrr: curve has no room-temperature (>= 270 K) point");
    const double r300 = detail::interp_at(curve.temps_k, curve.resistance,
                                          std::min(300.0, curve.temps_k.back()));
    RtCurve low;
    low.label = curve.label;
    for (std::size_t i = 0; i < curve.temps_k.size(); ++i)
        if (curve.temps_k[i] <= 25.0) {
            low.temps_k.push_back(curve.temps_k[i]);
            low.resistance.push_back(curve.resistance[i]);
        }
    double t_ref = curve.temps_k.front();  // normal state throughout
    if (low.temps_k.size() >= 10) {
        try {
            t_ref = extract_tc(low).tc_k + 0.5;
        } catch (const no_transition_error&) {
        }
    }
    const double r_ref = detail::interp_at(curve.temps_k, curve.resistance, t_ref);
    if (!(r_ref > 0.0)) throw std::runtime_error("rrr: non-positive reference resistance");
    return r300 / r_ref;
}

/// Tc(h) through the measured anchors
/// (20, 3.77), (30, 4.06), (60, 4.27), (100, 4.31), (150, 4.39) [nm, K],
/// monotone piecewise-linear, exact at anchors. Out-of-range h is rejected.
inline double tc_vs_thickness(double h_nm)
{
    static const std::vector<double> hs = {20.0, 30.0, 60.0, 100.0, 150.0};
    static const std::vector<double> tcs = {3.77, 4.06, 4.27, 4.31, 4.39};
    if (!(h_nm >= hs.front() && h_nm <= hs.back()))
        throw std::domain_error("tc_vs_thickness: h outside the measured 20-150 nm range");
    return detail::interp_at(hs, tcs, h_nm);
}

enum class SurfaceCondition { bare, native_oxide, in_situ_metal };
enum class TaPhase { alpha, beta, unknown };
enum class ResistivityPhase { alpha, beta, mixed };

inline const char* to_string(TaPhase p)
{
    switch (p) {
        case TaPhase::alpha: return "alpha";
        case TaPhase::beta: return "beta";
        case TaPhase::unknown: return "unknown";
    }
    return "unknown";
}

inline const char* to_string(ResistivityPhase p)
{
    switch (p) {
        case ResistivityPhase::alpha: return "alpha";
        case ResistivityPhase::beta: return "beta";
        case ResistivityPhase::mixed: return "mixed";
    }
    return "mixed";
}

/// One substrate/underlayer surface the film is grown on.
struct SubstrateRecord {
    std::string name;
    std::optional<double> debye_temperature_k;  ///< absent = not tabulated
    SurfaceCondition surface = SurfaceCondition::bare;
    std::optional<double> heated_to_c;          ///< deposition heating, if any
};

inline void validate(const SubstrateRecord& s)
{
    if (s.debye_temperature_k && !(*s.debye_temperature_k > 0.0))
        throw std::invalid_argument("SubstrateRecord: Debye temperature must be > 0");
}

namespace detail {

inline std::string lower_token(const std::string& name)
{
    std::string t;
    for (char ch : name) {
        if (std::isalnum(static_cast<unsigned char>(ch)))
            t.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
        else if (!t.empty())
            break;
    }
    return t;
}

// critical deposition temperature for thermally-activated growth
inline double critical_heating_c(const std::string& name)
{
    std::string low;
    for (char ch : name) low.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
    if (low.find("al2o3") != std::string::npos || low.find("sapphire") != std::string::npos)
        return 400.0;
    return 450.0;  // silicon and default
}

// in-situ surfaces whose resulting phase the reference data leaves unverified;
// the classifier abstains rather than extrapolate the Debye rule to them
inline bool unverified_in_situ(const std::string& name)
{
    const std::string tok = lower_token(name);
    return tok == "cu" || tok == "ni";
}

}  // namespace detail

/// Debye-temperature phase rule:
///  (a) heated at/above the substrate's critical temperature -> alpha;
///  (b) unheated oxide or bare surface with theta_D >= 475 K -> beta;
///  (c) unheated in-situ metal with theta_D <= 475 K -> alpha
///      (except surfaces the reference data leaves unverified);
///  (d) otherwise unknown. Unknown is a valid verdict, never a wrong phase.
inline TaPhase predict_phase(const SubstrateRecord& s)
{
    validate(s);
    if (s.heated_to_c && *s.heated_to_c >= detail::critical_heating_c(s.name))
        return TaPhase::alpha;
    if (!s.debye_temperature_k) return TaPhase::unknown;
    const double theta = *s.debye_temperature_k;
    if ((s.surface == SurfaceCondition::bare ||
         s.surface == SurfaceCondition::native_oxide) &&
        theta >= 475.0)
        return TaPhase::beta;
    if (s.surface == SurfaceCondition::in_situ_metal && theta <= 475.0 &&
        !detail::unverified_in_situ(s.name))
        return TaPhase::alpha;
    return TaPhase::unknown;
}

/// Resistivity-based phase classification: alpha <= 25, beta >= 140 uOhm*cm,
/// mixed in between.
inline ResistivityPhase classify_phase_by_resistivity(double rho_uohm_cm)
{
    if (!(rho_uohm_cm > 0.0))
        throw std::invalid_argument("classify_phase_by_resistivity: requires rho > 0");
    if (rho_uohm_cm <= 25.0) return ResistivityPhase::alpha;
    if (rho_uohm_cm >= 140.0) return ResistivityPhase::beta;
    return ResistivityPhase::mixed;
}

}  // namespace resq::films
