#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "resq/circle_fit.hpp"
#include "resq/films.hpp"
#include "resq/sweep_fit.hpp"

namespace resq::io {

using ordered_json = nlohmann::ordered_json;

class io_error : public std::runtime_error {
  public:
    explicit io_error(const std::string& m) : std::runtime_error(m) {}
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw io_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r' && c != ' ' && c != '\t') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const std::string& where)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw io_error(where + ": not a number: '" + s + "'");
    }
}

inline ordered_json parse_json(const std::filesystem::path& p)
{
    try {
        return ordered_json::parse(read_file(p));
    } catch (const nlohmann::json::parse_error& e) {
        throw io_error(p.string() + ": " + e.what());
    }
}

template <class J>
const J& require_field(const J& j, const std::string& key, const std::string& ctx)
{
    if (!j.contains(key)) throw io_error(ctx + ": missing field '" + key + "'");
    return j.at(key);
}

template <class T, class J>
T field_as(const J& j, const std::string& key, const std::string& ctx)
{
    try {
        return require_field(j, key, ctx).template get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw io_error(ctx + ": field '" + key + "': " + e.what());
    }
}

}  // namespace detail

/// Atomic file write: write to <path>.tmp then rename into place.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& text)
{
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot write " + tmp.string());
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const ordered_json& j)
{
    atomic_write_text(path, j.dump(2) + "\n");
}

//
// complex traces: CSV with header `freq_hz,re,im` or `freq_hz,mag_db,phase_rad`;
// optional metadata sidecar <stem>.json next to the file
//

inline circlefit::ComplexTrace read_trace_csv(const std::filesystem::path& path)
{
    std::istringstream in(detail::read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw io_error(path.string() + ": empty file");
    const auto hdr = detail::split_csv_line(line);
    bool polar = false;
    if (hdr == std::vector<std::string>{"freq_hz", "re", "im"}) {
        polar = false;
    } else if (hdr == std::vector<std::string>{"freq_hz", "mag_db", "phase_rad"}) {
        polar = true;
    } else {
        throw io_error(path.string() +
                       ": header must be 'freq_hz,re,im' or 'freq_hz,mag_db,phase_rad'");
    }

    circlefit::ComplexTrace t;
    int ln = 1;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        const std::string ctx = path.string() + ":" + std::to_string(ln);
        if (cells.size() != 3) throw io_error(ctx + ": expected 3 columns");
        const double f = detail::parse_double(cells[0], ctx);
        const double a = detail::parse_double(cells[1], ctx);
        const double b = detail::parse_double(cells[2], ctx);
        t.freqs_hz.push_back(f);
        if (polar) {
            const double mag = std::pow(10.0, a / 20.0);
            t.s21.emplace_back(mag * std::cos(b), mag * std::sin(b));
        } else {
            t.s21.emplace_back(a, b);
        }
    }
    t.resonator_id = path.stem().string();

    // metadata sidecar
    auto side = path;
    side.replace_extension(".json");
    if (std::filesystem::exists(side)) {
        const auto j = detail::parse_json(side);
        const std::string ctx = side.string();
        if (j.contains("resonator_id"))
            t.resonator_id = detail::field_as<std::string>(j, "resonator_id", ctx);
        if (j.contains("power_dbm"))
            t.drive_power_dbm = detail::field_as<double>(j, "power_dbm", ctx);
        if (j.contains("temperature_k"))
            t.temperature_k = detail::field_as<double>(j, "temperature_k", ctx);
    }
    return t;
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const circlefit::ComplexTrace& t)
{
    std::ostringstream out;
    out.precision(17);
    out << "freq_hz,re,im\n";
    for (std::size_t i = 0; i < t.freqs_hz.size(); ++i)
        out << t.freqs_hz[i] << ',' << t.s21[i].real() << ',' << t.s21[i].imag()
            << '\n';
    atomic_write_text(path, out.str());
}

/// Attenuation recorded in a trace sidecar, when present.
inline std::optional<double> read_sidecar_attenuation(const std::filesystem::path& trace_path)
{
    auto side = trace_path;
    side.replace_extension(".json");
    if (!std::filesystem::exists(side)) return std::nullopt;
    const auto j = detail::parse_json(side);
    if (!j.contains("attenuation_db")) return std::nullopt;
    return detail::field_as<double>(j, "attenuation_db", side.string());
}

//
// sweep datasets:
// { resonator_id, f0_hz, tc_k, points: [ {n_ph, t_k, q_i, q_i_sigma} ],
//   shift_points: [ {t_k, df_f0, sigma} ] }
// q_i_sigma defaults to 5% relative when absent.
//

inline sweepfit::SweepDataset read_sweep_dataset(const std::filesystem::path& path)
{
    const auto j = detail::parse_json(path);
    const std::string ctx = path.string();
    sweepfit::SweepDataset d;
    d.resonator_id = detail::field_as<std::string>(j, "resonator_id", ctx);
    d.f0_hz = detail::field_as<double>(j, "f0_hz", ctx);
    if (j.contains("tc_k")) d.tc_k = detail::field_as<double>(j, "tc_k", ctx);
    if (j.contains("points")) {
        const auto& pts = j.at("points");
        if (!pts.is_array()) throw io_error(ctx + ": 'points' must be an array");
        int idx = 0;
        for (const auto& p : pts) {
            const std::string pctx = ctx + ": points[" + std::to_string(idx++) + "]";
            sweepfit::QPoint q;
            q.n_ph = detail::field_as<double>(p, "n_ph", pctx);
            q.t_k = detail::field_as<double>(p, "t_k", pctx);
            q.q_i = detail::field_as<double>(p, "q_i", pctx);
            q.q_i_sigma = p.contains("q_i_sigma")
                              ? detail::field_as<double>(p, "q_i_sigma", pctx)
                              : 0.05 * q.q_i;
            d.points.push_back(q);
        }
    }
    if (j.contains("shift_points")) {
        const auto& pts = j.at("shift_points");
        if (!pts.is_array()) throw io_error(ctx + ": 'shift_points' must be an array");
        int idx = 0;
        for (const auto& p : pts) {
            const std::string pctx = ctx + ": shift_points[" + std::to_string(idx++) + "]";
            sweepfit::ShiftPoint s;
            s.t_k = detail::field_as<double>(p, "t_k", pctx);
            s.df_f0 = detail::field_as<double>(p, "df_f0", pctx);
            s.sigma = detail::field_as<double>(p, "sigma", pctx);
            d.shift_points.push_back(s);
        }
    }
    if (d.points.empty() && d.shift_points.empty())
        throw io_error(ctx + ": dataset has neither 'points' nor 'shift_points'");
    return d;
}

inline ordered_json to_json(const sweepfit::SweepDataset& d)
{
    ordered_json j;
    j["resonator_id"] = d.resonator_id;
    j["f0_hz"] = d.f0_hz;
    j["tc_k"] = d.tc_k;
    if (!d.points.empty()) {
        auto& arr = j["points"] = ordered_json::array();
        for (const auto& p : d.points)
            arr.push_back({{"n_ph", p.n_ph},
                           {"t_k", p.t_k},
                           {"q_i", p.q_i},
                           {"q_i_sigma", p.q_i_sigma}});
    }
    if (!d.shift_points.empty()) {
        auto& arr = j["shift_points"] = ordered_json::array();
        for (const auto& p : d.shift_points)
            arr.push_back({{"t_k", p.t_k}, {"df_f0", p.df_f0}, {"sigma", p.sigma}});
    }
    return j;
}

inline ordered_json quality_json(const sweepfit::FitQuality& q)
{
    return {{"chi2_reduced", q.chi2_reduced},
            {"iterations", q.iterations},
            {"converged", q.converged},
            {"covariance_condition", q.covariance_condition},
            {"flags", q.flags}};
}

inline ordered_json to_json(const sweepfit::PowerFitReport& r)
{
    ordered_json j;
    j["model"] = "qint-vs-power";
    j["params"] = {{"q_tls0", r.params.q_tls0},
                   {"n_c", r.params.n_c},
                   {"beta", r.params.beta_exp},
                   {"q_other", r.params.q_other},
                   {"temperature_k", r.params.temperature},
                   {"f0_hz", r.params.f0}};
    j["stderr"] = {{"q_tls0", r.q_tls0_stderr},
                   {"n_c", r.n_c_stderr},
                   {"beta", r.beta_stderr},
                   {"q_other", r.q_other_stderr}};
    j["quality"] = quality_json(r.quality);
    return j;
}

inline ordered_json to_json(const sweepfit::TempFitReport& r)
{
    ordered_json j;
    j["model"] = "qint-vs-temperature";
    j["params"] = {{"q_tls0", r.params.q_tls0},   {"d_sat", r.params.d_sat},
                   {"beta1", r.params.beta1},     {"beta2", r.params.beta2},
                   {"q_qp0", r.params.q_qp0},     {"q_other", r.params.q_other},
                   {"tc_k", r.params.tc},         {"f0_hz", r.params.f0}};
    j["stderr"] = {{"q_tls0", r.stderrs[0]}, {"d_sat", r.stderrs[1]},
                   {"beta1", r.stderrs[2]},  {"beta2", r.stderrs[3]},
                   {"q_qp0", r.stderrs[4]},  {"q_other", r.stderrs[5]}};
    j["quality"] = quality_json(r.quality);
    return j;
}

inline ordered_json to_json(const sweepfit::ShiftFitReport& r)
{
    ordered_json j;
    j["model"] = "freq-shift";
    j["params"] = {{"q_tls0", r.params.q_tls0},
                   {"alpha", r.params.alpha_kin},
                   {"tc_k", r.params.tc},
                   {"f0_hz", r.params.f0}};
    j["stderr"] = {{"q_tls0", r.q_tls0_stderr}, {"alpha", r.alpha_stderr}};
    j["quality"] = quality_json(r.quality);
    return j;
}

inline ordered_json to_json(const sweepfit::TlsComparison& c)
{
    ordered_json j;
    auto& arr = j["estimates"] = ordered_json::array();
    for (const auto& e : c.estimates)
        arr.push_back({{"model", e.model}, {"q_tls0", e.q_tls0}, {"stderr", e.stderr_}});
    j["max_pairwise_ratio"] = c.max_pairwise_ratio;
    j["inconsistency_warning"] = c.inconsistency_warning;
    j["partial"] = c.partial;
    return j;
}

inline ordered_json to_json(const circlefit::CircleFitResult& r)
{
    ordered_json j;
    j["params"] = {{"f_res_hz", r.params.f_res},
                   {"q_l", r.params.q_l},
                   {"q_c_mag", r.params.q_c_mag},
                   {"phi0_rad", r.params.phi0},
                   {"amp", r.params.amp},
                   {"alpha_env_rad", r.params.alpha_env},
                   {"tau_s", r.params.tau}};
    j["stderr"] = {{"f_res_hz", r.param_stderr.f_res},
                   {"q_l", r.param_stderr.q_l},
                   {"q_c_mag", r.param_stderr.q_c_mag},
                   {"phi0_rad", r.param_stderr.phi0},
                   {"amp", r.param_stderr.amp},
                   {"alpha_env_rad", r.param_stderr.alpha_env},
                   {"tau_s", r.param_stderr.tau}};
    j["q_i"] = r.q_i;
    j["q_i_stderr"] = r.q_i_stderr;
    j["rms_residual"] = r.rms_residual;
    j["snr"] = r.snr;
    j["iterations"] = r.iterations;
    return j;
}

//
// R(T) curves: CSV with header `t_k,resistance`
//

inline films::RtCurve read_rt_csv(const std::filesystem::path& path)
{
    std::istringstream in(detail::read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw io_error(path.string() + ": empty file");
    if (detail::split_csv_line(line) != std::vector<std::string>{"t_k", "resistance"})
        throw io_error(path.string() + ": header must be 't_k,resistance'");
    films::RtCurve c;
    c.label = path.stem().string();
    int ln = 1;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        const std::string ctx = path.string() + ":" + std::to_string(ln);
        if (cells.size() != 2) throw io_error(ctx + ": expected 2 columns");
        c.temps_k.push_back(detail::parse_double(cells[0], ctx));
        c.resistance.push_back(detail::parse_double(cells[1], ctx));
    }
    return c;
}

inline void write_rt_csv(const std::filesystem::path& path, const films::RtCurve& c)
{
    std::ostringstream out;
    out.precision(17);
    out << "t_k,resistance\n";
    for (std::size_t i = 0; i < c.temps_k.size(); ++i)
        out << c.temps_k[i] << ',' << c.resistance[i] << '\n';
    atomic_write_text(path, out.str());
}

//
// substrate tables: [ { name, debye_temperature_k|null, surface, heated_to_c|null,
//                       phase? (reference label), citation? } ]
//

struct SubstrateRow {
    films::SubstrateRecord record;
    std::optional<std::string> reference_phase;  // labeled outcome, if measured
    std::string citation;
};

inline std::vector<SubstrateRow> read_substrate_table(const std::filesystem::path& path)
{
    const auto j = detail::parse_json(path);
    const std::string ctx = path.string();
    const auto& rows = j.is_array() ? j : detail::require_field(j, "substrates", ctx);
    std::vector<SubstrateRow> out;
    int idx = 0;
    for (const auto& row : rows) {
        const std::string rctx = ctx + ": substrates[" + std::to_string(idx++) + "]";
        SubstrateRow r;
        r.record.name = detail::field_as<std::string>(row, "name", rctx);
        if (row.contains("debye_temperature_k") && !row.at("debye_temperature_k").is_null())
            r.record.debye_temperature_k =
                detail::field_as<double>(row, "debye_temperature_k", rctx);
        const auto surf = detail::field_as<std::string>(row, "surface", rctx);
        if (surf == "bare")
            r.record.surface = films::SurfaceCondition::bare;
        else if (surf == "native_oxide")
            r.record.surface = films::SurfaceCondition::native_oxide;
        else if (surf == "in_situ_metal")
            r.record.surface = films::SurfaceCondition::in_situ_metal;
        else
            throw io_error(rctx + ": field 'surface': unknown value '" + surf + "'");
        if (row.contains("heated_to_c") && !row.at("heated_to_c").is_null())
            r.record.heated_to_c = detail::field_as<double>(row, "heated_to_c", rctx);
        if (row.contains("phase") && !row.at("phase").is_null())
            r.reference_phase = detail::field_as<std::string>(row, "phase", rctx);
        if (row.contains("citation") && row.at("citation").is_string())
            r.citation = row.at("citation").get<std::string>();
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace resq::io
