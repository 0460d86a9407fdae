// resq: batch analysis of superconducting resonator measurements.
//
// Subcommands: fit-traces, fit-power, fit-temp, fit-shift, films, synth.
// Units at the boundary: Hz, kelvin, dBm, dB, nm, uOhm*cm. All randomness is
// seeded (--seed); identical invocations produce byte-identical reports.
// Exit codes: 0 success, 1 total failure, 2 partial failure, 3 config error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "resq/circle_fit.hpp"
#include "resq/films.hpp"
#include "resq/io.hpp"
#include "resq/loss_models.hpp"
#include "resq/svg.hpp"
#include "resq/sweep_fit.hpp"

namespace fs = std::filesystem;
using resq::io::ordered_json;

namespace {

enum ExitCode { kOk = 0, kTotalFailure = 1, kPartialFailure = 2, kConfigError = 3 };

int log_level()  // 0 quiet, 1 info, 2 debug; RESQ_LOG controls it
{
    const char* env = std::getenv("RESQ_LOG");
    if (!env) return 1;
    const std::string v = env;
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

void info(const std::string& msg)
{
    if (log_level() >= 1) std::cerr << "resq: " << msg << "\n";
}

void debug(const std::string& msg)
{
    if (log_level() >= 2) std::cerr << "resq[debug]: " << msg << "\n";
}

// glob expansion: '*' wildcards in the filename component only
bool glob_match(const std::string& pat, const std::string& name)
{
    std::size_t p = 0, n = 0, star = std::string::npos, mark = 0;
    while (n < name.size()) {
        if (p < pat.size() && (pat[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pat.size() && pat[p] == '*') {
            star = p++;
            mark = n;
        } else if (star != std::string::npos) {
            p = star + 1;
            n = ++mark;
        } else {
            return false;
        }
    }
    while (p < pat.size() && pat[p] == '*') ++p;
    return p == pat.size();
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& patterns)
{
    std::vector<fs::path> out;
    for (const auto& pat : patterns) {
        const fs::path p(pat);
        if (pat.find('*') == std::string::npos) {
            out.push_back(p);
            continue;
        }
        const fs::path dir = p.parent_path().empty() ? "." : p.parent_path();
        const std::string leaf = p.filename().string();
        std::vector<fs::path> matched;
        if (fs::is_directory(dir))
            for (const auto& e : fs::directory_iterator(dir))
                if (e.is_regular_file() && glob_match(leaf, e.path().filename().string()))
                    matched.push_back(e.path());
        std::sort(matched.begin(), matched.end());
        out.insert(out.end(), matched.begin(), matched.end());
    }
    return out;
}

ordered_json load_config(const std::string& path)
{
    if (path.empty()) return ordered_json::object();
    return resq::io::detail::parse_json(path);
}

// config value unless the flag was given on the command line
template <class T>
void config_fill(const CLI::App& app, const std::string& flag, const ordered_json& cfg,
                 const std::string& key, T& value)
{
    if (app.count(flag) == 0 && cfg.contains(key)) value = cfg.at(key).get<T>();
}

fs::path ensure_out_dir(const std::string& out)
{
    const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    fs::create_directories(dir);
    return dir;
}

std::vector<double> parse_grid(const ordered_json& j)
{
    std::vector<double> v;
    for (const auto& x : j) v.push_back(x.get<double>());
    return v;
}

std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / double(std::max(1, n - 1));
    return v;
}

std::vector<double> logspace(double lo, double hi, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = lo * std::pow(hi / lo, i / double(std::max(1, n - 1)));
    return v;
}

// ------------------------------------------------------------- fit-traces

int cmd_fit_traces(const std::vector<std::string>& inputs, const std::string& out,
                   double attenuation_db, std::size_t averaging_window)
{
    const auto files = expand_inputs(inputs);
    if (files.empty()) {
        std::cerr << "resq: no input traces matched\n";
        return kConfigError;
    }
    for (const auto& f : files)
        if (!fs::exists(f)) {
            std::cerr << "resq: input does not exist: " << f << "\n";
            return kConfigError;
        }
    const auto dir = ensure_out_dir(out);

    struct Row {
        std::string id;
        std::optional<double> power_dbm, temperature_k, n_ph;
        double q_i, q_i_stderr, f_res;
    };
    std::vector<Row> rows;
    ordered_json failures = ordered_json::array();
    int ok = 0;

    for (const auto& file : files) {
        try {
            const auto trace = resq::io::read_trace_csv(file);
            const auto fit = resq::circlefit::fit_circle(trace);
            ordered_json j = resq::io::to_json(fit);
            j["resonator_id"] = trace.resonator_id;
            if (trace.drive_power_dbm) j["power_dbm"] = *trace.drive_power_dbm;
            if (trace.temperature_k) j["temperature_k"] = *trace.temperature_k;

            Row row{trace.resonator_id, trace.drive_power_dbm, trace.temperature_k,
                    std::nullopt,       fit.q_i,               fit.q_i_stderr,
                    fit.params.f_res};
            double atten = attenuation_db;
            if (const auto side = resq::io::read_sidecar_attenuation(file))
                atten = *side;
            if (trace.drive_power_dbm) {
                row.n_ph = resq::circlefit::photons_in_resonator(
                    fit, *trace.drive_power_dbm, atten);
                j["n_ph"] = *row.n_ph;
            }
            rows.push_back(row);
            resq::io::write_json(dir / (file.stem().string() + ".fit.json"), j);
            ++ok;
            debug("fitted " + file.string());
        } catch (const std::exception& e) {
            failures.push_back({{"file", file.string()}, {"reason", e.what()}});
            info("failed " + file.string() + ": " + e.what());
        }
    }

    // aggregate table
    {
        std::ostringstream csv;
        csv.precision(12);
        csv << "resonator_id,power_dbm,temperature_k,q_i,q_i_stderr,n_ph\n";
        for (const auto& r : rows) {
            csv << r.id << ',';
            if (r.power_dbm) csv << *r.power_dbm;
            csv << ',';
            if (r.temperature_k) csv << *r.temperature_k;
            csv << ',' << r.q_i << ',' << r.q_i_stderr << ',';
            if (r.n_ph) csv << *r.n_ph;
            csv << '\n';
        }
        resq::io::atomic_write_text(dir / "aggregate.csv", csv.str());
    }
    resq::io::write_json(dir / "failures.json", failures);

    // per-resonator sweep datasets with time-averaging of repeated points
    {
        std::vector<std::string> ids;
        for (const auto& r : rows)
            if (std::find(ids.begin(), ids.end(), r.id) == ids.end())
                ids.push_back(r.id);
        for (const auto& id : ids) {
            resq::sweepfit::SweepDataset d;
            d.resonator_id = id;
            double f_sum = 0.0;
            int cnt = 0;
            for (const auto& r : rows) {
                if (r.id != id || !r.n_ph || !r.temperature_k) continue;
                d.points.push_back({*r.n_ph, *r.temperature_k, r.q_i,
                                    r.q_i_stderr > 0.0 ? r.q_i_stderr : 0.05 * r.q_i});
                f_sum += r.f_res;
                ++cnt;
            }
            if (d.points.empty()) continue;
            d.f0_hz = f_sum / cnt;
            d = resq::sweepfit::average_repeats(d, averaging_window);
            resq::io::write_json(dir / ("dataset_" + id + ".json"),
                                 resq::io::to_json(d));
        }
    }

    if (ok == 0) return kTotalFailure;
    return failures.empty() ? kOk : kPartialFailure;
}

// --------------------------------------------------------------- fit-* sweeps

resq::sweepfit::SweepDataset load_dataset(const std::string& input, double tc_k)
{
    if (input.empty() || !fs::exists(input))
        throw resq::io::io_error("dataset file not found: " + input);
    auto d = resq::io::read_sweep_dataset(input);
    if (tc_k > 0.0) d.tc_k = tc_k;
    return d;
}

void plot_power_fit(const fs::path& path, const resq::sweepfit::SweepDataset& d,
                    const resq::models::PowerLawTlsParams& p)
{
    resq::svg::Series data;
    data.points_only = true;
    data.color = "#1f77b4";
    data.label = "measured";
    double n_lo = 1e300, n_hi = 0.0;
    for (const auto& pt : d.points) {
        data.x.push_back(pt.n_ph);
        data.y.push_back(pt.q_i);
        n_lo = std::min(n_lo, std::max(pt.n_ph, 1e-2));
        n_hi = std::max(n_hi, pt.n_ph);
    }
    resq::svg::Series model;
    model.color = "#d62728";
    model.label = "fit";
    for (double n : logspace(n_lo, n_hi, 200)) {
        model.x.push_back(n);
        model.y.push_back(resq::models::q_int_power(p, n));
    }
    resq::svg::PlotSpec spec;
    spec.title = "Internal quality factor vs photon number";
    spec.x_label = "photon number";
    spec.y_label = "Q_int";
    spec.log_x = true;
    spec.log_y = true;
    resq::io::atomic_write_text(path, resq::svg::render(spec, {model, data}));
}

void plot_temp_fit(const fs::path& path, const resq::sweepfit::SweepDataset& d,
                   const resq::models::LossModelParams& p)
{
    // one measured series per photon-number group, model drawn at the first
    std::vector<double> groups;
    for (const auto& pt : d.points) {
        bool seen = false;
        for (double g : groups)
            if (std::abs(g - pt.n_ph) <= 1e-9 * std::max(g, pt.n_ph)) seen = true;
        if (!seen) groups.push_back(pt.n_ph);
    }
    std::sort(groups.begin(), groups.end());
    const char* palette[] = {"#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#17becf"};
    std::vector<resq::svg::Series> series;
    double t_lo = 1e300, t_hi = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        resq::svg::Series s;
        s.points_only = true;
        s.color = palette[g % 5];
        std::ostringstream lbl;
        lbl.precision(2);
        lbl << "n = " << groups[g];
        s.label = lbl.str();
        for (const auto& pt : d.points)
            if (std::abs(groups[g] - pt.n_ph) <=
                1e-9 * std::max(groups[g], pt.n_ph)) {
                s.x.push_back(pt.t_k);
                s.y.push_back(pt.q_i);
                t_lo = std::min(t_lo, pt.t_k);
                t_hi = std::max(t_hi, pt.t_k);
            }
        series.push_back(std::move(s));
    }
    resq::svg::Series model;
    model.color = "#d62728";
    model.label = "fit (lowest n)";
    for (double t : linspace(t_lo, t_hi, 220)) {
        model.x.push_back(t);
        model.y.push_back(resq::models::q_int_total(p, groups.front(), t));
    }
    series.push_back(std::move(model));
    resq::svg::PlotSpec spec;
    spec.title = "Internal quality factor vs temperature";
    spec.x_label = "temperature (K)";
    spec.y_label = "Q_int";
    spec.log_y = true;
    resq::io::atomic_write_text(path, resq::svg::render(spec, series));
}

void plot_shift_fit(const fs::path& path, const resq::sweepfit::SweepDataset& d,
                    const resq::models::ShiftModelParams& p)
{
    resq::svg::Series data;
    data.points_only = true;
    data.label = "measured";
    double t_lo = 1e300, t_hi = 0.0;
    for (const auto& pt : d.shift_points) {
        data.x.push_back(pt.t_k);
        data.y.push_back(pt.df_f0);
        t_lo = std::min(t_lo, pt.t_k);
        t_hi = std::max(t_hi, pt.t_k);
    }
    resq::svg::Series model;
    model.color = "#d62728";
    model.label = "fit";
    for (double t : linspace(t_lo, t_hi, 220)) {
        model.x.push_back(t);
        model.y.push_back(resq::models::freq_shift_total(p, t));
    }
    resq::svg::PlotSpec spec;
    spec.title = "Fractional frequency shift vs temperature";
    spec.x_label = "temperature (K)";
    spec.y_label = "df/f0";
    resq::io::atomic_write_text(path, resq::svg::render(spec, {model, data}));
}

int cmd_fit_sweep(const std::string& which, const std::string& input,
                  const std::string& out, double tc_k, double temperature_k,
                  std::uint64_t seed)
{
    try {
        const auto d = load_dataset(input, tc_k);
        const auto dir = ensure_out_dir(out);
        resq::sweepfit::FitOptions opt;
        opt.seed = seed;
        if (which == "power") {
            const double t = temperature_k > 0.0
                                 ? temperature_k
                                 : (d.points.empty() ? 0.0 : d.points.front().t_k);
            const auto rep = resq::sweepfit::fit_power_sweep(d, t, opt);
            resq::io::write_json(dir / "report_power.json", resq::io::to_json(rep));
            plot_power_fit(dir / "plot_power.svg", d, rep.params);
            info("fit-power: Q_TLS0 = " + std::to_string(rep.params.q_tls0));
        } else if (which == "temp") {
            const auto rep = resq::sweepfit::fit_qint_vs_T(d, opt);
            resq::io::write_json(dir / "report_temp.json", resq::io::to_json(rep));
            plot_temp_fit(dir / "plot_temp.svg", d, rep.params);
            info("fit-temp: Q_TLS0 = " + std::to_string(rep.params.q_tls0));
        } else {
            const auto rep = resq::sweepfit::fit_freq_shift(d, opt);
            resq::io::write_json(dir / "report_shift.json", resq::io::to_json(rep));
            plot_shift_fit(dir / "plot_shift.svg", d, rep.params);
            info("fit-shift: Q_TLS0 = " + std::to_string(rep.params.q_tls0));
        }
        return kOk;
    } catch (const resq::io::io_error& e) {
        std::cerr << "resq: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "resq: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "resq: " << e.what() << "\n";
        return kTotalFailure;
    }
}

// -------------------------------------------------------------------- films

int cmd_films(const std::vector<double>& rho_h, double beta_layer_nm,
              double rho_beta, double rho_alpha,
              const std::vector<std::string>& rt_inputs,
              const std::string& substrates, const std::string& out)
{
    const auto dir = ensure_out_dir(out);
    ordered_json report;
    bool any_failed = false, any_ok = false;

    if (!rho_h.empty()) {
        auto& arr = report["composite_resistivity"] = ordered_json::array();
        resq::svg::Series curve;
        curve.label = "rho(h)";
        for (double h : rho_h) {
            try {
                resq::films::FilmStack s{h, beta_layer_nm, rho_beta, rho_alpha};
                const double rho = resq::films::composite_resistivity(s);
                arr.push_back({{"h_nm", h},
                               {"rho_uohm_cm", rho},
                               {"phase_by_resistivity",
                                resq::films::to_string(
                                    resq::films::classify_phase_by_resistivity(rho))}});
                curve.x.push_back(h);
                curve.y.push_back(rho);
                any_ok = true;
            } catch (const std::exception& e) {
                arr.push_back({{"h_nm", h}, {"error", e.what()}});
                any_failed = true;
            }
        }
        resq::svg::PlotSpec spec;
        spec.title = "Composite film resistivity vs thickness";
        spec.x_label = "thickness (nm)";
        spec.y_label = "resistivity (uOhm cm)";
        spec.log_x = true;
        resq::io::atomic_write_text(dir / "rho_vs_h.svg",
                                    resq::svg::render(spec, {curve}));
    }

    if (!rt_inputs.empty()) {
        auto& arr = report["rt_curves"] = ordered_json::array();
        std::vector<resq::svg::Series> series;
        const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
        int idx = 0;
        for (const auto& file : expand_inputs(rt_inputs)) {
            ordered_json entry;
            entry["file"] = file.string();
            try {
                const auto curve = resq::io::read_rt_csv(file);
                entry["label"] = curve.label;
                try {
                    const auto tc = resq::films::extract_tc(curve);
                    entry["tc_k"] = tc.tc_k;
                    entry["multiple_crossings"] = tc.multiple_crossings;
                } catch (const resq::films::no_transition_error& e) {
                    entry["tc_error"] = e.what();
                }
                try {
                    entry["rrr"] = resq::films::rrr(curve);
                } catch (const std::exception& e) {
                    entry["rrr_error"] = e.what();
                }
                resq::svg::Series s;
                s.color = palette[idx++ % 5];
                s.label = curve.label;
                s.x = curve.temps_k;
                s.y = curve.resistance;
                series.push_back(std::move(s));
                any_ok = true;
            } catch (const std::exception& e) {
                entry["error"] = e.what();
                any_failed = true;
            }
            arr.push_back(entry);
        }
        if (!series.empty()) {
            resq::svg::PlotSpec spec;
            spec.title = "Resistance vs temperature";
            spec.x_label = "temperature (K)";
            spec.y_label = "resistance";
            resq::io::atomic_write_text(dir / "rt_curves.svg",
                                        resq::svg::render(spec, series));
        }
    }

    if (!substrates.empty()) {
        try {
            const auto table = resq::io::read_substrate_table(substrates);
            auto& arr = report["phase_predictions"] = ordered_json::array();
            for (const auto& row : table) {
                const auto predicted = resq::films::predict_phase(row.record);
                ordered_json entry;
                entry["name"] = row.record.name;
                entry["predicted"] = resq::films::to_string(predicted);
                if (row.reference_phase) {
                    entry["reference"] = *row.reference_phase;
                    entry["mismatch"] =
                        *row.reference_phase != "unknown" &&
                        resq::films::to_string(predicted) != *row.reference_phase &&
                        predicted != resq::films::TaPhase::unknown;
                }
                arr.push_back(entry);
            }
            any_ok = true;
        } catch (const std::exception& e) {
            report["phase_predictions_error"] = e.what();
            any_failed = true;
        }
    }

    if (report.empty()) {
        std::cerr << "resq: films: nothing to do (pass --rho-h, --rt or --substrates)\n";
        return kConfigError;
    }
    resq::io::write_json(dir / "films_report.json", report);
    if (!any_ok) return kTotalFailure;
    return any_failed ? kPartialFailure : kOk;
}

// -------------------------------------------------------------------- synth

int cmd_synth(const std::string& config_path, const std::string& out,
              std::uint64_t seed)
{
    if (config_path.empty() || !fs::exists(config_path)) {
        std::cerr << "resq: synth requires --config pointing to a synth spec\n";
        return kConfigError;
    }
    try {
        const auto cfg = resq::io::detail::parse_json(config_path);
        const auto dir = ensure_out_dir(out);
        const std::string kind = cfg.at("kind").get<std::string>();

        if (kind == "traces") {
            resq::circlefit::NotchModelParams p;
            const auto& np = cfg.at("notch");
            p.f_res = np.at("f_res_hz").get<double>();
            p.q_l = np.at("q_l").get<double>();
            p.q_c_mag = np.at("q_c_mag").get<double>();
            p.phi0 = np.value("phi0_rad", 0.0);
            p.amp = np.value("amp", 1.0);
            p.alpha_env = np.value("alpha_env_rad", 0.0);
            p.tau = np.value("tau_s", 0.0);
            const int count = cfg.value("count", 1);
            const int points = cfg.value("points", 1001);
            const double span_lw = cfg.value("span_linewidths", 10.0);
            const double noise = cfg.value("noise_sigma", 0.0);
            const double half = 0.5 * span_lw * p.f_res / p.q_l;
            const auto grid = linspace(p.f_res - half, p.f_res + half, points);
            for (int i = 0; i < count; ++i) {
                const auto tr = resq::circlefit::synth_s21(p, grid, noise, seed + i);
                std::ostringstream name;
                name << "trace_" << i << ".csv";
                resq::io::write_trace_csv(dir / name.str(), tr);
                if (cfg.contains("power_dbm") || cfg.contains("temperature_k")) {
                    ordered_json side;
                    side["resonator_id"] = "synth_" + std::to_string(i);
                    if (cfg.contains("power_dbm"))
                        side["power_dbm"] = cfg.at("power_dbm").get<double>();
                    if (cfg.contains("temperature_k"))
                        side["temperature_k"] = cfg.at("temperature_k").get<double>();
                    if (cfg.contains("attenuation_db"))
                        side["attenuation_db"] = cfg.at("attenuation_db").get<double>();
                    resq::io::write_json(dir / ("trace_" + std::to_string(i) + ".json"),
                                         side);
                }
            }
            info("synthesized " + std::to_string(count) + " traces");
        } else if (kind == "power" || kind == "temp") {
            resq::models::LossModelParams p;
            const auto& lp = cfg.at("loss_model");
            p.q_tls0 = lp.at("q_tls0").get<double>();
            p.d_sat = lp.at("d_sat").get<double>();
            p.beta1 = lp.at("beta1").get<double>();
            p.beta2 = lp.at("beta2").get<double>();
            p.q_qp0 = lp.at("q_qp0").get<double>();
            p.q_other = lp.at("q_other").get<double>();
            p.tc = lp.at("tc_k").get<double>();
            p.f0 = lp.at("f0_hz").get<double>();
            const double rel_sigma = cfg.value("rel_sigma", 0.05);
            const double noise = cfg.value("noise_rel", 0.0);
            resq::sweepfit::SweepDataset d;
            if (kind == "power") {
                const double t = cfg.at("temperature_k").get<double>();
                const auto n_grid = cfg.contains("n_grid")
                                        ? parse_grid(cfg.at("n_grid"))
                                        : logspace(1.0, 1e7, 25);
                d = resq::sweepfit::synth_power_sweep_from_loss_model(
                    p, t, n_grid, rel_sigma, noise, seed);
            } else {
                const auto n_grid = cfg.contains("n_grid")
                                        ? parse_grid(cfg.at("n_grid"))
                                        : std::vector<double>{1.0, 1e3, 1e6};
                const auto t_grid = cfg.contains("t_grid")
                                        ? parse_grid(cfg.at("t_grid"))
                                        : linspace(0.02, 1.5, 12);
                d = resq::sweepfit::synth_temp_sweep(p, n_grid, t_grid, rel_sigma,
                                                     noise, seed);
            }
            d.resonator_id = cfg.value("resonator_id", std::string("synthetic"));
            resq::io::write_json(dir / "dataset.json", resq::io::to_json(d));
            info("synthesized dataset.json (" + kind + ")");
        } else if (kind == "shift") {
            resq::models::ShiftModelParams p;
            const auto& sp = cfg.at("shift_model");
            p.q_tls0 = sp.at("q_tls0").get<double>();
            p.alpha_kin = sp.at("alpha").get<double>();
            p.tc = sp.at("tc_k").get<double>();
            p.f0 = sp.at("f0_hz").get<double>();
            const auto t_grid = cfg.contains("t_grid") ? parse_grid(cfg.at("t_grid"))
                                                       : linspace(0.02, 1.5, 20);
            const double sigma = cfg.value("abs_sigma", 2e-9);
            const double noise = cfg.value("noise_abs", 0.0);
            auto d = resq::sweepfit::synth_shift_sweep(p, t_grid, sigma, noise, seed);
            d.resonator_id = cfg.value("resonator_id", std::string("synthetic"));
            resq::io::write_json(dir / "dataset.json", resq::io::to_json(d));
            info("synthesized dataset.json (shift)");
        } else if (kind == "rt") {
            const double tc = cfg.value("tc_k", 4.39);
            const double width = cfg.value("width_k", 0.05);
            const double plateau = cfg.value("plateau", 1.0);
            resq::films::RtCurve c;
            c.label = cfg.value("label", std::string("synthetic"));
            for (double t : linspace(cfg.value("t_lo_k", 2.0), cfg.value("t_hi_k", 7.5),
                                     cfg.value("points", 160)))
            {
                c.temps_k.push_back(t);
                c.resistance.push_back(
                    0.5 * plateau * (1.0 + std::tanh((t - tc) / width)));
            }
            resq::io::write_rt_csv(dir / (c.label + ".csv"), c);
            info("synthesized " + c.label + ".csv");
        } else {
            std::cerr << "resq: unknown synth kind '" << kind << "'\n";
            return kConfigError;
        }
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "resq: synth: " << e.what() << "\n";
        return kConfigError;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{
        "resq: superconducting resonator trace, sweep and film analysis.\n"
        "Units at the interfaces: Hz, kelvin, dBm, dB, nm, uOhm*cm.\n"
        "Set RESQ_LOG=quiet|info|debug to control logging."};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 1;
    double attenuation_db = 0.0;

    // fit-traces
    auto* traces = app.add_subcommand(
        "fit-traces", "Circle-fit a batch of S21 trace CSVs (freq_hz,re,im or "
                      "freq_hz,mag_db,phase_rad; optional <stem>.json sidecar)");
    std::vector<std::string> trace_inputs;
    std::size_t averaging_window = 0;
    traces->add_option("-i,--input", trace_inputs, "trace files or globs");
    traces->add_option("--config", config_path, "JSON config file");
    traces->add_option("--out", out_dir, "output directory");
    traces->add_option("--seed", seed, "random seed (reports are deterministic)");
    traces->add_option("--attenuation-db", attenuation_db,
                       "line attenuation applied to sidecar powers");
    traces->add_option("--averaging-window", averaging_window,
                       "repeats averaged per dataset point (0 = all)");

    // fit-power / fit-temp / fit-shift
    std::string dataset_input;
    double tc_k = 0.0, fixed_t = 0.0;
    auto add_sweep_cmd = [&](const char* name, const char* help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("-i,--input", dataset_input, "sweep dataset JSON");
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "multi-start seed");
        cmd->add_option("--tc-k", tc_k, "override the dataset critical temperature");
        return cmd;
    };
    auto* power = add_sweep_cmd(
        "fit-power", "Fit the power-saturation model to Q_int(n_ph) at fixed T");
    power->add_option("--temperature-k", fixed_t,
                      "sweep temperature (default: first point's)");
    add_sweep_cmd("fit-temp",
                  "Fit the six-parameter loss model to Q_int(n_ph, T)");
    add_sweep_cmd("fit-shift", "Fit the {Q_TLS0, alpha} frequency-shift model");

    // films
    auto* films_cmd = app.add_subcommand(
        "films", "Film calculators: composite resistivity, Tc/RRR, phase rules");
    std::vector<double> rho_h;
    double beta_layer_nm = 10.0, rho_beta = 160.0, rho_alpha = 17.0;
    std::vector<std::string> rt_inputs;
    std::string substrates_path;
    films_cmd->add_option("--rho-h", rho_h, "film thicknesses (nm) for rho(h)");
    films_cmd->add_option("--beta-layer-nm", beta_layer_nm, "underlayer thickness");
    films_cmd->add_option("--rho-beta", rho_beta, "underlayer resistivity (uOhm cm)");
    films_cmd->add_option("--rho-alpha", rho_alpha, "film resistivity (uOhm cm)");
    films_cmd->add_option("--rt", rt_inputs, "R(T) curve CSVs (t_k,resistance)");
    films_cmd->add_option("--substrates", substrates_path, "substrate table JSON");
    films_cmd->add_option("--config", config_path, "JSON config file");
    films_cmd->add_option("--out", out_dir, "output directory");

    // synth
    auto* synth = app.add_subcommand(
        "synth", "Generate synthetic fixtures (traces, sweep datasets, R(T) curves)");
    synth->add_option("--config", config_path, "synth spec JSON (required)")
        ->required();
    synth->add_option("--out", out_dir, "output directory");
    synth->add_option("--seed", seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        ordered_json cfg = load_config(config_path);

        if (traces->parsed()) {
            if (trace_inputs.empty() && cfg.contains("inputs"))
                for (const auto& s : cfg.at("inputs"))
                    trace_inputs.push_back(s.get<std::string>());
            config_fill(*traces, "--out", cfg, "out", out_dir);
            config_fill(*traces, "--attenuation-db", cfg, "attenuation_db", attenuation_db);
            config_fill(*traces, "--averaging-window", cfg, "averaging_window",
                        averaging_window);
            if (trace_inputs.empty()) {
                std::cerr << "resq: fit-traces needs --input or a config with inputs\n";
                return kConfigError;
            }
            return cmd_fit_traces(trace_inputs, out_dir, attenuation_db,
                                  averaging_window);
        }
        for (const char* name : {"fit-power", "fit-temp", "fit-shift"}) {
            auto* cmd = app.get_subcommand(name);
            if (!cmd->parsed()) continue;
            if (dataset_input.empty() && cfg.contains("input"))
                dataset_input = cfg.at("input").get<std::string>();
            config_fill(*cmd, "--out", cfg, "out", out_dir);
            config_fill(*cmd, "--tc-k", cfg, "tc_k", tc_k);
            if (std::string(name) == "fit-power")
                config_fill(*cmd, "--temperature-k", cfg, "temperature_k", fixed_t);
            const std::string which = std::string(name).substr(4);
            return cmd_fit_sweep(which, dataset_input, out_dir, tc_k, fixed_t, seed);
        }
        if (films_cmd->parsed()) {
            if (rho_h.empty() && cfg.contains("rho_h_nm"))
                rho_h = parse_grid(cfg.at("rho_h_nm"));
            if (cfg.contains("film")) {
                const auto& f = cfg.at("film");
                if (films_cmd->count("--beta-layer-nm") == 0)
                    beta_layer_nm = f.value("beta_layer_nm", beta_layer_nm);
                if (films_cmd->count("--rho-beta") == 0)
                    rho_beta = f.value("rho_beta", rho_beta);
                if (films_cmd->count("--rho-alpha") == 0)
                    rho_alpha = f.value("rho_alpha", rho_alpha);
            }
            if (rt_inputs.empty() && cfg.contains("rt_curves"))
                for (const auto& s : cfg.at("rt_curves"))
                    rt_inputs.push_back(s.get<std::string>());
            if (substrates_path.empty() && cfg.contains("substrates"))
                substrates_path = cfg.at("substrates").get<std::string>();
            config_fill(*films_cmd, "--out", cfg, "out", out_dir);
            return cmd_films(rho_h, beta_layer_nm, rho_beta, rho_alpha, rt_inputs,
                             substrates_path, out_dir);
        }
        if (synth->parsed()) return cmd_synth(config_path, out_dir, seed);
    } catch (const resq::io::io_error& e) {
        std::cerr << "resq: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "resq: " << e.what() << "\n";
        return kTotalFailure;
    }
    return kConfigError;
}
