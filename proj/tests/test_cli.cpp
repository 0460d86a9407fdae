// End-to-end tests driving the resq binary. The binary path arrives in the
// RESQ_CLI environment variable (set by CTest).

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string cli_path()
{
    const char* p = std::getenv("RESQ_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args)
{
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path sandbox(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "resq_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& s)
{
    std::ofstream out(p, std::ios::binary);
    out << s;
}

const char* kTraceSynthCfg = R"({
  "kind": "traces",
  "notch": {"f_res_hz": 4.8e9, "q_l": 2.4e5, "q_c_mag": 3.0e5, "phi0_rad": 0.2,
            "amp": 1.1, "alpha_env_rad": 0.5, "tau_s": 3.0e-8},
  "count": 10, "points": 801, "noise_sigma": 0.004,
  "power_dbm": -90.0, "temperature_k": 0.021, "attenuation_db": 60.0
})";

}  // namespace

TEST_CASE("cli: directory of 10 synthetic traces -> 10 result JSONs + aggregate")
{
    const auto dir = sandbox("traces10");
    write_text(dir / "synth.json", kTraceSynthCfg);
    REQUIRE(run("synth --config " + (dir / "synth.json").string() + " --out " +
                (dir / "in").string() + " --seed 7") == 0);

    const int code = run("fit-traces -i '" + (dir / "in" / "*.csv").string() +
                         "' --out " + (dir / "out").string());
    CHECK(code == 0);
    int fit_jsons = 0;
    for (const auto& e : fs::directory_iterator(dir / "out"))
        if (e.path().filename().string().find(".fit.json") != std::string::npos)
            ++fit_jsons;
    CHECK(fit_jsons == 10);
    const auto agg = slurp(dir / "out" / "aggregate.csv");
    CHECK(agg.find("resonator_id,power_dbm,temperature_k,q_i,q_i_stderr,n_ph") == 0);
    CHECK(std::count(agg.begin(), agg.end(), '\n') == 11);  // header + 10 rows
    const auto failures = ordered_json::parse(slurp(dir / "out" / "failures.json"));
    CHECK(failures.empty());
}

TEST_CASE("cli: off-resonance trace lands in failures with its reason")
{
    const auto dir = sandbox("offres");
    write_text(dir / "synth.json", kTraceSynthCfg);
    REQUIRE(run("synth --config " + (dir / "synth.json").string() + " --out " +
                (dir / "in").string() + " --seed 3") == 0);
    // replace one trace with pure baseline + noise: no resonance
    {
        std::ostringstream csv;
        csv << "freq_hz,re,im\n";
        std::mt19937_64 rng(1);
        std::normal_distribution<double> g(0.0, 0.004);
        for (int i = 0; i < 400; ++i)
            csv << 4.79e9 + i * 5e4 << "," << 1.0 + g(rng) << "," << g(rng) << "\n";
        write_text(dir / "in" / "trace_3.csv", csv.str());
        fs::remove(dir / "in" / "trace_3.json");
    }
    const int code = run("fit-traces -i '" + (dir / "in" / "*.csv").string() +
                         "' --out " + (dir / "out").string());
    CHECK(code == 2);  // partial failure
    const auto failures = ordered_json::parse(slurp(dir / "out" / "failures.json"));
    REQUIRE(failures.size() == 1);
    CHECK(failures[0].at("file").get<std::string>().find("trace_3.csv") !=
          std::string::npos);
    CHECK(failures[0].at("reason").get<std::string>().find("resonance") !=
          std::string::npos);
}

TEST_CASE("cli: reruns with the same seed are byte-identical")
{
    const auto dir = sandbox("determinism");
    write_text(dir / "synth.json", kTraceSynthCfg);
    for (const char* sub : {"a", "b"}) {
        REQUIRE(run("synth --config " + (dir / "synth.json").string() + " --out " +
                    (dir / sub / "in").string() + " --seed 42") == 0);
        REQUIRE(run("fit-traces -i '" + (dir / sub / "in" / "*.csv").string() +
                    "' --out " + (dir / sub / "out").string() + " --seed 42") == 0);
    }
    for (const auto& e : fs::directory_iterator(dir / "a" / "out")) {
        const auto other = dir / "b" / "out" / e.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(slurp(e.path()) == slurp(other));
    }
}

TEST_CASE("cli: sweep fit emits report and plot; bad datasets exit 3")
{
    const auto dir = sandbox("sweep");
    write_text(dir / "synth.json", R"({
      "kind": "power",
      "loss_model": {"q_tls0": 3.0e6, "d_sat": 174.6, "beta1": 0.3, "beta2": 2.6,
                     "q_qp0": 3.69e7, "q_other": 1.74e7, "tc_k": 4.39, "f0_hz": 4.8e9},
      "temperature_k": 0.02, "rel_sigma": 0.03, "noise_rel": 0.01
    })");
    REQUIRE(run("synth --config " + (dir / "synth.json").string() + " --out " +
                dir.string() + " --seed 5") == 0);
    // the default synthetic photon grid spans single-photon to 1e7
    const auto ds = ordered_json::parse(slurp(dir / "dataset.json"));
    CHECK(ds.at("points").front().at("n_ph").get<double>() == 1.0);
    CHECK(ds.at("points").back().at("n_ph").get<double>() == Catch::Approx(1e7));

    CHECK(run("fit-power -i " + (dir / "dataset.json").string() + " --out " +
              (dir / "fit").string()) == 0);
    CHECK(fs::exists(dir / "fit" / "report_power.json"));
    CHECK(fs::exists(dir / "fit" / "plot_power.svg"));
    const auto rep = ordered_json::parse(slurp(dir / "fit" / "report_power.json"));
    CHECK(rep.at("params").at("q_tls0").get<double>() ==
          Catch::Approx(3.0e6).epsilon(0.10));

    // schema violation: dataset with no points
    write_text(dir / "empty.json", R"({"resonator_id":"x","f0_hz":4.8e9,"tc_k":4.39})");
    CHECK(run("fit-power -i " + (dir / "empty.json").string()) == 3);
    // missing input file is a config error
    CHECK(run("fit-temp -i " + (dir / "nope.json").string()) == 3);
}

TEST_CASE("cli: films pipeline")
{
    const auto dir = sandbox("films");
    // five transition curves at the thickness-anchor Tc values
    const double tcs[5] = {3.77, 4.06, 4.27, 4.31, 4.39};
    for (int i = 0; i < 5; ++i) {
        std::ostringstream cfg;
        cfg << R"({"kind":"rt","tc_k":)" << tcs[i] << R"(,"width_k":0.04,"label":"film)"
            << i << R"("})";
        write_text(dir / "rt.json", cfg.str());
        REQUIRE(run("synth --config " + (dir / "rt.json").string() + " --out " +
                    (dir / "curves").string()) == 0);
    }
    const int code = run("films --rho-h 15 --rho-h 20 --rho-h 50 --rho-h 150"
                         " --rt '" + (dir / "curves" / "*.csv").string() +
                         "' --substrates " +
                         (fs::path(RESQ_SOURCE_DIR) / "data" / "substrates.json").string() +
                         " --out " + (dir / "out").string());
    CHECK(code == 0);
    const auto rep = ordered_json::parse(slurp(dir / "out" / "films_report.json"));

    // rho(h) strictly decreasing
    const auto& rho = rep.at("composite_resistivity");
    for (std::size_t i = 1; i < rho.size(); ++i)
        CHECK(rho[i].at("rho_uohm_cm").get<double>() <
              rho[i - 1].at("rho_uohm_cm").get<double>());

    // Tc recovered within 10 mK for each synthetic curve
    const auto& curves = rep.at("rt_curves");
    REQUIRE(curves.size() == 5);
    for (int i = 0; i < 5; ++i)
        CHECK(curves[i].at("tc_k").get<double>() == Catch::Approx(tcs[i]).margin(0.010));

    // zero phase mismatches across the reference table
    for (const auto& e : rep.at("phase_predictions"))
        if (e.contains("mismatch")) CHECK_FALSE(e.at("mismatch").get<bool>());

    CHECK(fs::exists(dir / "out" / "rho_vs_h.svg"));
    CHECK(fs::exists(dir / "out" / "rt_curves.svg"));

    // nothing to do -> config error
    CHECK(run("films") == 3);
}
