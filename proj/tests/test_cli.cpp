// End-to-end checks of the polsynth executable: exit codes, file formats,
// and byte-identical determinism.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using Catch::Approx;

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const fs::path dir = fs::temp_directory_path() / "polsynth_cli_test";
    fs::create_directories(dir);
    const fs::path out_file = dir / "stdout.txt";
    const std::string cmd =
        std::string(POLSYNTH_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = raw == -1 ? -1 : WEXITSTATUS(raw);
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "polsynth_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("cli: budget on the shipped fixtures reproduces the reference rows") {
    const std::string data = POLSYNTH_DATA_DIR;
    auto out = temp_file("budget.json");
    auto r = run_cli("budget --psd-phase " + data + "/psd_phase_psi.csv --psd-rin-r " + data +
                     "/psd_rin_r.csv --psd-rin-l " + data + "/psd_rin_l.csv --eta-spatial 5e-5" +
                     " --out " + out.string());
    REQUIRE(r.exit_code == 0);
    auto report = json::parse(slurp(out));
    CHECK(report["results"]["eta_intensity"].get<double>() == Approx(3.9e-8).epsilon(0.15));
    CHECK(report["results"]["eta_phase"].get<double>() == Approx(7.6e-7).epsilon(0.10));
    CHECK(report["results"]["eta_total"].get<double>() == Approx(5e-5).epsilon(0.10));
    CHECK(report["results"]["dop_percent"].get<double>() == Approx(99.99).margin(2e-3));
    CHECK(report["units"].contains("eta_total"));
}

TEST_CASE("cli: budget input validation exits with 2 and names the row") {
    auto bad = temp_file("bad_psd.csv");
    {
        std::ofstream f(bad);
        f << "freq_hz,value,unit\n1,1e-10,rad2_per_hz\n10,1e-11\n";
    }
    auto r = run_cli("budget --psd-phase " + bad.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find(":3") != std::string::npos);
}

TEST_CASE("cli: budget at the circular pole has no temporal contributions") {
    auto out = temp_file("budget_pole.json");
    auto r = run_cli("budget --epsilon 1.0 --eta-spatial 0 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    auto report = json::parse(slurp(out));
    CHECK(report["results"]["eta_intensity"].get<double>() == 0.0);
    CHECK(report["results"]["eta_phase"].get<double>() == 0.0);
    CHECK(report["results"]["dop"].get<double>() == 1.0);
}

TEST_CASE("cli: deterministic byte-identical output for identical config and seed") {
    auto out1 = temp_file("mc1.json");
    auto out2 = temp_file("mc2.json");
    const std::string args = "mc-dop --sigma-psi-rad 1.745e-3 --n-samples 20000 --seed 7 --out ";
    REQUIRE(run_cli(args + out1.string()).exit_code == 0);
    REQUIRE(run_cli(args + out2.string()).exit_code == 0);
    const std::string a = slurp(out1), b = slurp(out2);
    CHECK(!a.empty());
    CHECK(a == b);
}

TEST_CASE("cli: POLSYNTH_SEED provides the default seed") {
    auto out1 = temp_file("seed_env.json");
    auto out2 = temp_file("seed_flag.json");
    const std::string base = "mc-dop --sigma-psi-rad 1e-3 --n-samples 20000 --out ";
    REQUIRE(std::system((std::string("POLSYNTH_SEED=99 ") + POLSYNTH_CLI_PATH + " " + base +
                         out1.string() + " >/dev/null 2>&1")
                            .c_str()) == 0);
    REQUIRE(run_cli(base + out2.string() + " --seed 99").exit_code == 0);
    CHECK(slurp(out1) == slurp(out2));
}

TEST_CASE("cli: heating defaults match the reference arithmetic") {
    auto out = temp_file("heating.json");
    auto r = run_cli("heating --s-dbc -122 --rin2-at-2nu 1.4e-14 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    auto report = json::parse(slurp(out));
    CHECK(report["results"]["q_phase_quanta_per_s"].get<double>() == Approx(0.6228).epsilon(0.01));
    CHECK(report["results"]["gamma_int_per_s"].get<double>() == Approx(1.89e-3).epsilon(0.02));
    CHECK(report["results"]["bound_levels"].get<int>() == 14);
    CHECK(report["results"]["dbc_convention"].is_string());

    SECTION("ssb flag doubles the rate") {
        auto out2 = temp_file("heating_ssb.json");
        REQUIRE(run_cli("heating --s-dbc -122 --ssb --out " + out2.string()).exit_code == 0);
        auto r2 = json::parse(slurp(out2));
        CHECK(r2["results"]["q_phase_quanta_per_s"].get<double>() ==
              Approx(2.0 * 0.6228).epsilon(0.01));
    }
}

TEST_CASE("cli: storage simulation and half-life") {
    auto out = temp_file("storage.json");
    auto r = run_cli("storage --out " + out.string());
    REQUIRE(r.exit_code == 0);
    auto report = json::parse(slurp(out));
    CHECK(report["results"]["half_life_s"].get<double>() == Approx(7.09).epsilon(0.02));

    SECTION("heating off gives the pure collision exponential") {
        auto out2 = temp_file("storage_coll.json");
        REQUIRE(run_cli("storage --q-phase 0 --gamma-int 0 --q-recoil 0 --t-max 300 "
                        "--n-points 60 --out " +
                        out2.string())
                    .exit_code == 0);
        auto r2 = json::parse(slurp(out2));
        CHECK(r2["results"]["half_life_s"].get<double>() ==
              Approx(300.0 * std::log(2.0)).epsilon(1e-4));
    }
}

TEST_CASE("cli: storage fit on the shipped synthetic fixture") {
    const std::string data = POLSYNTH_DATA_DIR;
    auto out = temp_file("fit.json");
    auto r = run_cli("storage --data " + data + "/survival_synthetic.csv --out " + out.string());
    REQUIRE(r.exit_code == 0);
    auto report = json::parse(slurp(out));
    CHECK(report["mode"] == "fit");
    CHECK(report["results"]["q_phase_quanta_per_s"].get<double>() == Approx(1.37).margin(0.12));
    CHECK(report["results"]["t0_k"].get<double>() == Approx(7.8e-6).margin(2.5e-6));
    CHECK(report["results"]["fixed"]["tau_coll_s"].get<double>() == 300.0);
}

TEST_CASE("cli: servo report and response files") {
    auto out = temp_file("servo.json");
    auto step = temp_file("step.csv");
    auto freqf = temp_file("freq.csv");
    auto r = run_cli("servo --out " + out.string() + " --step-csv " + step.string() +
                     " --freq-csv " + freqf.string());
    REQUIRE(r.exit_code == 0);
    auto report = json::parse(slurp(out));
    const double bw = report["results"]["bandwidth_3db_hz"].get<double>();
    CHECK(bw > 680e3);
    CHECK(bw < 920e3);
    const std::string step_text = slurp(step);
    CHECK(step_text.rfind("t_s,value\n", 0) == 0);
    const std::string freq_text = slurp(freqf);
    CHECK(freq_text.rfind("freq_hz,mag_db\n", 0) == 0);
}

TEST_CASE("cli: transport commands") {
    const std::string data = POLSYNTH_DATA_DIR;
    auto out = temp_file("transport.json");
    auto r = run_cli("transport --ramp " + data + "/ramp_minjerk_1ms.json --out " + out.string());
    REQUIRE(r.exit_code == 0);
    auto report = json::parse(slurp(out));
    CHECK(report["results"]["n_bar"].get<double>() < 1e-6);

    SECTION("bang-bang fixture") {
        auto out2 = temp_file("transport_bb.json");
        REQUIRE(run_cli("transport --ramp " + data + "/ramp_bangbang_2periods.json --out " +
                        out2.string())
                    .exit_code == 0);
        CHECK(json::parse(slurp(out2))["results"]["n_bar"].get<double>() < 1e-3);
    }
}

TEST_CASE("cli: sideband ratio and fit") {
    auto out = temp_file("sb.json");
    REQUIRE(run_cli("sideband --r 0.5 --out " + out.string()).exit_code == 0);
    CHECK(json::parse(slurp(out))["results"]["n_bar"].get<double>() == Approx(1.0));

    const std::string data = POLSYNTH_DATA_DIR;
    auto out2 = temp_file("sb_fit.json");
    REQUIRE(run_cli("sideband --spectrum " + data + "/sideband_longitudinal.csv --out " +
                    out2.string())
                .exit_code == 0);
    auto report = json::parse(slurp(out2));
    CHECK(report["results"]["r"].get<double>() == Approx(0.1).epsilon(0.02));
    CHECK(report["results"]["nu_hz"].get<double>() == Approx(117e3).epsilon(0.01));

    SECTION("r >= 1 rejected with exit 2") {
        CHECK(run_cli("sideband --r 1.0").exit_code == 2);
    }
}

TEST_CASE("cli: csv report format carries units") {
    auto out = temp_file("budget.csv");
    auto r = run_cli("budget --eta-spatial 5e-5 --format csv --out " + out.string());
    REQUIRE(r.exit_code == 0);
    const std::string text = slurp(out);
    CHECK(text.rfind("key,value,unit\n", 0) == 0);
    CHECK(text.find("sigma_psi_rad") != std::string::npos);
    CHECK(text.find(",rad\n") != std::string::npos);
}

TEST_CASE("cli: config file applies where flags are absent and flags win") {
    auto cfg = temp_file("mc_config.json");
    {
        std::ofstream f(cfg);
        f << R"({"sigma_psi_rad": 1.745e-3, "n_samples": 20000, "seed": 11})" "\n";
    }
    auto out1 = temp_file("cfg1.json");
    auto out2 = temp_file("cfg2.json");
    REQUIRE(run_cli("mc-dop --config " + cfg.string() + " --out " + out1.string()).exit_code == 0);
    auto r1 = json::parse(slurp(out1));
    CHECK(r1["config"]["sigma_psi_rad"].get<double>() == Approx(1.745e-3));
    CHECK(r1["config"]["seed"].get<std::uint64_t>() == 11);

    REQUIRE(run_cli("mc-dop --config " + cfg.string() + " --sigma-psi-rad 3e-3 --out " +
                    out2.string())
                .exit_code == 0);
    auto r2 = json::parse(slurp(out2));
    CHECK(r2["config"]["sigma_psi_rad"].get<double>() == Approx(3e-3));

    SECTION("unknown config keys exit 2") {
        auto bad = temp_file("bad_config.json");
        {
            std::ofstream f(bad);
            f << R"({"sigma_psi": 1e-3})" "\n";
        }
        CHECK(run_cli("mc-dop --config " + bad.string()).exit_code == 2);
    }
    SECTION("boolean flags work from config files") {
        auto hcfg = temp_file("heating_config.json");
        {
            std::ofstream f(hcfg);
            f << R"({"s_dbc": -122.0, "ssb": true})" "\n";
        }
        auto hout = temp_file("heating_cfg_out.json");
        REQUIRE(run_cli("heating --config " + hcfg.string() + " --out " + hout.string())
                    .exit_code == 0);
        CHECK(json::parse(slurp(hout))["results"]["q_phase_quanta_per_s"].get<double>() ==
              Approx(2.0 * 0.6228).epsilon(0.01));
    }
}

TEST_CASE("cli: malformed POLSYNTH_SEED exits with 2") {
    const int raw = std::system((std::string("POLSYNTH_SEED=banana ") + POLSYNTH_CLI_PATH +
                                 " mc-dop --sigma-psi-rad 1e-3 >/dev/null 2>&1")
                                    .c_str());
    CHECK(WEXITSTATUS(raw) == 2);
}

TEST_CASE("cli: heating requires exactly one spectral-density input") {
    CHECK(run_cli("heating").exit_code == 2);
    CHECK(run_cli("heating --s-dbc -122 --s-phi 1e-13").exit_code == 2);
    auto out = temp_file("heating_phi.json");
    REQUIRE(run_cli("heating --s-phi 6.3096e-13 --out " + out.string()).exit_code == 0);
    CHECK(json::parse(slurp(out))["results"]["q_phase_quanta_per_s"].get<double>() ==
          Approx(0.6228).epsilon(0.01));
}

TEST_CASE("cli: numerical failures exit with 3") {
    auto cfg = temp_file("unstable_servo.json");
    {
        std::ofstream f(cfg);
        f << R"({"plant": {"dead_time_s": 3e-7, "actuator_pole_hz": 5e5, "gain": 1.0},
                 "controller": {"kp": 30.0, "ki": 2.05e6, "kii": 3e5, "kd": 0.0,
                                "derivative_rolloff_hz": 1.05e7},
                 "sim": {"dt_s": 5e-9, "t_end_s": 5e-5}})" "\n";
    }
    auto r = run_cli("servo --servo-config " + cfg.string());
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("unstable") != std::string::npos);
}

TEST_CASE("cli: reproduce-paper passes all reference checks") {
    auto out = temp_file("repro.json");
    auto r = run_cli("reproduce-paper --out " + out.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("FAIL") == std::string::npos);
    CHECK(r.output.find("PASS") != std::string::npos);
    auto report = json::parse(slurp(out));
    CHECK(report["all_pass"].get<bool>());
}

TEST_CASE("cli: shipped fixture files match the builtin generators") {
    const std::string data = POLSYNTH_DATA_DIR;
    const fs::path regen = fs::temp_directory_path() / "polsynth_cli_test" / "regen";
    auto r = run_cli("fixtures --out-dir " + regen.string());
    REQUIRE(r.exit_code == 0);
    for (const auto& name :
         {"psd_phase_psi.csv", "psd_rin_r.csv", "lattice_default.json", "servo_default.json",
          "ramp_minjerk_1ms.json", "sideband_longitudinal.csv", "survival_synthetic.csv"}) {
        INFO(name);
        CHECK(slurp(fs::path(data) / name) == slurp(regen / name));
    }
}
