// polsynth: polarization-synthesizer noise and lattice analysis toolbox.
//
// One subcommand per analysis; every report echoes the resolved configuration
// and pairs each numeric output with its unit. Deterministic for a fixed
// configuration and seed.
//
// Exit codes: 0 success, 2 input validation error, 3 numerical failure,
// 4 reference-comparison failure (reproduce-paper only).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "polsynth/polsynth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polsynth;

namespace {

constexpr const char* kVersion = "1.0.0";

// Atomic file write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::invalid_argument("cannot open output file '" + path + "'");
        out << content;
        if (!out) throw std::runtime_error("write failed for '" + path + "'");
    }
    fs::rename(tmp, target);
}

std::string csv_escape(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

// key,value,unit rows from a flat results object
std::string report_to_csv(const json& report) {
    std::string out = "key,value,unit\n";
    const json& units = report.contains("units") ? report.at("units") : json::object();
    const json& results = report.at("results");
    for (auto it = results.begin(); it != results.end(); ++it) {
        const std::string unit =
            units.contains(it.key()) ? units.at(it.key()).get<std::string>() : "1";
        out += it.key() + "," + csv_escape(it.value()) + "," + unit + "\n";
    }
    return out;
}

void emit_report(const json& report, const std::string& out_path, const std::string& format) {
    const std::string text =
        format == "csv" ? report_to_csv(report) : report.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_file_atomic(out_path, text);
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("POLSYNTH_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::invalid_argument("POLSYNTH_SEED is not an integer");
        }
    }
    return 0;
}

// Applies config-file values to CLI options the user did not set explicitly;
// unknown keys are rejected.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    json cfg;
    try {
        in >> cfg;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config '" + path + "': " + e.what());
    }
    if (!cfg.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        CLI::Option* opt = nullptr;
        for (auto* o : cmd->get_options()) {
            for (const auto& name : o->get_lnames()) {
                std::string key = name;
                for (auto& c : key)
                    if (c == '-') c = '_';
                if (key == it.key()) {
                    opt = o;
                    break;
                }
            }
            if (opt) break;
        }
        if (!opt)
            throw std::invalid_argument("config '" + path + "': unknown key '" + it.key() + "'");
        if (opt->count() > 0) continue;  // explicit flags win
        const json& v = it.value();
        std::string text = v.is_string() ? v.get<std::string>() : v.dump();
        opt->add_result(text);
        opt->run_callback();
    }
}

json psd_meta(const Psd& p) {
    return json{{"points", p.freqs.size()},
                {"f_min_hz", p.freqs.front()},
                {"f_max_hz", p.freqs.back()},
                {"unit", to_string(p.unit)}};
}

Psd load_linear_psd(const std::string& path, bool ssb) {
    Psd p = load_psd_csv_file(path);
    if (p.unit == PsdUnit::dbc_per_hz) p = dbc_to_linear(p, ssb);
    return p;
}

struct CommonArgs {
    std::string out;
    std::string format = "json";
    std::string config;
    std::uint64_t seed = default_seed();

    void attach(CLI::App* cmd) {
        cmd->add_option("--out", out, "write the report to this path (default: stdout)");
        cmd->add_option("--format", format, "report format: json or csv")
            ->check(CLI::IsMember({"json", "csv"}));
        cmd->add_option("--config", config, "JSON config file; explicit flags win");
        cmd->add_option("--seed", seed, "random seed (default: POLSYNTH_SEED or 0)");
    }
};

// ---------------------------------------------------------------------------
// budget

int cmd_budget(const CommonArgs& common, const std::string& psd_phase_path,
               const std::string& psd_rin_r_path, const std::string& psd_rin_l_path,
               double epsilon, double eta_spatial, double f_lo, double f_hi, bool ssb) {
    Psd phase = psd_phase_path.empty() ? fixtures::phase_noise_psd()
                                       : load_linear_psd(psd_phase_path, ssb);
    Psd rin_r = psd_rin_r_path.empty() ? fixtures::rin_psd() : load_linear_psd(psd_rin_r_path, ssb);
    Psd rin_l = psd_rin_l_path.empty() ? fixtures::rin_psd() : load_linear_psd(psd_rin_l_path, ssb);

    const NoiseBudget b = budget(phase, rin_r, rin_l, epsilon, eta_spatial, f_lo, f_hi);

    json report{
        {"command", "budget"},
        {"config",
         {{"psd_phase", psd_phase_path.empty() ? "<builtin fixture>" : psd_phase_path},
          {"psd_rin_r", psd_rin_r_path.empty() ? "<builtin fixture>" : psd_rin_r_path},
          {"psd_rin_l", psd_rin_l_path.empty() ? "<builtin fixture>" : psd_rin_l_path},
          {"epsilon", epsilon},
          {"eta_spatial", eta_spatial},
          {"f_lo_hz", f_lo},
          {"f_hi_hz", f_hi},
          {"ssb", ssb},
          {"phase_psd", psd_meta(phase)},
          {"rin_r_psd", psd_meta(rin_r)},
          {"rin_l_psd", psd_meta(rin_l)}}},
        {"results",
         {{"sigma_chi_rad", b.sigma_chi},
          {"sigma_chi_deg", b.sigma_chi * 180.0 / constants::pi},
          {"sigma_psi_rad", b.sigma_psi},
          {"sigma_psi_deg", b.sigma_psi * 180.0 / constants::pi},
          {"eta_intensity", b.eta_intensity},
          {"eta_phase", b.eta_phase},
          {"eta_spatial", b.eta_spatial},
          {"eta_total", b.eta_total},
          {"dop", b.dop},
          {"dop_percent", 100.0 * b.dop}}},
        {"units",
         {{"sigma_chi_rad", "rad"},
          {"sigma_chi_deg", "deg"},
          {"sigma_psi_rad", "rad"},
          {"sigma_psi_deg", "deg"},
          {"eta_intensity", "1"},
          {"eta_phase", "1"},
          {"eta_spatial", "1"},
          {"eta_total", "1"},
          {"dop", "1"},
          {"dop_percent", "%"}}}};
    emit_report(report, common.out, common.format);
    return 0;
}

// ---------------------------------------------------------------------------
// mc-dop

int cmd_mc_dop(const CommonArgs& common, double sigma_psi, double rin_r, double rin_l,
               double epsilon, std::uint64_t n_samples) {
    const double mc = monte_carlo_dop(sigma_psi, rin_r, rin_l, epsilon, n_samples, common.seed);
    const double va = sigma_psi * sigma_psi * (1.0 - epsilon * epsilon);
    const double vb = (rin_r * rin_r + rin_l * rin_l) / 4.0 * (1.0 - epsilon * epsilon);
    const double closed = 1.0 - (va + vb) / 2.0;
    const double se = dop_deficit_standard_error(va, vb, n_samples);

    json report{{"command", "mc-dop"},
                {"config",
                 {{"sigma_psi_rad", sigma_psi},
                  {"rin_r", rin_r},
                  {"rin_l", rin_l},
                  {"epsilon", epsilon},
                  {"n_samples", n_samples},
                  {"seed", common.seed}}},
                {"results",
                 {{"dop_mc", mc},
                  {"dop_closed_form", closed},
                  {"deficit_mc", 1.0 - mc},
                  {"deficit_closed_form", 1.0 - closed},
                  {"deficit_standard_error", se},
                  {"deviation_sigmas", se > 0.0 ? std::abs((1.0 - mc) - (1.0 - closed)) / se : 0.0}}},
                {"units",
                 {{"dop_mc", "1"},
                  {"dop_closed_form", "1"},
                  {"deficit_mc", "1"},
                  {"deficit_closed_form", "1"},
                  {"deficit_standard_error", "1"},
                  {"deviation_sigmas", "1"}}}};
    emit_report(report, common.out, common.format);
    return 0;
}

// ---------------------------------------------------------------------------
// heating

int cmd_heating(const CommonArgs& common, bool has_dbc, double s_dbc, bool has_phi,
                double s_phi, bool ssb, double rin2_at_2nu, const std::string& lattice_path) {
    LatticeConfig cfg =
        lattice_path.empty() ? fixtures::default_lattice() : load_lattice_config(lattice_path);

    if (has_dbc == has_phi)
        throw std::invalid_argument("heating: provide exactly one of --s-dbc or --s-phi");
    double s_linear;
    std::string convention;
    if (has_phi) {
        if (s_phi < 0.0) throw std::invalid_argument("heating: --s-phi must be >= 0");
        s_linear = s_phi;
        convention = "linear rad^2/Hz input";
    } else {
        s_linear = (ssb ? 2.0 : 1.0) * std::pow(10.0, s_dbc / 10.0);
        convention = ssb ? "S = 2*10^(dBc/10) (single-sideband reading)"
                         : "S = 10^(dBc/10) (dBc read as the one-sided PSD)";
    }

    const double q_phase = heating_rate_phase(s_linear, cfg);
    const double q_recoil = heating_rate_recoil(cfg);
    const double gamma_int =
        rin2_at_2nu > 0.0 ? heating_const_intensity(rin2_at_2nu, cfg.nu_par) : 0.0;

    json results{{"s_phi_rad2_per_hz", s_linear},
                 {"q_phase_quanta_per_s", q_phase},
                 {"ground_state_lifetime_s", q_phase > 0.0 ? 1.0 / q_phase : 0.0},
                 {"q_recoil_quanta_per_s", q_recoil},
                 {"recoil_lifetime_s", q_recoil > 0.0 ? 1.0 / q_recoil : 0.0},
                 {"recoil_energy_hz", cfg.recoil_energy() / constants::planck},
                 {"trap_depth_j", cfg.trap_depth()},
                 {"trap_depth_uk", cfg.trap_depth() / constants::boltzmann * 1e6},
                 {"bound_levels", cfg.bound_levels()},
                 {"dbc_convention", convention}};
    if (gamma_int > 0.0) {
        results["gamma_int_per_s"] = gamma_int;
        results["intensity_lifetime_s"] = 4.0 / gamma_int;
    }

    json report{{"command", "heating"},
                {"config",
                 {{"s_dbc", s_dbc},
                  {"s_phi_rad2_per_hz", s_phi},
                  {"ssb", ssb},
                  {"rin2_at_2nu_per_hz", rin2_at_2nu},
                  {"lattice", lattice_path.empty() ? "<builtin defaults>" : lattice_path},
                  {"lattice_resolved", lattice_config_to_json(cfg)}}},
                {"results", results},
                {"units",
                 {{"s_phi_rad2_per_hz", "rad^2/Hz"},
                  {"q_phase_quanta_per_s", "quanta/s"},
                  {"ground_state_lifetime_s", "s"},
                  {"q_recoil_quanta_per_s", "quanta/s"},
                  {"recoil_lifetime_s", "s"},
                  {"recoil_energy_hz", "Hz"},
                  {"trap_depth_j", "J"},
                  {"trap_depth_uk", "uK"},
                  {"bound_levels", "1"},
                  {"gamma_int_per_s", "1/s"},
                  {"intensity_lifetime_s", "s"},
                  {"dbc_convention", "text"}}}};
    emit_report(report, common.out, common.format);
    return 0;
}

// ---------------------------------------------------------------------------
// storage

int cmd_storage(const CommonArgs& common, const std::string& data_path, double q_phase,
                double q_recoil, double gamma_int, double tau_coll, double t0, int n_max,
                double nu_par, double t_max, int n_points, const std::string& curve_out,
                double q_guess, double t0_guess) {
    LossModelParams prm;
    prm.q_phase = q_phase;
    prm.q_recoil = q_recoil;
    prm.gamma_int = gamma_int;
    prm.tau_coll = tau_coll;
    prm.t0 = t0;
    prm.n_max = n_max;
    prm.nu_par = nu_par;
    prm.validate();

    json config{{"q_phase_quanta_per_s", prm.q_phase},
                {"q_recoil_quanta_per_s", prm.q_recoil},
                {"gamma_int_per_s", prm.gamma_int},
                {"tau_coll_s", prm.tau_coll},
                {"t0_k", prm.t0},
                {"n_max", prm.n_max},
                {"nu_par_hz", prm.nu_par}};

    if (!data_path.empty()) {
        const SurvivalCurve data = load_survival_csv_file(data_path);
        const StorageFit fit = fit_storage(data, prm, q_guess, t0_guess);
        json report{{"command", "storage"},
                    {"mode", "fit"},
                    {"config", config},
                    {"data", {{"path", data_path}, {"points", data.times.size()}}},
                    {"results", storage_fit_report(fit, prm)},
                    {"units", {{"q_phase", "quanta/s"}, {"t0", "K"}}}};
        emit_report(report, common.out, common.format);
        return 0;
    }

    std::vector<double> grid;
    for (int i = 1; i <= n_points; ++i)
        grid.push_back(t_max * double(i) / double(n_points));
    auto init = boltzmann_init(prm.t0, prm.nu_par, prm.n_max);
    auto curve = evolve(prm, init, grid);
    if (!curve_out.empty()) {
        std::ostringstream ss;
        save_survival_csv(ss, curve);
        write_file_atomic(curve_out, ss.str());
    }

    double hl = 0.0;
    bool crossed = true;
    try {
        hl = half_life(curve);
    } catch (const std::invalid_argument&) {
        crossed = false;
    }

    json results{{"survival_final", curve.survival.back()},
                 {"t_final_s", curve.times.back()},
                 {"mean_n_initial", init.mean_n()}};
    if (crossed) results["half_life_s"] = hl;
    json report{{"command", "storage"},
                {"mode", "simulate"},
                {"config", config},
                {"results", results},
                {"units",
                 {{"half_life_s", "s"},
                  {"survival_final", "1"},
                  {"t_final_s", "s"},
                  {"mean_n_initial", "quanta"}}}};
    emit_report(report, common.out, common.format);
    return 0;
}

// ---------------------------------------------------------------------------
// servo

int cmd_servo(const CommonArgs& common, const std::string& servo_path,
              const std::string& step_csv, const std::string& freq_csv) {
    ServoConfig cfg = servo_path.empty() ? fixtures::default_servo() : load_servo_config(servo_path);
    auto step = simulate_step(cfg.plant, cfg.controller, cfg.dt, cfg.t_end);
    auto impulse = impulse_from_step(step);
    auto fr = freq_response(impulse);
    const double bw = bandwidth_3db(fr);

    double overshoot = 0.0, settle = 0.0;
    for (std::size_t i = 0; i < step.times.size(); ++i) {
        overshoot = std::max(overshoot, step.values[i] - 1.0);
        if (std::abs(step.values[i] - 1.0) > 0.02) settle = step.times[i];
    }

    if (!step_csv.empty()) {
        std::ostringstream ss;
        save_time_response_csv(ss, step);
        write_file_atomic(step_csv, ss.str());
    }
    if (!freq_csv.empty()) {
        std::ostringstream ss;
        save_freq_response_csv(ss, fr);
        write_file_atomic(freq_csv, ss.str());
    }

    json report{{"command", "servo"},
                {"config", servo_config_to_json(cfg)},
                {"results",
                 {{"bandwidth_3db_hz", bw},
                  {"overshoot", overshoot},
                  {"settling_time_2pct_s", settle},
                  {"final_value", step.values.back()}}},
                {"units",
                 {{"bandwidth_3db_hz", "Hz"},
                  {"overshoot", "1"},
                  {"settling_time_2pct_s", "s"},
                  {"final_value", "1"}}}};
    emit_report(report, common.out, common.format);
    return 0;
}

// ---------------------------------------------------------------------------
// transport

int cmd_transport(const CommonArgs& common, const std::string& ramp_path, std::string kind,
                  double distance, double duration, double nu, double mass) {
    TransportRamp ramp;
    if (!ramp_path.empty()) {
        ramp = load_ramp(ramp_path);
    } else {
        if (kind == "smooth_minjerk") ramp = make_minjerk_ramp(distance, duration);
        else if (kind == "bangbang") ramp = make_bangbang_ramp(distance, duration);
        else throw std::invalid_argument("transport: unknown ramp kind '" + kind + "'");
    }
    const auto res = final_excitation(ramp, nu, mass);

    json report{{"command", "transport"},
                {"config",
                 {{"ramp", ramp_path.empty() ? ramp_to_json(ramp) : json(ramp_path)},
                  {"ramp_resolved", ramp_to_json(ramp)},
                  {"nu_hz", nu},
                  {"mass_kg", mass}}},
                {"results",
                 {{"n_bar", res.n_bar},
                  {"residual_energy_j", res.residual_energy},
                  {"trap_periods", ramp.duration * nu}}},
                {"units",
                 {{"n_bar", "quanta"}, {"residual_energy_j", "J"}, {"trap_periods", "1"}}}};
    emit_report(report, common.out, common.format);
    return 0;
}

// ---------------------------------------------------------------------------
// sideband

int cmd_sideband(const CommonArgs& common, double r, const std::string& spectrum_path,
                 double nu_guess) {
    json results, config;
    if (!spectrum_path.empty()) {
        auto spec = load_sideband_csv_file(spectrum_path);
        auto fit = fit_sideband(spec, nu_guess);
        config = json{{"spectrum", spectrum_path}, {"nu_guess_hz", nu_guess}};
        results = json{{"r", fit.r},
                       {"n_bar", sideband_nbar(fit.r)},
                       {"nu_hz", fit.nu},
                       {"width_hz", fit.width},
                       {"h_cooling", fit.h_cooling},
                       {"h_carrier", fit.h_carrier},
                       {"h_heating", fit.h_heating},
                       {"residual_chi2", fit.residual}};
    } else {
        if (r < 0.0) throw std::invalid_argument("sideband: provide --r or --spectrum");
        config = json{{"r", r}};
        results = json{{"r", r}, {"n_bar", sideband_nbar(r)}};
    }
    json report{{"command", "sideband"},
                {"config", config},
                {"results", results},
                {"units",
                 {{"r", "1"},
                  {"n_bar", "quanta"},
                  {"nu_hz", "Hz"},
                  {"width_hz", "Hz"},
                  {"h_cooling", "1"},
                  {"h_carrier", "1"},
                  {"h_heating", "1"}}}};
    emit_report(report, common.out, common.format);
    return 0;
}

// ---------------------------------------------------------------------------
// fixtures

int cmd_fixtures(const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto write_psd = [&](const std::string& name, const Psd& p) {
        std::ostringstream ss;
        save_psd_csv(ss, p);
        write_file_atomic((fs::path(out_dir) / name).string(), ss.str());
    };
    write_psd("psd_phase_psi.csv", fixtures::phase_noise_psd());
    write_psd("psd_phase_lattice.csv", fixtures::lattice_phase_noise_psd());
    write_psd("psd_rin_r.csv", fixtures::rin_psd());
    write_psd("psd_rin_l.csv", fixtures::rin_psd());

    write_file_atomic((fs::path(out_dir) / "lattice_default.json").string(),
                      lattice_config_to_json(fixtures::default_lattice()).dump(2) + "\n");
    write_file_atomic((fs::path(out_dir) / "servo_default.json").string(),
                      servo_config_to_json(fixtures::default_servo()).dump(2) + "\n");
    write_file_atomic((fs::path(out_dir) / "ramp_minjerk_1ms.json").string(),
                      ramp_to_json(fixtures::minjerk_one_site_ramp()).dump(2) + "\n");
    write_file_atomic((fs::path(out_dir) / "ramp_bangbang_2periods.json").string(),
                      ramp_to_json(fixtures::bangbang_one_site_ramp()).dump(2) + "\n");

    std::ostringstream sb;
    save_sideband_csv(sb, fixtures::sideband_spectrum_fixture());
    write_file_atomic((fs::path(out_dir) / "sideband_longitudinal.csv").string(), sb.str());

    std::ostringstream sv;
    save_survival_csv(sv, fixtures::synthetic_survival_fixture());
    write_file_atomic((fs::path(out_dir) / "survival_synthetic.csv").string(), sv.str());

    std::cout << "wrote fixtures to " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// reproduce-paper

struct Check {
    std::string name;
    double value;
    double reference;
    double tolerance;  // relative
    bool pass;
    std::string unit;
};

int cmd_reproduce(const CommonArgs& common) {
    std::vector<Check> checks;
    auto add = [&](const std::string& name, double value, double ref, double tol,
                   const std::string& unit) {
        checks.push_back({name, value, ref, tol, std::abs(value - ref) <= tol * std::abs(ref), unit});
    };
    auto add_below = [&](const std::string& name, double value, double limit,
                         const std::string& unit) {
        checks.push_back({name, value, limit, 0.0, value < limit, unit});
    };

    // DOP budget rows from the calibrated spectra
    auto b = budget(fixtures::phase_noise_psd(), fixtures::rin_psd(), fixtures::rin_psd(), 0.0,
                    5e-5, fixtures::kBandLow, fixtures::kBandHigh);
    add("intensity-noise sigma_chi", b.sigma_chi * 180.0 / constants::pi, 0.02, 0.15, "deg");
    add("intensity-noise eta", b.eta_intensity, 4e-8, 0.15, "1");
    add("phase-noise sigma_psi", b.sigma_psi * 180.0 / constants::pi, 0.10, 0.10, "deg");
    add("phase-noise eta", b.eta_phase, 8e-7, 0.10, "1");
    add("total eta", b.eta_total, 5e-5, 0.10, "1");
    add("dop", 100.0 * b.dop, 99.99, 2e-5, "%");
    const double share = (b.eta_intensity + b.eta_phase) / b.eta_total;
    checks.push_back({"temporal share of eta_total", share, 0.01, 0.0,
                      share > 0.005 && share < 0.02, "1"});

    // relative-position uncertainty
    const double sigma_dx = position_from_phase(b.sigma_psi, 866e-9);
    add("relative-position rms", sigma_dx * 1e10, 1.2, 0.02, "angstrom");

    // heating rates
    const LatticeConfig lat = fixtures::default_lattice();
    const double q_direct = heating_rate_phase(std::pow(10.0, -122.0 / 10.0), lat);
    const double q_ssb = 2.0 * q_direct;
    checks.push_back({"phase heating rate (both dBc conventions)", q_direct, 1.0, 0.0,
                      q_direct > 0.6 && q_ssb < 1.3 && q_ssb > 1.0, "quanta/s"});
    add("intensity heating constant", heating_const_intensity(1.4e-14, lat.nu_par), 2e-3, 0.10,
        "1/s");
    add("recoil heating rate (printed formula)", heating_rate_recoil(lat), 0.30, 0.05, "quanta/s");

    // storage half-life at the reference parameters
    LossModelParams prm;
    std::vector<double> grid;
    for (int i = 1; i <= 100; ++i) grid.push_back(0.25 * double(i));
    auto curve = evolve(prm, boltzmann_init(prm.t0, prm.nu_par, prm.n_max), grid);
    add("storage half-life", half_life(curve), 6.6, 0.20, "s");

    // servo bandwidth
    auto scfg = fixtures::default_servo();
    auto step = simulate_step(scfg.plant, scfg.controller, scfg.dt, scfg.t_end);
    const double bw = bandwidth_3db(freq_response(impulse_from_step(step)));
    checks.push_back({"servo 3 dB bandwidth", bw, 800e3, 0.0, bw > 680e3 && bw < 920e3, "Hz"});

    // transport
    add_below("1 ms min-jerk transport n_bar",
              final_excitation(fixtures::minjerk_one_site_ramp(), lat.nu_par, lat.mass).n_bar,
              1e-6, "quanta");
    add_below("two-period bang-bang transport n_bar",
              final_excitation(fixtures::bangbang_one_site_ramp(), lat.nu_par, lat.mass).n_bar,
              1e-3, "quanta");

    // sideband thermometry
    add("sideband n_bar at r = 0.5", sideband_nbar(0.5), 1.0, 1e-12, "quanta");
    auto fit = fit_sideband(fixtures::sideband_spectrum_fixture(), 117e3);
    add("sideband fixture ratio", fit.r, 0.1, 0.01, "1");

    bool all_pass = true;
    json jchecks = json::array();
    for (const auto& c : checks) {
        all_pass = all_pass && c.pass;
        char line[256];
        std::snprintf(line, sizeof line, "%s  %-42s  %.6g %s  (reference %.6g)",
                      c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.unit.c_str(),
                      c.reference);
        std::cout << line << "\n";
        jchecks.push_back({{"name", c.name},
                           {"value", c.value},
                           {"reference", c.reference},
                           {"relative_tolerance", c.tolerance},
                           {"unit", c.unit},
                           {"pass", c.pass}});
    }
    std::cout << (all_pass ? "all reference checks passed\n"
                           : "some reference checks FAILED\n");
    if (!common.out.empty()) {
        json report{{"command", "reproduce-paper"},
                    {"checks", jchecks},
                    {"all_pass", all_pass}};
        write_file_atomic(common.out, report.dump(2) + "\n");
    }
    return all_pass ? 0 : 4;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"polarization-synthesizer noise and lattice analysis toolbox"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // budget
    auto* budget_cmd = app.add_subcommand(
        "budget", "polarization extinction budget: integrates phase/intensity noise spectra "
                  "over a band, applies sigma_chi^2 = (RIN_R^2+RIN_L^2)/4 (1-eps^2), "
                  "DOP = 1 - sigma^2/2 and eta = (1-DOP)/2, and adds the spatial term");
    CommonArgs budget_common;
    budget_common.attach(budget_cmd);
    std::string psd_phase, psd_rin_r, psd_rin_l;
    double epsilon = 0.0, eta_spatial = 0.0, f_lo = 1.0, f_hi = 25e6;
    bool budget_ssb = false;
    budget_cmd->add_option("--psd-phase", psd_phase, "phase-noise PSD CSV (default: builtin fixture)");
    budget_cmd->add_option("--psd-rin-r", psd_rin_r, "RIN^2 PSD CSV, R component");
    budget_cmd->add_option("--psd-rin-l", psd_rin_l, "RIN^2 PSD CSV, L component");
    budget_cmd->add_option("--epsilon", epsilon, "mean ellipticity of the synthesized state");
    budget_cmd->add_option("--eta-spatial", eta_spatial, "static spatial-inhomogeneity eta");
    budget_cmd->add_option("--f-lo", f_lo, "integration band lower edge [Hz]");
    budget_cmd->add_option("--f-hi", f_hi, "integration band upper edge [Hz]");
    budget_cmd->add_flag("--ssb", budget_ssb, "read dBc/Hz files as single-sideband (S = 2 L)");

    // mc-dop
    auto* mc_cmd = app.add_subcommand(
        "mc-dop", "Monte Carlo DOP: draws Gaussian phase fluctuations (variance sigma_psi^2/2 "
                  "per component) and intensity fluctuations (RIN), synthesizes the Stokes "
                  "ensemble and evaluates DOP = |mean S|/mean S0 against the closed form");
    CommonArgs mc_common;
    mc_common.attach(mc_cmd);
    double mc_sigma_psi = 0.0, mc_rin_r = 0.0, mc_rin_l = 0.0, mc_epsilon = 0.0;
    std::uint64_t mc_n = 100000;
    mc_cmd->add_option("--sigma-psi-rad", mc_sigma_psi, "rotation-angle rms [rad]");
    mc_cmd->add_option("--rin-r", mc_rin_r, "relative intensity noise, R component");
    mc_cmd->add_option("--rin-l", mc_rin_l, "relative intensity noise, L component");
    mc_cmd->add_option("--epsilon", mc_epsilon, "mean ellipticity");
    mc_cmd->add_option("--n-samples", mc_n, "ensemble size (>= 1e4)");

    // heating
    auto* heat_cmd = app.add_subcommand(
        "heating", "lattice heating rates: Qdot = pi^3 m nu^3/(2 hbar k^2) S_dphi(nu) from "
                   "phase noise, recoil rate (1+2/5) gamma E_rec/(2 pi hbar nu), and the "
                   "parametric constant Gamma = pi^2 nu^2 RIN^2(2 nu)");
    CommonArgs heat_common;
    heat_common.attach(heat_cmd);
    double s_dbc = 0.0, s_phi = -1.0, rin2_at_2nu = 0.0;
    bool heat_ssb = false;
    std::string lattice_path;
    heat_cmd->add_option("--s-dbc", s_dbc, "phase PSD at the trap frequency [dBc/Hz]");
    heat_cmd->add_option("--s-phi", s_phi, "phase PSD at the trap frequency [rad^2/Hz]");
    heat_cmd->add_flag("--ssb", heat_ssb, "apply the single-sideband reading S = 2*10^(dBc/10)");
    heat_cmd->add_option("--rin2-at-2nu", rin2_at_2nu, "RIN^2 density at 2 nu_par [1/Hz]");
    heat_cmd->add_option("--lattice", lattice_path, "lattice config JSON (default: builtin)");

    // storage
    auto* storage_cmd = app.add_subcommand(
        "storage", "storage-time model: birth-death master equation over the bound levels with "
                   "absorbing boundary and collision loss; simulates survival or fits "
                   "(q_phase, T0) to a measured curve");
    CommonArgs storage_common;
    storage_common.attach(storage_cmd);
    std::string data_path, curve_out;
    LossModelParams def;
    double st_q = def.q_phase, st_qrec = def.q_recoil, st_gamma = def.gamma_int,
           st_tau = def.tau_coll, st_t0 = def.t0, st_nu = def.nu_par;
    int st_nmax = def.n_max, st_npts = 100;
    double st_tmax = 25.0, st_qguess = 1.0, st_t0guess = 10e-6;
    storage_cmd->add_option("--data", data_path, "survival CSV 'time_s,survival[,stderr]' to fit");
    storage_cmd->add_option("--q-phase", st_q, "phase-noise excitation rate [quanta/s]");
    storage_cmd->add_option("--q-recoil", st_qrec, "recoil excitation rate [quanta/s]");
    storage_cmd->add_option("--gamma-int", st_gamma, "parametric heating constant [1/s]");
    storage_cmd->add_option("--tau-coll", st_tau, "background-gas lifetime [s]");
    storage_cmd->add_option("--t0-k", st_t0, "initial temperature [K]");
    storage_cmd->add_option("--n-max", st_nmax, "bound levels");
    storage_cmd->add_option("--nu-par-hz", st_nu, "longitudinal trap frequency [Hz]");
    storage_cmd->add_option("--t-max", st_tmax, "simulation end time [s]");
    storage_cmd->add_option("--n-points", st_npts, "simulation grid points");
    storage_cmd->add_option("--curve-out", curve_out, "write the simulated curve CSV here");
    storage_cmd->add_option("--q-phase-guess", st_qguess, "fit initial guess for q_phase");
    storage_cmd->add_option("--t0-guess-k", st_t0guess, "fit initial guess for T0 [K]");

    // servo
    auto* servo_cmd = app.add_subcommand(
        "servo", "closed-loop servo response: simulates the PI^2D loop with AOM dead time, "
                 "differentiates the step into the impulse response, Fourier-transforms it and "
                 "reports the 3 dB modulation bandwidth");
    CommonArgs servo_common;
    servo_common.attach(servo_cmd);
    std::string servo_path, step_csv, freq_csv;
    servo_cmd->add_option("--servo-config", servo_path, "servo config JSON (default: builtin)");
    servo_cmd->add_option("--step-csv", step_csv, "write the step response CSV 't_s,value'");
    servo_cmd->add_option("--freq-csv", freq_csv, "write the frequency response CSV 'freq_hz,mag_db'");

    // transport
    auto* transport_cmd = app.add_subcommand(
        "transport", "transport excitation: residual energy (m/2)|int a(t) e^{-i 2 pi nu t} dt|^2 "
                     "of the driven trap mode, n_bar = E/(h nu)");
    CommonArgs transport_common;
    transport_common.attach(transport_cmd);
    std::string ramp_path, ramp_kind = "smooth_minjerk";
    double tr_distance = 433e-9, tr_duration = 1e-3, tr_nu = 117e3,
           tr_mass = constants::cesium_mass;
    transport_cmd->add_option("--ramp", ramp_path, "ramp spec JSON");
    transport_cmd->add_option("--kind", ramp_kind, "smooth_minjerk or bangbang");
    transport_cmd->add_option("--distance-m", tr_distance, "transport distance [m]");
    transport_cmd->add_option("--duration-s", tr_duration, "ramp duration [s]");
    transport_cmd->add_option("--nu-hz", tr_nu, "trap frequency [Hz]");
    transport_cmd->add_option("--mass-kg", tr_mass, "atomic mass [kg]");

    // sideband
    auto* sideband_cmd = app.add_subcommand(
        "sideband", "sideband thermometry: n_bar = r/(1-r) from the cooling/heating sideband "
                    "ratio, with an optional three-peak fit to a measured spectrum");
    CommonArgs sideband_common;
    sideband_common.attach(sideband_cmd);
    double sb_r = -1.0, sb_nu_guess = 117e3;
    std::string spectrum_path;
    sideband_cmd->add_option("--r", sb_r, "cooling/heating sideband height ratio in [0, 1)");
    sideband_cmd->add_option("--spectrum", spectrum_path, "sideband spectrum CSV to fit");
    sideband_cmd->add_option("--nu-guess-hz", sb_nu_guess, "initial sideband spacing guess [Hz]");

    // fixtures
    auto* fixtures_cmd =
        app.add_subcommand("fixtures", "write the shipped fixture files (spectra, configs, ramps)");
    std::string out_dir = "data";
    fixtures_cmd->add_option("--out-dir", out_dir, "output directory");

    // reproduce-paper
    auto* repro_cmd = app.add_subcommand(
        "reproduce-paper", "run every shipped fixture and compare the results against their "
                           "published reference values; exit 4 on comparison failure");
    CommonArgs repro_common;
    repro_common.attach(repro_cmd);

    CLI11_PARSE(app, argc, argv);

    {
        if (budget_cmd->parsed()) {
            if (!budget_common.config.empty()) apply_config_file(budget_cmd, budget_common.config);
            return cmd_budget(budget_common, psd_phase, psd_rin_r, psd_rin_l, epsilon, eta_spatial,
                              f_lo, f_hi, budget_ssb);
        }
        if (mc_cmd->parsed()) {
            if (!mc_common.config.empty()) apply_config_file(mc_cmd, mc_common.config);
            return cmd_mc_dop(mc_common, mc_sigma_psi, mc_rin_r, mc_rin_l, mc_epsilon, mc_n);
        }
        if (heat_cmd->parsed()) {
            if (!heat_common.config.empty()) apply_config_file(heat_cmd, heat_common.config);
            return cmd_heating(heat_common, heat_cmd->count("--s-dbc") > 0, s_dbc,
                               heat_cmd->count("--s-phi") > 0, s_phi, heat_ssb, rin2_at_2nu,
                               lattice_path);
        }
        if (storage_cmd->parsed()) {
            if (!storage_common.config.empty())
                apply_config_file(storage_cmd, storage_common.config);
            return cmd_storage(storage_common, data_path, st_q, st_qrec, st_gamma, st_tau, st_t0,
                               st_nmax, st_nu, st_tmax, st_npts, curve_out, st_qguess, st_t0guess);
        }
        if (servo_cmd->parsed()) {
            if (!servo_common.config.empty()) apply_config_file(servo_cmd, servo_common.config);
            return cmd_servo(servo_common, servo_path, step_csv, freq_csv);
        }
        if (transport_cmd->parsed()) {
            if (!transport_common.config.empty())
                apply_config_file(transport_cmd, transport_common.config);
            return cmd_transport(transport_common, ramp_path, ramp_kind, tr_distance, tr_duration,
                                 tr_nu, tr_mass);
        }
        if (sideband_cmd->parsed()) {
            if (!sideband_common.config.empty())
                apply_config_file(sideband_cmd, sideband_common.config);
            return cmd_sideband(sideband_common, sb_r, spectrum_path, sb_nu_guess);
        }
        if (fixtures_cmd->parsed()) return cmd_fixtures(out_dir);
        if (repro_cmd->parsed()) return cmd_reproduce(repro_common);
    }
    return 0;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
}
