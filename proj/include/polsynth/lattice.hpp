#ifndef POLSYNTH_LATTICE_HPP
#define POLSYNTH_LATTICE_HPP

// State-dependent optical lattice: phase-to-position mapping and the
// conversion of noise spectral densities into motional heating rates.

#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "polsynth/constants.hpp"

namespace polsynth {

// Trap and beam parameters in SI units. depth <= 0 means "derive from
// m (nu_par lambda)^2 / 2".
struct LatticeConfig {
    double lambda = 866e-9;          // m
    double mass = constants::cesium_mass;  // kg
    double nu_par = 117e3;           // Hz
    double nu_perp = 20e3;           // Hz
    double gamma_scatter = 12.5;     // 1/s
    double depth = 0.0;              // J; derived when <= 0

    double wavevector() const { return 2.0 * constants::pi / lambda; }

    double trap_depth() const {
        if (depth > 0.0) return depth;
        const double v = nu_par * lambda;
        return mass * v * v / 2.0;
    }

    // number of bound levels floor(U0 / (h nu_par))
    int bound_levels() const {
        return int(std::floor(trap_depth() / (constants::planck * nu_par)));
    }

    double recoil_energy() const {
        const double k = wavevector();
        return constants::hbar * constants::hbar * k * k / (2.0 * mass);
    }

    void validate() const {
        if (lambda <= 0.0 || mass <= 0.0 || nu_par <= 0.0 || nu_perp <= 0.0 ||
            gamma_scatter < 0.0)
            throw std::invalid_argument("LatticeConfig: parameters must be positive");
    }
};

inline LatticeConfig lattice_config_from_json(const nlohmann::json& j) {
    LatticeConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "lambda") cfg.lambda = it.value().get<double>();
        else if (key == "mass") cfg.mass = it.value().get<double>();
        else if (key == "nu_par") cfg.nu_par = it.value().get<double>();
        else if (key == "nu_perp") cfg.nu_perp = it.value().get<double>();
        else if (key == "gamma_scatter") cfg.gamma_scatter = it.value().get<double>();
        else if (key == "depth") cfg.depth = it.value().get<double>();
        else throw std::invalid_argument("LatticeConfig: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline nlohmann::json lattice_config_to_json(const LatticeConfig& cfg) {
    nlohmann::json j{{"lambda", cfg.lambda},
                     {"mass", cfg.mass},
                     {"nu_par", cfg.nu_par},
                     {"nu_perp", cfg.nu_perp},
                     {"gamma_scatter", cfg.gamma_scatter}};
    if (cfg.depth > 0.0) j["depth"] = cfg.depth;
    return j;
}

inline LatticeConfig load_lattice_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open lattice config '" + path + "'");
    nlohmann::json j;
    in >> j;
    return lattice_config_from_json(j);
}

// Lattice displacement for a phase change dphi: x = (lambda/2) dphi / (2 pi).
inline double position_from_phase(double dphi, double lambda) {
    return lambda / 2.0 * dphi / (2.0 * constants::pi);
}

// Time-dependent control phases of the two circular components and of the
// counterpropagating reference beam, with the derived lattice positions.
// x_down uses the same phase-to-position map as x_up; the small admixture of
// the other circular component into that potential is neglected.
struct TrapTrajectory {
    std::function<double(double)> phi_r;  // rad
    std::function<double(double)> phi_l;  // rad
    std::function<double(double)> phi_0;  // rad, reference beam
    double lambda = 866e-9;               // m

    double x_up(double t) const { return position_from_phase(phi_r(t) - phi_0(t), lambda); }
    double x_down(double t) const { return position_from_phase(phi_l(t) - phi_0(t), lambda); }
    double separation(double t) const { return x_up(t) - x_down(t); }
};

enum class Transition { up, down };

// Position-noise-driven transition rate between neighboring motional levels:
// R = (2 pi^3 m nu^3 / hbar) S_x(nu) (n + 1/2 +- 1/2).
inline double golden_rule_rate(int n, Transition dir, double nu, double s_x, double mass) {
    if (n < 0) throw std::invalid_argument("golden_rule_rate: n must be >= 0");
    if (s_x < 0.0 || nu <= 0.0 || mass <= 0.0)
        throw std::invalid_argument("golden_rule_rate: negative input");
    const double ladder = dir == Transition::up ? double(n + 1) : double(n);
    return 2.0 * std::pow(constants::pi, 3) * mass * nu * nu * nu / constants::hbar * s_x *
           ladder;
}

// Phase PSD -> position PSD: S_x = S_dphi / (4 k^2).
inline double phase_psd_to_position_psd(double s_phi, double lambda) {
    if (s_phi < 0.0) throw std::invalid_argument("phase_psd_to_position_psd: negative PSD");
    const double k = 2.0 * constants::pi / lambda;
    return s_phi / (4.0 * k * k);
}

// Average excitation rate from phase noise at the trap frequency:
// Qdot = pi^3 m nu^3 / (2 hbar k^2) * S_dphi(nu). Equals the n=0 up rate.
inline double heating_rate_phase(double s_phi_at_nu, const LatticeConfig& cfg) {
    cfg.validate();
    const double s_x = phase_psd_to_position_psd(s_phi_at_nu, cfg.lambda);
    return golden_rule_rate(0, Transition::up, cfg.nu_par, s_x, cfg.mass);
}

// Excitation rate from photon-scattering recoil along the lattice axis:
// Qdot_rec = (1 + 2/5) gamma E_rec / (2 pi hbar nu_par).
inline double heating_rate_recoil(const LatticeConfig& cfg) {
    cfg.validate();
    if (cfg.gamma_scatter <= 0.0) return 0.0;
    return (1.0 + 2.0 / 5.0) * cfg.gamma_scatter * cfg.recoil_energy() /
           (2.0 * constants::pi * constants::hbar * cfg.nu_par);
}

// Parametric (trap-depth) heating rate constant from the relative intensity
// noise at twice the trap frequency: Gamma = pi^2 nu^2 S_RIN(2 nu).
// The energy of an isolated ensemble grows as d<E>/dt = Gamma <E>; the
// ground-state lifetime under this convention is 1/R(2<-0) = 4 / Gamma.
inline double heating_const_intensity(double rin2_at_2nu, double nu) {
    if (rin2_at_2nu < 0.0 || nu < 0.0)
        throw std::invalid_argument("heating_const_intensity: negative input");
    return constants::pi * constants::pi * nu * nu * rin2_at_2nu;
}

}  // namespace polsynth

#endif
