#ifndef POLSYNTH_FIXTURES_HPP
#define POLSYNTH_FIXTURES_HPP

// Shipped reference fixtures: calibrated synthetic noise spectra and default
// configurations. The spectra are shaped like the measured ones (1/f rise at
// low frequency, mid-band floor, servo bump near the loop bandwidth) and are
// calibrated so that their band integrals reproduce the reference rms values
// exactly under integrate_psd.

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "polsynth/constants.hpp"
#include "polsynth/lattice.hpp"
#include "polsynth/psd.hpp"
#include "polsynth/servo.hpp"
#include "polsynth/sideband.hpp"
#include "polsynth/stokes.hpp"
#include "polsynth/storage.hpp"
#include "polsynth/transport.hpp"

namespace polsynth::fixtures {

inline constexpr double kBandLow = 1.0;     // Hz
inline constexpr double kBandHigh = 25e6;   // Hz

// rms of the relative-phase rotation angle: 0.10 degrees
inline double reference_sigma_psi() { return 0.10 * constants::pi / 180.0; }

// rms relative intensity noise per component: 0.056 %
inline double reference_rin() { return 5.6e-4; }

namespace detail_fixtures {

inline std::vector<double> log_grid(double f_lo, double f_hi, int per_decade) {
    std::vector<double> f;
    const double decades = std::log10(f_hi / f_lo);
    const int n = int(std::ceil(decades * per_decade));
    for (int i = 0; i <= n; ++i)
        f.push_back(f_lo * std::pow(10.0, decades * double(i) / double(n)));
    f.back() = f_hi;
    return f;
}

// piecewise power law through (log f, log S) anchor points
inline double anchored_powerlaw(const std::vector<std::pair<double, double>>& anchors, double f) {
    const double lf = std::log10(f);
    if (lf <= anchors.front().first) return std::pow(10.0, anchors.front().second);
    for (std::size_t i = 0; i + 1 < anchors.size(); ++i) {
        if (lf <= anchors[i + 1].first) {
            const double w = (lf - anchors[i].first) / (anchors[i + 1].first - anchors[i].first);
            return std::pow(10.0, anchors[i].second * (1.0 - w) + anchors[i + 1].second * w);
        }
    }
    return std::pow(10.0, anchors.back().second);
}

// lognormal bump centered at f_c with width sigma decades
inline double log_bump(double f, double f_c, double sigma_decades) {
    const double x = std::log10(f / f_c) / sigma_decades;
    return std::exp(-0.5 * x * x);
}

// base shape plus a bump scaled so the band integral hits `target` exactly;
// the segment quadrature is not linear in the values, so the bump scale is
// found by a short secant iteration
inline Psd calibrated_psd(const std::vector<std::pair<double, double>>& anchors, double bump_fc,
                          double bump_sigma, double target, PsdUnit unit) {
    Psd base, bump;
    base.unit = unit;
    bump.unit = unit;
    base.freqs = log_grid(kBandLow, kBandHigh, 16);
    bump.freqs = base.freqs;
    for (double f : base.freqs) {
        base.values.push_back(anchored_powerlaw(anchors, f));
        bump.values.push_back(log_bump(f, bump_fc, bump_sigma));
    }
    const double i_base = integrate_psd(base, kBandLow, kBandHigh);
    const double i_bump = integrate_psd(bump, kBandLow, kBandHigh);
    if (target <= i_base)
        throw std::logic_error("calibrated_psd: base shape already exceeds the target integral");

    auto with_scale = [&](double s) {
        Psd out = base;
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += s * bump.values[i];
        return out;
    };
    double s0 = (target - i_base) / i_bump;
    double s1 = 1.02 * s0;
    double f0 = integrate_psd(with_scale(s0), kBandLow, kBandHigh) - target;
    double f1 = integrate_psd(with_scale(s1), kBandLow, kBandHigh) - target;
    for (int it = 0; it < 60 && std::abs(f1) > 1e-16 * target && f1 != f0; ++it) {
        const double s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
        s0 = s1;
        f0 = f1;
        s1 = s2;
        f1 = integrate_psd(with_scale(s1), kBandLow, kBandHigh) - target;
    }
    return with_scale(s1);
}

}  // namespace detail_fixtures

// Relative-phase noise S_psi(nu) in rad^2/Hz: integrates to (0.10 deg)^2 over
// [1 Hz, 25 MHz], with the mid-band floor at 1e-13 rad^2/Hz (-130 dBc/Hz)
// around the 117 kHz trap frequency and a servo bump near 1 MHz.
inline Psd phase_noise_psd() {
    using namespace detail_fixtures;
    const double s = reference_sigma_psi();
    return calibrated_psd({{0.0, -8.3}, {3.0, -11.6}, {5.068, -13.0}, {6.8, -13.8}, {7.39794, -14.5}},
                          1.0e6, 0.25, s * s, PsdUnit::rad2_per_hz);
}

// Single-lattice phase noise S_dphi(nu): same shape, an order of magnitude
// above the relative-phase floor (-122 dBc/Hz near the trap frequency).
inline Psd lattice_phase_noise_psd() {
    using namespace detail_fixtures;
    const double s = reference_sigma_psi() * std::sqrt(10.0);
    return calibrated_psd({{0.0, -7.5}, {3.0, -10.8}, {5.068, -12.2}, {6.8, -13.0}, {7.39794, -13.7}},
                          1.0e6, 0.25, s * s, PsdUnit::rad2_per_hz);
}

// Relative intensity noise RIN^2(nu) in 1/Hz for one component: integrates to
// (0.056 %)^2, with the floor at 1.4e-14 /Hz around 2 nu_par = 234 kHz.
inline Psd rin_psd() {
    using namespace detail_fixtures;
    const double r = reference_rin();
    return calibrated_psd(
        {{0.0, -11.3}, {3.0, -13.5}, {5.369, -13.854}, {6.9, -14.2}, {7.39794, -14.8}},
        2.0e6, 0.22, r * r, PsdUnit::rin2_per_hz);
}

inline LatticeConfig default_lattice() { return LatticeConfig{}; }

inline LossModelParams default_loss_model() { return LossModelParams{}; }

// Controller gains tuned against simulate_step for the 300 ns dead-time
// plant: 3 dB bandwidth ~830 kHz, ~11 % overshoot, 2 % settling in 1.6 us.
inline ServoConfig default_servo() {
    ServoConfig cfg;
    cfg.plant.dead_time = 300e-9;
    cfg.plant.actuator_pole = 5.0e5;
    cfg.plant.gain = 1.0;
    cfg.controller.kp = 0.73;
    cfg.controller.ki = 2.05e6;
    cfg.controller.kii = 3.0e5;
    cfg.controller.kd = 1.1e-8;
    cfg.controller.derivative_rolloff = 1.05e7;
    cfg.dt = 5e-9;
    cfg.t_end = 50e-6;
    return cfg;
}

// One lattice site in 1 ms: the adiabatic transport ramp.
inline TransportRamp minjerk_one_site_ramp() {
    return make_minjerk_ramp(433e-9, 1e-3);
}

// One lattice site in two trap periods with a bang-bang pulse; each
// constant-acceleration segment spans one full period, so the residual
// excitation vanishes.
inline TransportRamp bangbang_one_site_ramp(double nu_par = 117e3) {
    return make_bangbang_ramp(433e-9, 2.0 / nu_par);
}

// Longitudinal sideband spectrum with heights (0.05, 0.9, 0.5) -> r = 0.1.
inline SidebandSpectrum sideband_spectrum_fixture(double nu = 117e3) {
    return make_sideband_spectrum(nu, 0.05, 0.9, 0.5, nu / 12.0, 1.8 * nu, 241);
}

// Synthetic storage-time measurement: the loss model at the reference
// parameters with 2 % Gaussian noise (fixed seed), stderr column included.
inline SurvivalCurve synthetic_survival_fixture(std::uint64_t seed = 42) {
    LossModelParams prm = default_loss_model();
    std::vector<double> times;
    for (int i = 0; i < 32; ++i) times.push_back(0.25 + (25.0 - 0.25) * double(i) / 31.0);
    auto curve = evolve(prm, boltzmann_init(prm.t0, prm.nu_par, prm.n_max), times);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    curve.stderrs.assign(times.size(), 0.02);
    for (auto& s : curve.survival) s += 0.02 * gauss(rng);
    return curve;
}

}  // namespace polsynth::fixtures

#endif
