#ifndef POLSYNTH_BEAM_HPP
#define POLSYNTH_BEAM_HPP

// Spatial polarization inhomogeneity across a beam profile and the simulated
// crossed-polarizer extinction scan.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "polsynth/detail/nelder_mead.hpp"
#include "polsynth/stokes.hpp"

namespace polsynth {

// Per-pixel state of polarization with an intensity weight. Pixel angles are
// stored as deviations applied on top of the commanded (compensation) state.
struct BeamPixel {
    double weight = 0.0;     // intensity weight, >= 0
    double delta_psi = 0.0;  // rad
    double delta_chi = 0.0;  // rad
};

struct BeamProfile {
    int nx = 0;
    int ny = 0;
    double pixel_pitch = 1.0;  // arbitrary units
    std::vector<BeamPixel> pixels;

    const BeamPixel& at(int ix, int iy) const { return pixels[std::size_t(iy) * nx + ix]; }
    BeamPixel& at(int ix, int iy) { return pixels[std::size_t(iy) * nx + ix]; }

    double total_weight() const {
        double w = 0.0;
        for (const auto& p : pixels) w += p.weight;
        return w;
    }
};

// Gaussian intensity envelope with 1/e^2 waist equal to half the grid width;
// homogeneous polarization (all deviations zero).
inline BeamProfile make_gaussian_beam(int n = 64) {
    if (n < 2) throw std::invalid_argument("make_gaussian_beam: grid too small");
    BeamProfile b;
    b.nx = b.ny = n;
    b.pixels.resize(std::size_t(n) * n);
    const double c = (n - 1) / 2.0;
    const double waist = n / 2.0;  // pixels
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const double r2 = (ix - c) * (ix - c) + (iy - c) * (iy - c);
            b.at(ix, iy).weight = std::exp(-2.0 * r2 / (waist * waist));
        }
    }
    return b;
}

// Adds zero-mean Gaussian angle deviations pixel by pixel (static spatial
// inhomogeneity model).
inline void add_angle_inhomogeneity(BeamProfile& b, double rms_psi, double rms_chi,
                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double mpsi = 0.0, mchi = 0.0;
    for (auto& p : b.pixels) {
        p.delta_psi += rms_psi * gauss(rng);
        p.delta_chi += rms_chi * gauss(rng);
        mpsi += p.delta_psi;
        mchi += p.delta_chi;
    }
    // remove the sample mean so the quoted rms is the residual inhomogeneity
    mpsi /= double(b.pixels.size());
    mchi /= double(b.pixels.size());
    for (auto& p : b.pixels) {
        p.delta_psi -= mpsi;
        p.delta_chi -= mchi;
    }
}

inline void rotate_beam(BeamProfile& b, double psi_offset, double chi_offset = 0.0) {
    for (auto& p : b.pixels) {
        p.delta_psi += psi_offset;
        p.delta_chi += chi_offset;
    }
}

struct ExtinctionScanResult {
    double eta_min = 0.0;
    PolarizationAngles argmin;  // compensation settings at the minimum
};

namespace detail {

// Transmission of one pixel through the polarizer for compensation settings
// (psi_c, chi_c). The polarizer blocks the state at (0, 0) on the Poincare
// sphere; Malus-law transmission plus an additive leakage floor.
struct ExtinctionEvaluator {
    std::vector<double> w, cp, sp, cc, sc;  // per-pixel weight and trig of deviations
    double floor = 0.0;
    double wsum = 0.0;

    explicit ExtinctionEvaluator(const BeamProfile& b, double polarizer_floor)
        : floor(polarizer_floor) {
        w.reserve(b.pixels.size());
        for (const auto& p : b.pixels) {
            if (p.weight < 0.0)
                throw std::invalid_argument("extinction_scan: negative pixel weight");
            if (p.weight == 0.0) continue;
            w.push_back(p.weight);
            cp.push_back(std::cos(p.delta_psi));
            sp.push_back(std::sin(p.delta_psi));
            cc.push_back(std::cos(p.delta_chi));
            sc.push_back(std::sin(p.delta_chi));
            wsum += p.weight;
        }
        if (wsum <= 0.0) throw std::invalid_argument("extinction_scan: beam has zero total weight");
    }

    double eta(double psi_c, double chi_c) const {
        // The compensation removes (psi_c, chi_c) from every pixel, so pixel i
        // reaches the polarizer at angles (dpsi_i - psi_c, dchi_i - chi_c).
        // Pixel direction n = (cos(chi)cos(psi), cos(chi)sin(psi), sin(chi));
        // the blocked state is b = (1,0,0), so n.b = cos(chi)cos(psi).
        const double cpc = std::cos(psi_c), spc = std::sin(psi_c);
        const double ccc = std::cos(chi_c), scc = std::sin(chi_c);
        double blocked = 0.0, passed = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double cos_psi = cpc * cp[i] + spc * sp[i];
            const double cos_chi = ccc * cc[i] + scc * sc[i];
            const double dot = cos_chi * cos_psi;
            const double t_block = (1.0 - dot) / 2.0 + floor * (1.0 + dot) / 2.0;
            const double t_pass = (1.0 + dot) / 2.0 + floor * (1.0 - dot) / 2.0;
            blocked += w[i] * t_block;
            passed += w[i] * t_pass;
        }
        return blocked / passed;
    }
};

}  // namespace detail

// Simulated extinction measurement: transmitted power through an
// ideal-plus-floor polarizer, minimized over the compensation settings
// (psi, chi). Coarse 129x129 grid over psi in [-pi, pi), chi in [-pi/4, pi/4],
// refined by a downhill simplex to relative tolerance 1e-4.
inline ExtinctionScanResult extinction_scan(const BeamProfile& beam, double polarizer_floor) {
    if (polarizer_floor < 0.0 || polarizer_floor > 1e-3)
        throw std::invalid_argument("extinction_scan: polarizer_floor outside [0, 1e-3]");
    detail::ExtinctionEvaluator ev(beam, polarizer_floor);

    constexpr int kGrid = 129;
    double best_eta = std::numeric_limits<double>::infinity();
    double best_psi = 0.0, best_chi = 0.0;
    for (int i = 0; i < kGrid; ++i) {
        const double psi = -constants::pi + 2.0 * constants::pi * i / kGrid;
        for (int j = 0; j < kGrid; ++j) {
            const double chi = -constants::pi / 4.0 + constants::pi / 2.0 * j / (kGrid - 1);
            const double e = ev.eta(psi, chi);
            if (e < best_eta) {
                best_eta = e;
                best_psi = psi;
                best_chi = chi;
            }
        }
    }

    const double dpsi = 2.0 * constants::pi / kGrid;
    const double dchi = constants::pi / 2.0 / (kGrid - 1);
    auto nm = detail::nelder_mead(
        [&](const std::vector<double>& x) { return ev.eta(x[0], x[1]); },
        {best_psi, best_chi}, {dpsi, dchi}, 1e-12, 6000);

    ExtinctionScanResult out;
    // the transmission model is bounded below by the leakage floor; clamp the
    // last-ulp rounding of the weighted sums
    out.eta_min = std::max(std::min(best_eta, nm.fx), polarizer_floor);
    const double psi_min = nm.fx <= best_eta ? nm.x[0] : best_psi;
    const double chi_min = nm.fx <= best_eta ? nm.x[1] : best_chi;
    out.argmin = make_angles(psi_min, chi_min);
    return out;
}

}  // namespace polsynth

#endif
