#ifndef POLSYNTH_MONTE_CARLO_HPP
#define POLSYNTH_MONTE_CARLO_HPP

// Direct ensemble-average cross-check of the closed-form DOP budgets.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "polsynth/stokes.hpp"

namespace polsynth {

// Ensemble DOP from independent Gaussian fluctuations of the control
// parameters: phi_r and phi_l each carry variance sigma_psi^2 / 2, the two
// intensities fluctuate with relative spread rin_r and rin_l around a mean
// state of ellipticity epsilon. Deterministic for a fixed seed.
inline double monte_carlo_dop(double sigma_psi, double rin_r, double rin_l, double epsilon,
                              std::uint64_t n_samples, std::uint64_t seed) {
    if (n_samples < 10000)
        throw std::invalid_argument("monte_carlo_dop: need n_samples >= 1e4");
    if (sigma_psi < 0.0 || rin_r < 0.0 || rin_l < 0.0)
        throw std::invalid_argument("monte_carlo_dop: negative noise amplitude");
    if (std::abs(epsilon) > 1.0)
        throw std::invalid_argument("monte_carlo_dop: |epsilon| > 1");

    const double mean_ir = (1.0 + epsilon) / 2.0;
    const double mean_il = (1.0 - epsilon) / 2.0;
    const double sigma_phi = sigma_psi / std::sqrt(2.0);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        const double ir = mean_ir * std::max(0.0, 1.0 + rin_r * gauss(rng));
        const double il = mean_il * std::max(0.0, 1.0 + rin_l * gauss(rng));
        const double phi_r = sigma_phi * gauss(rng);
        const double phi_l = sigma_phi * gauss(rng);
        const double dphi = phi_r - phi_l;
        const double cross = 2.0 * std::sqrt(ir * il);
        a0 += ir + il;
        a3 += ir - il;
        a1 += cross * std::cos(dphi);
        a2 += cross * std::sin(dphi);
    }
    return std::sqrt(a1 * a1 + a2 * a2 + a3 * a3) / a0;
}

// Delta-method standard error of the polarized-fraction deficit (1 - DOP)
// estimated from n samples with transverse angle variances va and vb.
inline double dop_deficit_standard_error(double va, double vb, std::uint64_t n_samples) {
    return std::sqrt((va * va + vb * vb) / (2.0 * double(n_samples)));
}

}  // namespace polsynth

#endif
