#ifndef POLSYNTH_BUDGET_HPP
#define POLSYNTH_BUDGET_HPP

// Extinction-ratio budget: band-integrated noise spectra plus the static
// spatial contribution, combined in the small-eta additive limit.

#include <stdexcept>

#include "polsynth/psd.hpp"
#include "polsynth/stokes.hpp"

namespace polsynth {

struct NoiseBudget {
    double sigma_chi = 0.0;  // rad
    double sigma_psi = 0.0;  // rad
    double eta_intensity = 0.0;
    double eta_phase = 0.0;
    double eta_spatial = 0.0;
    double eta_total = 0.0;
    double dop = 1.0;
};

// psd_phase: PSD of the relative phase psi (rad^2/Hz); psd_rin_*: PSDs of the
// relative intensity noise of the two components (1/Hz). All in linear units.
inline NoiseBudget budget(const Psd& psd_phase, const Psd& psd_rin_r, const Psd& psd_rin_l,
                          double epsilon, double eta_spatial, double f_lo, double f_hi) {
    if (eta_spatial < 0.0 || eta_spatial > 0.5)
        throw std::invalid_argument("budget: eta_spatial outside [0, 1/2]");
    const double var_psi = integrate_psd(psd_phase, f_lo, f_hi);
    const double rin2_r = integrate_psd(psd_rin_r, f_lo, f_hi);
    const double rin2_l = integrate_psd(psd_rin_l, f_lo, f_hi);

    NoiseBudget b;
    b.sigma_psi = std::sqrt(var_psi);
    const auto intensity =
        dop_from_intensity_noise(std::sqrt(rin2_r), std::sqrt(rin2_l), epsilon);
    b.sigma_chi = intensity.sigma_chi;
    b.eta_intensity = intensity.eta;
    b.eta_phase = dop_from_phase_noise(b.sigma_psi, epsilon).eta;
    b.eta_spatial = eta_spatial;
    b.eta_total = b.eta_intensity + b.eta_phase + b.eta_spatial;
    b.dop = dop_from_eta(b.eta_total);
    return b;
}

}  // namespace polsynth

#endif
