#ifndef POLSYNTH_STOKES_HPP
#define POLSYNTH_STOKES_HPP

// Polarization algebra for a beam synthesized from two circular components
// with individually controlled amplitudes and phases.
//
// Angle convention: psi and chi are the longitude and latitude of the Stokes
// vector on the Poincare sphere, i.e. psi = atan2(S2,S1), chi = asin(S3/S0).
// These are HALF the rotation/ellipticity angles used by most textbooks
// (psi_std = 2 psi, chi_std = 2 chi); see to_standard_convention().

#include <cmath>
#include <stdexcept>
#include <vector>

#include "polsynth/constants.hpp"

namespace polsynth {

// Control parameters of the synthesized field: real amplitudes and phases of
// the right- and left-circular components. Only |e| ratios and the phase
// difference carry polarization meaning; phases are stored unwrapped.
struct SynthState {
    double e_r = 0.0;    // right-circular field amplitude, >= 0
    double e_l = 0.0;    // left-circular field amplitude, >= 0
    double phi_r = 0.0;  // rad
    double phi_l = 0.0;  // rad
};

struct StokesVector {
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;
};

// Orientation of a fully polarized state on the Poincare sphere.
// at_pole is set when |epsilon| ~ 1, where psi is undefined and returned as 0.
struct PolarizationAngles {
    double psi = 0.0;      // rotation angle, rad
    double chi = 0.0;      // ellipticity angle, rad, in [-pi/2, pi/2]
    double epsilon = 0.0;  // sin(chi), in [-1, 1]
    bool at_pole = false;
};

inline PolarizationAngles make_angles(double psi, double chi) {
    PolarizationAngles a;
    a.psi = psi;
    a.chi = chi;
    a.epsilon = std::sin(chi);
    a.at_pole = std::abs(a.epsilon) >= 1.0 - 1e-12;
    if (a.at_pole) a.psi = 0.0;
    return a;
}

// Conversion to the common textbook convention (angles doubled).
struct StandardAngles {
    double two_psi;
    double two_chi;
};

inline StandardAngles to_standard_convention(const PolarizationAngles& a) {
    return {2.0 * a.psi, 2.0 * a.chi};
}

// Stokes vector of the synthesized field. The result is fully polarized:
// s1^2 + s2^2 + s3^2 == s0^2 up to rounding.
inline StokesVector synthesize(const SynthState& st) {
    if (st.e_r < 0.0 || st.e_l < 0.0)
        throw std::invalid_argument("synthesize: negative field amplitude");
    if (st.e_r == 0.0 && st.e_l == 0.0)
        throw std::invalid_argument("synthesize: e_r = e_l = 0 has no defined polarization");
    const double ir = st.e_r * st.e_r;
    const double il = st.e_l * st.e_l;
    const double dphi = st.phi_r - st.phi_l;
    StokesVector s;
    s.s0 = ir + il;
    s.s3 = ir - il;
    s.s1 = 2.0 * st.e_r * st.e_l * std::cos(dphi);
    s.s2 = 2.0 * st.e_r * st.e_l * std::sin(dphi);
    return s;
}

inline double polarized_fraction(const StokesVector& s) {
    return std::sqrt(s.s1 * s.s1 + s.s2 * s.s2 + s.s3 * s.s3) / s.s0;
}

// Angles of a fully polarized Stokes vector. Rejects partially polarized
// input, for which the orientation is ambiguous.
inline PolarizationAngles angles_from_stokes(const StokesVector& s) {
    if (s.s0 <= 0.0) throw std::invalid_argument("angles_from_stokes: s0 must be > 0");
    if (polarized_fraction(s) <= 1.0 - 1e-9)
        throw std::invalid_argument("angles_from_stokes: input not fully polarized");
    PolarizationAngles a;
    a.epsilon = s.s3 / s.s0;
    if (a.epsilon > 1.0) a.epsilon = 1.0;
    if (a.epsilon < -1.0) a.epsilon = -1.0;
    a.chi = std::asin(a.epsilon);
    a.at_pole = std::abs(a.epsilon) >= 1.0 - 1e-12;
    a.psi = a.at_pole ? 0.0 : std::atan2(s.s2, s.s1);
    return a;
}

// Control parameters reproducing a given orientation and total intensity.
// Gauge choice: phi_l = 0.
inline SynthState state_from_angles(const PolarizationAngles& a, double total_intensity) {
    if (total_intensity <= 0.0)
        throw std::invalid_argument("state_from_angles: total_intensity must be > 0");
    SynthState st;
    st.e_r = std::sqrt(total_intensity * (1.0 + a.epsilon) / 2.0);
    st.e_l = std::sqrt(total_intensity * (1.0 - a.epsilon) / 2.0);
    st.phi_r = a.psi;
    st.phi_l = 0.0;
    return st;
}

// Degree of polarization of an ensemble: polarized fraction of the
// component-wise average Stokes vector.
inline double dop(const std::vector<StokesVector>& samples) {
    if (samples.empty()) throw std::invalid_argument("dop: empty sample list");
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    for (const auto& s : samples) {
        if (s.s0 <= 0.0) throw std::invalid_argument("dop: sample with s0 <= 0");
        a0 += s.s0;
        a1 += s.s1;
        a2 += s.s2;
        a3 += s.s3;
    }
    return std::sqrt(a1 * a1 + a2 * a2 + a3 * a3) / a0;
}

// Minimum polarization extinction ratio behind an ideal polarizer.
inline double eta_from_dop(double dop_value) {
    if (dop_value < 0.0 || dop_value > 1.0)
        throw std::invalid_argument("eta_from_dop: dop outside [0, 1]");
    return (1.0 - dop_value) / 2.0;
}

inline double dop_from_eta(double eta) {
    if (eta < 0.0 || eta > 0.5)
        throw std::invalid_argument("dop_from_eta: eta outside [0, 1/2]");
    return 1.0 - 2.0 * eta;
}

// Correlation model for the intensity fluctuations of the two components.
enum class FluctuationCorrelation { uncorrelated, correlated, anticorrelated };

struct IntensityNoiseDop {
    double sigma_chi;  // rad
    double dop;
    double eta;
};

// Depolarization from relative intensity noise of the two components, to
// second order in the fluctuations:
//   sigma_chi^2 = (rin_r^2 + rin_l^2)/4 * (1 - eps^2),
//   DOP = 1 - sigma_chi^2 / 2.
// Perfectly correlated fluctuations cancel; anticorrelated ones double the
// variance.
inline IntensityNoiseDop dop_from_intensity_noise(
    double rin_r, double rin_l, double epsilon,
    FluctuationCorrelation corr = FluctuationCorrelation::uncorrelated) {
    if (rin_r < 0.0 || rin_l < 0.0)
        throw std::invalid_argument("dop_from_intensity_noise: negative rin");
    if (rin_r > 0.1 || rin_l > 0.1)
        throw std::invalid_argument(
            "dop_from_intensity_noise: rin > 0.1 outside the small-fluctuation expansion");
    if (std::abs(epsilon) >= 1.0 + 1e-12)
        throw std::invalid_argument("dop_from_intensity_noise: |epsilon| must be < 1");
    double var = (rin_r * rin_r + rin_l * rin_l) / 4.0 * (1.0 - epsilon * epsilon);
    switch (corr) {
        case FluctuationCorrelation::correlated: var = 0.0; break;
        case FluctuationCorrelation::anticorrelated: var *= 2.0; break;
        case FluctuationCorrelation::uncorrelated: break;
    }
    IntensityNoiseDop out;
    out.sigma_chi = std::sqrt(var);
    out.dop = 1.0 - var / 2.0;
    out.eta = eta_from_dop(out.dop);
    return out;
}

struct PhaseNoiseDop {
    double dop;
    double eta;
};

// Depolarization from rotation-angle noise: DOP = 1 - (1-eps^2)/2 * sigma^2.
// At the poles (|eps| = 1) rotation fluctuations cannot depolarize.
inline PhaseNoiseDop dop_from_phase_noise(double sigma_psi, double epsilon) {
    if (sigma_psi < 0.0 || sigma_psi >= 0.3)
        throw std::invalid_argument("dop_from_phase_noise: sigma_psi outside [0, 0.3) rad");
    if (std::abs(epsilon) > 1.0)
        throw std::invalid_argument("dop_from_phase_noise: |epsilon| > 1");
    PhaseNoiseDop out;
    out.dop = 1.0 - (1.0 - epsilon * epsilon) / 2.0 * sigma_psi * sigma_psi;
    out.eta = eta_from_dop(out.dop);
    return out;
}

// Inclination of the accessible sphere for finite circular-polarization
// purity P: 2 atan(1/sqrt(P)).
inline double purity_tilt(double purity) {
    if (purity <= 0.0) throw std::invalid_argument("purity_tilt: purity must be > 0");
    return 2.0 * std::atan(1.0 / std::sqrt(purity));
}

}  // namespace polsynth

#endif
