#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "polsynth/fixtures.hpp"

using namespace polsynth;
using Catch::Approx;

TEST_CASE("phase-noise fixture calibration") {
    auto psd = fixtures::phase_noise_psd();
    const double var = integrate_psd(psd, fixtures::kBandLow, fixtures::kBandHigh);
    const double target = fixtures::reference_sigma_psi();
    CHECK(std::sqrt(var) == Approx(target).epsilon(1e-12));
    // mid-band floor near -130 dBc/Hz at the trap frequency
    const double s117k = psd_interpolate(psd, 117e3);
    CHECK(10.0 * std::log10(s117k) == Approx(-130.0).margin(0.5));
}

TEST_CASE("lattice phase-noise fixture sits near -122 dBc/Hz at the trap frequency") {
    auto psd = fixtures::lattice_phase_noise_psd();
    const double s117k = psd_interpolate(psd, 117e3);
    CHECK(10.0 * std::log10(s117k) == Approx(-122.0).margin(0.7));
}

TEST_CASE("rin fixture calibration") {
    auto psd = fixtures::rin_psd();
    const double rin2 = integrate_psd(psd, fixtures::kBandLow, fixtures::kBandHigh);
    CHECK(std::sqrt(rin2) == Approx(fixtures::reference_rin()).epsilon(1e-12));
    // floor near 1.4e-14 /Hz at twice the trap frequency
    CHECK(psd_interpolate(psd, 234e3) == Approx(1.4e-14).epsilon(0.1));
}

TEST_CASE("default lattice matches the reference system") {
    auto cfg = fixtures::default_lattice();
    CHECK(cfg.lambda == Approx(866e-9));
    CHECK(cfg.nu_par == Approx(117e3));
    CHECK(cfg.bound_levels() == 14);
}

TEST_CASE("synthetic survival fixture is fittable") {
    auto curve = fixtures::synthetic_survival_fixture();
    REQUIRE(curve.times.size() == 32);
    REQUIRE(curve.stderrs.size() == 32);
    auto fit = fit_storage(curve, fixtures::default_loss_model(), 1.0, 10e-6);
    CHECK(fit.q_phase == Approx(1.37).margin(0.12));
    CHECK(fit.t0 == Approx(7.8e-6).margin(2.5e-6));
}
