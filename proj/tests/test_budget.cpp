#include <catch2/catch_amalgamated.hpp>

#include "polsynth/budget.hpp"
#include "polsynth/fixtures.hpp"

using namespace polsynth;
using Catch::Approx;

TEST_CASE("budget with the calibrated fixtures reproduces the reference rows") {
    auto phase = fixtures::phase_noise_psd();
    auto rin_r = fixtures::rin_psd();
    auto rin_l = fixtures::rin_psd();
    auto b = budget(phase, rin_r, rin_l, 0.0, 5e-5, fixtures::kBandLow, fixtures::kBandHigh);

    CHECK(b.sigma_psi == Approx(fixtures::reference_sigma_psi()).epsilon(1e-9));
    CHECK(b.sigma_chi == Approx(3.9598e-4).epsilon(1e-6));
    CHECK(b.eta_intensity == Approx(3.92e-8).epsilon(1e-3));
    CHECK(b.eta_phase == Approx(7.615e-7).epsilon(1e-3));
    CHECK(b.eta_spatial == 5e-5);
    CHECK(b.eta_total == Approx(5.08e-5).epsilon(1e-2));
    CHECK(b.dop == Approx(0.9999).margin(2e-5));
    // temporal terms contribute about one percent of the total
    const double share = (b.eta_intensity + b.eta_phase) / b.eta_total;
    CHECK(share > 0.005);
    CHECK(share < 0.02);
}

TEST_CASE("budget of silent spectra is unity DOP") {
    Psd zero;
    zero.unit = PsdUnit::rad2_per_hz;
    zero.freqs = {1.0, 25e6};
    zero.values = {0.0, 0.0};
    Psd zero_rin = zero;
    zero_rin.unit = PsdUnit::rin2_per_hz;
    auto b = budget(zero, zero_rin, zero_rin, 0.0, 0.0, 1.0, 25e6);
    CHECK(b.dop == 1.0);
    CHECK(b.eta_total == 0.0);
}

TEST_CASE("budget is monotone in the spectra") {
    auto phase = fixtures::phase_noise_psd();
    auto rin = fixtures::rin_psd();
    auto b0 = budget(phase, rin, rin, 0.0, 1e-5, 1.0, 25e6);
    Psd hotter = phase;
    for (auto& v : hotter.values) v *= 1.5;
    auto b1 = budget(hotter, rin, rin, 0.0, 1e-5, 1.0, 25e6);
    CHECK(b1.dop < b0.dop);
    CHECK(b1.eta_total > b0.eta_total);
    // eta_total dominates each component
    CHECK(b0.eta_total >= b0.eta_intensity);
    CHECK(b0.eta_total >= b0.eta_phase);
    CHECK(b0.eta_total >= b0.eta_spatial);
}
