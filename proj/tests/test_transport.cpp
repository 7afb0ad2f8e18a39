#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "polsynth/constants.hpp"
#include "polsynth/transport.hpp"

using namespace polsynth;
using Catch::Approx;

namespace {

constexpr double kNu = 117e3;
constexpr double kMass = constants::cesium_mass;
constexpr double kSite = 433e-9;

// relative agreement with an absolute floor for near-zero excitations
void check_oracle_agreement(const TransportRamp& ramp, double rel_tol = 1e-8) {
    const auto spectral = final_excitation(ramp, kNu, kMass);
    const auto timedom = final_excitation_time_domain(ramp, kNu, kMass);
    const double m = std::max(spectral.n_bar, timedom.n_bar);
    INFO("spectral " << spectral.n_bar << " time-domain " << timedom.n_bar);
    if (m > 1e-9)
        CHECK(std::abs(spectral.n_bar - timedom.n_bar) / m <= rel_tol);
    else
        CHECK(std::abs(spectral.n_bar - timedom.n_bar) <= 1e-12);
}

}  // namespace

TEST_CASE("final_excitation reference cases") {
    SECTION("zero distance: no excitation") {
        auto r = final_excitation(make_minjerk_ramp(0.0, 1e-3), kNu, kMass);
        CHECK(r.n_bar == 0.0);
        CHECK(r.residual_energy == 0.0);
    }
    SECTION("adiabatic one-site ramp: below 1e-6 quanta") {
        auto r = final_excitation(make_minjerk_ramp(kSite, 1e-3), kNu, kMass);
        CHECK(r.n_bar < 1e-6);
    }
    SECTION("period-matched bang-bang: below 1e-3 quanta") {
        auto r = final_excitation(make_bangbang_ramp(kSite, 2.0 / kNu), kNu, kMass);
        CHECK(r.n_bar < 1e-3);
    }
    SECTION("n_bar and residual energy are consistent") {
        auto r = final_excitation(make_minjerk_ramp(kSite, 1.3 / kNu), kNu, kMass);
        CHECK(r.n_bar == Approx(r.residual_energy / (constants::planck * kNu)).epsilon(1e-12));
        CHECK(r.n_bar > 1.0);  // strongly non-adiabatic
    }
}

TEST_CASE("spectral formula agrees with the time-domain oscillator") {
    SECTION("non-adiabatic min-jerk ramps") {
        for (double periods : {0.5, 1.3, 3.7, 10.3})
            check_oracle_agreement(make_minjerk_ramp(kSite, periods / kNu));
    }
    SECTION("bang-bang ramps") {
        check_oracle_agreement(make_bangbang_ramp(kSite, 1.3 / kNu));
        check_oracle_agreement(make_bangbang_ramp(kSite, 2.0 / kNu));
    }
    SECTION("adiabatic fixture") {
        check_oracle_agreement(make_minjerk_ramp(kSite, 1e-3));
    }
    SECTION("sampled ramp") {
        TransportRamp r;
        r.kind = RampKind::custom_samples;
        r.distance = kSite;
        r.duration = 2.6 / kNu;
        const int n = 4000;
        for (int i = 0; i <= n; ++i) {
            const double u = double(i) / n;
            r.samples.push_back(kSite * u * u * (2.0 - u));
        }
        check_oracle_agreement(r);
    }
}

TEST_CASE("transport invariance properties") {
    SECTION("time reversal leaves the excitation unchanged") {
        // asymmetric custom ramp and its reverse
        TransportRamp fwd;
        fwd.kind = RampKind::custom_samples;
        fwd.distance = kSite;
        fwd.duration = 2.6 / kNu;
        const int n = 4000;
        for (int i = 0; i <= n; ++i) {
            const double u = double(i) / n;
            fwd.samples.push_back(kSite * u * u * (2.0 - u));  // x(1) = d
        }
        TransportRamp rev = fwd;
        for (int i = 0; i <= n; ++i)
            rev.samples[std::size_t(i)] = kSite - fwd.samples[std::size_t(n - i)];
        auto a = final_excitation(fwd, kNu, kMass);
        auto b = final_excitation(rev, kNu, kMass);
        CHECK(a.n_bar == Approx(b.n_bar).epsilon(1e-9));
    }
    SECTION("excitation scales as distance squared") {
        auto r1 = final_excitation(make_minjerk_ramp(kSite, 2.3 / kNu), kNu, kMass);
        auto r2 = final_excitation(make_minjerk_ramp(2.0 * kSite, 2.3 / kNu), kNu, kMass);
        CHECK(r2.n_bar == Approx(4.0 * r1.n_bar).epsilon(1e-6));
    }
    SECTION("adiabatic suppression with longer ramps") {
        const double t1 = 10.3 / kNu;
        auto r1 = final_excitation(make_minjerk_ramp(kSite, t1), kNu, kMass);
        auto r10 = final_excitation(make_minjerk_ramp(kSite, 10.0 * t1), kNu, kMass);
        CHECK(r10.n_bar < r1.n_bar / 10.0);
    }
}

TEST_CASE("under-resolved quadrature is caught by the Richardson check") {
    ExcitationOptions coarse;
    coarse.points_per_period = 6;
    coarse.min_points = 8;
    coarse.richardson_tol = 1e-9;
    CHECK_THROWS_AS(final_excitation(make_minjerk_ramp(kSite, 1.3 / kNu), kNu, kMass, coarse),
                    std::runtime_error);
}

TEST_CASE("custom ramp resolution precondition") {
    TransportRamp r;
    r.kind = RampKind::custom_samples;
    r.distance = kSite;
    r.duration = 4.0 / kNu;
    for (int i = 0; i <= 20; ++i) r.samples.push_back(kSite * double(i) / 20.0);
    CHECK_THROWS_AS(final_excitation(r, kNu, kMass), std::invalid_argument);
}

TEST_CASE("ramp json round trip and validation") {
    auto j = ramp_to_json(make_bangbang_ramp(kSite, 2.0 / kNu));
    auto r = ramp_from_json(j);
    CHECK(r.kind == RampKind::bangbang);
    CHECK(r.distance == Approx(kSite));

    SECTION("unknown keys rejected") {
        auto bad = j;
        bad["velocity"] = 1.0;
        CHECK_THROWS_AS(ramp_from_json(bad), std::invalid_argument);
    }
    SECTION("missing kind rejected") {
        nlohmann::json no_kind{{"distance_m", 1e-9}, {"duration_s", 1e-3}};
        CHECK_THROWS_AS(ramp_from_json(no_kind), std::invalid_argument);
    }
    SECTION("custom samples endpoint invariant") {
        nlohmann::json bad{{"kind", "custom_samples"},
                           {"distance_m", 1e-9},
                           {"duration_s", 1e-3},
                           {"samples", {0.0, 1e-10, 2e-10, 3e-10, 4e-10, 5e-10, 6e-10, 9e-10}}};
        CHECK_THROWS_AS(ramp_from_json(bad), std::invalid_argument);
    }
}
