#ifndef POLSYNTH_TRANSPORT_HPP
#define POLSYNTH_TRANSPORT_HPP

// Motional excitation from state-dependent transport ramps, in the
// driven-harmonic-oscillator (coherent-state) approximation: the residual
// energy after the ramp is
//
//     E = (m/2) | INT a(t) exp(-i 2 pi nu t) dt |^2,   nbar = E / (h nu).
//
// Ramp spec JSON: {"kind": "smooth_minjerk"|"bangbang"|"custom_samples",
//                  "distance_m": ..., "duration_s": ..., "samples": [...]}

#include <cmath>
#include <complex>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsynth/constants.hpp"

namespace polsynth {

enum class RampKind { smooth_minjerk, bangbang, custom_samples };

struct TransportRamp {
    RampKind kind = RampKind::smooth_minjerk;
    double distance = 0.0;  // m
    double duration = 0.0;  // s
    // positions for custom_samples, uniformly spaced over [0, duration],
    // samples.front() == 0 and samples.back() == distance
    std::vector<double> samples;

    void validate() const {
        if (duration <= 0.0) throw std::invalid_argument("TransportRamp: duration must be > 0");
        if (kind == RampKind::custom_samples) {
            if (samples.size() < 8)
                throw std::invalid_argument("TransportRamp: custom ramp needs >= 8 samples");
            if (std::abs(samples.front()) > 1e-12 * std::max(1.0, std::abs(distance)) ||
                std::abs(samples.back() - distance) > 1e-12 * std::max(1.0, std::abs(distance)))
                throw std::invalid_argument(
                    "TransportRamp: custom samples must start at 0 and end at distance");
        }
    }
};

inline TransportRamp make_minjerk_ramp(double distance, double duration) {
    TransportRamp r;
    r.kind = RampKind::smooth_minjerk;
    r.distance = distance;
    r.duration = duration;
    r.validate();
    return r;
}

inline TransportRamp make_bangbang_ramp(double distance, double duration) {
    TransportRamp r;
    r.kind = RampKind::bangbang;
    r.distance = distance;
    r.duration = duration;
    r.validate();
    return r;
}

namespace detail {

// Piecewise-constant acceleration cells of a sampled ramp: cell j spans the
// midpoints around node j and carries the second central difference there.
inline std::vector<double> custom_cell_accelerations(const TransportRamp& ramp) {
    const std::size_t n = ramp.samples.size();
    const double h = ramp.duration / double(n - 1);
    std::vector<double> a(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t i = j;
        if (i == 0) i = 1;
        if (i >= n - 1) i = n - 2;
        a[j] = (ramp.samples[i - 1] - 2.0 * ramp.samples[i] + ramp.samples[i + 1]) / (h * h);
    }
    return a;
}

// Ramp position and acceleration. segment_hint selects the branch exactly on
// piecewise boundaries (0 = left of the breakpoint).
struct RampMotion {
    const TransportRamp& ramp;

    double position(double t) const {
        const double T = ramp.duration;
        if (t <= 0.0) return 0.0;
        if (t >= T) return ramp.distance;
        switch (ramp.kind) {
            case RampKind::smooth_minjerk: {
                const double u = t / T;
                return ramp.distance * ((10.0 - 15.0 * u + 6.0 * u * u) * u * u * u);
            }
            case RampKind::bangbang: {
                const double a = 4.0 * ramp.distance / (T * T);
                if (t < T / 2.0) return 0.5 * a * t * t;
                const double tr = T - t;
                return ramp.distance - 0.5 * a * tr * tr;
            }
            case RampKind::custom_samples: {
                const std::size_t n = ramp.samples.size();
                const double x = t / T * double(n - 1);
                const std::size_t i = std::min(std::size_t(x), n - 2);
                const double w = x - double(i);
                return ramp.samples[i] * (1.0 - w) + ramp.samples[i + 1] * w;
            }
        }
        throw std::logic_error("RampMotion: bad kind");
    }

    double acceleration(double t, int segment_hint = -1) const {
        const double T = ramp.duration;
        switch (ramp.kind) {
            case RampKind::smooth_minjerk: {
                const double u = t / T;
                return ramp.distance / (T * T) * (60.0 * u - 180.0 * u * u + 120.0 * u * u * u);
            }
            case RampKind::bangbang: {
                const double a = 4.0 * ramp.distance / (T * T);
                if (segment_hint == 0) return a;
                if (segment_hint == 1) return -a;
                return t < T / 2.0 ? a : -a;
            }
            case RampKind::custom_samples: {
                // second central difference of the sample polyline
                const std::size_t n = ramp.samples.size();
                const double h = T / double(n - 1);
                double x = t / T * double(n - 1);
                std::size_t i = std::size_t(std::llround(x));
                if (i == 0) i = 1;
                if (i >= n - 1) i = n - 2;
                return (ramp.samples[i - 1] - 2.0 * ramp.samples[i] + ramp.samples[i + 1]) /
                       (h * h);
            }
        }
        throw std::logic_error("RampMotion: bad kind");
    }

    // boundaries of smooth segments, including the endpoints
    std::vector<double> breakpoints() const {
        if (ramp.kind == RampKind::bangbang)
            return {0.0, ramp.duration / 2.0, ramp.duration};
        return {0.0, ramp.duration};
    }
};

}  // namespace detail

struct ExcitationResult {
    double n_bar = 0.0;           // mean motional quanta
    double residual_energy = 0.0; // J
};

struct ExcitationOptions {
    // quadrature points per oscillation period (Simpson), before refinement
    int points_per_period = 1024;
    int min_points = 2048;
    // Richardson check: relative change between n and 2n resolutions
    double richardson_tol = 1e-6;
};

// Spectral-overlap excitation of the trap mode at frequency nu after running
// the ramp. Composite Simpson per smooth segment with a Richardson
// half-resolution check; under-resolved quadrature is an error.
inline ExcitationResult final_excitation(const TransportRamp& ramp, double nu, double mass,
                                         const ExcitationOptions& opt = {}) {
    ramp.validate();
    if (nu <= 0.0 || mass <= 0.0)
        throw std::invalid_argument("final_excitation: nu and mass must be > 0");
    if (ramp.kind == RampKind::custom_samples) {
        const double per_period = double(ramp.samples.size() - 1) / (ramp.duration * nu);
        if (per_period < 50.0)
            throw std::invalid_argument(
                "final_excitation: custom ramp needs >= 50 samples per oscillation period");
    }

    detail::RampMotion motion{ramp};
    const double w = 2.0 * constants::pi * nu;

    if (ramp.kind == RampKind::custom_samples) {
        // exact integral of the piecewise-constant cell acceleration:
        // INT a_j e^{-iwt} dt = a_j (e^{-iwt1} - e^{-iwt2}) / (iw) per cell
        const auto cells = detail::custom_cell_accelerations(ramp);
        const std::size_t n = cells.size();
        const double h = ramp.duration / double(n - 1);
        std::complex<double> total(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double t1 = j == 0 ? 0.0 : (double(j) - 0.5) * h;
            const double t2 = j == n - 1 ? ramp.duration : (double(j) + 0.5) * h;
            total += cells[j] *
                     (std::polar(1.0, -w * t1) - std::polar(1.0, -w * t2)) /
                     std::complex<double>(0.0, w);
        }
        ExcitationResult res;
        const double mag = std::abs(total);
        res.residual_energy = mass / 2.0 * mag * mag;
        res.n_bar = res.residual_energy / (constants::planck * nu);
        return res;
    }

    auto integrate = [&](int scale) {
        std::complex<double> total(0.0, 0.0);
        const auto brk = motion.breakpoints();
        for (std::size_t s = 0; s + 1 < brk.size(); ++s) {
            const double t0 = brk[s], t1 = brk[s + 1];
            int m = std::max(opt.min_points,
                             int(std::ceil(opt.points_per_period * nu * (t1 - t0)))) *
                    scale;
            if (m % 2) ++m;
            const double h = (t1 - t0) / double(m);
            std::complex<double> acc(0.0, 0.0);
            for (int i = 0; i <= m; ++i) {
                const double t = t0 + h * double(i);
                const int hint = int(s);
                const double a = motion.acceleration(t, hint);
                const double weight = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                acc += weight * a * std::polar(1.0, -w * t);
            }
            total += acc * (h / 3.0);
        }
        return total;
    };

    const std::complex<double> coarse = integrate(1);
    const std::complex<double> fine = integrate(2);
    const double mag = std::abs(fine);
    const double err = std::abs(fine - coarse);
    // natural magnitude scale of the integrand, for the near-zero case
    const double a_scale = 8.0 * std::abs(ramp.distance) / (ramp.duration * ramp.duration) *
                               ramp.duration +
                           1e-300;
    if (err > opt.richardson_tol * std::max(mag, 1e-9 * a_scale))
        throw std::runtime_error("final_excitation: quadrature under-resolved (Richardson check)");

    ExcitationResult res;
    res.residual_energy = mass / 2.0 * mag * mag;
    res.n_bar = res.residual_energy / (constants::planck * nu);
    return res;
}

// Time-domain companion: integrates the classical oscillator
// xi'' = -w^2 xi - a(t) through the ramp with fixed-step RK4 and returns the
// final-state energy. Primarily a cross-check for final_excitation.
inline ExcitationResult final_excitation_time_domain(const TransportRamp& ramp, double nu,
                                                     double mass,
                                                     int steps_per_period = 8000) {
    ramp.validate();
    if (nu <= 0.0 || mass <= 0.0)
        throw std::invalid_argument("final_excitation_time_domain: nu and mass must be > 0");
    detail::RampMotion motion{ramp};
    const double w = 2.0 * constants::pi * nu;

    if (ramp.kind == RampKind::custom_samples) {
        // constant forcing per cell; RK4 substeps never straddle a cell edge
        const auto cells = detail::custom_cell_accelerations(ramp);
        const std::size_t n = cells.size();
        const double h_cell = ramp.duration / double(n - 1);
        double xi = 0.0, vi = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double t1 = j == 0 ? 0.0 : (double(j) - 0.5) * h_cell;
            const double t2 = j == n - 1 ? ramp.duration : (double(j) + 0.5) * h_cell;
            const double a = cells[j];
            const int m = std::max(2, int(std::ceil(steps_per_period * nu * (t2 - t1))));
            const double h = (t2 - t1) / double(m);
            for (int i = 0; i < m; ++i) {
                auto deriv = [&](double x, double v) {
                    (void)v;
                    return -w * w * x - a;
                };
                const double k1x = vi, k1v = deriv(xi, vi);
                const double k2x = vi + h / 2.0 * k1v, k2v = deriv(xi + h / 2.0 * k1x, k2x);
                const double k3x = vi + h / 2.0 * k2v, k3v = deriv(xi + h / 2.0 * k2x, k3x);
                const double k4x = vi + h * k3v, k4v = deriv(xi + h * k3x, k4x);
                xi += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
                vi += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            }
        }
        ExcitationResult res;
        res.residual_energy = mass / 2.0 * (vi * vi + w * w * xi * xi);
        res.n_bar = res.residual_energy / (constants::planck * nu);
        return res;
    }

    const auto brk = motion.breakpoints();
    double xi = 0.0, vi = 0.0;
    for (std::size_t s = 0; s + 1 < brk.size(); ++s) {
        const double t0 = brk[s], t1 = brk[s + 1];
        const int m =
            std::max(4000, int(std::ceil(steps_per_period * nu * (t1 - t0))));
        const double h = (t1 - t0) / double(m);
        const int hint = int(s);
        for (int i = 0; i < m; ++i) {
            const double t = t0 + h * double(i);
            auto acc = [&](double tt, double x) { return -w * w * x - motion.acceleration(tt, hint); };
            const double k1x = vi, k1v = acc(t, xi);
            const double k2x = vi + h / 2.0 * k1v, k2v = acc(t + h / 2.0, xi + h / 2.0 * k1x);
            const double k3x = vi + h / 2.0 * k2v, k3v = acc(t + h / 2.0, xi + h / 2.0 * k2x);
            const double k4x = vi + h * k3v, k4v = acc(t + h, xi + h * k3x);
            xi += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            vi += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
    }
    ExcitationResult res;
    res.residual_energy = mass / 2.0 * (vi * vi + w * w * xi * xi);
    res.n_bar = res.residual_energy / (constants::planck * nu);
    return res;
}

// ---------------------------------------------------------------------------
// Ramp spec JSON

inline TransportRamp ramp_from_json(const nlohmann::json& j) {
    TransportRamp r;
    bool have_kind = false;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "kind") {
            const std::string k = it.value().get<std::string>();
            if (k == "smooth_minjerk") r.kind = RampKind::smooth_minjerk;
            else if (k == "bangbang") r.kind = RampKind::bangbang;
            else if (k == "custom_samples") r.kind = RampKind::custom_samples;
            else throw std::invalid_argument("TransportRamp: unknown kind '" + k + "'");
            have_kind = true;
        } else if (key == "distance_m") {
            r.distance = it.value().get<double>();
        } else if (key == "duration_s") {
            r.duration = it.value().get<double>();
        } else if (key == "samples") {
            r.samples = it.value().get<std::vector<double>>();
        } else {
            throw std::invalid_argument("TransportRamp: unknown key '" + key + "'");
        }
    }
    if (!have_kind) throw std::invalid_argument("TransportRamp: missing 'kind'");
    r.validate();
    return r;
}

inline nlohmann::json ramp_to_json(const TransportRamp& r) {
    nlohmann::json j;
    switch (r.kind) {
        case RampKind::smooth_minjerk: j["kind"] = "smooth_minjerk"; break;
        case RampKind::bangbang: j["kind"] = "bangbang"; break;
        case RampKind::custom_samples: j["kind"] = "custom_samples"; break;
    }
    j["distance_m"] = r.distance;
    j["duration_s"] = r.duration;
    if (!r.samples.empty()) j["samples"] = r.samples;
    return j;
}

inline TransportRamp load_ramp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open ramp spec '" + path + "'");
    nlohmann::json j;
    in >> j;
    return ramp_from_json(j);
}

}  // namespace polsynth

#endif
