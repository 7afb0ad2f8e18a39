#ifndef POLSYNTH_SIDEBAND_HPP
#define POLSYNTH_SIDEBAND_HPP

// Resolved-sideband thermometry: mean occupation from the cooling/heating
// sideband height ratio, and a three-peak fit to measured spectra.
//
// Spectrum CSV: detuning_hz,transfer_prob

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "polsynth/detail/levmar.hpp"
#include "polsynth/detail/parse.hpp"

namespace polsynth {

struct SidebandSpectrum {
    std::vector<double> detunings;      // Hz, increasing
    std::vector<double> transfer_prob;  // in [0, 1]

    void validate() const {
        if (detunings.size() != transfer_prob.size() || detunings.size() < 7)
            throw std::invalid_argument("SidebandSpectrum: need >= 7 points");
        for (std::size_t i = 0; i < detunings.size(); ++i) {
            if (i > 0 && detunings[i] <= detunings[i - 1])
                throw std::invalid_argument("SidebandSpectrum: detunings must increase");
            if (transfer_prob[i] < 0.0 || transfer_prob[i] > 1.0)
                throw std::invalid_argument("SidebandSpectrum: probabilities outside [0, 1]");
        }
    }
};

// Thermal mean occupation from the sideband ratio r: nbar = r / (1 - r).
inline double sideband_nbar(double r) {
    if (r < 0.0 || r >= 1.0)
        throw std::invalid_argument(
            "sideband_nbar: ratio must lie in [0, 1) for a thermal distribution");
    return r / (1.0 - r);
}

struct SidebandFit {
    double r = 0.0;        // cooling/heating height ratio
    double nu = 0.0;       // fitted sideband spacing, Hz
    double width = 0.0;    // common Gaussian sigma, Hz
    double h_cooling = 0.0;
    double h_carrier = 0.0;
    double h_heating = 0.0;
    double residual = 0.0;
};

// Three symmetric Gaussian peaks with a common width: carrier at zero,
// sidebands at -nu (cooling) and +nu (heating).
inline SidebandFit fit_sideband(const SidebandSpectrum& spec, double nu_guess) {
    spec.validate();
    if (nu_guess <= 0.0) throw std::invalid_argument("fit_sideband: nu_guess must be > 0");
    if (spec.detunings.front() > -1.5 * nu_guess || spec.detunings.back() < 1.5 * nu_guess)
        throw std::invalid_argument("fit_sideband: spectrum must span carrier +- 1.5 nu_guess");

    auto height_near = [&](double center) {
        double best = 0.0;
        for (std::size_t i = 0; i < spec.detunings.size(); ++i)
            if (std::abs(spec.detunings[i] - center) < 0.35 * nu_guess)
                best = std::max(best, spec.transfer_prob[i]);
        return best;
    };

    // parameters: h_cool, h_carrier, h_heat, nu, log_width
    std::vector<double> p0 = {height_near(-nu_guess), height_near(0.0), height_near(nu_guess),
                              nu_guess, std::log(nu_guess / 12.0)};

    auto model = [](const std::vector<double>& p, double d) {
        const double w = std::exp(p[4]);
        auto g = [&](double c) { return std::exp(-(d - c) * (d - c) / (2.0 * w * w)); };
        return p[0] * g(-p[3]) + p[1] * g(0.0) + p[2] * g(p[3]);
    };
    auto residual_fn = [&](const std::vector<double>& p) {
        std::vector<double> r(spec.detunings.size());
        for (std::size_t i = 0; i < r.size(); ++i)
            r[i] = model(p, spec.detunings[i]) - spec.transfer_prob[i];
        return r;
    };

    detail::LevMarOptions opt;
    opt.lower = {0.0, 0.0, 0.0, 0.3 * nu_guess, std::log(nu_guess) - 6.0};
    opt.upper = {1.0, 1.0, 1.0, 3.0 * nu_guess, std::log(nu_guess)};
    opt.diff_scale = {0.05, 0.05, 0.05, 0.01 * nu_guess, 0.05};
    auto res = detail::levmar(residual_fn, p0, opt);
    if (!res.converged) throw std::runtime_error("fit_sideband: no convergence");

    SidebandFit fit;
    fit.h_cooling = res.params[0];
    fit.h_carrier = res.params[1];
    fit.h_heating = res.params[2];
    fit.nu = res.params[3];
    fit.width = std::exp(res.params[4]);
    fit.residual = res.chi2;
    if (fit.width > fit.nu / 2.0)
        throw std::runtime_error("fit_sideband: sidebands not resolved (width > spacing/2)");
    if (fit.h_heating <= 0.0)
        throw std::runtime_error("fit_sideband: heating sideband height is zero");
    fit.r = std::max(0.0, fit.h_cooling) / fit.h_heating;
    return fit;
}

// Synthetic three-peak spectrum, mainly for fixtures and tests.
inline SidebandSpectrum make_sideband_spectrum(double nu, double h_cooling, double h_carrier,
                                               double h_heating, double width, double span,
                                               int n_points) {
    SidebandSpectrum s;
    s.detunings.resize(std::size_t(n_points));
    s.transfer_prob.resize(std::size_t(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double d = -span + 2.0 * span * double(i) / double(n_points - 1);
        auto g = [&](double c) { return std::exp(-(d - c) * (d - c) / (2.0 * width * width)); };
        s.detunings[std::size_t(i)] = d;
        s.transfer_prob[std::size_t(i)] =
            std::min(1.0, h_cooling * g(-nu) + h_carrier * g(0.0) + h_heating * g(nu));
    }
    return s;
}

inline SidebandSpectrum load_sideband_csv(std::istream& in,
                                          const std::string& name = "<stream>") {
    SidebandSpectrum s;
    std::string line;
    bool header_seen = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "detuning_hz,transfer_prob")
                throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                            ": expected header 'detuning_hz,transfer_prob'");
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b))
            throw std::invalid_argument(name + ":" + std::to_string(lineno) + ": bad row");
        try {
            s.detunings.push_back(detail::parse_double(a));
            s.transfer_prob.push_back(detail::parse_double(b));
        } catch (const std::exception&) {
            throw std::invalid_argument(name + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    s.validate();
    return s;
}

inline SidebandSpectrum load_sideband_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open sideband spectrum '" + path + "'");
    return load_sideband_csv(in, path);
}

inline void save_sideband_csv(std::ostream& out, const SidebandSpectrum& s) {
    out << "detuning_hz,transfer_prob\n";
    char buf[80];
    for (std::size_t i = 0; i < s.detunings.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", s.detunings[i], s.transfer_prob[i]);
        out << buf;
    }
}

}  // namespace polsynth

#endif
