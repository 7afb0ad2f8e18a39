#ifndef POLSYNTH_PSD_HPP
#define POLSYNTH_PSD_HPP

// One-sided noise power spectral densities: unit handling, interpolation,
// band integration, and the CSV file format
//
//     freq_hz,value,unit        (unit identical on all rows, '#' comments)

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "polsynth/detail/parse.hpp"

namespace polsynth {

enum class PsdUnit { dbc_per_hz, rad2_per_hz, rin2_per_hz };

inline std::string to_string(PsdUnit u) {
    switch (u) {
        case PsdUnit::dbc_per_hz: return "dbc_per_hz";
        case PsdUnit::rad2_per_hz: return "rad2_per_hz";
        case PsdUnit::rin2_per_hz: return "rin2_per_hz";
    }
    throw std::logic_error("to_string(PsdUnit): bad enum");
}

inline PsdUnit psd_unit_from_string(const std::string& s) {
    if (s == "dbc_per_hz") return PsdUnit::dbc_per_hz;
    if (s == "rad2_per_hz") return PsdUnit::rad2_per_hz;
    if (s == "rin2_per_hz") return PsdUnit::rin2_per_hz;
    throw std::invalid_argument("unknown PSD unit '" + s + "'");
}

// One-sided spectral density sampled on a strictly increasing frequency grid.
struct Psd {
    std::vector<double> freqs;   // Hz, strictly increasing, > 0
    std::vector<double> values;  // same length; linear units >= 0
    PsdUnit unit = PsdUnit::rad2_per_hz;

    void validate() const {
        if (freqs.size() != values.size()) throw std::invalid_argument("Psd: size mismatch");
        if (freqs.empty()) throw std::invalid_argument("Psd: empty");
        double prev = 0.0;
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            if (!(freqs[i] > prev)) throw std::invalid_argument("Psd: freqs not strictly increasing and > 0");
            if (!std::isfinite(values[i])) throw std::invalid_argument("Psd: non-finite value");
            if (unit != PsdUnit::dbc_per_hz && values[i] < 0.0)
                throw std::invalid_argument("Psd: negative linear value");
            prev = freqs[i];
        }
    }

    bool linear() const { return unit != PsdUnit::dbc_per_hz; }
};

// dBc/Hz -> rad^2/Hz. The plotted dB value is read as the one-sided phase PSD
// directly, S = 10^(L/10); pass ssb = true for the S = 2 * 10^(L/10)
// single-sideband reading (the factor-2 convention ambiguity is deliberate).
inline Psd dbc_to_linear(const Psd& psd, bool ssb = false) {
    if (psd.unit != PsdUnit::dbc_per_hz)
        throw std::invalid_argument("dbc_to_linear: unit is not dbc_per_hz");
    psd.validate();
    Psd out = psd;
    out.unit = PsdUnit::rad2_per_hz;
    const double scale = ssb ? 2.0 : 1.0;
    for (auto& v : out.values) v = scale * std::pow(10.0, v / 10.0);
    return out;
}

inline Psd linear_to_dbc(const Psd& psd, bool ssb = false) {
    if (psd.unit != PsdUnit::rad2_per_hz)
        throw std::invalid_argument("linear_to_dbc: unit is not rad2_per_hz");
    psd.validate();
    Psd out = psd;
    out.unit = PsdUnit::dbc_per_hz;
    const double scale = ssb ? 2.0 : 1.0;
    for (auto& v : out.values) v = 10.0 * std::log10(v / scale);
    return out;
}

// Value of the log-log linear interpolant at frequency f. Zero endpoints fall
// back to linear-in-f interpolation on that segment; outside the tabulated
// range the density is zero.
inline double psd_interpolate(const Psd& psd, double f) {
    if (!psd.linear()) throw std::invalid_argument("psd_interpolate: convert dbc first");
    const auto& fs = psd.freqs;
    const auto& vs = psd.values;
    if (f < fs.front() || f > fs.back()) return 0.0;
    auto it = std::lower_bound(fs.begin(), fs.end(), f);
    std::size_t hi = std::size_t(it - fs.begin());
    if (hi == 0) return vs[0];
    std::size_t lo = hi - 1;
    if (fs[hi] == f) return vs[hi];
    const double f1 = fs[lo], f2 = fs[hi], v1 = vs[lo], v2 = vs[hi];
    if (v1 <= 0.0 || v2 <= 0.0)
        return v1 + (v2 - v1) * (f - f1) / (f2 - f1);
    const double b = std::log(v2 / v1) / std::log(f2 / f1);
    return v1 * std::pow(f / f1, b);
}

namespace detail {

// Integral of the per-segment interpolant between x1 and x2 (inside one
// tabulated segment). Power-law segments integrate in closed form; segments
// touching zero integrate the linear-in-f chord.
inline double psd_segment_integral(double f1, double v1, double f2, double v2, double x1,
                                   double x2) {
    if (x1 >= x2) return 0.0;
    if (v1 <= 0.0 || v2 <= 0.0) {
        auto lin = [&](double x) { return v1 + (v2 - v1) * (x - f1) / (f2 - f1); };
        return 0.5 * (lin(x1) + lin(x2)) * (x2 - x1);
    }
    const double b = std::log(v2 / v1) / std::log(f2 / f1);
    const double a = v1 / std::pow(f1, b);
    if (std::abs(b + 1.0) < 1e-12) return a * std::log(x2 / x1);
    return a / (b + 1.0) * (std::pow(x2, b + 1.0) - std::pow(x1, b + 1.0));
}

}  // namespace detail

// Band-integrated variance: the log-log-linear interpolant integrated in
// closed form segment by segment, so the result is exact for power-law data
// and exactly additive over adjacent bands.
inline double integrate_psd(const Psd& psd, double f_lo, double f_hi) {
    psd.validate();
    if (!psd.linear())
        throw std::invalid_argument("integrate_psd: convert dbc_per_hz to linear units first");
    if (!(f_lo < f_hi)) throw std::invalid_argument("integrate_psd: need f_lo < f_hi");
    if (f_lo < psd.freqs.front() || f_hi > psd.freqs.back())
        throw std::invalid_argument("integrate_psd: band outside tabulated range");
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < psd.freqs.size(); ++i) {
        const double f1 = psd.freqs[i], f2 = psd.freqs[i + 1];
        const double x1 = std::max(f1, f_lo), x2 = std::min(f2, f_hi);
        if (x1 < x2)
            sum += detail::psd_segment_integral(f1, psd.values[i], f2, psd.values[i + 1], x1, x2);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// CSV I/O

inline Psd load_psd_csv(std::istream& in, const std::string& name = "<stream>") {
    Psd psd;
    std::string line;
    bool have_unit = false;
    bool header_seen = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "freq_hz,value,unit")
                throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                            ": expected header 'freq_hz,value,unit'");
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string f_str, v_str, u_str;
        if (!std::getline(ss, f_str, ',') || !std::getline(ss, v_str, ',') ||
            !std::getline(ss, u_str))
            throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                        ": expected 'freq_hz,value,unit'");
        PsdUnit u = psd_unit_from_string(u_str);
        if (!have_unit) {
            psd.unit = u;
            have_unit = true;
        } else if (u != psd.unit) {
            throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                        ": unit differs from previous rows");
        }
        try {
            psd.freqs.push_back(detail::parse_double(f_str));
            psd.values.push_back(detail::parse_double(v_str));
        } catch (const std::exception&) {
            throw std::invalid_argument(name + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    if (!header_seen) throw std::invalid_argument(name + ": missing header");
    psd.validate();
    return psd;
}

inline Psd load_psd_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open PSD file '" + path + "'");
    return load_psd_csv(in, path);
}

inline void save_psd_csv(std::ostream& out, const Psd& psd) {
    psd.validate();
    out << "freq_hz,value,unit\n";
    const std::string u = to_string(psd.unit);
    char buf[64];
    for (std::size_t i = 0; i < psd.freqs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,", psd.freqs[i], psd.values[i]);
        out << buf << u << "\n";
    }
}

}  // namespace polsynth

#endif
