#ifndef POLSYNTH_NOISE_SERIES_HPP
#define POLSYNTH_NOISE_SERIES_HPP

// Colored-noise time series consistent with a target one-sided PSD, and a
// Welch spectral estimator to check them.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "polsynth/detail/fft.hpp"
#include "polsynth/psd.hpp"

namespace polsynth {

// Frequency-domain coloring of white Gaussian noise: each positive-frequency
// bin gets an independent complex Gaussian amplitude with
// E|X_k|^2 = S(f_k) N / (2 dt), which makes the expected periodogram equal to
// the target PSD. Deterministic for a fixed seed.
inline std::vector<double> sample_time_series(const Psd& psd, double duration, double dt,
                                              std::uint64_t seed) {
    psd.validate();
    if (!psd.linear())
        throw std::invalid_argument("sample_time_series: convert dbc_per_hz to linear first");
    if (dt <= 0.0 || duration <= 0.0)
        throw std::invalid_argument("sample_time_series: need positive duration and dt");
    const double f_max = psd.freqs.back();
    if (dt >= 0.5 / f_max)
        throw std::invalid_argument("sample_time_series: dt violates the sampling theorem");

    const std::size_t n_out = std::size_t(std::llround(duration / dt));
    if (n_out < 2) throw std::invalid_argument("sample_time_series: duration too short");
    const std::size_t n = detail::next_pow2(n_out);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::complex<double>> spec(n, {0.0, 0.0});
    const double df = 1.0 / (double(n) * dt);
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const double s = psd_interpolate(psd, double(k) * df);
        // draw both Gaussians even for zero bins so the stream position is
        // independent of the PSD shape
        const double g_re = gauss(rng);
        const double g_im = gauss(rng);
        if (s <= 0.0) continue;
        const double amp = std::sqrt(s * double(n) / (2.0 * dt));
        if (k == n / 2) {
            spec[k] = {amp * g_re, 0.0};  // Nyquist bin is real
        } else {
            spec[k] = {amp * g_re / std::sqrt(2.0), amp * g_im / std::sqrt(2.0)};
            spec[n - k] = std::conj(spec[k]);
        }
    }
    detail::fft(spec, true);
    std::vector<double> out(n_out);
    for (std::size_t i = 0; i < n_out; ++i) out[i] = spec[i].real();
    return out;
}

// Welch-averaged one-sided PSD estimate: Hann window, 50% overlap.
inline Psd welch_psd(const std::vector<double>& x, double dt, std::size_t segment_length,
                     PsdUnit unit = PsdUnit::rad2_per_hz) {
    if (segment_length < 8) throw std::invalid_argument("welch_psd: segment too short");
    const std::size_t nseg = detail::next_pow2(segment_length);
    if (x.size() < nseg) throw std::invalid_argument("welch_psd: series shorter than one segment");

    std::vector<double> window(nseg);
    double wss = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * constants::pi * double(i) / double(nseg)));
        wss += window[i] * window[i];
    }

    std::vector<double> acc(nseg / 2, 0.0);
    std::size_t count = 0;
    for (std::size_t start = 0; start + nseg <= x.size(); start += nseg / 2) {
        std::vector<std::complex<double>> seg(nseg);
        for (std::size_t i = 0; i < nseg; ++i) seg[i] = x[start + i] * window[i];
        detail::fft(seg);
        for (std::size_t k = 1; k <= nseg / 2; ++k) {
            const double p = std::norm(seg[k]);
            acc[k - 1] += (k == nseg / 2 ? 1.0 : 2.0) * p * dt / wss;
        }
        ++count;
    }
    Psd out;
    out.unit = unit;
    out.freqs.resize(nseg / 2);
    out.values.resize(nseg / 2);
    const double df = 1.0 / (double(nseg) * dt);
    for (std::size_t k = 1; k <= nseg / 2; ++k) {
        out.freqs[k - 1] = double(k) * df;
        out.values[k - 1] = acc[k - 1] / double(count);
    }
    return out;
}

}  // namespace polsynth

#endif
