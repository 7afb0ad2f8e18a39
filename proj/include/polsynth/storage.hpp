#ifndef POLSYNTH_STORAGE_HPP
#define POLSYNTH_STORAGE_HPP

// Atom storage in the lattice: a birth-death master equation over the bound
// motional levels with an absorbing boundary at the trap depth, background
// collision loss, and a two-parameter fit to measured survival curves.
//
// Survival data CSV:  time_s,survival,stderr   (stderr column optional)

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsynth/constants.hpp"
#include "polsynth/detail/levmar.hpp"
#include "polsynth/detail/parse.hpp"

namespace polsynth {

struct LossModelParams {
    double q_phase = 1.37;     // quanta/s, single-quantum rate from phase noise
    double q_recoil = 0.025;   // quanta/s, single-quantum rate from photon recoil
    double gamma_int = 2e-3;   // 1/s, parametric (intensity-noise) rate constant
    double tau_coll = 300.0;   // s, background-gas collision lifetime
    double t0 = 7.8e-6;        // K, initial ensemble temperature
    int n_max = 14;            // bound levels
    double nu_par = 117e3;     // Hz

    void validate() const {
        if (q_phase < 0.0 || q_recoil < 0.0 || gamma_int < 0.0)
            throw std::invalid_argument("LossModelParams: negative rate");
        if (tau_coll <= 0.0) throw std::invalid_argument("LossModelParams: tau_coll must be > 0");
        if (t0 <= 0.0) throw std::invalid_argument("LossModelParams: t0 must be > 0");
        if (n_max < 2) throw std::invalid_argument("LossModelParams: n_max must be >= 2");
        if (nu_par <= 0.0) throw std::invalid_argument("LossModelParams: nu_par must be > 0");
    }
};

// Occupations of the bound levels n = 0 .. n_max-1 plus the accumulated lost
// fraction; sum(p) + lost stays 1.
struct LevelDistribution {
    std::vector<double> p;
    double lost = 0.0;
    double t = 0.0;

    double mean_n() const {
        double s = 0.0;
        for (std::size_t n = 0; n < p.size(); ++n) s += double(n) * p[n];
        return s;
    }
    double total() const {
        double s = lost;
        for (double x : p) s += x;
        return s;
    }
};

struct SurvivalCurve {
    std::vector<double> times;     // s
    std::vector<double> survival;  // in [0, 1]
    std::vector<double> stderrs;   // optional, same length when present
};

// Thermal occupation truncated to the bound levels: p[n] ~ exp(-n h nu / kB T).
inline LevelDistribution boltzmann_init(double t0, double nu_par, int n_max) {
    if (t0 <= 0.0) throw std::invalid_argument("boltzmann_init: t0 must be > 0");
    if (n_max < 2) throw std::invalid_argument("boltzmann_init: n_max must be >= 2");
    LevelDistribution d;
    d.p.resize(std::size_t(n_max));
    const double x = std::exp(-constants::planck * nu_par / (constants::boltzmann * t0));
    double norm = 0.0;
    for (int n = 0; n < n_max; ++n) {
        d.p[std::size_t(n)] = std::pow(x, n);
        norm += d.p[std::size_t(n)];
    }
    for (auto& v : d.p) v /= norm;
    return d;
}

namespace detail {

// Time-independent generator of the loss model. State: (p[0..n_max-1], lost).
// Single-quantum ladder rates q*(n+1) up / q*n down; two-quantum parametric
// rates (Gamma/8)(n+1)(n+2) up / (Gamma/8)n(n-1) down, which gives
// d<E>/dt = Gamma <E> for an isolated ensemble; uniform collision loss;
// flux beyond level n_max-1 is absorbed into `lost`.
struct StorageGenerator {
    int n_max;
    double q1, c2, coll;

    explicit StorageGenerator(const LossModelParams& prm)
        : n_max(prm.n_max),
          q1(prm.q_phase + prm.q_recoil),
          c2(prm.gamma_int / 8.0),
          coll(1.0 / prm.tau_coll) {}

    void apply(const std::vector<double>& y, std::vector<double>& dy) const {
        const std::size_t L = std::size_t(n_max);  // index of `lost`
        dy.assign(L + 1, 0.0);
        for (int n = 0; n < n_max; ++n) {
            const std::size_t i = std::size_t(n);
            const double pn = y[i];
            const double up1 = q1 * double(n + 1);
            const double dn1 = q1 * double(n);
            const double up2 = c2 * double(n + 1) * double(n + 2);
            const double dn2 = c2 * double(n) * double(n - 1);
            const double out = up1 + dn1 + up2 + dn2 + coll;
            dy[i] -= out * pn;
            dy[n + 1 < n_max ? i + 1 : L] += up1 * pn;
            if (n >= 1) dy[i - 1] += dn1 * pn;
            dy[n + 2 < n_max ? i + 2 : L] += up2 * pn;
            if (n >= 2) dy[i - 2] += dn2 * pn;
            dy[L] += coll * pn;
        }
    }
};

// Adaptive Cash-Karp RK45 for the linear storage system, landing exactly on
// each requested output time.
struct Rk45Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
    double max_step = 0.5;  // s
};

template <typename Deriv, typename OnOutput>
inline void rk45_integrate(const Deriv& deriv, std::vector<double>& y, double t_start,
                           const std::vector<double>& t_out, const Rk45Options& opt,
                           const OnOutput& emit) {
    // Cash-Karp tableau; the node abscissae are not needed for an autonomous
    // right-hand side
    static constexpr double b21 = 0.2;
    static constexpr double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
    static constexpr double b41 = 0.3, b42 = -0.9, b43 = 1.2;
    static constexpr double b51 = -11.0 / 54.0, b52 = 2.5, b53 = -70.0 / 27.0,
                            b54 = 35.0 / 27.0;
    static constexpr double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0, b63 = 575.0 / 13824.0,
                            b64 = 44275.0 / 110592.0, b65 = 253.0 / 4096.0;
    static constexpr double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0,
                            c6 = 512.0 / 1771.0;
    static constexpr double d1 = c1 - 2825.0 / 27648.0, d3 = c3 - 18575.0 / 48384.0,
                            d4 = c4 - 13525.0 / 55296.0, d5 = -277.0 / 14336.0,
                            d6 = c6 - 0.25;

    const std::size_t dim = y.size();
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), ytmp(dim),
        y5(dim), yerr(dim);
    double t = t_start;
    double h = opt.max_step;

    for (double target : t_out) {
        if (target < t) throw std::invalid_argument("rk45: output times must be increasing");
        while (t < target) {
            h = std::min({h, target - t, opt.max_step});
            deriv(y, k1);
            for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h * b21 * k1[i];
            deriv(ytmp, k2);
            for (std::size_t i = 0; i < dim; ++i)
                ytmp[i] = y[i] + h * (b31 * k1[i] + b32 * k2[i]);
            deriv(ytmp, k3);
            for (std::size_t i = 0; i < dim; ++i)
                ytmp[i] = y[i] + h * (b41 * k1[i] + b42 * k2[i] + b43 * k3[i]);
            deriv(ytmp, k4);
            for (std::size_t i = 0; i < dim; ++i)
                ytmp[i] = y[i] + h * (b51 * k1[i] + b52 * k2[i] + b53 * k3[i] + b54 * k4[i]);
            deriv(ytmp, k5);
            for (std::size_t i = 0; i < dim; ++i)
                ytmp[i] = y[i] + h * (b61 * k1[i] + b62 * k2[i] + b63 * k3[i] + b64 * k4[i] +
                                      b65 * k5[i]);
            deriv(ytmp, k6);

            double err = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                y5[i] = y[i] + h * (c1 * k1[i] + c3 * k3[i] + c4 * k4[i] + c6 * k6[i]);
                yerr[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i]);
                const double scale = opt.abs_tol + opt.rel_tol * std::abs(y5[i]);
                err = std::max(err, std::abs(yerr[i]) / scale);
            }
            if (err <= 1.0) {
                t += h;
                y = y5;
                const double grow = err > 1e-12 ? 0.9 * std::pow(err, -0.2) : 5.0;
                h *= std::min(5.0, std::max(0.2, grow));
            } else {
                h *= std::max(0.1, 0.9 * std::pow(err, -0.25));
                if (h < 1e-15)
                    throw std::runtime_error("rk45: step control failure (step underflow)");
            }
        }
        emit(target, y);
    }
}

}  // namespace detail

struct EvolveOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
    double max_step = 0.5;  // s
};

// Survival fraction 1 - lost(t) on the requested time grid.
inline SurvivalCurve evolve(const LossModelParams& params, const LevelDistribution& init,
                            const std::vector<double>& t_grid, const EvolveOptions& opt = {}) {
    params.validate();
    if (int(init.p.size()) != params.n_max)
        throw std::invalid_argument("evolve: init distribution size != n_max");
    if (std::abs(init.total() - 1.0) > 1e-9)
        throw std::invalid_argument("evolve: init occupations do not sum to 1");
    if (t_grid.empty()) throw std::invalid_argument("evolve: empty time grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (t_grid[i] < init.t || (i > 0 && t_grid[i] <= t_grid[i - 1]))
            throw std::invalid_argument("evolve: time grid must increase from init.t");
    }

    detail::StorageGenerator gen(params);
    std::vector<double> y(init.p);
    y.push_back(init.lost);
    std::vector<double> dy;

    SurvivalCurve out;
    out.times = t_grid;
    out.survival.reserve(t_grid.size());
    detail::Rk45Options ropt{opt.rel_tol, opt.abs_tol, opt.max_step};
    detail::rk45_integrate(
        [&](const std::vector<double>& yy, std::vector<double>& dd) { gen.apply(yy, dd); }, y,
        init.t, t_grid, ropt, [&](double, const std::vector<double>& yy) {
            double total = 0.0;
            for (double v : yy) total += v;
            if (std::abs(total - 1.0) > 1e-9)
                throw std::runtime_error("evolve: probability conservation violated");
            out.survival.push_back(1.0 - yy.back());
        });
    return out;
}

// Level-resolved variant: the full distribution at every grid time.
inline std::vector<LevelDistribution> evolve_levels(const LossModelParams& params,
                                                    const LevelDistribution& init,
                                                    const std::vector<double>& t_grid,
                                                    const EvolveOptions& opt = {}) {
    params.validate();
    if (int(init.p.size()) != params.n_max)
        throw std::invalid_argument("evolve_levels: init distribution size != n_max");
    detail::StorageGenerator gen(params);
    std::vector<double> y(init.p);
    y.push_back(init.lost);
    std::vector<LevelDistribution> out;
    out.reserve(t_grid.size());
    detail::Rk45Options ropt{opt.rel_tol, opt.abs_tol, opt.max_step};
    detail::rk45_integrate(
        [&](const std::vector<double>& yy, std::vector<double>& dd) { gen.apply(yy, dd); }, y,
        init.t, t_grid, ropt, [&](double t, const std::vector<double>& yy) {
            LevelDistribution d;
            d.p.assign(yy.begin(), yy.end() - 1);
            d.lost = yy.back();
            d.t = t;
            out.push_back(std::move(d));
        });
    return out;
}

// Time of the 0.5 crossing, linearly interpolated.
inline double half_life(const SurvivalCurve& curve) {
    if (curve.times.size() != curve.survival.size() || curve.times.empty())
        throw std::invalid_argument("half_life: malformed curve");
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
        if (curve.survival[i] <= 0.5) {
            if (i == 0) return curve.times[0];
            const double s0 = curve.survival[i - 1], s1 = curve.survival[i];
            const double t0 = curve.times[i - 1], t1 = curve.times[i];
            return t0 + (0.5 - s0) * (t1 - t0) / (s1 - s0);
        }
    }
    throw std::invalid_argument("half_life: survival never crosses 0.5 on the grid");
}

struct StorageFit {
    double q_phase = 0.0;
    double q_phase_err = 0.0;
    double t0 = 0.0;
    double t0_err = 0.0;
    double residual = 0.0;  // weighted chi^2
    int iterations = 0;
    bool converged = false;
};

// Weighted least squares over (q_phase, t0) with everything else held fixed.
// Point uncertainties come from the local quadratic model of the residual
// surface; weights are the data stderrs when provided, else uniform.
inline StorageFit fit_storage(const SurvivalCurve& observed, const LossModelParams& fixed,
                              double q_phase_guess, double t0_guess) {
    if (observed.times.size() < 6)
        throw std::invalid_argument("fit_storage: need at least 6 data points");
    if (!observed.stderrs.empty() && observed.stderrs.size() != observed.times.size())
        throw std::invalid_argument("fit_storage: stderr column length mismatch");
    const bool weighted = !observed.stderrs.empty();

    auto residual_fn = [&](const std::vector<double>& p) {
        LossModelParams prm = fixed;
        prm.q_phase = p[0];
        prm.t0 = p[1];
        auto init = boltzmann_init(prm.t0, prm.nu_par, prm.n_max);
        auto model = evolve(prm, init, observed.times);
        std::vector<double> r(observed.times.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double w = weighted ? 1.0 / observed.stderrs[i] : 1.0;
            r[i] = (model.survival[i] - observed.survival[i]) * w;
        }
        return r;
    };

    detail::LevMarOptions opt;
    opt.lower = {0.0, 1e-8};
    opt.upper = {1e3, 1e-2};
    opt.diff_step = 1e-4;
    opt.diff_scale = {0.05, 5e-7};  // quanta/s, K
    opt.scale_covariance = !weighted;
    auto res = detail::levmar(residual_fn, {q_phase_guess, t0_guess}, opt);
    if (!res.converged)
        throw std::runtime_error("fit_storage: no convergence within iteration budget");
    if (!std::isfinite(res.stderrs[0]) && !std::isfinite(res.stderrs[1]))
        throw std::runtime_error("fit_storage: degenerate (flat) residual surface");

    StorageFit fit;
    fit.q_phase = res.params[0];
    fit.q_phase_err = res.stderrs[0];
    fit.t0 = res.params[1];
    fit.t0_err = res.stderrs[1];
    fit.residual = res.chi2;
    fit.iterations = res.iterations;
    fit.converged = res.converged;
    return fit;
}

// ---------------------------------------------------------------------------
// File formats

inline SurvivalCurve load_survival_csv(std::istream& in, const std::string& name = "<stream>") {
    SurvivalCurve c;
    std::string line;
    bool header_seen = false;
    bool has_stderr = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line == "time_s,survival,stderr") has_stderr = true;
            else if (line != "time_s,survival")
                throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                            ": expected header 'time_s,survival[,stderr]'");
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::vector<std::string> fields;
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != (has_stderr ? 3u : 2u))
            throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                        ": wrong number of columns");
        try {
            c.times.push_back(detail::parse_double(fields[0]));
            c.survival.push_back(detail::parse_double(fields[1]));
            if (has_stderr) c.stderrs.push_back(detail::parse_double(fields[2]));
        } catch (const std::exception&) {
            throw std::invalid_argument(name + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    if (!header_seen) throw std::invalid_argument(name + ": missing header");
    for (std::size_t i = 1; i < c.times.size(); ++i)
        if (c.times[i] <= c.times[i - 1])
            throw std::invalid_argument(name + ": times must be strictly increasing");
    return c;
}

inline SurvivalCurve load_survival_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open survival file '" + path + "'");
    return load_survival_csv(in, path);
}

inline void save_survival_csv(std::ostream& out, const SurvivalCurve& c) {
    char buf[96];
    if (c.stderrs.empty()) {
        out << "time_s,survival\n";
        for (std::size_t i = 0; i < c.times.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", c.times[i], c.survival[i]);
            out << buf;
        }
    } else {
        out << "time_s,survival,stderr\n";
        for (std::size_t i = 0; i < c.times.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", c.times[i], c.survival[i],
                          c.stderrs[i]);
            out << buf;
        }
    }
}

// Fit report with every fixed parameter echoed for provenance. An
// unidentifiable parameter (infinite standard error) is reported as null.
inline nlohmann::json storage_fit_report(const StorageFit& fit, const LossModelParams& fixed) {
    auto err_or_null = [](double e) {
        return std::isfinite(e) ? nlohmann::json(e) : nlohmann::json(nullptr);
    };
    return nlohmann::json{
        {"q_phase_quanta_per_s", fit.q_phase},
        {"q_phase_err_quanta_per_s", err_or_null(fit.q_phase_err)},
        {"t0_k", fit.t0},
        {"t0_err_k", err_or_null(fit.t0_err)},
        {"residual_chi2", fit.residual},
        {"iterations", fit.iterations},
        {"fixed",
         {{"q_recoil_quanta_per_s", fixed.q_recoil},
          {"gamma_int_per_s", fixed.gamma_int},
          {"tau_coll_s", fixed.tau_coll},
          {"n_max", fixed.n_max},
          {"nu_par_hz", fixed.nu_par}}},
        {"units",
         {{"q_phase", "quanta/s"}, {"t0", "K"}, {"tau_coll", "s"}, {"nu_par", "Hz"}}}};
}

}  // namespace polsynth

#endif
