#ifndef POLSYNTH_DETAIL_LEVMAR_HPP
#define POLSYNTH_DETAIL_LEVMAR_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace polsynth::detail {

// Dense Gaussian elimination with partial pivoting; returns false if singular.
inline bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                         std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return true;
}

struct LevMarResult {
    std::vector<double> params;
    std::vector<double> stderrs;   // from the local quadratic model
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct LevMarOptions {
    int max_iterations = 200;
    double ftol = 1e-12;           // relative chi2 improvement
    double xtol = 1e-10;           // relative parameter step
    double diff_step = 1e-5;       // relative finite-difference step
    // absolute per-parameter scale floors for the difference step, so a
    // parameter sitting at zero still gets a sensible step
    std::vector<double> diff_scale;
    std::vector<double> lower;     // optional box bounds
    std::vector<double> upper;
    // scale stderrs by sqrt(chi2/(m-n)) (set when data weights are not
    // genuine standard errors)
    bool scale_covariance = true;
};

// Damped least squares with numerical Jacobian. residual_fn returns the
// weighted residual vector at the given parameters.
inline LevMarResult levmar(
    const std::function<std::vector<double>(const std::vector<double>&)>& residual_fn,
    std::vector<double> p, const LevMarOptions& opt = {}) {
    const std::size_t np = p.size();
    auto clamp = [&](std::vector<double>& q) {
        for (std::size_t i = 0; i < np; ++i) {
            if (!opt.lower.empty() && q[i] < opt.lower[i]) q[i] = opt.lower[i];
            if (!opt.upper.empty() && q[i] > opt.upper[i]) q[i] = opt.upper[i];
        }
    };
    clamp(p);
    std::vector<double> r = residual_fn(p);
    const std::size_t m = r.size();
    if (m < np) throw std::invalid_argument("levmar: fewer residuals than parameters");
    auto chi2_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return s;
    };
    double chi2 = chi2_of(r);

    auto fd_step = [&](std::size_t j, double pj) {
        const double scale =
            j < opt.diff_scale.size() ? std::max(std::abs(pj), opt.diff_scale[j])
                                      : std::max(std::abs(pj), 1e-30);
        return opt.diff_step * scale;
    };

    double lambda = 1e-3;
    LevMarResult res;
    std::vector<std::vector<double>> J(m, std::vector<double>(np));

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        ++res.iterations;
        // central-difference Jacobian
        for (std::size_t j = 0; j < np; ++j) {
            const double h = fd_step(j, p[j]);
            auto pp = p, pm = p;
            pp[j] += h;
            pm[j] -= h;
            clamp(pp);
            clamp(pm);
            const double span = pp[j] - pm[j];
            auto rp = residual_fn(pp), rm = residual_fn(pm);
            for (std::size_t i = 0; i < m; ++i) J[i][j] = (rp[i] - rm[i]) / span;
        }
        // normal equations
        std::vector<std::vector<double>> JTJ(np, std::vector<double>(np, 0.0));
        std::vector<double> JTr(np, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t a = 0; a < np; ++a) {
                JTr[a] += J[i][a] * r[i];
                for (std::size_t b = 0; b <= a; ++b) JTJ[a][b] += J[i][a] * J[i][b];
            }
        for (std::size_t a = 0; a < np; ++a)
            for (std::size_t b = a + 1; b < np; ++b) JTJ[a][b] = JTJ[b][a];

        bool stepped = false;
        for (int tries = 0; tries < 40 && !stepped; ++tries) {
            auto A = JTJ;
            for (std::size_t a = 0; a < np; ++a) A[a][a] *= (1.0 + lambda);
            std::vector<double> rhs(np), step;
            for (std::size_t a = 0; a < np; ++a) rhs[a] = -JTr[a];
            if (!solve_linear(A, rhs, step)) {
                lambda *= 10.0;
                continue;
            }
            auto q = p;
            for (std::size_t a = 0; a < np; ++a) q[a] += step[a];
            clamp(q);
            auto rq = residual_fn(q);
            const double c2 = chi2_of(rq);
            if (c2 < chi2) {
                double step_rel = 0.0;
                for (std::size_t a = 0; a < np; ++a)
                    step_rel = std::max(step_rel,
                                        std::abs(q[a] - p[a]) / std::max(std::abs(p[a]), 1e-30));
                const double gain = (chi2 - c2) / std::max(chi2, 1e-300);
                p = q;
                r = rq;
                chi2 = c2;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (gain < opt.ftol || step_rel < opt.xtol) {
                    res.converged = true;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) {
            // no descent direction left: converged to machine limits
            res.converged = true;
        }
        if (res.converged) break;
    }

    // covariance from the final Gauss-Newton Hessian
    std::vector<std::vector<double>> JTJ(np, std::vector<double>(np, 0.0));
    for (std::size_t j = 0; j < np; ++j) {
        const double h = fd_step(j, p[j]);
        auto pp = p, pm = p;
        pp[j] += h;
        pm[j] -= h;
        clamp(pp);
        clamp(pm);
        const double span = pp[j] - pm[j];
        auto rp = residual_fn(pp), rm = residual_fn(pm);
        for (std::size_t i = 0; i < m; ++i) J[i][j] = (rp[i] - rm[i]) / span;
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < np; ++a)
            for (std::size_t b = 0; b < np; ++b) JTJ[a][b] += J[i][a] * J[i][b];

    // An unidentifiable parameter (no curvature) gets an infinite standard
    // error; the covariance of the identifiable subblock is still computed.
    res.stderrs.assign(np, std::numeric_limits<double>::infinity());
    const double s2 = opt.scale_covariance && m > np ? chi2 / double(m - np) : 1.0;
    double max_diag = 0.0;
    for (std::size_t a = 0; a < np; ++a) max_diag = std::max(max_diag, JTJ[a][a]);
    std::vector<std::size_t> live;
    for (std::size_t a = 0; a < np; ++a)
        if (JTJ[a][a] > 1e-14 * max_diag) live.push_back(a);
    const std::size_t nl = live.size();
    if (nl > 0) {
        std::vector<std::vector<double>> sub(nl, std::vector<double>(nl));
        for (std::size_t i = 0; i < nl; ++i)
            for (std::size_t j = 0; j < nl; ++j) sub[i][j] = JTJ[live[i]][live[j]];
        for (std::size_t i = 0; i < nl; ++i) {
            std::vector<double> e(nl, 0.0), col;
            e[i] = 1.0;
            if (solve_linear(sub, e, col) && col[i] >= 0.0)
                res.stderrs[live[i]] = std::sqrt(s2 * col[i]);
        }
    }
    res.params = p;
    res.chi2 = chi2;
    return res;
}

}  // namespace polsynth::detail

#endif
