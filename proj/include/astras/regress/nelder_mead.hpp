#ifndef ASTRAS_REGRESS_NELDER_MEAD_HPP
#define ASTRAS_REGRESS_NELDER_MEAD_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace astras {

struct NelderMeadResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int evaluations = 0;
};

/// Downhill simplex minimisation; stops when the spread of function values
/// over the simplex drops below ftol or after max_evals evaluations.
template <class F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& x0, double step, int max_evals = 400, double ftol = 1e-8)
{
    const Eigen::Index d = x0.size();
    std::vector<Eigen::VectorXd> p(static_cast<std::size_t>(d + 1), x0);
    std::vector<double> v(static_cast<std::size_t>(d + 1));
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        const double y = f(x);
        return std::isfinite(y) ? y : HUGE_VAL;
    };
    for (Eigen::Index i = 0; i < d; ++i)
        p[static_cast<std::size_t>(i + 1)](i) += step;
    for (std::size_t i = 0; i < p.size(); ++i)
        v[i] = eval(p[i]);
    std::vector<std::size_t> idx(p.size());
    while (evals < max_evals) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        const std::size_t best = idx.front(), worst = idx.back(), second = idx[idx.size() - 2];
        if (std::abs(v[worst] - v[best]) <= ftol * (std::abs(v[best]) + ftol))
            break;
        Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
        for (std::size_t i = 0; i + 1 < idx.size(); ++i)
            c += p[idx[i]];
        c /= static_cast<double>(d);
        const Eigen::VectorXd xr = c + (c - p[worst]);
        const double fr = eval(xr);
        if (fr < v[best]) {
            const Eigen::VectorXd xe = c + 2.0 * (c - p[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                p[worst] = xe;
                v[worst] = fe;
            } else {
                p[worst] = xr;
                v[worst] = fr;
            }
        } else if (fr < v[second]) {
            p[worst] = xr;
            v[worst] = fr;
        } else {
            const bool outside = fr < v[worst];
            const Eigen::VectorXd xc = outside ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (p[worst] - c));
            const double fc = eval(xc);
            if (fc < (outside ? fr : v[worst])) {
                p[worst] = xc;
                v[worst] = fc;
            } else {
                for (std::size_t i = 0; i < p.size(); ++i) {
                    if (i == best)
                        continue;
                    p[i] = p[best] + 0.5 * (p[i] - p[best]);
                    v[i] = eval(p[i]);
                }
            }
        }
    }
    const auto it = std::min_element(v.begin(), v.end());
    return {p[static_cast<std::size_t>(it - v.begin())], *it, evals};
}

} // namespace astras

#endif // ASTRAS_REGRESS_NELDER_MEAD_HPP
