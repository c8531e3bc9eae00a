#ifndef ASTRAS_REGRESS_LEVENBERG_HPP
#define ASTRAS_REGRESS_LEVENBERG_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace astras {

struct LmOptions {
    int max_iter = 200;
    /// Stop when the accepted step is this small relative to the parameters.
    double xtol = 1e-10;
    /// Stop when an accepted step lowers the root mean squared residual by less.
    double rmse_tol = 0.0;
    double mu0 = 1e-3;
};

struct LmResult {
    Eigen::VectorXd x;
    /// Mean squared residual at x.
    double mse = 0.0;
    int iterations = 0;
    bool converged = false;
    /// J'J had a zero diagonal entry at the start: some parameter has no effect.
    bool singular = false;
};

/// Levenberg-Marquardt with Marquardt's diagonal scaling. `f(x, r, J)` fills
/// the residual vector and, when J is non-null, its Jacobian.
template <class F>
LmResult levenberg_marquardt(F&& f, Eigen::VectorXd x, const LmOptions& opt = {})
{
    LmResult res;
    Eigen::VectorXd r, r_try;
    Eigen::MatrixXd J;
    f(x, r, &J);
    const double n = static_cast<double>(std::max<Eigen::Index>(r.size(), 1));
    double mse = r.squaredNorm() / n;
    double mu = opt.mu0;
    Eigen::MatrixXd A = J.transpose() * J;
    Eigen::VectorXd g = J.transpose() * r;
    res.singular = (A.diagonal().array() <= 0.0).any();
    int it = 0;
    while (it < opt.max_iter) {
        ++it;
        Eigen::MatrixXd M = A;
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            M(i, i) += mu * std::max(A(i, i), 1e-12);
        const Eigen::VectorXd step = M.ldlt().solve(-g);
        if (!step.allFinite()) {
            mu *= 10.0;
            if (mu > 1e16)
                break;
            continue;
        }
        const Eigen::VectorXd x_try = x + step;
        f(x_try, r_try, nullptr);
        const double mse_try = r_try.allFinite() ? r_try.squaredNorm() / n : HUGE_VAL;
        if (mse_try < mse) {
            const double gained = std::sqrt(mse) - std::sqrt(mse_try);
            x = x_try;
            mse = mse_try;
            mu = std::max(mu / 3.0, 1e-15);
            if (step.norm() < opt.xtol * (x.norm() + opt.xtol) || gained < opt.rmse_tol) {
                res.converged = true;
                break;
            }
            f(x, r, &J);
            A = J.transpose() * J;
            g = J.transpose() * r;
        } else {
            mu *= 4.0;
            if (mu > 1e16) {
                // No descent left along any damped direction: stationary.
                res.converged = true;
                break;
            }
        }
    }
    res.x = x;
    res.mse = mse;
    res.iterations = it;
    return res;
}

} // namespace astras

#endif // ASTRAS_REGRESS_LEVENBERG_HPP
