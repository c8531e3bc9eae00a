#ifndef ASTRAS_REGRESS_POLYNOMIAL_HPP
#define ASTRAS_REGRESS_POLYNOMIAL_HPP

#include "astras/regress/subsets.hpp"

#include <Eigen/Dense>

#include <string>

namespace astras {

/// beta = centre + sum_i c_i T_i(u), u = shift mapped affinely from
/// [shift_lo, shift_hi] onto [-1, 1].
struct Polynomial {
    double center_deg = 0.0;
    double shift_lo = -1.0;
    double shift_hi = 1.0;
    std::vector<double> coef;
    /// Degree asked for, when conditioning forced a lower one.
    int requested_degree = -1;

    int degree() const noexcept { return static_cast<int>(coef.size()) - 1; }
    bool reduced() const noexcept { return requested_degree > degree(); }

    double normalise(double shift) const { return (2.0 * shift - shift_lo - shift_hi) / (shift_hi - shift_lo); }

    /// Clenshaw recurrence.
    double offset_deg(double shift) const
    {
        const double u = normalise(shift);
        double b1 = 0.0, b2 = 0.0;
        for (int k = degree(); k >= 1; --k) {
            const double b0 = 2.0 * u * b1 - b2 + coef[static_cast<std::size_t>(k)];
            b2 = b1;
            b1 = b0;
        }
        return u * b1 - b2 + coef[0];
    }

    double predict(double shift) const { return wrap_deg(center_deg + offset_deg(shift)); }
    bool operator==(const Polynomial&) const = default;
};

namespace detail {

inline Eigen::MatrixXd chebyshev_design(const Eigen::VectorXd& u, int degree)
{
    Eigen::MatrixXd V(u.size(), degree + 1);
    V.col(0).setOnes();
    if (degree >= 1)
        V.col(1) = u;
    for (int k = 2; k <= degree; ++k)
        V.col(k) = (2.0 * u.array() * V.col(k - 1).array() - V.col(k - 2).array()).matrix();
    return V;
}

} // namespace detail

inline constexpr double kMaxPolynomialCondition = 1e12;

/// Least squares in the Chebyshev basis. If the design matrix condition
/// number exceeds 1e12 the degree is lowered until it does not.
inline Polynomial fit_polynomial(const std::vector<RegressionSample>& data, int degree, double center_deg,
                                 int sector = -1)
{
    if (degree < 0)
        throw ConfigError("polynomial: degree must be >= 0");
    if (data.size() <= static_cast<std::size_t>(degree))
        throw InsufficientDataError("polynomial: sector " + std::to_string(sector) + " has "
                                        + std::to_string(data.size()) + " samples, degree "
                                        + std::to_string(degree) + " needs more",
                                    sector);
    const auto n = static_cast<Eigen::Index>(data.size());
    Eigen::VectorXd s(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s(i) = data[static_cast<std::size_t>(i)].shift;
        y(i) = angle_diff_deg(data[static_cast<std::size_t>(i)].beta_ref, center_deg);
        if (!std::isfinite(s(i)) || !std::isfinite(y(i)))
            throw InputError("polynomial: non-finite sample");
    }
    Polynomial p;
    p.center_deg = center_deg;
    p.shift_lo = s.minCoeff();
    p.shift_hi = s.maxCoeff();
    p.requested_degree = degree;
    if (!(p.shift_hi > p.shift_lo)) {
        if (degree > 0)
            throw FitError("polynomial: shift spread is zero in sector " + std::to_string(sector));
        p.shift_lo -= 1.0;
        p.shift_hi += 1.0;
    }
    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i)
        u(i) = p.normalise(s(i));
    for (int d = degree; d >= 0; --d) {
        const Eigen::MatrixXd V = detail::chebyshev_design(u, d);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : HUGE_VAL;
        if (cond > kMaxPolynomialCondition && d > 0)
            continue;
        const Eigen::VectorXd c = svd.solve(y);
        p.coef.assign(c.data(), c.data() + c.size());
        return p;
    }
    throw FitError("polynomial: no well-conditioned degree in sector " + std::to_string(sector));
}

/// Degree in [1, max_degree] with the lowest RMSE on every fifth sample (in
/// shift order) held out; the returned fit uses all samples.
inline Polynomial fit_polynomial_select_degree(const std::vector<RegressionSample>& data, int max_degree,
                                               double center_deg, int sector = -1)
{
    if (max_degree < 1)
        throw ConfigError("polynomial: max degree must be >= 1");
    std::vector<RegressionSample> sorted(data);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const RegressionSample& a, const RegressionSample& b) { return a.shift < b.shift; });
    std::vector<RegressionSample> fit, held;
    for (std::size_t i = 0; i < sorted.size(); ++i)
        (i % 5 == 2 ? held : fit).push_back(sorted[i]);
    const int top = std::min<int>(max_degree, static_cast<int>(fit.size()) - 1);
    if (top < 1 || held.empty())
        return fit_polynomial(data, std::min<int>(max_degree, static_cast<int>(data.size()) - 1), center_deg, sector);
    int best_deg = 1;
    double best = HUGE_VAL;
    for (int d = 1; d <= top; ++d) {
        const auto p = fit_polynomial(fit, d, center_deg, sector);
        if (p.reduced())
            break;
        double sse = 0.0;
        for (const auto& r : held) {
            const double e = angle_diff_deg(p.predict(r.shift), r.beta_ref);
            sse += e * e;
        }
        if (sse < best) {
            best = sse;
            best_deg = d;
        }
    }
    return fit_polynomial(data, best_deg, center_deg, sector);
}

} // namespace astras

#endif // ASTRAS_REGRESS_POLYNOMIAL_HPP
