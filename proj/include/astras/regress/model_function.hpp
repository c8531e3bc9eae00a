#ifndef ASTRAS_REGRESS_MODEL_FUNCTION_HPP
#define ASTRAS_REGRESS_MODEL_FUNCTION_HPP

#include "astras/regress/levenberg.hpp"
#include "astras/regress/subsets.hpp"

#include <optional>

namespace astras {

/// beta = beta_s + atan(shift / d_s + tan(beta_r - beta_s)), d_s in px/rad.
/// beta_r is the angle the reference pattern was taken at (shift 0); without
/// one it coincides with beta_s and the term vanishes.
struct ModelFunction {
    double beta_s_deg = 0.0;
    double d_s_px_per_rad = 1.0;
    bool has_reference = false;
    double reference_deg = 0.0;
    /// false when every shift was zero: d_s kept at its nominal value.
    bool identifiable = true;
    int iterations = 0;

    double reference_term() const
    {
        return has_reference ? std::tan(deg_to_rad(angle_diff_deg(reference_deg, beta_s_deg))) : 0.0;
    }
    double predict(double shift) const
    {
        return wrap_deg(beta_s_deg + rad_to_deg(std::atan(shift / d_s_px_per_rad + reference_term())));
    }
    bool operator==(const ModelFunction&) const = default;
};

/// Nonlinear least squares on the angle residual, started at the nominal
/// sector centre and sensitivity. Angles are handled relative to the centre,
/// so sectors straddling +/-180 fit like any other.
inline ModelFunction fit_model_function(const std::vector<RegressionSample>& data, double center_deg,
                                        double nominal_sensitivity, int sector = -1,
                                        std::optional<double> reference_deg = std::nullopt)
{
    if (data.size() < 3)
        throw InsufficientDataError("model function: sector " + std::to_string(sector) + " has fewer than 3 samples",
                                    sector);
    if (!(nominal_sensitivity > 0.0))
        throw ConfigError("model function: nominal sensitivity must be positive");
    const auto n = static_cast<Eigen::Index>(data.size());
    Eigen::VectorXd s(n), y(n);
    double max_abs_shift = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        s(i) = data[static_cast<std::size_t>(i)].shift;
        y(i) = angle_diff_deg(data[static_cast<std::size_t>(i)].beta_ref, center_deg);
        if (!std::isfinite(s(i)) || !std::isfinite(y(i)))
            throw InputError("model function: non-finite sample");
        max_abs_shift = std::max(max_abs_shift, std::abs(s(i)));
    }
    ModelFunction mf;
    if (max_abs_shift < 1e-9) {
        mf.beta_s_deg = wrap_deg(center_deg + y.mean());
        mf.d_s_px_per_rad = nominal_sensitivity;
        mf.identifiable = false;
        return mf;
    }
    // Parameters: offset from the centre (deg) and d_s relative to nominal.
    const double ref = reference_deg ? angle_diff_deg(*reference_deg, center_deg) : 0.0;
    auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        const double d = p(1) * nominal_sensitivity;
        const double t = reference_deg ? std::tan(deg_to_rad(ref - p(0))) : 0.0;
        r.resize(n);
        if (J)
            J->resize(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = s(i) / d + t;
            r(i) = p(0) + rad_to_deg(std::atan(u)) - y(i);
            if (J) {
                const double g = 1.0 / (1.0 + u * u);
                (*J)(i, 0) = reference_deg ? 1.0 - (1.0 + t * t) * g : 1.0;
                (*J)(i, 1) = -rad_to_deg(g * s(i) / (d * d)) * nominal_sensitivity;
            }
        }
    };
    LmOptions opt;
    opt.max_iter = 200;
    opt.xtol = 1e-10;
    LmResult best;
    best.mse = HUGE_VAL;
    for (double start : {1.0, 0.5, 2.0, 0.25, 4.0}) {
        Eigen::Vector2d p0(0.0, start);
        const auto r = levenberg_marquardt(residual, p0, opt);
        if (!r.singular && r.x.allFinite() && r.x(1) > 0.0 && r.mse < best.mse)
            best = r;
        if (best.mse < HUGE_VAL && best.converged)
            break;
    }
    if (!(best.mse < HUGE_VAL))
        throw FitError("model function: no convergent fit for sector " + std::to_string(sector));
    mf.beta_s_deg = wrap_deg(center_deg + best.x(0));
    mf.d_s_px_per_rad = best.x(1) * nominal_sensitivity;
    if (reference_deg) {
        mf.has_reference = true;
        mf.reference_deg = wrap_deg(*reference_deg);
    }
    mf.iterations = best.iterations;
    return mf;
}

} // namespace astras

#endif // ASTRAS_REGRESS_MODEL_FUNCTION_HPP
