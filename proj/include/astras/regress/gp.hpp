#ifndef ASTRAS_REGRESS_GP_HPP
#define ASTRAS_REGRESS_GP_HPP

#include "astras/random.hpp"
#include "astras/regress/nelder_mead.hpp"
#include "astras/regress/subsets.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <numbers>
#include <random>

namespace astras {

struct GpHyper {
    double signal_sd = 1.0;  // sigma_f
    double length = 1.0;     // l
    double noise_sd = 0.1;   // sigma_n
    bool operator==(const GpHyper&) const = default;
};

/// Posterior mean of a GP with constant prior mean c and exponential kernel
/// k(x, x') = sigma_f^2 exp(-|x - x'| / l) on standardised inputs. With a
/// nominal sensitivity S the target is the residual from atan(shift / S), so
/// far from the data the prediction falls back to the nominal curve plus c.
struct GaussianProcess {
    int n_in = 1;
    double center_deg = 0.0;
    double nominal_sensitivity = 0.0;
    std::vector<double> in_mean, in_scale;
    GpHyper hyper;
    double c = 0.0;
    /// Jitter that had to be added to the diagonal (0 when none).
    double jitter = 0.0;
    std::vector<double> x;      // n x n_in standardised, row-major
    std::vector<double> alpha;  // (K + sigma_n^2 I)^-1 (y - c)
    double log_marginal_likelihood = 0.0;

    std::size_t size() const noexcept { return alpha.size(); }
    bool uses_direction() const noexcept { return n_in == 2; }

    double kernel_std(const double* a, const double* b) const
    {
        double d2 = 0.0;
        for (int k = 0; k < n_in; ++k)
            d2 += (a[k] - b[k]) * (a[k] - b[k]);
        return hyper.signal_sd * hyper.signal_sd * std::exp(-std::sqrt(d2) / hyper.length);
    }

    double offset_deg(double shift, int direction) const
    {
        double z[2] = {(shift - in_mean[0]) / in_scale[0], 0.0};
        if (n_in == 2)
            z[1] = (direction - in_mean[1]) / in_scale[1];
        double s = c;
        for (std::size_t i = 0; i < alpha.size(); ++i)
            s += alpha[i] * kernel_std(z, x.data() + i * static_cast<std::size_t>(n_in));
        return s;
    }

    double nominal_deg(double shift) const
    {
        return nominal_sensitivity > 0.0 ? rad_to_deg(std::atan(shift / nominal_sensitivity)) : 0.0;
    }
    double predict(double shift, int direction) const
    {
        return wrap_deg(center_deg + nominal_deg(shift) + offset_deg(shift, direction));
    }
    bool operator==(const GaussianProcess&) const = default;
};

struct GpOptions {
    /// Larger subsets are randomly subsampled to this many points.
    std::size_t max_points = 4000;
    /// Points used for the hyperparameter search.
    std::size_t hyper_points = 300;
    int starts = 3;
    int max_evals = 300;
    std::uint64_t seed = 1;
};

namespace detail {

inline Eigen::MatrixXd gp_kernel_matrix(const GaussianProcess& g)
{
    const auto n = static_cast<Eigen::Index>(g.x.size() / static_cast<std::size_t>(g.n_in));
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            K(i, j) = K(j, i) = g.kernel_std(g.x.data() + i * g.n_in, g.x.data() + j * g.n_in);
    return K;
}

} // namespace detail

/// Solves for c (generalised least squares) and alpha at fixed
/// hyperparameters; g.x must already hold the standardised inputs. Jitter is
/// escalated from 1e-12 to 1e-6 sigma_f^2 before giving up.
inline void gp_condition(GaussianProcess& g, const Eigen::VectorXd& y)
{
    const Eigen::Index n = y.size();
    Eigen::MatrixXd K = detail::gp_kernel_matrix(g);
    K.diagonal().array() += g.hyper.noise_sd * g.hyper.noise_sd;
    const double sf2 = g.hyper.signal_sd * g.hyper.signal_sd;
    g.jitter = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    for (double j = 1e-12; llt.info() != Eigen::Success; j *= 10.0) {
        if (j > 1e-6 * (1.0 + 1e-9))
            throw NumericalError("gp: kernel matrix not positive definite after jitter 1e-6 sigma_f^2");
        g.jitter = j * sf2;
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += g.jitter;
        llt.compute(Kj);
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd Ki1 = llt.solve(ones);
    const Eigen::VectorXd Kiy = llt.solve(y);
    g.c = ones.dot(Kiy) / ones.dot(Ki1);
    const Eigen::VectorXd a = Kiy - g.c * Ki1;
    g.alpha.assign(a.data(), a.data() + n);
    const Eigen::VectorXd res = y - g.c * ones;
    const Eigen::MatrixXd L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    g.log_marginal_likelihood
        = -0.5 * res.dot(a) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

/// Untrained GP holding the standardised inputs and targets of `data`.
inline GaussianProcess make_gp(const std::vector<RegressionSample>& data, bool use_direction, double center_deg,
                               Eigen::VectorXd& y, double nominal_sensitivity = 0.0)
{
    if (data.size() < 2)
        throw InsufficientDataError("gp: at least two samples required", -1);
    if (!(nominal_sensitivity >= 0.0))
        throw ConfigError("gp: nominal sensitivity must be >= 0");
    GaussianProcess g;
    g.n_in = use_direction ? 2 : 1;
    g.center_deg = center_deg;
    g.nominal_sensitivity = nominal_sensitivity;
    g.in_mean.assign(static_cast<std::size_t>(g.n_in), 0.0);
    g.in_scale.assign(static_cast<std::size_t>(g.n_in), 0.0);
    const double n = static_cast<double>(data.size());
    for (const auto& r : data) {
        g.in_mean[0] += r.shift / n;
        if (use_direction)
            g.in_mean[1] += r.direction / n;
    }
    for (const auto& r : data) {
        g.in_scale[0] += (r.shift - g.in_mean[0]) * (r.shift - g.in_mean[0]) / n;
        if (use_direction)
            g.in_scale[1] += (r.direction - g.in_mean[1]) * (r.direction - g.in_mean[1]) / n;
    }
    for (double& s : g.in_scale) {
        s = std::sqrt(s);
        if (!(s > 1e-12))
            s = 1.0;
    }
    y.resize(static_cast<Eigen::Index>(data.size()));
    g.x.clear();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data[i];
        if (!std::isfinite(r.shift) || !std::isfinite(r.beta_ref))
            throw InputError("gp: non-finite sample");
        g.x.push_back((r.shift - g.in_mean[0]) / g.in_scale[0]);
        if (use_direction)
            g.x.push_back((r.direction - g.in_mean[1]) / g.in_scale[1]);
        y(static_cast<Eigen::Index>(i)) = angle_diff_deg(r.beta_ref, center_deg) - g.nominal_deg(r.shift);
    }
    g.alpha.clear();
    return g;
}

/// GP on `data` with the given hyperparameters (no search).
inline GaussianProcess gp_with_hyper(const std::vector<RegressionSample>& data, bool use_direction, double center_deg,
                                     const GpHyper& h, double nominal_sensitivity = 0.0)
{
    Eigen::VectorXd y;
    GaussianProcess g = make_gp(data, use_direction, center_deg, y, nominal_sensitivity);
    g.hyper = h;
    gp_condition(g, y);
    return g;
}

/// Hyperparameters by maximising the log marginal likelihood (Nelder-Mead in
/// log space from several starts) on a subsample, then conditioning on up to
/// max_points samples.
inline GaussianProcess train_gp(const std::vector<RegressionSample>& data, bool use_direction, double center_deg,
                                const GpOptions& opt = {}, int sector = -1, double nominal_sensitivity = 0.0)
{
    if (data.size() < 3)
        throw InsufficientDataError("gp: sector " + std::to_string(sector) + " has fewer than 3 samples", sector);
    auto subsample = [&](std::size_t cap, std::uint64_t stream) {
        if (data.size() <= cap)
            return data;
        std::vector<std::size_t> idx(data.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        auto rng = stream_rng(opt.seed, stream);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(cap);
        std::sort(idx.begin(), idx.end());
        std::vector<RegressionSample> out;
        for (auto i : idx)
            out.push_back(data[i]);
        return out;
    };
    const auto hyper_set = subsample(opt.hyper_points, 0x6A);
    Eigen::VectorXd yh;
    GaussianProcess probe = make_gp(hyper_set, use_direction, center_deg, yh, nominal_sensitivity);
    const double ysd = std::max(std::sqrt((yh.array() - yh.mean()).square().mean()), 1e-9);

    auto objective = [&](const Eigen::VectorXd& p) {
        probe.hyper = {std::exp(p(0)), std::exp(p(1)), std::exp(p(2))};
        try {
            gp_condition(probe, yh);
        } catch (const NumericalError&) {
            return HUGE_VAL;
        }
        return -probe.log_marginal_likelihood;
    };
    NelderMeadResult best;
    best.f = HUGE_VAL;
    const double starts[][3] = {{1.0, 1.0, 1e-3}, {3.0, 10.0, 1e-4}, {0.3, 0.1, 1e-2}, {10.0, 3.0, 1e-3}};
    for (int s = 0; s < std::min(opt.starts, 4); ++s) {
        Eigen::Vector3d x0(std::log(starts[s][0] * ysd), std::log(starts[s][1]), std::log(starts[s][2] * ysd));
        const auto r = nelder_mead(objective, x0, 1.0, opt.max_evals, 1e-9);
        if (r.f < best.f)
            best = r;
    }
    if (!(best.f < HUGE_VAL))
        throw NumericalError("gp: no hyperparameters gave a positive definite kernel matrix");
    const GpHyper h{std::exp(best.x(0)), std::exp(best.x(1)), std::exp(best.x(2))};
    return gp_with_hyper(subsample(opt.max_points, 0x6B), use_direction, center_deg, h, nominal_sensitivity);
}

} // namespace astras

#endif // ASTRAS_REGRESS_GP_HPP
