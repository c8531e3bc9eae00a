#ifndef ASTRAS_REGRESS_FFNN_HPP
#define ASTRAS_REGRESS_FFNN_HPP

#include "astras/random.hpp"
#include "astras/regress/levenberg.hpp"
#include "astras/regress/subsets.hpp"

#include <numeric>
#include <random>

namespace astras {

/// shift (+ direction) -> tanh hidden layer -> linear output, on
/// standardised inputs and target.
struct Ffnn {
    int n_in = 1;
    int n_hidden = 1;
    double center_deg = 0.0;
    std::vector<double> in_mean, in_scale;
    double out_mean = 0.0, out_scale = 1.0;
    std::vector<double> w1;  // n_hidden x n_in, row-major
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;

    double train_rmse_deg = 0.0;
    double validation_rmse_deg = 0.0;
    bool below_target = false;

    bool uses_direction() const noexcept { return n_in == 2; }
    std::size_t n_params() const noexcept
    {
        return static_cast<std::size_t>(n_hidden) * (n_in + 2) + 1;
    }

    /// Network output on already standardised inputs.
    double raw(const double* z) const
    {
        double out = b2;
        for (int j = 0; j < n_hidden; ++j) {
            double a = b1[static_cast<std::size_t>(j)];
            for (int k = 0; k < n_in; ++k)
                a += w1[static_cast<std::size_t>(j * n_in + k)] * z[k];
            out += w2[static_cast<std::size_t>(j)] * std::tanh(a);
        }
        return out;
    }

    double offset_deg(double shift, int direction) const
    {
        double z[2] = {(shift - in_mean[0]) / in_scale[0], 0.0};
        if (n_in == 2)
            z[1] = (direction - in_mean[1]) / in_scale[1];
        return out_mean + out_scale * raw(z);
    }

    double predict(double shift, int direction) const { return wrap_deg(center_deg + offset_deg(shift, direction)); }

    std::vector<double> parameters() const
    {
        std::vector<double> p(w1);
        p.insert(p.end(), b1.begin(), b1.end());
        p.insert(p.end(), w2.begin(), w2.end());
        p.push_back(b2);
        return p;
    }

    void set_parameters(std::span<const double> p)
    {
        if (p.size() != n_params())
            throw InputError("ffnn: parameter vector has the wrong length");
        auto it = p.begin();
        const auto h = static_cast<std::size_t>(n_hidden);
        w1.assign(it, it + static_cast<std::ptrdiff_t>(h * static_cast<std::size_t>(n_in)));
        it += static_cast<std::ptrdiff_t>(h * static_cast<std::size_t>(n_in));
        b1.assign(it, it + static_cast<std::ptrdiff_t>(h));
        it += static_cast<std::ptrdiff_t>(h);
        w2.assign(it, it + static_cast<std::ptrdiff_t>(h));
        it += static_cast<std::ptrdiff_t>(h);
        b2 = *it;
    }

    bool operator==(const Ffnn&) const = default;
};

struct FfnnOptions {
    int restarts = 5;
    int max_epochs = 5000;
    double rmse_tol = 1e-12;
    double validation_fraction = 0.15;
    std::uint64_t seed = 1;
};

namespace detail {

/// Standardised design (n x n_in) and target.
inline void ffnn_design(const Ffnn& m, const std::vector<RegressionSample>& data, Eigen::MatrixXd& Z, Eigen::VectorXd& t)
{
    const auto n = static_cast<Eigen::Index>(data.size());
    Z.resize(n, m.n_in);
    t.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = data[static_cast<std::size_t>(i)];
        Z(i, 0) = (r.shift - m.in_mean[0]) / m.in_scale[0];
        if (m.n_in == 2)
            Z(i, 1) = (r.direction - m.in_mean[1]) / m.in_scale[1];
        t(i) = (angle_diff_deg(r.beta_ref, m.center_deg) - m.out_mean) / m.out_scale;
    }
}

/// Residuals out - t and their Jacobian with respect to the parameter vector.
inline void ffnn_residuals(Ffnn& m, const Eigen::VectorXd& theta, const Eigen::MatrixXd& Z, const Eigen::VectorXd& t,
                           Eigen::VectorXd& r, Eigen::MatrixXd* J)
{
    m.set_parameters(std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
    const Eigen::Index n = Z.rows();
    const int h = m.n_hidden, d = m.n_in;
    r.resize(n);
    if (J)
        J->resize(n, static_cast<Eigen::Index>(m.n_params()));
    std::vector<double> hz(static_cast<std::size_t>(h));
    for (Eigen::Index i = 0; i < n; ++i) {
        double out = m.b2;
        for (int j = 0; j < h; ++j) {
            double a = m.b1[static_cast<std::size_t>(j)];
            for (int k = 0; k < d; ++k)
                a += m.w1[static_cast<std::size_t>(j * d + k)] * Z(i, k);
            hz[static_cast<std::size_t>(j)] = std::tanh(a);
            out += m.w2[static_cast<std::size_t>(j)] * hz[static_cast<std::size_t>(j)];
        }
        r(i) = out - t(i);
        if (!J)
            continue;
        for (int j = 0; j < h; ++j) {
            const double z = hz[static_cast<std::size_t>(j)];
            const double da = m.w2[static_cast<std::size_t>(j)] * (1.0 - z * z);
            for (int k = 0; k < d; ++k)
                (*J)(i, j * d + k) = da * Z(i, k);
            (*J)(i, h * d + j) = da;
            (*J)(i, h * d + h + j) = z;
        }
        (*J)(i, h * d + 2 * h) = 1.0;
    }
}

inline double rmse_deg(const Ffnn& m, const std::vector<RegressionSample>& data)
{
    if (data.empty())
        return 0.0;
    double s = 0.0;
    for (const auto& r : data) {
        const double e = angle_diff_deg(m.predict(r.shift, r.direction), r.beta_ref);
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(data.size()));
}

inline LmResult ffnn_lm(Ffnn& m, const std::vector<RegressionSample>& data, const FfnnOptions& opt)
{
    Eigen::MatrixXd Z;
    Eigen::VectorXd t;
    ffnn_design(m, data, Z, t);
    const auto p = m.parameters();
    Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    LmOptions lm;
    lm.max_iter = opt.max_epochs;
    lm.rmse_tol = opt.rmse_tol;
    lm.xtol = 0.0;
    auto f = [&](const Eigen::VectorXd& th, Eigen::VectorXd& r, Eigen::MatrixXd* J) { ffnn_residuals(m, th, Z, t, r, J); };
    const auto res = levenberg_marquardt(f, theta, lm);
    m.set_parameters(std::span<const double>(res.x.data(), static_cast<std::size_t>(res.x.size())));
    return res;
}

} // namespace detail

/// Mean squared error over `data` (standardised target units) and its gradient.
inline double ffnn_loss_and_gradient(const Ffnn& model, const std::vector<RegressionSample>& data,
                                     std::vector<double>* grad)
{
    Ffnn m = model;
    Eigen::MatrixXd Z;
    Eigen::VectorXd t, r;
    detail::ffnn_design(m, data, Z, t);
    const auto p = m.parameters();
    const Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    Eigen::MatrixXd J;
    detail::ffnn_residuals(m, theta, Z, t, r, grad ? &J : nullptr);
    const double n = static_cast<double>(r.size());
    if (grad) {
        const Eigen::VectorXd g = (2.0 / n) * (J.transpose() * r);
        grad->assign(g.data(), g.data() + g.size());
    }
    return r.squaredNorm() / n;
}

/// Untrained network with the input / output standardisation of `data`.
inline Ffnn make_ffnn(const std::vector<RegressionSample>& data, int n_hidden, bool use_direction, double center_deg)
{
    if (n_hidden < 1)
        throw ConfigError("ffnn: n_hidden must be >= 1");
    if (data.size() < 2)
        throw InsufficientDataError("ffnn: at least two samples required", -1);
    Ffnn m;
    m.n_in = use_direction ? 2 : 1;
    m.n_hidden = n_hidden;
    m.center_deg = center_deg;
    const double n = static_cast<double>(data.size());
    auto standardise = [&](auto get, double& mean, double& scale) {
        mean = 0.0;
        for (const auto& r : data)
            mean += get(r);
        mean /= n;
        double v = 0.0;
        for (const auto& r : data)
            v += (get(r) - mean) * (get(r) - mean);
        scale = std::sqrt(v / n);
        if (!(scale > 1e-12))
            scale = 1.0;
    };
    m.in_mean.resize(static_cast<std::size_t>(m.n_in));
    m.in_scale.resize(static_cast<std::size_t>(m.n_in));
    standardise([](const RegressionSample& r) { return r.shift; }, m.in_mean[0], m.in_scale[0]);
    if (use_direction)
        standardise([](const RegressionSample& r) { return static_cast<double>(r.direction); }, m.in_mean[1],
                    m.in_scale[1]);
    standardise([&](const RegressionSample& r) { return angle_diff_deg(r.beta_ref, center_deg); }, m.out_mean,
                m.out_scale);
    m.w1.assign(static_cast<std::size_t>(n_hidden * m.n_in), 0.0);
    m.b1.assign(static_cast<std::size_t>(n_hidden), 0.0);
    m.w2.assign(static_cast<std::size_t>(n_hidden), 0.0);
    m.b2 = 0.0;
    return m;
}

/// Same network with an extra direction input whose weights are zero: it
/// predicts exactly what `m` predicts.
inline Ffnn embed_direction(const Ffnn& m, const std::vector<RegressionSample>& data)
{
    if (m.n_in != 1)
        throw ConfigError("ffnn: network already takes the direction");
    const Ffnn tmp = make_ffnn(data, 1, true, m.center_deg);
    Ffnn out = m;
    out.n_in = 2;
    out.in_mean.push_back(tmp.in_mean[1]);
    out.in_scale.push_back(tmp.in_scale[1]);
    out.w1.clear();
    for (int j = 0; j < m.n_hidden; ++j) {
        out.w1.push_back(m.w1[static_cast<std::size_t>(j)]);
        out.w1.push_back(0.0);
    }
    return out;
}

/// Continues Levenberg-Marquardt from the current weights on all of `data`.
inline Ffnn refine_ffnn(Ffnn m, const std::vector<RegressionSample>& data, const FfnnOptions& opt = {})
{
    const auto res = detail::ffnn_lm(m, data, opt);
    m.train_rmse_deg = detail::rmse_deg(m, data);
    m.below_target = !res.converged;
    return m;
}

/// Levenberg-Marquardt from `restarts` random initialisations; keeps the
/// network with the lowest validation RMSE.
inline Ffnn train_ffnn(const std::vector<RegressionSample>& data, int n_hidden, bool use_direction, double center_deg,
                       const FfnnOptions& opt = {}, int sector = -1)
{
    const std::size_t need = static_cast<std::size_t>(n_hidden) * (use_direction ? 4u : 3u) + 1u;
    if (data.size() < std::max<std::size_t>(need, 4))
        throw InsufficientDataError("ffnn: sector " + std::to_string(sector) + " has too few samples", sector);
    if (opt.restarts < 1)
        throw ConfigError("ffnn: restarts must be >= 1");
    for (const auto& r : data)
        if (!std::isfinite(r.shift) || !std::isfinite(r.beta_ref))
            throw InputError("ffnn: non-finite sample");

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto split_rng = stream_rng(opt.seed, 0xF5);
    std::shuffle(order.begin(), order.end(), split_rng);
    const auto n_val = static_cast<std::size_t>(std::floor(opt.validation_fraction * static_cast<double>(data.size())));
    std::vector<RegressionSample> tr, va;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_val ? va : tr).push_back(data[order[i]]);

    const Ffnn base = make_ffnn(tr, n_hidden, use_direction, center_deg);
    Ffnn best;
    double best_val = HUGE_VAL;
    for (int r = 0; r < opt.restarts; ++r) {
        Ffnn m = base;
        auto rng = stream_rng(opt.seed, 0x1000 + static_cast<std::uint64_t>(r));
        std::normal_distribution<double> g(0.0, 1.0);
        for (double& w : m.w1)
            w = g(rng);
        for (double& b : m.b1)
            b = g(rng);
        for (double& w : m.w2)
            w = g(rng) / std::sqrt(static_cast<double>(n_hidden));
        const auto res = detail::ffnn_lm(m, tr, opt);
        m.train_rmse_deg = detail::rmse_deg(m, tr);
        m.validation_rmse_deg = va.empty() ? m.train_rmse_deg : detail::rmse_deg(m, va);
        m.below_target = !res.converged;
        if (m.validation_rmse_deg < best_val) {
            best_val = m.validation_rmse_deg;
            best = m;
        }
    }
    return best;
}

} // namespace astras

#endif // ASTRAS_REGRESS_FFNN_HPP
