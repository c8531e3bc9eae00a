#ifndef ASTRAS_SHIFT_HPP
#define ASTRAS_SHIFT_HPP

#include "astras/errors.hpp"
#include "astras/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

namespace astras {

struct ShiftWindow {
    double center = 0.0;
    int half_width = 32;
};

struct ShiftResult {
    /// Positive: input pattern sits toward larger column index than the reference.
    double shift = 0.0;
    int integer_lag = 0;
    double peak = 0.0;
    /// Argmax on the edge of the searched lag range; no sub-pixel refinement.
    bool boundary = false;
    int lags_evaluated = 0;
};

namespace detail {

inline std::size_t smooth_size(std::size_t n)
{
    for (;; ++n) {
        std::size_t m = n;
        for (std::size_t p : {2u, 3u, 5u})
            while (m % p == 0)
                m /= p;
        if (m == 1)
            return n;
    }
}

struct FftPlans {
    std::size_t n = 0;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    ~FftPlans()
    {
        if (forward)
            fftw_destroy_plan(forward);
        if (backward)
            fftw_destroy_plan(backward);
    }
};

template <class T>
struct FftwDeleter {
    void operator()(T* p) const noexcept { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double, FftwDeleter<double>>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwDeleter<fftw_complex>>;

inline RealBuffer alloc_real(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
inline ComplexBuffer alloc_complex(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

/// FFTW's planner is not thread-safe; plans are created once per length under
/// a lock and then executed with the new-array interface.
inline const FftPlans& plans_for(std::size_t n)
{
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<FftPlans>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_unique<FftPlans>();
        slot->n = n;
        auto r = alloc_real(n);
        auto c = alloc_complex(n / 2 + 1);
        slot->forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), r.get(), c.get(), FFTW_ESTIMATE);
        slot->backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), c.get(), r.get(), FFTW_ESTIMATE);
        if (!slot->forward || !slot->backward)
            throw NumericalError("FFTW plan creation failed");
    }
    return *slot;
}

/// Per-lag zero-mean normalised correlation from the raw sums over the overlap.
struct OverlapSums {
    std::vector<double> a, a2, b, b2;  // prefix sums, size K + 1

    OverlapSums(std::span<const double> x, std::span<const double> y)
        : a(x.size() + 1, 0.0), a2(x.size() + 1, 0.0), b(y.size() + 1, 0.0), b2(y.size() + 1, 0.0)
    {
        for (std::size_t k = 0; k < x.size(); ++k) {
            a[k + 1] = a[k] + x[k];
            a2[k + 1] = a2[k] + x[k] * x[k];
            b[k + 1] = b[k] + y[k];
            b2[k + 1] = b2[k] + y[k] * y[k];
        }
    }

    double ncc(int lag, double sab) const
    {
        const int K = static_cast<int>(a.size()) - 1;
        const int k0 = std::max(0, lag), k1 = std::min(K, K + lag);
        const int j0 = k0 - lag, j1 = k1 - lag;
        const double n = k1 - k0;
        const double sa = a[k1] - a[k0], sb = b[j1] - b[j0];
        const double va = (a2[k1] - a2[k0]) - sa * sa / n;
        const double vb = (b2[j1] - b2[j0]) - sb * sb / n;
        if (!(va > 0.0) || !(vb > 0.0))
            return -std::numeric_limits<double>::infinity();
        return (sab - sa * sb / n) / std::sqrt(va * vb);
    }
};

inline std::vector<double> centered(std::span<const double> x)
{
    double m = 0.0;
    for (double v : x)
        m += v;
    m /= static_cast<double>(x.size());
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out)
        v -= m;
    return out;
}

inline bool has_variance(const std::vector<double>& centered_x)
{
    for (double v : centered_x)
        if (v != 0.0)
            return true;
    return false;
}

/// Raw cross-correlation c[L] = sum_k x[k] y[k - L] for |L| <= max_lag.
inline std::vector<double> fft_cross_correlation(const std::vector<double>& x, const std::vector<double>& y, int max_lag)
{
    const std::size_t K = x.size();
    const std::size_t n = smooth_size(K + static_cast<std::size_t>(max_lag) + 1);
    const FftPlans& p = plans_for(n);
    auto rx = alloc_real(n), ry = alloc_real(n);
    auto cx = alloc_complex(n / 2 + 1), cy = alloc_complex(n / 2 + 1);
    std::fill(rx.get(), rx.get() + n, 0.0);
    std::fill(ry.get(), ry.get() + n, 0.0);
    std::copy(x.begin(), x.end(), rx.get());
    std::copy(y.begin(), y.end(), ry.get());
    fftw_execute_dft_r2c(p.forward, rx.get(), cx.get());
    fftw_execute_dft_r2c(p.forward, ry.get(), cy.get());
    for (std::size_t i = 0; i < n / 2 + 1; ++i) {
        const std::complex<double> u(cx.get()[i][0], cx.get()[i][1]);
        const std::complex<double> v(cy.get()[i][0], cy.get()[i][1]);
        const auto w = u * std::conj(v);
        cx.get()[i][0] = w.real();
        cx.get()[i][1] = w.imag();
    }
    fftw_execute_dft_c2r(p.backward, cx.get(), rx.get());
    std::vector<double> out(static_cast<std::size_t>(2 * max_lag + 1));
    for (int L = -max_lag; L <= max_lag; ++L) {
        const std::size_t idx = L >= 0 ? static_cast<std::size_t>(L) : n - static_cast<std::size_t>(-L);
        out[static_cast<std::size_t>(L + max_lag)] = rx.get()[idx] / static_cast<double>(n);
    }
    return out;
}

inline ShiftResult refine_peak(const std::vector<double>& r, int first_lag)
{
    ShiftResult res;
    res.lags_evaluated = static_cast<int>(r.size());
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i] > r[best])
            best = i;
    if (!std::isfinite(r[best]))
        throw UndefinedShiftError("correlation undefined at every lag");
    res.integer_lag = first_lag + static_cast<int>(best);
    res.peak = r[best];
    res.shift = res.integer_lag;
    if (best == 0 || best + 1 == r.size()) {
        res.boundary = true;
        return res;
    }
    const double ym = r[best - 1], y0 = r[best], yp = r[best + 1];
    const double den = ym - 2.0 * y0 + yp;
    if (std::isfinite(ym) && std::isfinite(yp) && den < 0.0)
        res.shift += std::clamp(0.5 * (ym - yp) / den, -0.5, 0.5);
    return res;
}

} // namespace detail

/// Largest lag that keeps at least half of the columns overlapping.
inline int max_valid_lag(std::size_t K) { return static_cast<int>(K / 2); }

/// Zero-mean normalised cross-correlation over integer lags with 3-point
/// parabolic refinement. Without a window every lag with >= 50% overlap is
/// searched (via FFT); with a window only those lags, by direct sums.
inline ShiftResult cross_correlation_shift(std::span<const double> input, std::span<const double> reference,
                                           std::optional<ShiftWindow> window = std::nullopt)
{
    const std::size_t K = input.size();
    if (K < 4 || reference.size() != K)
        throw InputError("cross_correlation_shift: inputs must have equal length >= 4");
    const auto a = detail::centered(input);
    const auto b = detail::centered(reference);
    if (!detail::has_variance(a) || !detail::has_variance(b))
        throw UndefinedShiftError("cross_correlation_shift: constant input, shift undefined");
    const detail::OverlapSums sums(a, b);
    const int max_lag = max_valid_lag(K);

    if (!window) {
        const auto c = detail::fft_cross_correlation(a, b, max_lag);
        std::vector<double> r(c.size());
        for (int L = -max_lag; L <= max_lag; ++L)
            r[static_cast<std::size_t>(L + max_lag)] = sums.ncc(L, c[static_cast<std::size_t>(L + max_lag)]);
        return detail::refine_peak(r, -max_lag);
    }

    if (window->half_width < 1)
        throw ConfigError("shift window half-width must be >= 1");
    const int mid = static_cast<int>(std::lround(window->center));
    const int lo = std::max(-max_lag, mid - window->half_width);
    const int hi = std::min(max_lag, mid + window->half_width);
    if (lo > hi)
        throw InputError("shift window lies outside the valid lag range");
    std::vector<double> r(static_cast<std::size_t>(hi - lo + 1));
    const int Ki = static_cast<int>(K);
    for (int L = lo; L <= hi; ++L) {
        const int k0 = std::max(0, L), k1 = std::min(Ki, Ki + L);
        double sab = 0.0;
        for (int k = k0; k < k1; ++k)
            sab += a[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(k - L)];
        r[static_cast<std::size_t>(L - lo)] = sums.ncc(L, sab);
    }
    return detail::refine_peak(r, lo);
}

struct PreshiftOptions {
    std::size_t downsample = 16;
    double spread = 1.0;
};

/// General regression neural network (Nadaraya-Watson with a Gaussian
/// kernel) from a downsampled, standardised intensity vector to a coarse shift.
struct PreshiftModel {
    std::size_t downsample = 16;
    double spread = 1.0;
    std::vector<double> mean, scale;
    /// Row-major n x d standardised training inputs.
    std::vector<double> x;
    std::vector<double> y;

    std::size_t dim() const noexcept { return mean.size(); }
    std::size_t size() const noexcept { return y.size(); }

    std::vector<double> transform(std::span<const double> I) const
    {
        auto d = downsample_mean(I, downsample);
        if (d.size() != dim())
            throw InputError("pre-shift input length does not match the trained model");
        for (std::size_t j = 0; j < d.size(); ++j)
            d[j] = (d[j] - mean[j]) / scale[j];
        return d;
    }

    bool operator==(const PreshiftModel&) const = default;
};

inline PreshiftModel train_preshift(const std::vector<std::vector<double>>& inputs, const std::vector<double>& shifts,
                                    const PreshiftOptions& opt = {})
{
    if (inputs.empty() || inputs.size() != shifts.size())
        throw InputError("train_preshift: need one shift per input and at least one pair");
    if (!(opt.spread > 0.0) || opt.downsample == 0)
        throw ConfigError("train_preshift: spread and downsample factor must be positive");
    PreshiftModel m;
    m.downsample = opt.downsample;
    m.spread = opt.spread;
    std::vector<std::vector<double>> ds;
    ds.reserve(inputs.size());
    for (const auto& I : inputs)
        ds.push_back(downsample_mean(I, opt.downsample));
    const std::size_t d = ds.front().size(), n = ds.size();
    m.mean.assign(d, 0.0);
    m.scale.assign(d, 0.0);
    for (const auto& v : ds) {
        if (v.size() != d)
            throw InputError("train_preshift: inputs differ in length");
        for (std::size_t j = 0; j < d; ++j)
            m.mean[j] += v[j];
    }
    for (double& v : m.mean)
        v /= static_cast<double>(n);
    for (const auto& v : ds)
        for (std::size_t j = 0; j < d; ++j)
            m.scale[j] += (v[j] - m.mean[j]) * (v[j] - m.mean[j]);
    for (double& s : m.scale) {
        s = n > 1 ? std::sqrt(s / static_cast<double>(n - 1)) : 0.0;
        if (!(s > 1e-12))
            s = 1.0;
    }
    m.x.reserve(n * d);
    for (const auto& v : ds)
        for (std::size_t j = 0; j < d; ++j)
            m.x.push_back((v[j] - m.mean[j]) / m.scale[j]);
    m.y = shifts;
    return m;
}

/// Kernel-weighted mean of the training shifts; nullopt when every weight
/// underflows (the query is far from all training inputs).
inline std::optional<double> predict_preshift(const PreshiftModel& m, std::span<const double> I)
{
    const auto q = m.transform(I);
    const std::size_t d = m.dim(), n = m.size();
    std::vector<double> d2(n);
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = m.x.data() + i * d;
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            s += (q[j] - xi[j]) * (q[j] - xi[j]);
        d2[i] = s;
        dmin = std::min(dmin, s);
    }
    const double inv = 1.0 / (2.0 * m.spread * m.spread);
    if (std::exp(-dmin * inv) == 0.0)
        return std::nullopt;
    // Weights relative to the nearest point: same ratio, no underflow.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::exp(-(d2[i] - dmin) * inv);
        num += w * m.y[i];
        den += w;
    }
    return num / den;
}

} // namespace astras

#endif // ASTRAS_SHIFT_HPP
