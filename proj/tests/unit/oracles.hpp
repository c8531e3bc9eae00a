// Independent reference computations shared by the unit tests.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

/// Mean squared difference between in[k] and ref[k - t], with ref linearly
/// interpolated, over the columns where both are defined.
inline double ssd(const std::vector<double>& in, const std::vector<double>& ref, double t)
{
    const int K = static_cast<int>(in.size());
    double s = 0.0;
    int n = 0;
    for (int k = 0; k < K; ++k) {
        const double x = k - t;
        if (x < 0.0 || x > K - 1)
            continue;
        const int i0 = static_cast<int>(std::floor(x));
        const int i1 = std::min(i0 + 1, K - 1);
        const double f = x - i0;
        const double r = (1.0 - f) * ref[i0] + f * ref[i1];
        s += (in[k] - r) * (in[k] - r);
        ++n;
    }
    return n ? s / n : std::numeric_limits<double>::infinity();
}

inline int ssd_integer_shift(const std::vector<double>& in, const std::vector<double>& ref, int max_lag)
{
    int best = 0;
    double bv = std::numeric_limits<double>::infinity();
    for (int t = -max_lag; t <= max_lag; ++t) {
        const double v = ssd(in, ref, t);
        if (v < bv) {
            bv = v;
            best = t;
        }
    }
    return best;
}

/// Integer search followed by golden-section refinement on [t0 - 1, t0 + 1].
inline double ssd_subpixel_shift(const std::vector<double>& in, const std::vector<double>& ref, int max_lag)
{
    const int t0 = ssd_integer_shift(in, ref, max_lag);
    double a = t0 - 1.0, b = t0 + 1.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = ssd(in, ref, c), fd = ssd(in, ref, d);
    while (b - a > 1e-6) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ssd(in, ref, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ssd(in, ref, d);
        }
    }
    return 0.5 * (a + b);
}

inline double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / v.size();
}

inline double stddev(const std::vector<double>& v)
{
    const double m = mean(v);
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
}

} // namespace oracle
