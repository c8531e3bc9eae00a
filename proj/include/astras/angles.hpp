#ifndef ASTRAS_ANGLES_HPP
#define ASTRAS_ANGLES_HPP

#include <cmath>
#include <numbers>

namespace astras {

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;
inline constexpr double kArcsecPerDeg = 3600.0;

constexpr double deg_to_rad(double deg) noexcept { return deg / kDegPerRad; }
constexpr double rad_to_deg(double rad) noexcept { return rad * kDegPerRad; }
constexpr double arcsec_to_deg(double as) noexcept { return as / kArcsecPerDeg; }
constexpr double deg_to_arcsec(double deg) noexcept { return deg * kArcsecPerDeg; }

/// Wraps to (-180, 180].
inline double wrap_deg(double deg) noexcept
{
    double w = std::fmod(deg + 180.0, 360.0);
    if (w <= 0.0)
        w += 360.0;
    return w - 180.0;
}

/// Wraps to [-180, 180); used for sector lookup where spans are half-open.
inline double wrap_deg_half_open(double deg) noexcept
{
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0)
        w += 360.0;
    return w - 180.0;
}

/// Signed smallest difference a - b in (-180, 180].
inline double angle_diff_deg(double a, double b) noexcept { return wrap_deg(a - b); }

} // namespace astras

#endif // ASTRAS_ANGLES_HPP
