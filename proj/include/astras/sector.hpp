#ifndef ASTRAS_SECTOR_HPP
#define ASTRAS_SECTOR_HPP

#include "astras/angles.hpp"
#include "astras/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace astras {

enum class SectorKind { single_shadow, two_shadow };

/// One of the 2*n_mirrors angular regions. Single-shadow sectors are seen by
/// one mirror (`mirror_a == mirror_b`); two-shadow sectors by two consecutive
/// mirrors. Spans are half-open: [start_deg, start_deg + span_deg).
struct Sector {
    int index = 0;
    SectorKind kind = SectorKind::single_shadow;
    std::string name;
    double start_deg = 0.0;
    double span_deg = 0.0;
    int mirror_a = 0;
    int mirror_b = 0;

    double center_deg() const noexcept { return wrap_deg(start_deg + 0.5 * span_deg); }
    double end_deg() const noexcept { return start_deg + span_deg; }
};

/// Cyclic sector tiling of [-180, 180). Sector 0 (AA) starts at -180, so the
/// seam at +/-180 is a sector boundary.
class SectorLayout {
public:
    SectorLayout() : SectorLayout(8, 35.0, 10.0) {}

    SectorLayout(int n_mirrors, double single_span_deg, double two_span_deg)
        : n_mirrors_(n_mirrors), single_span_(single_span_deg), two_span_(two_span_deg)
    {
        if (n_mirrors < 2 || n_mirrors > 26)
            throw ConfigError("n_mirrors must be in [2, 26]");
        if (single_span_deg <= 0.0 || two_span_deg <= 0.0)
            throw ConfigError("sector spans must be positive");
        if (std::abs(n_mirrors * (single_span_deg + two_span_deg) - 360.0) > 1e-9)
            throw ConfigError("n_mirrors * (single span + two span) must equal 360 degrees");

        const double period = single_span_ + two_span_;
        sectors_.reserve(static_cast<std::size_t>(2 * n_mirrors));
        for (int m = 0; m < n_mirrors; ++m) {
            const int next = (m + 1) % n_mirrors;
            Sector single;
            single.index = 2 * m;
            single.kind = SectorKind::single_shadow;
            single.name = std::string{letter(m), letter(m)};
            single.start_deg = -180.0 + m * period;
            single.span_deg = single_span_;
            single.mirror_a = single.mirror_b = m;
            sectors_.push_back(single);

            Sector two;
            two.index = 2 * m + 1;
            two.kind = SectorKind::two_shadow;
            two.name = std::string{letter(m), letter(next)};
            two.start_deg = single.start_deg + single_span_;
            two.span_deg = two_span_;
            two.mirror_a = m;
            two.mirror_b = next;
            sectors_.push_back(two);
        }
    }

    int n_mirrors() const noexcept { return n_mirrors_; }
    int size() const noexcept { return static_cast<int>(sectors_.size()); }
    double single_span_deg() const noexcept { return single_span_; }
    double two_span_deg() const noexcept { return two_span_; }
    const Sector& operator[](int i) const { return sectors_.at(static_cast<std::size_t>(i)); }
    const std::vector<Sector>& sectors() const noexcept { return sectors_; }

    /// Angle at which mirror m is parallel to the sensor (its single-shadow center).
    double mirror_center_deg(int m) const
    {
        return -180.0 + m * (single_span_ + two_span_) + 0.5 * single_span_;
    }

    int sector_of(double beta_deg) const noexcept
    {
        const double b = wrap_deg_half_open(beta_deg) + 180.0;
        const double period = single_span_ + two_span_;
        int m = static_cast<int>(std::floor(b / period));
        if (m >= n_mirrors_)
            m = n_mirrors_ - 1;
        const double r = b - m * period;
        return r < single_span_ ? 2 * m : 2 * m + 1;
    }

    bool adjacent(int a, int b) const noexcept
    {
        const int n = size();
        const int d = ((a - b) % n + n) % n;
        return d == 0 || d == 1 || d == n - 1;
    }

    int next(int i) const noexcept { return (i + 1) % size(); }
    int prev(int i) const noexcept { return (i + size() - 1) % size(); }

    static char letter(int m) noexcept { return static_cast<char>('A' + m); }

private:
    int n_mirrors_;
    double single_span_;
    double two_span_;
    std::vector<Sector> sectors_;
};

} // namespace astras

#endif // ASTRAS_SECTOR_HPP
