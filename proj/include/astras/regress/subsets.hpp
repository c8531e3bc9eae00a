#ifndef ASTRAS_REGRESS_SUBSETS_HPP
#define ASTRAS_REGRESS_SUBSETS_HPP

#include "astras/angles.hpp"
#include "astras/errors.hpp"
#include "astras/sector.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace astras {

struct RegressionSample {
    double shift = 0.0;
    /// 1 clockwise, 0 counter-clockwise.
    int direction = 1;
    double beta_ref = 0.0;
};

/// Sample indices per sector: every sample labelled with the sector, then the
/// `n_neighbors` samples of each adjacent sector closest (in beta) to the
/// shared boundary. Ties go to the lower index.
inline std::vector<std::vector<std::size_t>> sector_membership(const std::vector<double>& beta_deg,
                                                               const std::vector<int>& labels,
                                                               const SectorLayout& layout, int n_neighbors)
{
    if (beta_deg.size() != labels.size())
        throw InputError("sector_membership: one label per angle required");
    if (n_neighbors < 0)
        throw ConfigError("sector_membership: n_neighbors must be >= 0");
    const int n_sec = layout.size();
    std::vector<std::vector<std::size_t>> own(static_cast<std::size_t>(n_sec));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_sec)
            throw InputError("sector_membership: label out of range");
        own[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    auto closest = [&](int sector, double boundary) {
        std::vector<std::pair<double, std::size_t>> d;
        for (auto i : own[static_cast<std::size_t>(sector)])
            d.emplace_back(std::abs(angle_diff_deg(beta_deg[i], boundary)), i);
        const auto k = std::min<std::size_t>(d.size(), static_cast<std::size_t>(n_neighbors));
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < k; ++j)
            out.push_back(d[j].second);
        return out;
    };
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(n_sec));
    for (int s = 0; s < n_sec; ++s) {
        auto& m = out[static_cast<std::size_t>(s)];
        m = own[static_cast<std::size_t>(s)];
        if (n_neighbors == 0)
            continue;
        const Sector& sec = layout[s];
        for (auto i : closest(layout.prev(s), sec.start_deg))
            m.push_back(i);
        for (auto i : closest(layout.next(s), sec.end_deg()))
            m.push_back(i);
    }
    return out;
}

/// Regression subsets; `shift(sector, index)` measures sample `index` against
/// the reference of `sector` (neighbours are measured against the subset's
/// own reference, not their own).
template <class ShiftFn>
std::vector<std::vector<RegressionSample>> prep_sector_subsets(const std::vector<double>& beta_deg,
                                                               const std::vector<int>& direction,
                                                               const std::vector<int>& labels,
                                                               const SectorLayout& layout, int n_neighbors,
                                                               ShiftFn&& shift)
{
    if (direction.size() != beta_deg.size())
        throw InputError("prep_sector_subsets: one direction per angle required");
    const auto members = sector_membership(beta_deg, labels, layout, n_neighbors);
    std::vector<std::vector<RegressionSample>> out(members.size());
    for (std::size_t s = 0; s < members.size(); ++s)
        for (auto i : members[s])
            out[s].push_back({shift(static_cast<int>(s), i), direction[i], beta_deg[i]});
    return out;
}

/// sigma (population standard deviation) and peak-to-peak of errors.
struct ErrorStats {
    std::size_t n = 0;
    double mean = 0.0;
    double sigma = 0.0;
    double peak_to_peak = 0.0;
    double max_abs = 0.0;
};

inline ErrorStats error_stats(const std::vector<double>& e)
{
    ErrorStats s;
    s.n = e.size();
    if (e.empty())
        return s;
    double lo = e.front(), hi = e.front();
    for (double v : e) {
        s.mean += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        s.max_abs = std::max(s.max_abs, std::abs(v));
    }
    s.mean /= static_cast<double>(e.size());
    for (double v : e)
        s.sigma += (v - s.mean) * (v - s.mean);
    s.sigma = std::sqrt(s.sigma / static_cast<double>(e.size()));
    s.peak_to_peak = hi - lo;
    return s;
}

} // namespace astras

#endif // ASTRAS_REGRESS_SUBSETS_HPP
