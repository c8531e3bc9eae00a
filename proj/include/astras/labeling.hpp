#ifndef ASTRAS_LABELING_HPP
#define ASTRAS_LABELING_HPP

#include "astras/confusion.hpp"
#include "astras/features.hpp"
#include "astras/simkit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace astras {

/// Combined-intensity summary of one sample as used by both labellers.
struct IntensityProfile {
    double mean_intensity = 0.0;
    /// counts[l] = number of elements of I strictly above level_step * l.
    std::vector<int> counts_above;
};

inline constexpr double kThresholdLevelStep = 5.0;

inline IntensityProfile intensity_profile(const CompactIntensity& iv)
{
    const auto ci = combined_intensity(iv);
    const int n_levels = static_cast<int>(100.0 / kThresholdLevelStep) + 1;
    std::vector<int> bucket(static_cast<std::size_t>(n_levels) + 1, 0);
    for (double v : ci.values) {
        // v > step*l  <=>  l < v/step, so v lands in the first level it does not exceed.
        const int l = static_cast<int>(std::ceil(v / kThresholdLevelStep));
        bucket[static_cast<std::size_t>(std::clamp(l, 0, n_levels))]++;
    }
    IntensityProfile p;
    p.mean_intensity = ci.mean_intensity;
    p.counts_above.assign(static_cast<std::size_t>(n_levels), 0);
    int above = 0;
    for (int l = n_levels - 1; l >= 0; --l) {
        above += bucket[static_cast<std::size_t>(l) + 1];
        p.counts_above[static_cast<std::size_t>(l)] = above;
    }
    return p;
}

inline std::vector<IntensityProfile> intensity_profiles(const Dataset& ds)
{
    std::vector<IntensityProfile> out;
    out.reserve(ds.size());
    for (const auto& s : ds.samples)
        out.push_back(intensity_profile(s.intensity));
    return out;
}

inline int count_above(std::span<const double> I, double level)
{
    return static_cast<int>(std::count_if(I.begin(), I.end(), [&](double v) { return v > level; }));
}

/// A sample is two-shadow when more than `count_cut` elements of I exceed `level`.
struct ThresholdParams {
    double level = 50.0;
    int count_cut = 1350;
    bool operator==(const ThresholdParams&) const = default;
};

struct ThresholdLabels {
    std::vector<int> labels;
    std::vector<SectorKind> kinds;
    /// Indices whose count-based kind disagrees with the kind of the sector containing beta.
    std::vector<std::size_t> conflicts;
    ThresholdParams params;
};

inline ThresholdLabels threshold_label(const Dataset& ds, const ThresholdParams& params)
{
    const SectorLayout layout = ds.layout();
    ThresholdLabels out;
    out.params = params;
    out.labels.reserve(ds.size());
    out.kinds.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto ci = combined_intensity(ds.samples[i].intensity);
        const SectorKind kind
            = count_above(ci.values, params.level) > params.count_cut ? SectorKind::two_shadow : SectorKind::single_shadow;
        const int sector = layout.sector_of(ds.samples[i].beta_ref_deg);
        out.labels.push_back(sector);
        out.kinds.push_back(kind);
        if (kind != layout[sector].kind)
            out.conflicts.push_back(i);
    }
    return out;
}

struct ThresholdSelection {
    ThresholdParams params;
    std::size_t conflicts = 0;
    int margin = 0;
};

/// Sweeps the level in steps of 5 and, per level, the count cut; keeps the
/// fewest conflicts, then the widest gap between the two kinds' counts.
inline ThresholdSelection select_threshold(const Dataset& ds, const std::vector<IntensityProfile>& profiles)
{
    const SectorLayout layout = ds.layout();
    if (profiles.size() != ds.size() || ds.size() == 0)
        throw InputError("select_threshold: one profile per sample required");
    std::vector<char> two(ds.size());
    std::size_t n_two = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        two[i] = layout[layout.sector_of(ds.samples[i].beta_ref_deg)].kind == SectorKind::two_shadow;
        n_two += two[i];
    }
    ThresholdSelection best;
    best.conflicts = ds.size() + 1;
    const int n_levels = static_cast<int>(profiles.front().counts_above.size());
    std::vector<std::pair<int, char>> v(ds.size());
    for (int l = 1; l < n_levels - 1; ++l) {
        for (std::size_t i = 0; i < ds.size(); ++i)
            v[i] = {profiles[i].counts_above[static_cast<std::size_t>(l)], two[i]};
        std::sort(v.begin(), v.end());
        // Cut between groups of equal count: samples [0, q) predicted single.
        std::size_t two_below = 0, single_below = 0, p = 0;
        while (p < v.size()) {
            std::size_t q = p;
            for (; q < v.size() && v[q].first == v[p].first; ++q)
                (v[q].second ? two_below : single_below)++;
            if (q < v.size()) {
                const std::size_t conflicts = two_below + (ds.size() - n_two - single_below);
                const int margin = v[q].first - v[q - 1].first;
                if (conflicts < best.conflicts || (conflicts == best.conflicts && margin > best.margin)) {
                    best.conflicts = conflicts;
                    best.margin = margin;
                    best.params.level = kThresholdLevelStep * l;
                    best.params.count_cut = v[q - 1].first + margin / 2;
                }
            }
            p = q;
        }
    }
    if (best.conflicts > ds.size())
        throw FitError("select_threshold: counts do not vary");
    return best;
}

inline ThresholdSelection select_threshold(const Dataset& ds) { return select_threshold(ds, intensity_profiles(ds)); }

struct KMeansOptions {
    double tolerance = 1e-9;
    int max_iterations = 300;
    /// Cluster on (cos beta, sin beta, m) instead of (beta, m).
    bool circular = false;
};

struct KMeansResult {
    std::vector<int> assignment;
    Eigen::MatrixXd centroids;
    int iterations = 0;
    bool converged = false;
    /// Within-cluster sum of squares after each assignment step.
    std::vector<double> objective_history;
    /// (iteration, cluster) of every empty-cluster repair.
    std::vector<std::pair<int, int>> reseeds;
};

/// Lloyd's algorithm from fixed initial centroids. Points are processed in a
/// canonical (lexicographic) order so the result does not depend on input order.
inline KMeansResult kmeans(const Eigen::MatrixXd& points, const Eigen::MatrixXd& init, const KMeansOptions& opt = {})
{
    const Eigen::Index n = points.rows(), dim = points.cols(), k = init.rows();
    if (k < 1 || init.cols() != dim)
        throw ConfigError("kmeans: initial centroids do not match the point dimension");
    if (n < 1)
        throw InputError("kmeans: no points");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index d = 0; d < dim; ++d)
            if (points(a, d) != points(b, d))
                return points(a, d) < points(b, d);
        return false;
    });

    KMeansResult r;
    r.centroids = init;
    r.assignment.assign(static_cast<std::size_t>(n), 0);
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (int it = 1; it <= opt.max_iterations; ++it) {
        double wcss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double bd = (points.row(i) - r.centroids.row(0)).squaredNorm();
            for (Eigen::Index c = 1; c < k; ++c) {
                const double d = (points.row(i) - r.centroids.row(c)).squaredNorm();
                if (d < bd) {
                    bd = d;
                    best = static_cast<int>(c);
                }
            }
            r.assignment[static_cast<std::size_t>(i)] = best;
            dist[static_cast<std::size_t>(i)] = bd;
            wcss += bd;
        }
        r.objective_history.push_back(wcss);

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, dim);
        std::vector<Eigen::Index> count(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i : order) {
            const int c = r.assignment[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            count[static_cast<std::size_t>(c)]++;
        }
        Eigen::MatrixXd next = r.centroids;
        for (Eigen::Index c = 0; c < k; ++c) {
            if (count[static_cast<std::size_t>(c)] > 0) {
                next.row(c) = sums.row(c) / static_cast<double>(count[static_cast<std::size_t>(c)]);
                continue;
            }
            // Empty cluster: move it to the point farthest from its centroid.
            Eigen::Index far = order.front();
            for (Eigen::Index i : order)
                if (dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)])
                    far = i;
            next.row(c) = points.row(far);
            dist[static_cast<std::size_t>(far)] = 0.0;
            r.reseeds.emplace_back(it, static_cast<int>(c));
        }
        const double move = (next - r.centroids).rowwise().norm().maxCoeff();
        r.centroids = std::move(next);
        r.iterations = it;
        if (move < opt.tolerance) {
            r.converged = true;
            break;
        }
    }
    return r;
}

struct KMeansLabels {
    std::vector<int> labels;
    KMeansResult result;
    Eigen::MatrixXd initial_centroids;
};

/// Unsupervised sector labelling on standardised (beta, mean intensity).
/// Centroids start at the nominal sector centres; their intensity coordinate
/// is the mean over samples within 2.5 degrees of that centre.
inline KMeansLabels kmeans_label(const Dataset& ds, const std::vector<IntensityProfile>& profiles,
                                 const KMeansOptions& opt = {})
{
    const SectorLayout layout = ds.layout();
    const auto n = static_cast<Eigen::Index>(ds.size());
    if (n < 2 || profiles.size() != ds.size())
        throw InputError("kmeans_label: needs at least two samples with profiles");
    const Eigen::Index dim = opt.circular ? 3 : 2;
    Eigen::MatrixXd X(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double b = ds.samples[static_cast<std::size_t>(i)].beta_ref_deg;
        if (opt.circular) {
            X(i, 0) = std::cos(deg_to_rad(b));
            X(i, 1) = std::sin(deg_to_rad(b));
        } else {
            X(i, 0) = b;
        }
        X(i, dim - 1) = profiles[static_cast<std::size_t>(i)].mean_intensity;
    }
    const Eigen::RowVectorXd mu = X.colwise().mean();
    Eigen::RowVectorXd sd = ((X.rowwise() - mu).array().square().colwise().sum() / static_cast<double>(n - 1)).sqrt();
    for (Eigen::Index d = 0; d < dim; ++d)
        if (!(sd(d) > 0.0))
            sd(d) = 1.0;
    const Eigen::MatrixXd Z = (X.rowwise() - mu).array().rowwise() / sd.array();

    const int k = layout.size();
    Eigen::MatrixXd init(k, dim);
    for (int s = 0; s < k; ++s) {
        const double c = layout[s].center_deg();
        if (opt.circular) {
            init(s, 0) = (std::cos(deg_to_rad(c)) - mu(0)) / sd(0);
            init(s, 1) = (std::sin(deg_to_rad(c)) - mu(1)) / sd(1);
        } else {
            init(s, 0) = (c - mu(0)) / sd(0);
        }
        double acc = 0.0;
        int cnt = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(angle_diff_deg(ds.samples[static_cast<std::size_t>(i)].beta_ref_deg, c)) <= 2.5) {
                acc += Z(i, dim - 1);
                ++cnt;
            }
        init(s, dim - 1) = cnt ? acc / cnt : 0.0;
    }

    KMeansLabels out;
    out.initial_centroids = init;
    out.result = kmeans(Z, init, opt);
    // Cluster -> sector through the nearest initial centroid.
    std::vector<int> to_sector(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        Eigen::Index best = 0;
        (init.rowwise() - out.result.centroids.row(c)).rowwise().squaredNorm().minCoeff(&best);
        to_sector[static_cast<std::size_t>(c)] = static_cast<int>(best);
    }
    out.labels.reserve(ds.size());
    for (int a : out.result.assignment)
        out.labels.push_back(to_sector[static_cast<std::size_t>(a)]);
    return out;
}

inline KMeansLabels kmeans_label(const Dataset& ds, const KMeansOptions& opt = {})
{
    return kmeans_label(ds, intensity_profiles(ds), opt);
}

inline ConfusionMatrix agreement_matrix(const std::vector<int>& truth, const std::vector<int>& other, int n = 16)
{
    if (truth.size() != other.size())
        throw InputError("agreement_matrix: label vectors differ in length");
    ConfusionMatrix m(n);
    for (std::size_t i = 0; i < truth.size(); ++i)
        m.add(truth[i], other[i]);
    return m;
}

inline void apply_labels(Dataset& ds, const std::vector<int>& labels)
{
    if (labels.size() != ds.size())
        throw InputError("apply_labels: one label per sample required");
    for (std::size_t i = 0; i < ds.size(); ++i)
        ds.samples[i].label = labels[i];
}

/// Labels of a dataset, throwing when any sample is unlabelled.
inline std::vector<int> dataset_labels(const Dataset& ds)
{
    std::vector<int> out;
    out.reserve(ds.size());
    for (const auto& s : ds.samples) {
        if (!s.label)
            throw InputError("dataset is not labelled; run the label step first");
        out.push_back(*s.label);
    }
    return out;
}

} // namespace astras

#endif // ASTRAS_LABELING_HPP
