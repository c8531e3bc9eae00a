#ifndef ASTRAS_CLASSIFY_KNN_HPP
#define ASTRAS_CLASSIFY_KNN_HPP

#include "astras/classify/common.hpp"

#include <algorithm>
#include <numeric>

namespace astras {

/// Memorised training set; Euclidean majority vote of the k nearest.
struct KnnModel {
    int k = 1;
    int n_classes = 16;
    std::size_t dim = 0;
    std::vector<double> x;  // row-major n x dim
    std::vector<int> y;

    std::size_t size() const noexcept { return y.size(); }
    bool operator==(const KnnModel&) const = default;
};

inline KnnModel train_knn(const std::vector<std::vector<double>>& X, const std::vector<int>& y, int k,
                          int n_classes = 16)
{
    check_training_set(X, y, n_classes);
    if (k < 1 || static_cast<std::size_t>(k) > X.size())
        throw ConfigError("kNN: k must be in [1, training size]");
    KnnModel m;
    m.k = k;
    m.n_classes = n_classes;
    m.dim = X.front().size();
    m.x.reserve(X.size() * m.dim);
    for (const auto& r : X)
        m.x.insert(m.x.end(), r.begin(), r.end());
    m.y = y;
    return m;
}

/// Ties in the vote go to the class with the smaller mean distance among its
/// voters, then to the lower class index. Equal distances rank by training index.
inline Prediction predict(const KnnModel& m, std::span<const double> q)
{
    if (q.size() != m.dim)
        throw InputError("kNN: feature length mismatch");
    const std::size_t n = m.size();
    std::vector<std::pair<double, std::size_t>> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = m.x.data() + i * m.dim;
        double s = 0.0;
        for (std::size_t j = 0; j < m.dim; ++j)
            s += (q[j] - xi[j]) * (q[j] - xi[j]);
        d[i] = {s, i};
    }
    const auto k = static_cast<std::size_t>(m.k);
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::vector<int> votes(static_cast<std::size_t>(m.n_classes), 0);
    std::vector<double> dist_sum(static_cast<std::size_t>(m.n_classes), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const int c = m.y[d[i].second];
        votes[static_cast<std::size_t>(c)]++;
        dist_sum[static_cast<std::size_t>(c)] += std::sqrt(d[i].first);
    }
    int best = -1;
    for (int c = 0; c < m.n_classes; ++c) {
        const auto uc = static_cast<std::size_t>(c);
        if (votes[uc] == 0)
            continue;
        if (best < 0) {
            best = c;
            continue;
        }
        const auto ub = static_cast<std::size_t>(best);
        if (votes[uc] > votes[ub]
            || (votes[uc] == votes[ub] && dist_sum[uc] / votes[uc] < dist_sum[ub] / votes[ub]))
            best = c;
    }
    return {best, static_cast<double>(votes[static_cast<std::size_t>(best)]) / static_cast<double>(k)};
}

} // namespace astras

#endif // ASTRAS_CLASSIFY_KNN_HPP
