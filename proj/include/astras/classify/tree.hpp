#ifndef ASTRAS_CLASSIFY_TREE_HPP
#define ASTRAS_CLASSIFY_TREE_HPP

#include "astras/classify/common.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace astras {

struct TreeNode {
    /// -1 for a leaf.
    int feature = -1;
    /// Samples with x[feature] <= threshold go left. The threshold is always
    /// one of the training values of that feature (the lower median of all
    /// training values inside the gap between the node's two sides, or the
    /// largest left value when the gap is empty), so any strictly increasing
    /// rescaling of a feature leaves every decision unchanged.
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
    double confidence = 0.0;
    std::uint32_t n_samples = 0;
    double impurity = 0.0;
    /// Gini decrease of the split at this node: G(parent) - nL/n G(L) - nR/n G(R).
    double gain = 0.0;

    bool operator==(const TreeNode&) const = default;
};

struct TreeModel {
    int n_classes = 16;
    std::size_t dim = 0;
    int max_splits = 100;
    std::vector<TreeNode> nodes;

    int n_splits() const noexcept
    {
        return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& t) { return t.feature >= 0; }));
    }
    bool operator==(const TreeModel&) const = default;
};

inline double gini(const std::vector<std::uint32_t>& counts, std::uint32_t n)
{
    if (n == 0)
        return 0.0;
    double s = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / n;
        s += p * p;
    }
    return 1.0 - s;
}

namespace detail {

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double upper = 0.0;
    double gain = 0.0;
};

inline SplitCandidate best_split(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                                 const std::vector<std::size_t>& idx, int n_classes,
                                 const std::vector<std::vector<double>>& sorted_columns)
{
    SplitCandidate best;
    const auto n = static_cast<std::uint32_t>(idx.size());
    if (n < 2)
        return best;
    std::vector<std::uint32_t> total(static_cast<std::size_t>(n_classes), 0);
    for (auto i : idx)
        total[static_cast<std::size_t>(y[i])]++;
    const double g0 = gini(total, n);
    if (g0 <= 0.0)
        return best;
    std::vector<std::size_t> order(idx);
    std::vector<std::uint32_t> left(static_cast<std::size_t>(n_classes));
    const std::size_t dim = X[idx.front()].size();
    for (std::size_t f = 0; f < dim; ++f) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return X[a][f] < X[b][f]; });
        std::fill(left.begin(), left.end(), 0u);
        double sq_left = 0.0, sq_right = 0.0;
        for (auto c : total)
            sq_right += static_cast<double>(c) * c;
        for (std::uint32_t p = 0; p + 1 < n; ++p) {
            const auto c = static_cast<std::size_t>(y[order[p]]);
            // Running sums of squared class counts give Gini in O(1).
            sq_left += 2.0 * left[c] + 1.0;
            sq_right -= 2.0 * (total[c] - left[c]) - 1.0;
            left[c]++;
            const double v = X[order[p]][f], next = X[order[p + 1]][f];
            if (!(v < next))
                continue;
            const double nl = p + 1.0, nr = n - nl;
            const double gl = 1.0 - sq_left / (nl * nl), gr = 1.0 - sq_right / (nr * nr);
            const double gain = g0 - (nl / n) * gl - (nr / n) * gr;
            if (gain > best.gain + 1e-15) {
                best.feature = static_cast<int>(f);
                best.threshold = v;
                best.upper = next;
                best.gain = gain;
            }
        }
    }
    if (best.feature >= 0) {
        // Rank midpoint of the gap over the whole training set: keeps the
        // boundary away from the edge of either side without using distances.
        const auto& col = sorted_columns[static_cast<std::size_t>(best.feature)];
        const auto lo = std::upper_bound(col.begin(), col.end(), best.threshold);
        const auto hi = std::lower_bound(col.begin(), col.end(), best.upper);
        if (hi > lo)
            best.threshold = *(lo + (hi - lo - 1) / 2);
    }
    return best;
}

} // namespace detail

/// Greedy CART with Gini impurity, grown best-first (largest total impurity
/// decrease n * gain) until max_splits splits, purity, or single-sample leaves.
inline TreeModel train_tree(const std::vector<std::vector<double>>& X, const std::vector<int>& y, int max_splits = 100,
                            int n_classes = 16)
{
    check_training_set(X, y, n_classes);
    if (max_splits < 0)
        throw ConfigError("tree: max_splits must be >= 0");

    TreeModel m;
    m.n_classes = n_classes;
    m.dim = X.front().size();
    m.max_splits = max_splits;

    std::vector<std::vector<double>> sorted_columns(m.dim);
    for (std::size_t f = 0; f < m.dim; ++f) {
        auto& col = sorted_columns[f];
        col.reserve(X.size());
        for (const auto& x : X)
            col.push_back(x[f]);
        std::sort(col.begin(), col.end());
    }

    std::vector<std::vector<std::size_t>> members;
    std::vector<detail::SplitCandidate> cand;
    auto make_node = [&](std::vector<std::size_t> idx) {
        TreeNode t;
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(n_classes), 0);
        for (auto i : idx)
            counts[static_cast<std::size_t>(y[i])]++;
        t.n_samples = static_cast<std::uint32_t>(idx.size());
        t.label = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        t.confidence = static_cast<double>(counts[static_cast<std::size_t>(t.label)]) / t.n_samples;
        t.impurity = gini(counts, t.n_samples);
        m.nodes.push_back(t);
        cand.push_back(detail::best_split(X, y, idx, n_classes, sorted_columns));
        members.push_back(std::move(idx));
        return static_cast<int>(m.nodes.size()) - 1;
    };
    std::vector<std::size_t> all(X.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    make_node(std::move(all));

    // (priority, -node id): larger decrease first, older node on ties.
    std::priority_queue<std::pair<double, int>> open;
    auto push = [&](int id) {
        if (cand[static_cast<std::size_t>(id)].feature >= 0)
            open.emplace(cand[static_cast<std::size_t>(id)].gain * m.nodes[static_cast<std::size_t>(id)].n_samples, -id);
    };
    push(0);
    int splits = 0;
    while (splits < max_splits && !open.empty()) {
        const int id = -open.top().second;
        open.pop();
        const auto c = cand[static_cast<std::size_t>(id)];
        std::vector<std::size_t> l, r;
        for (auto i : members[static_cast<std::size_t>(id)])
            (X[i][static_cast<std::size_t>(c.feature)] <= c.threshold ? l : r).push_back(i);
        members[static_cast<std::size_t>(id)].clear();
        const int li = make_node(std::move(l));
        const int ri = make_node(std::move(r));
        TreeNode& t = m.nodes[static_cast<std::size_t>(id)];
        t.feature = c.feature;
        t.threshold = c.threshold;
        t.gain = c.gain;
        t.left = li;
        t.right = ri;
        ++splits;
        push(li);
        push(ri);
    }
    return m;
}

inline Prediction predict(const TreeModel& m, std::span<const double> q)
{
    if (q.size() != m.dim)
        throw InputError("tree: feature length mismatch");
    int id = 0;
    while (m.nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const TreeNode& t = m.nodes[static_cast<std::size_t>(id)];
        id = q[static_cast<std::size_t>(t.feature)] <= t.threshold ? t.left : t.right;
    }
    const TreeNode& leaf = m.nodes[static_cast<std::size_t>(id)];
    return {leaf.label, leaf.confidence};
}

} // namespace astras

#endif // ASTRAS_CLASSIFY_TREE_HPP
