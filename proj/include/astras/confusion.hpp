#ifndef ASTRAS_CONFUSION_HPP
#define ASTRAS_CONFUSION_HPP

#include "astras/errors.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace astras {

/// Square count matrix, row = true sector, column = predicted sector.
/// Adjacency is cyclic over the n sectors.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int n = 16) : n_(n), counts_(static_cast<std::size_t>(n) * n, 0)
    {
        if (n < 1)
            throw ConfigError("confusion matrix needs at least one class");
    }

    int size() const noexcept { return n_; }

    void add(int truth, int predicted, std::uint64_t count = 1)
    {
        check(truth);
        check(predicted);
        counts_[idx(truth, predicted)] += count;
    }

    std::uint64_t at(int truth, int predicted) const { return counts_[idx(truth, predicted)]; }

    std::uint64_t total() const noexcept
    {
        std::uint64_t s = 0;
        for (auto c : counts_)
            s += c;
        return s;
    }

    std::uint64_t trace() const noexcept
    {
        std::uint64_t s = 0;
        for (int i = 0; i < n_; ++i)
            s += counts_[idx(i, i)];
        return s;
    }

    bool adjacent(int a, int b) const noexcept
    {
        const int d = ((a - b) % n_ + n_) % n_;
        return d == 0 || d == 1 || d == n_ - 1;
    }

    std::uint64_t adjacent_correct() const noexcept
    {
        std::uint64_t s = 0;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (adjacent(i, j))
                    s += counts_[idx(i, j)];
        return s;
    }

    std::uint64_t non_adjacent_errors() const noexcept { return total() - adjacent_correct(); }

    double plain_accuracy() const noexcept
    {
        const auto t = total();
        return t ? static_cast<double>(trace()) / static_cast<double>(t) : 0.0;
    }

    /// Predictions of a neighbouring sector count as correct: its regressor
    /// still covers the angle.
    double adjacency_tolerant_accuracy() const noexcept
    {
        const auto t = total();
        return t ? static_cast<double>(adjacent_correct()) / static_cast<double>(t) : 0.0;
    }

    std::string to_csv() const
    {
        std::string s;
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                if (j)
                    s += ',';
                s += std::to_string(counts_[idx(i, j)]);
            }
            s += '\n';
        }
        return s;
    }

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t idx(int i, int j) const noexcept { return static_cast<std::size_t>(i) * n_ + j; }
    void check(int c) const
    {
        if (c < 0 || c >= n_)
            throw InputError("class index " + std::to_string(c) + " outside confusion matrix");
    }

    int n_;
    std::vector<std::uint64_t> counts_;
};

} // namespace astras

#endif // ASTRAS_CONFUSION_HPP
