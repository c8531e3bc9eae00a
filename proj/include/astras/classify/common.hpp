#ifndef ASTRAS_CLASSIFY_COMMON_HPP
#define ASTRAS_CLASSIFY_COMMON_HPP

#include "astras/errors.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace astras {

struct Prediction {
    int sector = -1;
    /// Vote fraction, leaf purity or softmax maximum, depending on the model.
    double confidence = 0.0;
};

/// Per-feature z-score transform fitted on a training matrix.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const std::vector<std::vector<double>>& X)
    {
        if (X.empty())
            throw InputError("standardizer: empty training set");
        Standardizer s;
        const std::size_t d = X.front().size();
        s.mean.assign(d, 0.0);
        s.scale.assign(d, 0.0);
        for (const auto& x : X)
            for (std::size_t j = 0; j < d; ++j)
                s.mean[j] += x[j];
        for (double& m : s.mean)
            m /= static_cast<double>(X.size());
        for (const auto& x : X)
            for (std::size_t j = 0; j < d; ++j)
                s.scale[j] += (x[j] - s.mean[j]) * (x[j] - s.mean[j]);
        for (double& v : s.scale) {
            v = X.size() > 1 ? std::sqrt(v / static_cast<double>(X.size() - 1)) : 0.0;
            if (!(v > 1e-12))
                v = 1.0;
        }
        return s;
    }

    std::vector<double> apply(std::span<const double> x) const
    {
        if (x.size() != mean.size())
            throw InputError("standardizer: feature length mismatch");
        std::vector<double> out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j)
            out[j] = (x[j] - mean[j]) / scale[j];
        return out;
    }

    bool operator==(const Standardizer&) const = default;
};

inline void check_training_set(const std::vector<std::vector<double>>& X, const std::vector<int>& y, int n_classes)
{
    if (X.empty() || X.size() != y.size())
        throw InputError("training set needs one label per feature vector");
    const std::size_t d = X.front().size();
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (X[i].size() != d)
            throw InputError("feature vectors differ in length");
        for (double v : X[i])
            if (!std::isfinite(v))
                throw InputError("non-finite feature value in sample " + std::to_string(i));
        if (y[i] < 0 || y[i] >= n_classes)
            throw InputError("label out of range in sample " + std::to_string(i));
    }
}

} // namespace astras

#endif // ASTRAS_CLASSIFY_COMMON_HPP
