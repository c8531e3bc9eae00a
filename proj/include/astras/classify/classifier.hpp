#ifndef ASTRAS_CLASSIFY_CLASSIFIER_HPP
#define ASTRAS_CLASSIFY_CLASSIFIER_HPP

#include "astras/classify/cnn.hpp"
#include "astras/classify/knn.hpp"
#include "astras/classify/svm.hpp"
#include "astras/classify/tree.hpp"
#include "astras/features.hpp"

#include <string>
#include <variant>

namespace astras {

enum class ClassifierKind { knn, tree, svm, cnn };

inline std::string to_string(ClassifierKind k)
{
    switch (k) {
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::tree: return "tree";
    case ClassifierKind::svm: return "svm";
    case ClassifierKind::cnn: return "cnn";
    }
    return "?";
}

inline ClassifierKind classifier_kind_from_string(const std::string& s)
{
    if (s == "knn")
        return ClassifierKind::knn;
    if (s == "tree")
        return ClassifierKind::tree;
    if (s == "svm")
        return ClassifierKind::svm;
    if (s == "cnn")
        return ClassifierKind::cnn;
    throw ConfigError("unknown classifier '" + s + "'");
}

/// Smallest histogram sizes that still classify perfectly, per algorithm.
inline int default_histogram_bins(ClassifierKind k)
{
    switch (k) {
    case ClassifierKind::knn: return 10;
    case ClassifierKind::tree: return 23;
    case ClassifierKind::svm: return 15;
    case ClassifierKind::cnn: return 0;
    }
    return 0;
}

struct ClassifierOptions {
    ClassifierKind kind = ClassifierKind::knn;
    /// 0 selects the per-algorithm default.
    int n_bins = 0;
    int knn_k = 1;
    int tree_max_splits = 100;
    double svm_C = 1.0;
    CnnSpec cnn_spec;
    CnnTrainOptions cnn_train;
};

/// A trained sector classifier together with the feature it consumes:
/// hue histograms for kNN / tree / SVM, colour intensity vectors for the CNN.
struct Classifier {
    std::variant<KnnModel, TreeModel, SvmModel, CnnModel> model;
    int n_bins = 0;

    ClassifierKind kind() const noexcept { return static_cast<ClassifierKind>(model.index()); }

    template <class T>
    std::vector<double> histogram_features(const BasicIntensityVectors<T>& iv) const
    {
        return hue_histogram(iv, n_bins).counts;
    }

    template <class T>
    Prediction predict(const BasicIntensityVectors<T>& iv) const
    {
        if (const auto* c = std::get_if<CnnModel>(&model))
            return astras::predict(*c, iv);
        const auto h = histogram_features(iv);
        return std::visit(
            [&](const auto& m) -> Prediction {
                if constexpr (std::is_same_v<std::decay_t<decltype(m)>, CnnModel>)
                    return {};
                else
                    return astras::predict(m, std::span<const double>(h));
            },
            model);
    }

    bool operator==(const Classifier&) const = default;
};

template <class T>
Classifier train_classifier(std::span<const BasicIntensityVectors<T>* const> data, std::span<const int> labels,
                            const ClassifierOptions& opt)
{
    Classifier c;
    if (opt.kind == ClassifierKind::cnn) {
        c.model = train_cnn<T>(data, labels, opt.cnn_spec, opt.cnn_train);
        return c;
    }
    c.n_bins = opt.n_bins > 0 ? opt.n_bins : default_histogram_bins(opt.kind);
    std::vector<std::vector<double>> X;
    X.reserve(data.size());
    for (const auto* iv : data)
        X.push_back(hue_histogram(*iv, c.n_bins).counts);
    const std::vector<int> y(labels.begin(), labels.end());
    switch (opt.kind) {
    case ClassifierKind::knn: c.model = train_knn(X, y, opt.knn_k); break;
    case ClassifierKind::tree: c.model = train_tree(X, y, opt.tree_max_splits); break;
    case ClassifierKind::svm: c.model = train_svm(X, y, opt.svm_C); break;
    case ClassifierKind::cnn: break;
    }
    return c;
}

} // namespace astras

#endif // ASTRAS_CLASSIFY_CLASSIFIER_HPP
