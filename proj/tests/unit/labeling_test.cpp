#include "astras/labeling.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace astras;

namespace {

const Dataset& small_set()
{
    static const Dataset ds = generate_dataset(3000, EncoderGeometry{}, ImperfectionConfig{}, Schedule{}, 11);
    return ds;
}

} // namespace

TEST(KMeans, PointsAtInitialCentroidsConvergeImmediately)
{
    Eigen::MatrixXd init(16, 2);
    for (int i = 0; i < 16; ++i) {
        init(i, 0) = -1.6 + 0.2 * i;
        init(i, 1) = (i % 2) ? 1.0 : -1.0;
    }
    const auto r = kmeans(init, init);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 1);
    for (int i = 0; i < 16; ++i)
        EXPECT_EQ(r.assignment[static_cast<std::size_t>(i)], i);
}

TEST(KMeans, ObjectiveNeverIncreases)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd X(500, 2), init(6, 2);
    for (int i = 0; i < 500; ++i) {
        X(i, 0) = g(rng) + (i % 3) * 2.0;
        X(i, 1) = g(rng);
    }
    for (int c = 0; c < 6; ++c)
        init.row(c) = X.row(c);
    const auto r = kmeans(X, init);
    for (std::size_t i = 1; i < r.objective_history.size(); ++i)
        EXPECT_LE(r.objective_history[i], r.objective_history[i - 1] + 1e-9);
}

TEST(KMeans, EmptyClusterIsReseeded)
{
    Eigen::MatrixXd X(4, 1), init(3, 1);
    X << 0.0, 0.1, 5.0, 5.2;
    init << 0.0, 5.0, 100.0;
    const auto r = kmeans(X, init);
    ASSERT_FALSE(r.reseeds.empty());
    EXPECT_EQ(r.reseeds.front().second, 2);
}

TEST(Threshold, KindsFollowTheShadowCount)
{
    const auto& ds = small_set();
    const auto sel = select_threshold(ds);
    EXPECT_EQ(sel.conflicts, 0u);
    const auto t = threshold_label(ds, sel.params);
    EXPECT_TRUE(t.conflicts.empty());
    const SectorLayout L;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_EQ(t.labels[i], ds.samples[i].true_sector);
        EXPECT_EQ(t.kinds[i], L[ds.samples[i].true_sector].kind);
    }
}

TEST(Threshold, BadParametersProduceConflicts)
{
    const auto& ds = small_set();
    const auto t = threshold_label(ds, ThresholdParams{.level = 50.0, .count_cut = 0});
    EXPECT_FALSE(t.conflicts.empty());
    for (std::size_t i : t.conflicts)
        EXPECT_EQ(SectorLayout{}[t.labels[i]].kind, SectorKind::single_shadow);
}

TEST(KMeansLabel, AgreesWithThresholdLabeller)
{
    const auto& ds = small_set();
    const auto profiles = intensity_profiles(ds);
    const auto t = threshold_label(ds, select_threshold(ds, profiles).params);
    const auto k = kmeans_label(ds, profiles);
    const auto m = agreement_matrix(t.labels, k.labels);
    EXPECT_EQ(m.trace(), ds.size());
    EXPECT_TRUE(k.result.converged);
    KMeansOptions circ;
    circ.circular = true;
    EXPECT_EQ(kmeans_label(ds, profiles, circ).labels, t.labels);
}

TEST(KMeansLabel, InvariantToSampleOrder)
{
    const auto& ds = small_set();
    Dataset shuffled = ds;
    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(5);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i)
        shuffled.samples[i] = ds.samples[perm[i]];
    const auto a = kmeans_label(ds);
    const auto b = kmeans_label(shuffled);
    for (std::size_t i = 0; i < perm.size(); ++i)
        EXPECT_EQ(b.labels[i], a.labels[perm[i]]);
    EXPECT_EQ(a.result.iterations, b.result.iterations);
}

TEST(Confusion, WorkedAccuracyExamples)
{
    ConfusionMatrix m;
    for (int i = 0; i < 1000; ++i)
        m.add(i % 16, i % 16);
    EXPECT_DOUBLE_EQ(m.plain_accuracy(), 1.0);
    EXPECT_DOUBLE_EQ(m.adjacency_tolerant_accuracy(), 1.0);
    ConfusionMatrix one;
    for (int i = 0; i < 999; ++i)
        one.add(i % 16, i % 16);
    one.add(4, 5);
    EXPECT_DOUBLE_EQ(one.plain_accuracy(), 0.999);
    EXPECT_DOUBLE_EQ(one.adjacency_tolerant_accuracy(), 1.0);
    EXPECT_GE(one.adjacency_tolerant_accuracy(), one.plain_accuracy());
    EXPECT_THROW(one.add(16, 0), InputError);
}
