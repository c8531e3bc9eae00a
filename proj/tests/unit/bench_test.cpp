#include "astras/bench.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace astras;
using namespace astras::bench;

namespace {

std::vector<int> true_labels(const Dataset& ds)
{
    std::vector<int> y;
    for (const auto& s : ds.samples)
        y.push_back(s.true_sector);
    return y;
}

void expect_range_invariant(const ErrorStats& s)
{
    EXPECT_LE(s.sigma, 0.5 * s.peak_to_peak + 1e-12);
}

} // namespace

// ---------------------------------------------------------------- splits

TEST(Split, QuarterOfTheDefaultSetIsHeldOut)
{
    const auto s = make_split(16786, SplitSpec{});
    EXPECT_EQ(s.test.size(), 4196u);
    EXPECT_EQ(s.train.size(), 12590u);
}

TEST(Split, HalvesAreDisjointAndCoverEverything)
{
    for (std::uint64_t seed : {0u, 1u, 99u}) {
        const auto s = make_split(1001, SplitSpec{SplitMode::holdout, 0.3, seed});
        std::vector<std::size_t> all(s.train);
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        ASSERT_EQ(all.size(), 1001u);
        for (std::size_t i = 0; i < all.size(); ++i)
            ASSERT_EQ(all[i], i);
        EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
        EXPECT_TRUE(std::is_sorted(s.test.begin(), s.test.end()));
    }
}

TEST(Split, SameSeedSameMembership)
{
    const auto a = make_split(5000, SplitSpec{SplitMode::direction_aware, 0.25, 7});
    const auto b = make_split(5000, SplitSpec{SplitMode::direction_aware, 0.25, 7});
    const auto c = make_split(5000, SplitSpec{SplitMode::direction_aware, 0.25, 8});
    EXPECT_EQ(a.test, b.test);
    EXPECT_EQ(a.train, b.train);
    EXPECT_NE(a.test, c.test);
}

TEST(Split, FractionOutsideOpenIntervalIsRejected)
{
    EXPECT_THROW(make_split(10, SplitSpec{SplitMode::holdout, 0.0, 0}), ConfigError);
    EXPECT_THROW(make_split(10, SplitSpec{SplitMode::holdout, 1.0, 0}), ConfigError);
}

TEST(Split, ClockwiseFilterKeepsOnlyClockwise)
{
    const auto ds = generate_dataset(800, EncoderGeometry{}, ImperfectionConfig{}, Schedule{}, 5);
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto cw = clockwise_only(ds, all);
    EXPECT_GT(cw.size(), 0u);
    EXPECT_LT(cw.size(), ds.size());
    for (auto i : cw)
        EXPECT_EQ(ds.samples[i].direction, Direction::clockwise);
}

TEST(Split, BetaHistogramOfDefaultSplitHasNoGaps)
{
    const auto ds = generate_dataset(16786, EncoderGeometry{}, ImperfectionConfig{}, Schedule{}, 1);
    const auto s = make_split(ds.size(), SplitSpec{});
    EXPECT_TRUE(beta_histogram_gaps(ds, s.train).empty());
    EXPECT_TRUE(beta_histogram_gaps(ds, s.test).empty());
}

TEST(Split, HistogramGapIsReported)
{
    const auto ds = generate_dataset(3000, EncoderGeometry{}, ImperfectionConfig{}, Schedule{}, 1);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (!(ds.samples[i].beta_ref_deg >= 10.0 && ds.samples[i].beta_ref_deg < 12.0))
            idx.push_back(i);
    const auto gaps = beta_histogram_gaps(ds, idx);
    EXPECT_EQ(gaps, (std::vector<int>{190, 191}));
}

// ---------------------------------------------------------------- timing helpers

TEST(Latency, QuantilesUseTheNearestRankRule)
{
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    std::shuffle(v.begin(), v.end(), std::mt19937_64(3));
    const auto s = latency_stats(v);
    EXPECT_EQ(s.runs, 100u);
    EXPECT_DOUBLE_EQ(s.mean_us, 50.5);
    EXPECT_DOUBLE_EQ(s.median_us, 50.0);
    EXPECT_DOUBLE_EQ(s.p95_us, 95.0);
    EXPECT_DOUBLE_EQ(s.min_us, 1.0);
}

TEST(Latency, EveryRunIsTimedAndInputsCycle)
{
    std::vector<int> seen;
    const auto s = measure_latency(7, 150, 5, [&](std::size_t i) {
        seen.push_back(static_cast<int>(i));
        return 0.0;
    });
    EXPECT_EQ(s.runs, 150u);
    ASSERT_EQ(seen.size(), 155u);
    EXPECT_EQ(*std::max_element(seen.begin(), seen.end()), 6);
    EXPECT_LE(s.min_us, s.median_us);
    EXPECT_LE(s.median_us, s.p95_us);
}

TEST(LineFit, RecoversAnExactLine)
{
    const auto f = least_squares_line({0, 1, 2, 4}, {14.5, 439.5, 864.5, 1714.5});
    EXPECT_NEAR(f.slope, 425.0, 1e-9);
    EXPECT_NEAR(f.intercept, 14.5, 1e-9);
    EXPECT_THROW(least_squares_line({1, 1}, {0, 1}), InputError);
    EXPECT_THROW(least_squares_line({1}, {0}), InputError);
}

TEST(ErrorReport, SigmaNeverExceedsHalfTheRange)
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(1, 200);
    std::cauchy_distribution<double> heavy(0.0, 5.0);
    std::bernoulli_distribution coin(0.5);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> e(static_cast<std::size_t>(len(rng)));
        for (auto& v : e)
            v = coin(rng) ? heavy(rng) : (coin(rng) ? 1.0 : -1.0);
        expect_range_invariant(error_stats(e));
    }
}

// ---------------------------------------------------------------- classification

class ClassificationBench : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        ds_ = new Dataset(generate_dataset(4000, EncoderGeometry{}, ImperfectionConfig{}, Schedule{}, 21));
    }
    static void TearDownTestSuite()
    {
        delete ds_;
        ds_ = nullptr;
    }
    static Dataset* ds_;
};
Dataset* ClassificationBench::ds_ = nullptr;

TEST_F(ClassificationBench, EveryAlgorithmAppearsOnceWithFullTolerantAccuracy)
{
    const auto split = make_split(ds_->size(), SplitSpec{});
    std::vector<ClassifierSpec> algos;
    for (auto k : {ClassifierKind::knn, ClassifierKind::tree, ClassifierKind::svm}) {
        ClassifierOptions o;
        o.kind = k;
        algos.push_back({to_string(k), o});
    }
    const auto rep = run_classification_benchmark(*ds_, true_labels(*ds_), algos, split, 200);
    ASSERT_EQ(rep.rows.size(), algos.size());
    EXPECT_EQ(rep.n_test, split.test.size());
    std::set<std::string> names;
    for (const auto& r : rep.rows) {
        names.insert(r.name);
        EXPECT_EQ(r.confusion.total(), split.test.size());
        EXPECT_EQ(r.n_features, static_cast<std::size_t>(default_histogram_bins(r.kind)));
        EXPECT_GE(r.latency.runs, 100u);
        EXPECT_GT(r.model_size_bytes, 0u);
        EXPECT_GE(r.adjacency_tolerant_accuracy, 0.999) << r.name;
        EXPECT_EQ(r.adjacency_tolerant_accuracy, r.confusion.adjacency_tolerant_accuracy());
    }
    EXPECT_EQ(names.size(), algos.size());
    const auto j = to_json(rep);
    EXPECT_EQ(j.at("disclaimer").get<std::string>(), kDisclaimer);
    EXPECT_EQ(j.at("classifiers").size(), algos.size());
}

TEST_F(ClassificationBench, KnnSizeGrowsWithTrainingSetAndTreeSizeIsBounded)
{
    const auto labels = true_labels(*ds_);
    auto size_for = [&](ClassifierKind k, std::size_t n) {
        std::vector<const CompactIntensity*> xs;
        std::vector<int> ys;
        for (std::size_t i = 0; i < n; ++i) {
            xs.push_back(&ds_->samples[i].intensity);
            ys.push_back(labels[i]);
        }
        ClassifierOptions o;
        o.kind = k;
        return serialized_size(train_classifier<float>(xs, ys, o));
    };
    const double knn1 = static_cast<double>(size_for(ClassifierKind::knn, 1000));
    const double knn3 = static_cast<double>(size_for(ClassifierKind::knn, 3000));
    EXPECT_NEAR(knn3 / knn1, 3.0, 0.05);
    // At most 100 splits: 201 nodes of 52 bytes plus a fixed header.
    const std::size_t tree_cap = 201 * 52 + 64;
    EXPECT_LE(size_for(ClassifierKind::tree, 1000), tree_cap);
    EXPECT_LE(size_for(ClassifierKind::tree, 3000), tree_cap);
}

// ---------------------------------------------------------------- regression

class RegressionBench : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        ds_ = new Dataset(generate_dataset(6000, EncoderGeometry{}, ImperfectionConfig{}, Schedule{}, 8));
        ctx_ = new RegressionContext(
            prepare_regression(*ds_, true_labels(*ds_), make_split(ds_->size(), {SplitMode::direction_aware, 0.25, 4})));
    }
    static void TearDownTestSuite()
    {
        delete ctx_;
        delete ds_;
        ctx_ = nullptr;
        ds_ = nullptr;
    }
    static RegressorSpec spec(const std::string& name, RegressorKind k, bool dir = false)
    {
        RegressorOptions o;
        o.kind = k;
        o.use_direction = dir;
        o.ffnn.max_epochs = 300;
        o.ffnn.restarts = 2;
        return {name, o, false};
    }
    static Dataset* ds_;
    static RegressionContext* ctx_;
};
Dataset* RegressionBench::ds_ = nullptr;
RegressionContext* RegressionBench::ctx_ = nullptr;

TEST_F(RegressionBench, DirectionAwareSplitTrainsModelAndPolyClockwiseOnly)
{
    const auto rep = run_regression_benchmark(*ctx_,
                                              {spec("model", RegressorKind::model_function),
                                               spec("poly", RegressorKind::polynomial),
                                               spec("ffnn", RegressorKind::ffnn, true)},
                                              200);
    ASSERT_EQ(rep.algorithms.size(), 3u);
    EXPECT_TRUE(rep.at("model").clockwise_only);
    EXPECT_TRUE(rep.at("poly").clockwise_only);
    EXPECT_FALSE(rep.at("ffnn").clockwise_only);
    EXPECT_TRUE(rep.at("ffnn").use_direction);
    EXPECT_THROW(rep.at("gp"), InputError);

    // Clockwise-only training meets backlash on counter-clockwise samples.
    const auto& poly = rep.at("poly");
    EXPECT_GE(poly.ccw.sigma, 3.0 * poly.cw.sigma);
    EXPECT_GT(rep.at("model").primary().sigma, poly.primary().sigma);

    for (const auto& a : rep.algorithms) {
        ASSERT_EQ(a.error_arcsec.size(), rep.test.size());
        EXPECT_EQ(a.cw.n + a.ccw.n, rep.test.size());
        for (const auto* s : {&a.cw, &a.ccw, &a.all})
            expect_range_invariant(*s);
        std::size_t per = 0;
        for (const auto& s : a.per_sector) {
            per += s.n;
            expect_range_invariant(s);
        }
        EXPECT_EQ(per, a.primary().n);

        const auto curve = binned_error_curve(rep, a, 1.0);
        std::size_t binned = 0;
        for (const auto& p : curve) {
            binned += p.n;
            EXPECT_LE(p.min, p.mean);
            EXPECT_LE(p.mean, p.max);
        }
        EXPECT_EQ(binned, a.primary().n);

        const auto trace = time_ordered_trace(rep, a);
        ASSERT_EQ(trace.size(), rep.test.size());
        EXPECT_TRUE(std::is_sorted(trace.begin(), trace.end()));
    }
    const auto j = to_json(rep);
    EXPECT_EQ(j.at("disclaimer").get<std::string>(), kDisclaimer);
    EXPECT_EQ(j.at("regressors").size(), 3u);
}

TEST_F(RegressionBench, PolynomialPredictsFasterThanFfnnAndGp)
{
    const auto rep = run_regression_benchmark(
        *ctx_, {spec("poly", RegressorKind::polynomial), spec("ffnn", RegressorKind::ffnn), spec("gp", RegressorKind::gp)},
        2000);
    EXPECT_LT(rep.at("poly").latency.median_us, rep.at("ffnn").latency.median_us);
    EXPECT_LT(rep.at("poly").latency.median_us, rep.at("gp").latency.median_us);
}

TEST_F(RegressionBench, HoldoutModeTrainsEverythingOnBothDirections)
{
    RegressionContext c = *ctx_;
    c.split.mode = SplitMode::holdout;
    const auto a = run_regressor(c, spec("poly", RegressorKind::polynomial), 100);
    EXPECT_FALSE(a.clockwise_only);
    EXPECT_EQ(a.primary().n, c.test.size());
}

TEST(RegressionBenchIdeal, EveryAlgorithmIsWithinTwiceTheReferenceQuantization)
{
    auto imp = ImperfectionConfig::ideal();
    imp.cal_standard_resolution_arcsec = 0.21;
    const auto ds = generate_dataset(6000, EncoderGeometry{}, imp, Schedule{}, 3);
    std::vector<RegressorSpec> algos;
    for (auto k : {RegressorKind::model_function, RegressorKind::polynomial, RegressorKind::ffnn, RegressorKind::gp}) {
        RegressorOptions o;
        o.kind = k;
        algos.push_back({to_string(k), o, false});
    }
    const auto rep = run_regression_benchmark(ds, true_labels(ds), algos, make_split(ds.size(), SplitSpec{}), 100);
    for (const auto& a : rep.algorithms)
        EXPECT_LT(a.all.sigma, 2.0 * imp.cal_standard_resolution_arcsec) << a.name;
}

// ---------------------------------------------------------------- eccentricity

TEST(Eccentricity, DefaultSetSizes)
{
    const EccentricityOptions o;
    EXPECT_EQ(o.n_train, 9877u);
    EXPECT_EQ(o.n_holdout, 1090u);
    EXPECT_EQ(o.test_sizes, (std::vector<std::size_t>{448, 446, 447}));
    EXPECT_EQ(o.test_eccentricities_mm, (std::vector<double>{1.0, 2.0, 4.0}));
}

TEST(Eccentricity, PeakToPeakGrowsAtTheConfiguredRate)
{
    EccentricityOptions o;
    o.n_train = 4000;
    o.n_holdout = 500;
    o.test_sizes = {300, 300, 300};
    const auto rep = run_eccentricity_test(EncoderGeometry{}, ImperfectionConfig{}, o);
    ASSERT_EQ(rep.rows.size(), 4u);
    EXPECT_EQ(rep.rows[0].n, 500u);
    EXPECT_EQ(rep.rows[0].eccentricity_mm, 0.0);
    EXPECT_EQ(rep.rows[3].eccentricity_mm, 4.0);
    EXPECT_TRUE(rep.p2p_strictly_increasing);
    EXPECT_DOUBLE_EQ(rep.configured_slope_arcsec_per_mm, 425.0);
    EXPECT_NEAR(rep.slope_arcsec_per_mm, 425.0, 0.25 * 425.0);
    for (const auto& r : rep.rows) {
        EXPECT_GE(r.adjacency_tolerant_accuracy, 0.99) << r.name;
        expect_range_invariant(r.regression);
        expect_range_invariant(r.pipeline);
    }
    EXPECT_EQ(to_json(rep).at("sets").size(), 4u);
}

TEST(Eccentricity, MismatchedSizeListIsRejected)
{
    EccentricityOptions o;
    o.test_sizes = {10};
    EXPECT_THROW(run_eccentricity_test(EncoderGeometry{}, ImperfectionConfig{}, o), ConfigError);
}

// ---------------------------------------------------------------- timing report

TEST(TimingReport, EveryStageTimedAtLeastOneHundredTimes)
{
    const auto ds = generate_dataset(3000, EncoderGeometry{}, ImperfectionConfig{}, Schedule{}, 12);
    const auto split = make_split(ds.size(), SplitSpec{});
    const auto m = calibrate(ds, split.train, true_labels(ds), CalibrationOptions{});
    const auto rows = timing_and_size_report(m, ds, split.test, 10);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].name, "classifier:knn");
    EXPECT_EQ(rows[2].name, "regressor:poly");
    EXPECT_EQ(rows[3].name, "full_inference");
    for (const auto& r : rows) {
        EXPECT_GE(r.latency.runs, 100u);
        EXPECT_GT(r.size_bytes, 0u);
    }
    EXPECT_EQ(rows[3].size_bytes, serialized_size(m));
    // Warm-up sanity on the heaviest stage.
    EXPECT_LE(rows[3].latency.p95_us, 3.0 * rows[3].latency.median_us);
    EXPECT_THROW(timing_and_size_report(m, ds, std::vector<std::size_t>{}), InputError);
}
