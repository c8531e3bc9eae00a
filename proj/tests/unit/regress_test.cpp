#include "astras/pipeline.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

using namespace astras;

namespace {

std::vector<RegressionSample> arctan_data(double beta_s, double d, int n, double lo, double hi, double noise_deg = 0.0,
                                          std::uint64_t seed = 1)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<RegressionSample> out;
    for (int i = 0; i < n; ++i) {
        const double s = lo + (hi - lo) * i / (n - 1);
        out.push_back({s, i % 2, wrap_deg(beta_s + rad_to_deg(std::atan(s / d)) + noise_deg * g(rng))});
    }
    return out;
}

double rmse(const std::vector<RegressionSample>& d, auto&& predict)
{
    double s = 0.0;
    for (const auto& r : d) {
        const double e = angle_diff_deg(predict(r), r.beta_ref);
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(d.size()));
}

// ---------------------------------------------------------------- subsets

struct Labelled {
    std::vector<double> beta;
    std::vector<int> label;
};

Labelled random_labelled(const SectorLayout& layout, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-180.0, 180.0);
    Labelled L;
    for (int i = 0; i < n; ++i) {
        const double b = u(rng);
        L.beta.push_back(b);
        L.label.push_back(layout.sector_of(b));
    }
    return L;
}

TEST(Subsets, NoNeighborsIsAnExactPartition)
{
    const SectorLayout layout(8, 35.0, 10.0);
    const auto L = random_labelled(layout, 3000, 3);
    const auto m = sector_membership(L.beta, L.label, layout, 0);
    std::vector<int> seen(L.beta.size(), 0);
    for (int s = 0; s < layout.size(); ++s)
        for (auto i : m[static_cast<std::size_t>(s)]) {
            EXPECT_EQ(L.label[i], s);
            ++seen[i];
        }
    for (int c : seen)
        EXPECT_EQ(c, 1);
}

TEST(Subsets, EightNeighborsMatchAnIndependentRecount)
{
    const SectorLayout layout(8, 35.0, 10.0);
    const auto L = random_labelled(layout, 3000, 4);
    const auto m = sector_membership(L.beta, L.label, layout, 8);
    for (int s = 0; s < layout.size(); ++s) {
        const int prev = (s + layout.size() - 1) % layout.size();
        const int next = (s + 1) % layout.size();
        // boundary of s shared with prev is its start; with next, its end
        auto nearest = [&](int from, double boundary) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < L.beta.size(); ++i)
                if (L.label[i] == from)
                    idx.push_back(i);
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                double da = std::fmod(std::abs(L.beta[a] - boundary), 360.0);
                double db = std::fmod(std::abs(L.beta[b] - boundary), 360.0);
                da = std::min(da, 360.0 - da);
                db = std::min(db, 360.0 - db);
                return da < db;
            });
            idx.resize(8);
            return idx;
        };
        std::vector<std::size_t> expect;
        for (std::size_t i = 0; i < L.beta.size(); ++i)
            if (L.label[i] == s)
                expect.push_back(i);
        const std::size_t own = expect.size();
        for (auto i : nearest(prev, layout[s].start_deg))
            expect.push_back(i);
        for (auto i : nearest(next, layout[s].end_deg()))
            expect.push_back(i);
        auto got = m[static_cast<std::size_t>(s)];
        EXPECT_EQ(got.size(), own + 16) << "sector " << s;
        std::sort(got.begin(), got.end());
        std::sort(expect.begin(), expect.end());
        EXPECT_EQ(got, expect) << "sector " << s;
    }
}

TEST(Subsets, SampleNextToABoundaryIsInExactlyTwoSubsets)
{
    const SectorLayout layout(8, 35.0, 10.0);
    auto L = random_labelled(layout, 3000, 5);
    L.beta.push_back(layout[3].start_deg + 1e-4);
    L.label.push_back(3);
    const auto m = sector_membership(L.beta, L.label, layout, 8);
    const std::size_t probe = L.beta.size() - 1;
    std::vector<int> in;
    for (int s = 0; s < layout.size(); ++s)
        for (auto i : m[static_cast<std::size_t>(s)])
            if (i == probe)
                in.push_back(s);
    EXPECT_EQ(in, (std::vector<int>{2, 3}));
}

TEST(Subsets, NeighboursAreMeasuredAgainstTheSubsetSector)
{
    const SectorLayout layout(8, 35.0, 10.0);
    const auto L = random_labelled(layout, 2000, 6);
    std::vector<int> dir(L.beta.size(), 1);
    const auto sub = prep_sector_subsets(L.beta, dir, L.label, layout, 4,
                                         [](int sector, std::size_t i) { return 1e6 * sector + static_cast<double>(i); });
    for (int s = 0; s < layout.size(); ++s)
        for (const auto& r : sub[static_cast<std::size_t>(s)]) {
            const int measured_in = static_cast<int>(std::floor(r.shift / 1e6));
            EXPECT_EQ(measured_in, s);
        }
}

TEST(Subsets, BadInputIsRejected)
{
    const SectorLayout layout(8, 35.0, 10.0);
    EXPECT_THROW(sector_membership({0.0}, {16}, layout, 0), InputError);
    EXPECT_THROW(sector_membership({0.0}, {1}, layout, -1), ConfigError);
    EXPECT_THROW(sector_membership({0.0, 1.0}, {1}, layout, 0), InputError);
}

TEST(ErrorStats, SigmaIsPopulationStdAndPeakToPeakIsRange)
{
    const auto e = error_stats({1.0, 2.0, 3.0, 6.0});
    EXPECT_DOUBLE_EQ(e.mean, 3.0);
    EXPECT_DOUBLE_EQ(e.sigma, std::sqrt((4.0 + 1.0 + 0.0 + 9.0) / 4.0));
    EXPECT_DOUBLE_EQ(e.peak_to_peak, 5.0);
    EXPECT_DOUBLE_EQ(e.max_abs, 6.0);
}

// ---------------------------------------------------------- levenberg-marquardt

TEST(Levenberg, SolvesRosenbrock)
{
    auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        r.resize(2);
        r << 10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0);
        if (J) {
            J->resize(2, 2);
            *J << -20.0 * x(0), 10.0, -1.0, 0.0;
        }
    };
    const auto res = levenberg_marquardt(f, Eigen::Vector2d(-1.2, 1.0));
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(res.x(0), 1.0, 1e-8);
    EXPECT_NEAR(res.x(1), 1.0, 1e-8);
}

// ---------------------------------------------------------------- model function

TEST(ModelFunction, RecoversGeneratingParameters)
{
    const double beta_s = -162.2, d = 688.0;
    const auto data = arctan_data(beta_s, d, 400, -220.0, 210.0);
    const auto mf = fit_model_function(data, -162.5, 687.5);
    EXPECT_TRUE(mf.identifiable);
    EXPECT_NEAR(mf.beta_s_deg, beta_s, 1e-6 * std::abs(beta_s));
    EXPECT_NEAR(mf.d_s_px_per_rad, d, 1e-6 * d);
}

TEST(ModelFunction, FarStartStillConverges)
{
    const auto data = arctan_data(10.3, 688.0, 200, -200.0, 200.0);
    const auto mf = fit_model_function(data, 10.0, 150.0);
    EXPECT_NEAR(mf.d_s_px_per_rad, 688.0, 1e-6 * 688.0);
}

TEST(ModelFunction, SectorAcrossTheWrapFitsLikeAnyOther)
{
    const auto data = arctan_data(179.0, 688.0, 200, -200.0, 200.0);
    const auto mf = fit_model_function(data, 178.5, 687.5);
    EXPECT_NEAR(angle_diff_deg(mf.beta_s_deg, 179.0), 0.0, 1e-9);
    EXPECT_NEAR(mf.d_s_px_per_rad, 688.0, 1e-6 * 688.0);
    EXPECT_LT(mf.predict(150.0), 0.0);  // wrapped past 180
}

TEST(ModelFunction, AllZeroShiftsAreFlaggedUnidentifiable)
{
    std::vector<RegressionSample> data{{0.0, 1, 10.0}, {0.0, 1, 10.2}, {0.0, 0, 10.4}};
    const auto mf = fit_model_function(data, 9.0, 687.5);
    EXPECT_FALSE(mf.identifiable);
    EXPECT_NEAR(mf.beta_s_deg, 10.2, 1e-12);
}

TEST(ModelFunction, PredictionIsStrictlyMonotoneInShift)
{
    const auto mf = fit_model_function(arctan_data(40.0, 700.0, 100, -250.0, 250.0, 0.01), 40.0, 687.5);
    double prev = -HUGE_VAL;
    for (double s = -300.0; s <= 300.0; s += 0.5) {
        const double b = mf.predict(s);
        EXPECT_GT(b, prev);
        prev = b;
    }
}

TEST(ModelFunction, FewerThanThreeSamplesIsInsufficient)
{
    EXPECT_THROW(fit_model_function({{1.0, 1, 0.0}, {2.0, 1, 0.1}}, 0.0, 687.5, 4), InsufficientDataError);
}

TEST(ModelFunction, OffCentreReferenceIsExactWhenItsAngleIsKnown)
{
    // Shifts measured against a pattern taken at beta_r, not at beta_s.
    const double beta_s = 30.0, beta_r = 30.04, d = 687.5;
    std::vector<RegressionSample> data;
    for (int i = 0; i < 300; ++i) {
        const double b = beta_s - 17.0 + 34.0 * i / 299.0;
        const double shift = d * (std::tan(deg_to_rad(b - beta_s)) - std::tan(deg_to_rad(beta_r - beta_s)));
        data.push_back({shift, 1, b});
    }
    const auto with = fit_model_function(data, 30.0, 687.5, 0, beta_r);
    const auto without = fit_model_function(data, 30.0, 687.5, 0);
    EXPECT_TRUE(with.has_reference);
    EXPECT_FALSE(without.has_reference);
    EXPECT_NEAR(with.beta_s_deg, beta_s, 1e-8);
    EXPECT_NEAR(with.d_s_px_per_rad, d, 1e-6);
    EXPECT_NEAR(with.predict(0.0), beta_r, 1e-9);
    const double r_with = rmse(data, [&](const RegressionSample& r) { return with.predict(r.shift); });
    const double r_without = rmse(data, [&](const RegressionSample& r) { return without.predict(r.shift); });
    EXPECT_LT(r_with, 1e-9);
    EXPECT_GT(r_without, 100.0 * r_with + 1e-6);
}

// ---------------------------------------------------------------- polynomial

TEST(Polynomial, DegreeOneRecoversLinearData)
{
    const double a = 0.0831, b = -3.25;
    std::vector<RegressionSample> data;
    for (int i = 0; i < 50; ++i) {
        const double s = -120.0 + 5.3 * i;
        data.push_back({s, 1, a * s + b});
    }
    const auto p = fit_polynomial(data, 1, -2.0);
    for (double s : {-150.0, -7.0, 0.0, 33.3, 140.0})
        EXPECT_NEAR(p.predict(s), a * s + b, 1e-12);
    EXPECT_NEAR(p.predict(1.0) - p.predict(0.0), a, 1e-12);
}

TEST(Polynomial, InterpolatoryFitReproducesItsNodes)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-200.0, 200.0), v(-15.0, 15.0);
    for (int n = 2; n <= 10; ++n) {
        std::vector<RegressionSample> data;
        for (int i = 0; i < n; ++i)
            data.push_back({u(rng), 1, 20.0 + v(rng)});
        const auto p = fit_polynomial(data, n - 1, 20.0);
        ASSERT_FALSE(p.reduced());
        for (const auto& r : data)
            EXPECT_NEAR(p.predict(r.shift), r.beta_ref, 1e-9) << "n = " << n;
    }
}

TEST(Polynomial, InSampleRmseNeverIncreasesWithDegree)
{
    auto data = arctan_data(-100.0, 690.0, 600, -210.0, 215.0, 0.002, 9);
    for (auto& r : data)
        r.beta_ref += 0.05 * std::sin(r.shift / 17.0);
    double prev = HUGE_VAL;
    for (int d = 0; d <= 20; ++d) {
        const auto p = fit_polynomial(data, d, -100.0);
        const double e = rmse(data, [&](const RegressionSample& r) { return p.predict(r.shift); });
        EXPECT_LE(e, prev * (1.0 + 1e-9)) << "degree " << d;
        prev = e;
    }
}

TEST(Polynomial, IllConditionedDesignLowersTheDegree)
{
    std::vector<RegressionSample> data;
    for (int i = 0; i < 30; ++i)
        data.push_back({i % 2 ? 5.0 : -5.0, 1, i % 2 ? 1.0 : 0.0});
    const auto p = fit_polynomial(data, 10, 0.0);
    EXPECT_TRUE(p.reduced());
    EXPECT_EQ(p.degree(), 1);
    EXPECT_NEAR(p.predict(5.0), 1.0, 1e-12);
}

TEST(Polynomial, DegenerateInputsAreRejected)
{
    std::vector<RegressionSample> flat{{3.0, 1, 0.0}, {3.0, 1, 1.0}, {3.0, 1, 2.0}};
    EXPECT_THROW(fit_polynomial(flat, 1, 0.0), FitError);
    EXPECT_THROW(fit_polynomial(flat, 3, 0.0, 7), InsufficientDataError);
    EXPECT_THROW(fit_polynomial({{1.0, 1, NAN}, {2.0, 1, 0.0}}, 1, 0.0), InputError);
}

TEST(Polynomial, SelectedDegreeStaysWithinTheCap)
{
    const auto data = arctan_data(0.0, 690.0, 500, -200.0, 200.0, 0.001);
    for (int cap : {1, 4, 8, 20}) {
        const auto p = fit_polynomial_select_degree(data, cap, 0.0);
        EXPECT_GE(p.degree(), 1);
        EXPECT_LE(p.degree(), cap);
    }
}

// ---------------------------------------------------------------- ffnn

TEST(Ffnn, GradientMatchesFiniteDifferences)
{
    const auto data = arctan_data(5.0, 690.0, 60, -200.0, 200.0, 0.01);
    Ffnn m = make_ffnn(data, 6, true, 5.0);
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0.0, 1.0);
    auto p = m.parameters();
    for (double& v : p)
        v = g(rng);
    m.set_parameters(p);
    std::vector<double> grad;
    ffnn_loss_and_gradient(m, data, &grad);
    ASSERT_EQ(grad.size(), p.size());
    double gmax = 0.0;
    for (double v : grad)
        gmax = std::max(gmax, std::abs(v));
    const double h = 1e-6;
    for (std::size_t k = 0; k < p.size(); ++k) {
        auto q = p;
        q[k] = p[k] + h;
        m.set_parameters(q);
        const double fp = ffnn_loss_and_gradient(m, data, nullptr);
        q[k] = p[k] - h;
        m.set_parameters(q);
        const double fm = ffnn_loss_and_gradient(m, data, nullptr);
        const double fd = (fp - fm) / (2.0 * h);
        EXPECT_LE(std::abs(fd - grad[k]), 1e-4 * std::max(std::abs(grad[k]), gmax) + 1e-8) << "parameter " << k;
    }
}

TEST(Ffnn, ZeroWeightsPredictTheOutputBias)
{
    const auto data = arctan_data(30.0, 690.0, 40, -100.0, 100.0);
    Ffnn m = make_ffnn(data, 5, true, 30.0);
    m.b2 = 0.7;
    const double expect = m.out_mean + m.out_scale * 0.7;
    for (double s : {-500.0, -3.0, 0.0, 250.0})
        for (int d : {0, 1})
            EXPECT_DOUBLE_EQ(m.offset_deg(s, d), expect);
}

TEST(Ffnn, FitsArctanWell)
{
    const auto data = arctan_data(-20.0, 690.0, 400, -210.0, 210.0);
    FfnnOptions opt;
    opt.max_epochs = 400;
    opt.restarts = 2;
    const auto m = train_ffnn(data, 6, false, -20.0, opt);
    EXPECT_LT(m.train_rmse_deg, 1e-3);
    EXPECT_LT(m.validation_rmse_deg, 1e-3);
}

TEST(Ffnn, DirectionFeatureNeverIncreasesInSampleRmse)
{
    auto data = arctan_data(60.0, 690.0, 300, -200.0, 200.0, 0.001, 11);
    for (auto& r : data)
        r.beta_ref += r.direction ? 0.01 : -0.01;
    FfnnOptions opt;
    opt.max_epochs = 200;
    opt.restarts = 2;
    opt.validation_fraction = 0.0;
    const Ffnn plain = train_ffnn(data, 5, false, 60.0, opt);
    const Ffnn embedded = embed_direction(plain, data);
    for (const auto& r : data)
        EXPECT_DOUBLE_EQ(embedded.offset_deg(r.shift, r.direction), plain.offset_deg(r.shift, r.direction));
    const Ffnn refined = refine_ffnn(embedded, data, opt);
    EXPECT_LE(refined.train_rmse_deg, plain.train_rmse_deg * (1.0 + 1e-12));
    EXPECT_LT(refined.train_rmse_deg, 0.5 * plain.train_rmse_deg);
}

TEST(Ffnn, TrainingIsDeterministicUnderASeed)
{
    const auto data = arctan_data(0.0, 690.0, 200, -200.0, 200.0, 0.01, 12);
    FfnnOptions opt;
    opt.max_epochs = 100;
    opt.restarts = 2;
    opt.seed = 77;
    const auto a = train_ffnn(data, 4, true, 0.0, opt);
    const auto b = train_ffnn(data, 4, true, 0.0, opt);
    EXPECT_EQ(a, b);
    opt.seed = 78;
    EXPECT_NE(a.parameters(), train_ffnn(data, 4, true, 0.0, opt).parameters());
}

TEST(Ffnn, TooFewSamplesOrBadWidthIsRejected)
{
    const auto data = arctan_data(0.0, 690.0, 10, -200.0, 200.0);
    EXPECT_THROW(train_ffnn(data, 9, false, 0.0, {}, 3), InsufficientDataError);
    EXPECT_THROW(make_ffnn(data, 0, false, 0.0), ConfigError);
}

// ---------------------------------------------------------------- gp

// c + k*^T (K + sn^2 I)^-1 (y - c), c = 1^T A^-1 y / 1^T A^-1 1, A inverted explicitly.
double gp_oracle(const std::vector<RegressionSample>& data, double center, const GpHyper& h, double shift)
{
    const auto n = static_cast<Eigen::Index>(data.size());
    double mean = 0.0, var = 0.0;
    for (const auto& r : data)
        mean += r.shift / static_cast<double>(n);
    for (const auto& r : data)
        var += (r.shift - mean) * (r.shift - mean) / static_cast<double>(n);
    const double sd = std::sqrt(var);
    auto k = [&](double a, double b) {
        return h.signal_sd * h.signal_sd * std::exp(-std::abs((a - b) / sd) / h.length);
    };
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd y(n), ks(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = angle_diff_deg(data[static_cast<std::size_t>(i)].beta_ref, center);
        ks(i) = k(shift, data[static_cast<std::size_t>(i)].shift);
        for (Eigen::Index j = 0; j < n; ++j)
            A(i, j) = k(data[static_cast<std::size_t>(i)].shift, data[static_cast<std::size_t>(j)].shift)
                      + (i == j ? h.noise_sd * h.noise_sd : 0.0);
    }
    const Eigen::MatrixXd Ai = A.fullPivLu().inverse();
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
    const double c = one.dot(Ai * y) / one.dot(Ai * one);
    return center + c + ks.dot(Ai * (y - c * one));
}

TEST(Gp, PosteriorMeanMatchesDenseInverse)
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-200.0, 200.0);
    std::vector<RegressionSample> data;
    for (int i = 0; i < 50; ++i) {
        const double s = u(rng);
        data.push_back({s, 1, 12.0 + rad_to_deg(std::atan(s / 690.0)) + 0.01 * std::sin(s)});
    }
    const GpHyper h{2.0, 0.7, 0.05};
    const auto g = gp_with_hyper(data, false, 12.0, h);
    for (double s : {-250.0, -101.3, 0.0, 17.7, 199.0, 400.0})
        EXPECT_NEAR(g.predict(s, 1), gp_oracle(data, 12.0, h, s), 1e-8) << "shift " << s;
}

TEST(Gp, TinyNoiseInterpolatesTheLabels)
{
    const auto data = arctan_data(-50.0, 690.0, 40, -200.0, 200.0, 0.01, 14);
    const auto g = gp_with_hyper(data, false, -50.0, {5.0, 2.0, 1e-7});
    for (const auto& r : data)
        EXPECT_NEAR(g.predict(r.shift, 1), r.beta_ref, 1e-6);
}

TEST(Gp, FarFromTheDataPredictsTheConstant)
{
    const auto data = arctan_data(-50.0, 690.0, 40, -200.0, 200.0, 0.01, 15);
    const auto g = gp_with_hyper(data, false, -50.0, {5.0, 0.3, 1e-3});
    EXPECT_NEAR(g.offset_deg(1e5, 1), g.c, 1e-12);
    EXPECT_NEAR(g.offset_deg(-1e5, 1), g.c, 1e-12);
}

TEST(Gp, TrainedModelFitsAndIsDeterministic)
{
    const auto data = arctan_data(90.0, 690.0, 500, -200.0, 200.0, 0.002, 16);
    GpOptions opt;
    opt.hyper_points = 150;
    opt.max_points = 400;
    const auto a = train_gp(data, true, 90.0, opt);
    const auto b = train_gp(data, true, 90.0, opt);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 400u);
    EXPECT_LT(rmse(data, [&](const RegressionSample& r) { return a.predict(r.shift, r.direction); }), 0.005);
}

TEST(Gp, NominalCurveCarriesPredictionsBeyondTheData)
{
    const auto data = arctan_data(12.0, 687.5, 200, -50.0, 50.0);
    GpOptions o;
    o.hyper_points = 200;
    const auto plain = train_gp(data, false, 12.0, o, 3);
    const auto nominal = train_gp(data, false, 12.0, o, 3, 687.5);
    EXPECT_EQ(plain.nominal_sensitivity, 0.0);
    EXPECT_EQ(nominal.nominal_sensitivity, 687.5);
    const double truth = 12.0 + rad_to_deg(std::atan(80.0 / 687.5));
    EXPECT_LT(std::abs(nominal.predict(80.0, 1) - truth), 1e-6);
    EXPECT_GT(std::abs(plain.predict(80.0, 1) - truth), 0.1);
    // Far away only the constant basis remains on top of the nominal curve.
    EXPECT_NEAR(nominal.offset_deg(1e6, 1), nominal.c, 1e-12);
}

TEST(Gp, TooFewSamplesIsInsufficient)
{
    EXPECT_THROW(train_gp({{1.0, 1, 0.0}, {2.0, 1, 0.1}}, false, 0.0, {}, 2), InsufficientDataError);
}

// ---------------------------------------------------------------- regressor dispatch

TEST(Regressor, KindNamesRoundTrip)
{
    for (auto k : {RegressorKind::model_function, RegressorKind::polynomial, RegressorKind::ffnn, RegressorKind::gp})
        EXPECT_EQ(regressor_kind_from_string(to_string(k)), k);
    EXPECT_THROW(regressor_kind_from_string("spline"), ConfigError);
}

TEST(Regressor, PerDirectionPolynomialUsesTheMatchingCoefficients)
{
    auto data = arctan_data(0.0, 690.0, 400, -200.0, 200.0);
    for (auto& r : data)
        r.beta_ref += r.direction ? 0.05 : -0.05;
    const SectorLayout layout(8, 35.0, 10.0);
    RegressorOptions opt;
    opt.per_direction_polynomial = true;
    opt.degree = 5;
    const auto r = train_sector_regressor(data, layout[9], 687.5, opt);
    EXPECT_NEAR(r.predict(0.0, 1), 0.05, 1e-6);
    EXPECT_NEAR(r.predict(0.0, 0), -0.05, 1e-6);
    opt.per_direction_polynomial = false;
    const auto one = train_sector_regressor(data, layout[9], 687.5, opt);
    EXPECT_NEAR(one.predict(0.0, 1), one.predict(0.0, 0), 0.0);
}

// ---------------------------------------------------------------- end to end

class Pipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        ds_ = new Dataset(generate_dataset(6000, EncoderGeometry{}, ImperfectionConfig::ideal(), Schedule{}, 21));
        labels_ = new std::vector<int>;
        train_ = new std::vector<std::size_t>;
        for (std::size_t i = 0; i < ds_->size(); ++i) {
            labels_->push_back(ds_->samples[i].true_sector);
            train_->push_back(i);
        }
        CalibrationOptions opt;
        opt.classifier.kind = ClassifierKind::knn;
        model_ = new EncoderModel(calibrate(*ds_, *train_, *labels_, opt));
    }
    static void TearDownTestSuite()
    {
        delete model_;
        delete train_;
        delete labels_;
        delete ds_;
    }

    static Dataset* ds_;
    static std::vector<int>* labels_;
    static std::vector<std::size_t>* train_;
    static EncoderModel* model_;
};

Dataset* Pipeline::ds_ = nullptr;
std::vector<int>* Pipeline::labels_ = nullptr;
std::vector<std::size_t>* Pipeline::train_ = nullptr;
EncoderModel* Pipeline::model_ = nullptr;

TEST_F(Pipeline, PolynomialTrainingResidualIsBelowModelFunction)
{
    const auto subsets = regression_subsets(*ds_, *train_, *labels_, model_->bank, 0);
    const auto layout = ds_->layout();
    for (int s = 0; s < layout.size(); ++s) {
        const auto& d = subsets[static_cast<std::size_t>(s)];
        const auto mf = fit_model_function(d, layout[s].center_deg(), model_->nominal_sensitivity, s);
        const auto p = fit_polynomial(d, layout[s].kind == SectorKind::two_shadow ? 8 : 20, layout[s].center_deg(), s);
        const double e_mf = rmse(d, [&](const RegressionSample& r) { return mf.predict(r.shift); });
        const double e_p = rmse(d, [&](const RegressionSample& r) { return p.predict(r.shift); });
        EXPECT_LE(e_p, e_mf) << "sector " << s;
    }
}

TEST_F(Pipeline, FreshImagesRoundTripWithinTheResidualEnvelope)
{
    const auto subsets = regression_subsets(*ds_, *train_, *labels_, model_->bank, 0);
    std::vector<double> envelope;
    for (int s = 0; s < ds_->layout().size(); ++s) {
        double worst = 0.0;
        for (const auto& r : subsets[static_cast<std::size_t>(s)])
            worst = std::max(worst, std::abs(angle_diff_deg(model_->regressors[static_cast<std::size_t>(s)].predict(
                                                                 r.shift, r.direction),
                                                             r.beta_ref)));
        envelope.push_back(worst);
    }
    const Simulator sim(ds_->geometry, ds_->imperfections);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(-177.0, 177.0);
    const auto layout = ds_->layout();
    int checked = 0;
    while (checked < 40) {
        const double beta = u(rng);
        const int s = layout.sector_of(beta);
        if (std::min(std::abs(beta - layout[s].start_deg), std::abs(beta - layout[s].end_deg())) < 0.5)
            continue;
        const auto m = full_inference(*model_, sim.render_image(beta, Direction::clockwise, rng), Direction::clockwise);
        ASSERT_EQ(m.sector, s);
        // the simulator's reference quantisation is zero here, so beta is the label
        EXPECT_LE(std::abs(angle_diff_deg(m.beta_deg, beta)), 2.0 * envelope[static_cast<std::size_t>(s)] + 1e-6)
            << "beta " << beta;
        ++checked;
    }
}

TEST_F(Pipeline, ReferenceAngleGivesZeroShift)
{
    const Simulator sim(ds_->geometry, ds_->imperfections);
    for (int s = 0; s < model_->bank.size(); ++s) {
        const double b = model_->bank.beta_ref_deg[static_cast<std::size_t>(s)];
        const auto m = full_inference(*model_, sim.render_image(b, Direction::clockwise, 1), Direction::clockwise);
        EXPECT_EQ(m.sector, s);
        EXPECT_NEAR(m.shift, 0.0, 1e-6);
        EXPECT_NEAR(angle_diff_deg(m.beta_deg, b), 0.0, 0.01);
    }
}

TEST_F(Pipeline, WindowedShiftAgreesWithFullCorrelation)
{
    int windowed = 0;
    for (std::size_t i = 0; i < ds_->size(); i += 7) {
        const int s = (*labels_)[i];
        const auto I = combined_intensity(ds_->samples[i].intensity).values;
        bool used = false;
        const auto w = measure_shift(*model_, s, I, &used);
        windowed += used;
        EXPECT_NEAR(w.shift, reference_shift(model_->bank, s, I), 0.01);
    }
    EXPECT_GT(windowed, 0);
}

TEST_F(Pipeline, UnsureSectorWithEdgeShiftIsInvalid)
{
    const auto& ref = model_->bank.intensity[3];
    const std::size_t K = ref.size();
    BasicIntensityVectors<double> iv;
    for (std::size_t k = 0; k < K; ++k) {
        const double v = k >= 1400 ? ref[k - 1400] : ref[0];
        iv.red.push_back(v);
        iv.green.push_back(v);
        iv.blue.push_back(v);
    }
    EncoderModel m = *model_;
    m.inference.min_confidence = 0.0;
    const auto ok = full_inference(m, iv, Direction::clockwise);
    ASSERT_TRUE(ok.shift_boundary);
    m.inference.min_confidence = 1.01;
    EXPECT_THROW(full_inference(m, iv, Direction::clockwise), MeasurementInvalid);
}

TEST_F(Pipeline, CalibrationIsReproducible)
{
    std::vector<std::size_t> half;
    for (std::size_t i = 0; i < ds_->size(); i += 2)
        half.push_back(i);
    CalibrationOptions opt;
    const auto a = calibrate(*ds_, half, *labels_, opt);
    const auto b = calibrate(*ds_, half, *labels_, opt);
    EXPECT_TRUE(a == b);
}

TEST(PipelineSeams, EstimateIsContinuousAcrossEverySeam)
{
    const auto ds = generate_dataset(8000, EncoderGeometry{}, ImperfectionConfig{}, Schedule{}, 23);
    std::vector<int> labels;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        labels.push_back(ds.samples[i].true_sector);
        train.push_back(i);
    }
    const auto model = calibrate(ds, train, labels, {});
    const auto subsets = regression_subsets(ds, train, labels, model.bank, 0);
    std::vector<double> sigma;
    for (int s = 0; s < ds.layout().size(); ++s) {
        std::vector<double> e;
        for (const auto& r : subsets[static_cast<std::size_t>(s)])
            e.push_back(angle_diff_deg(model.regressors[static_cast<std::size_t>(s)].predict(r.shift, r.direction),
                                       r.beta_ref));
        sigma.push_back(error_stats(e).sigma);
    }
    const Simulator sim(ds.geometry, ds.imperfections);
    const auto layout = ds.layout();
    for (int s = 1; s < layout.size(); ++s) {
        const double seam = layout[s].start_deg;
        const double tol = 2.0 * std::max(sigma[static_cast<std::size_t>(s - 1)], sigma[static_cast<std::size_t>(s)]);
        for (int rep = 1; rep <= 3; ++rep) {
            const double before = seam - 0.01 * rep, after = seam + 0.01 * rep;
            const auto a = full_inference(model, sim.render_image(before, Direction::clockwise, 2 * rep), Direction::clockwise);
            const auto b = full_inference(model, sim.render_image(after, Direction::clockwise, 2 * rep + 1), Direction::clockwise);
            EXPECT_EQ(a.sector, s - 1);
            EXPECT_EQ(b.sector, s);
            EXPECT_LE(std::abs(angle_diff_deg(b.beta_deg, after) - angle_diff_deg(a.beta_deg, before)), tol)
                << "seam " << seam;
        }
    }
}

TEST(PipelineErrors, MissingSectorInTrainingIsNamed)
{
    const auto ds = generate_dataset(400, EncoderGeometry{}, ImperfectionConfig::ideal(), Schedule{}, 3);
    std::vector<int> labels;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        labels.push_back(ds.samples[i].true_sector);
        if (ds.samples[i].true_sector != 5)
            train.push_back(i);
    }
    try {
        build_reference_bank(ds, train, labels);
        FAIL() << "expected InsufficientDataError";
    } catch (const InsufficientDataError& e) {
        EXPECT_NE(std::string(e.what()).find("sector"), std::string::npos);
    }
}

} // namespace
