#ifndef ASTRAS_BENCH_HPP
#define ASTRAS_BENCH_HPP

#include "astras/confusion.hpp"
#include "astras/io/config_json.hpp"
#include "astras/io/model_io.hpp"
#include "astras/labeling.hpp"
#include "astras/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace astras::bench {

inline constexpr const char* kDisclaimer
    = "All figures come from the synthetic encoder simulator. Its error magnitudes are tuned to resemble the "
      "published hardware results; they are not measurements of a physical encoder.";

// ---------------------------------------------------------------- splits

enum class SplitMode { holdout, direction_aware };

struct SplitSpec {
    SplitMode mode = SplitMode::holdout;
    double holdout_fraction = 0.25;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    SplitMode mode = SplitMode::holdout;
};

/// Seeded shuffle; the first floor(n * fraction) indices are held out. Both
/// halves come back sorted.
inline Split make_split(std::size_t n, const SplitSpec& spec)
{
    if (!(spec.holdout_fraction > 0.0 && spec.holdout_fraction < 1.0))
        throw ConfigError("holdout fraction must lie in (0, 1)");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(splitmix64(spec.seed ^ 0x5eed5eedULL));
    for (std::size_t i = n; i > 1; --i) {
        // Fisher-Yates with an explicit draw: std::shuffle is not pinned across standard libraries.
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.holdout_fraction));
    Split s;
    s.mode = spec.mode;
    s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(s.test.begin(), s.test.end());
    std::sort(s.train.begin(), s.train.end());
    return s;
}

inline std::vector<std::size_t> clockwise_only(const Dataset& ds, std::span<const std::size_t> idx)
{
    std::vector<std::size_t> out;
    for (auto i : idx)
        if (ds.samples[i].direction == Direction::clockwise)
            out.push_back(i);
    return out;
}

/// Empty beta bins of the given indices, ignoring bins that touch the
/// excluded band around +-180.
inline std::vector<int> beta_histogram_gaps(const Dataset& ds, std::span<const std::size_t> idx, double bin_deg = 1.0)
{
    const int nb = static_cast<int>(std::ceil(360.0 / bin_deg));
    std::vector<std::size_t> h(static_cast<std::size_t>(nb), 0);
    for (auto i : idx) {
        const int b = std::clamp(static_cast<int>(std::floor((ds.samples[i].beta_ref_deg + 180.0) / bin_deg)), 0, nb - 1);
        ++h[static_cast<std::size_t>(b)];
    }
    const double lim = 180.0 - ds.imperfections.excluded_band_deg;
    std::vector<int> gaps;
    for (int b = 0; b < nb; ++b) {
        const double lo = -180.0 + b * bin_deg, hi = lo + bin_deg;
        if (lo < -lim || hi > lim)
            continue;
        if (h[static_cast<std::size_t>(b)] == 0)
            gaps.push_back(b);
    }
    return gaps;
}

// ---------------------------------------------------------------- timing

struct LatencyStats {
    std::size_t runs = 0;
    double mean_us = 0.0;
    double median_us = 0.0;
    double p95_us = 0.0;
    double min_us = 0.0;
};

inline LatencyStats latency_stats(std::vector<double> us)
{
    LatencyStats s;
    s.runs = us.size();
    if (us.empty())
        return s;
    std::sort(us.begin(), us.end());
    s.mean_us = std::accumulate(us.begin(), us.end(), 0.0) / static_cast<double>(us.size());
    auto q = [&](double p) {
        const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(us.size()))) - 1;
        return us[std::min(k, us.size() - 1)];
    };
    s.median_us = q(0.5);
    s.p95_us = q(0.95);
    s.min_us = us.front();
    return s;
}

/// Times `runs` single calls f(i), i cycling over [0, n_inputs), after
/// `warmup` untimed calls. f returns a double that is kept live.
template <class F>
LatencyStats measure_latency(std::size_t n_inputs, std::size_t runs, std::size_t warmup, F&& f)
{
    if (n_inputs == 0 || runs == 0)
        return {};
    volatile double sink = 0.0;
    for (std::size_t i = 0; i < warmup; ++i)
        sink = sink + f(i % n_inputs);
    std::vector<double> us;
    us.reserve(runs);
    for (std::size_t i = 0; i < runs; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const double v = f(i % n_inputs);
        const auto t1 = std::chrono::steady_clock::now();
        sink = sink + v;
        us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    return latency_stats(std::move(us));
}

template <class T>
std::size_t serialized_size(const T& model)
{
    io::ByteWriter w;
    io::ser::put(w, model);
    return w.bytes().size();
}

inline std::size_t serialized_size(const std::vector<SectorRegressor>& rs)
{
    io::ByteWriter w;
    for (const auto& r : rs)
        io::ser::put(w, r);
    return w.bytes().size();
}

// ---------------------------------------------------------------- classification

struct ClassifierSpec {
    std::string name;
    ClassifierOptions options;
};

struct ClassificationRow {
    std::string name;
    ClassifierKind kind = ClassifierKind::knn;
    std::size_t n_features = 0;
    LatencyStats latency;
    std::size_t model_size_bytes = 0;
    double plain_accuracy = 0.0;
    double adjacency_tolerant_accuracy = 0.0;
    std::uint64_t non_adjacent_errors = 0;
    ConfusionMatrix confusion;
};

struct ClassificationReport {
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<ClassificationRow> rows;
};

inline std::size_t feature_count(const Classifier& c, int sensor_width)
{
    if (c.kind() == ClassifierKind::cnn)
        return static_cast<std::size_t>(3 * sensor_width);
    return static_cast<std::size_t>(c.n_bins);
}

inline ClassificationRow evaluate_classifier(const std::string& name, const Classifier& c, const Dataset& ds,
                                             const std::vector<int>& labels, std::span<const std::size_t> test,
                                             std::size_t timing_runs = 1000)
{
    ClassificationRow row;
    row.name = name;
    row.kind = c.kind();
    row.n_features = feature_count(c, ds.geometry.sensor_width_px);
    row.confusion = ConfusionMatrix(ds.layout().size());
    for (auto i : test)
        row.confusion.add(labels.at(i), c.predict(ds.samples[i].intensity).sector);
    row.plain_accuracy = row.confusion.plain_accuracy();
    row.adjacency_tolerant_accuracy = row.confusion.adjacency_tolerant_accuracy();
    row.non_adjacent_errors = row.confusion.non_adjacent_errors();
    row.latency = measure_latency(test.size(), std::max<std::size_t>(timing_runs, 100), 20, [&](std::size_t j) {
        return static_cast<double>(c.predict(ds.samples[test[j]].intensity).sector);
    });
    row.model_size_bytes = serialized_size(c);
    return row;
}

inline ClassificationReport run_classification_benchmark(const Dataset& ds, const std::vector<int>& labels,
                                                         const std::vector<ClassifierSpec>& algos, const Split& split,
                                                         std::size_t timing_runs = 1000)
{
    if (labels.size() != ds.size())
        throw InputError("classification benchmark: one label per sample required");
    ClassificationReport rep;
    rep.n_train = split.train.size();
    rep.n_test = split.test.size();
    std::vector<const CompactIntensity*> xs;
    std::vector<int> ys;
    for (auto i : split.train) {
        xs.push_back(&ds.samples[i].intensity);
        ys.push_back(labels[i]);
    }
    for (const auto& a : algos) {
        const Classifier c = train_classifier<float>(xs, ys, a.options);
        rep.rows.push_back(evaluate_classifier(a.name, c, ds, labels, split.test, timing_runs));
    }
    return rep;
}

// ---------------------------------------------------------------- regression

struct RegressorSpec {
    std::string name;
    RegressorOptions options;
    /// Train on clockwise samples only; test metrics are then reported per direction.
    bool clockwise_only = false;
};

/// One regression run with the error of every test sample.
struct AlgorithmErrors {
    std::string name;
    RegressorKind kind = RegressorKind::polynomial;
    bool use_direction = false;
    bool clockwise_only = false;
    ErrorStats cw;
    ErrorStats ccw;
    ErrorStats all;
    /// Clockwise-trained models are judged on clockwise test samples.
    const ErrorStats& primary() const noexcept { return clockwise_only ? cw : all; }
    std::vector<ErrorStats> per_sector;
    /// arcsec, aligned with ErrorReport::test.
    std::vector<double> error_arcsec;
    LatencyStats latency;
    std::size_t model_size_bytes = 0;
};

struct TestPoint {
    std::size_t index = 0;
    std::uint64_t timestamp = 0;
    double beta_ref_deg = 0.0;
    Direction direction = Direction::clockwise;
    int sector = -1;
    double shift = 0.0;
};

struct ErrorReport {
    std::size_t n_train = 0;
    std::vector<TestPoint> test;
    std::vector<AlgorithmErrors> algorithms;

    const AlgorithmErrors& at(const std::string& name) const
    {
        for (const auto& a : algorithms)
            if (a.name == name)
                return a;
        throw InputError("no algorithm '" + name + "' in report");
    }
};

/// Shared work of a regression benchmark: reference bank, training subsets
/// and test shifts. Each test sample is measured against the reference of
/// its labelled sector.
struct RegressionContext {
    const Dataset* ds = nullptr;
    std::vector<int> labels;
    Split split;
    ReferenceBank bank;
    std::vector<std::vector<RegressionSample>> subsets_all;
    std::vector<std::vector<RegressionSample>> subsets_cw;
    std::vector<TestPoint> test;
};

inline RegressionContext prepare_regression(const Dataset& ds, const std::vector<int>& labels, const Split& split,
                                            int n_neighbors = 0)
{
    if (labels.size() != ds.size())
        throw InputError("regression benchmark: one label per sample required");
    RegressionContext c;
    c.ds = &ds;
    c.labels = labels;
    c.split = split;
    c.bank = build_reference_bank(ds, split.train, labels);
    c.subsets_all = regression_subsets(ds, split.train, labels, c.bank, n_neighbors);
    const auto cw = clockwise_only(ds, split.train);
    c.subsets_cw = regression_subsets(ds, cw, labels, c.bank, n_neighbors);
    for (auto i : split.test) {
        const auto& s = ds.samples[i];
        TestPoint t{i, s.timestamp, s.beta_ref_deg, s.direction, labels[i], 0.0};
        t.shift = reference_shift(c.bank, t.sector, combined_intensity(s.intensity).values);
        c.test.push_back(t);
    }
    return c;
}

inline AlgorithmErrors evaluate_regressors(const std::string& name, const std::vector<SectorRegressor>& rs,
                                           const std::vector<TestPoint>& test, int n_sectors, bool clockwise_only,
                                           bool use_direction, std::size_t timing_runs = 1000)
{
    AlgorithmErrors a;
    a.name = name;
    a.kind = rs.empty() ? RegressorKind::polynomial : rs.front().kind();
    a.clockwise_only = clockwise_only;
    a.use_direction = use_direction;
    std::vector<double> ecw, eccw;
    std::vector<std::vector<double>> per(static_cast<std::size_t>(n_sectors));
    a.error_arcsec.reserve(test.size());
    for (const auto& t : test) {
        const int d = static_cast<int>(direction_value(t.direction));
        const double beta = rs.at(static_cast<std::size_t>(t.sector)).predict(t.shift, d);
        const double e = deg_to_arcsec(angle_diff_deg(beta, t.beta_ref_deg));
        a.error_arcsec.push_back(e);
        (d ? ecw : eccw).push_back(e);
        if (!clockwise_only || d)
            per[static_cast<std::size_t>(t.sector)].push_back(e);
    }
    a.cw = error_stats(ecw);
    a.ccw = error_stats(eccw);
    a.all = error_stats(a.error_arcsec);
    for (const auto& p : per)
        a.per_sector.push_back(error_stats(p));
    a.latency = measure_latency(test.size(), std::max<std::size_t>(timing_runs, 100), 20, [&](std::size_t j) {
        const auto& t = test[j];
        return rs[static_cast<std::size_t>(t.sector)].predict(t.shift, static_cast<int>(direction_value(t.direction)));
    });
    a.model_size_bytes = serialized_size(rs);
    return a;
}

inline AlgorithmErrors run_regressor(const RegressionContext& c, const RegressorSpec& spec,
                                     std::size_t timing_runs = 1000)
{
    const bool cw_only = spec.clockwise_only
        || (c.split.mode == SplitMode::direction_aware
            && (spec.options.kind == RegressorKind::model_function || spec.options.kind == RegressorKind::polynomial));
    const auto& subsets = cw_only ? c.subsets_cw : c.subsets_all;
    const auto layout = c.ds->layout();
    const auto rs
        = train_regressors(subsets, layout, c.ds->geometry.sensitivity_px_per_rad(), spec.options, c.bank.beta_ref_deg);
    return evaluate_regressors(spec.name, rs, c.test, layout.size(), cw_only, spec.options.use_direction, timing_runs);
}

/// In direction-aware mode model-function and polynomial regressors train on
/// the clockwise part of the training set; everything else on all of it.
inline ErrorReport run_regression_benchmark(const RegressionContext& c, const std::vector<RegressorSpec>& algos,
                                            std::size_t timing_runs = 1000)
{
    ErrorReport rep;
    rep.n_train = c.split.train.size();
    rep.test = c.test;
    for (const auto& a : algos)
        rep.algorithms.push_back(run_regressor(c, a, timing_runs));
    return rep;
}

inline ErrorReport run_regression_benchmark(const Dataset& ds, const std::vector<int>& labels,
                                            const std::vector<RegressorSpec>& algos, const Split& split,
                                            std::size_t timing_runs = 1000)
{
    return run_regression_benchmark(prepare_regression(ds, labels, split), algos, timing_runs);
}

struct CurvePoint {
    double x = 0.0;
    std::size_t n = 0;
    double mean = 0.0;
    double sigma = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Error against beta in bins of `bin_deg`; empty bins are skipped. Only the
/// samples an algorithm is judged on are used.
inline std::vector<CurvePoint> binned_error_curve(const ErrorReport& rep, const AlgorithmErrors& a, double bin_deg = 1.0)
{
    const int nb = static_cast<int>(std::ceil(360.0 / bin_deg));
    std::vector<std::vector<double>> bins(static_cast<std::size_t>(nb));
    for (std::size_t j = 0; j < rep.test.size(); ++j) {
        const auto& t = rep.test[j];
        if (a.clockwise_only && t.direction != Direction::clockwise)
            continue;
        const int b = std::clamp(static_cast<int>(std::floor((t.beta_ref_deg + 180.0) / bin_deg)), 0, nb - 1);
        bins[static_cast<std::size_t>(b)].push_back(a.error_arcsec[j]);
    }
    std::vector<CurvePoint> out;
    for (int b = 0; b < nb; ++b) {
        const auto& v = bins[static_cast<std::size_t>(b)];
        if (v.empty())
            continue;
        const auto st = error_stats(v);
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        out.push_back({-180.0 + (b + 0.5) * bin_deg, v.size(), st.mean, st.sigma, *lo, *hi});
    }
    return out;
}

/// (timestamp, error) in acquisition order.
inline std::vector<std::pair<std::uint64_t, double>> time_ordered_trace(const ErrorReport& rep,
                                                                        const AlgorithmErrors& a)
{
    std::vector<std::pair<std::uint64_t, double>> out;
    for (std::size_t j = 0; j < rep.test.size(); ++j)
        out.emplace_back(rep.test[j].timestamp, a.error_arcsec[j]);
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------- eccentricity

struct EccentricityOptions {
    std::size_t n_train = 9877;
    std::size_t n_holdout = 1090;
    std::vector<double> test_eccentricities_mm{1.0, 2.0, 4.0};
    std::vector<std::size_t> test_sizes{448, 446, 447};
    std::uint64_t seed = 2024;
    CalibrationOptions calibration = default_calibration();

    /// Per-direction polynomials: backlash is handled without a slow network.
    static CalibrationOptions default_calibration()
    {
        CalibrationOptions c;
        c.regressor.kind = RegressorKind::polynomial;
        c.regressor.per_direction_polynomial = true;
        return c;
    }
};

struct EccentricityRow {
    std::string name;
    double eccentricity_mm = 0.0;
    std::size_t n = 0;
    double plain_accuracy = 0.0;
    double adjacency_tolerant_accuracy = 0.0;
    /// Regressor of the labelled sector applied to the shift against that sector's reference.
    ErrorStats regression;
    /// features -> classifier -> shift -> regressor, as a deployed encoder would run.
    ErrorStats pipeline;
    std::size_t invalid = 0;
    ConfusionMatrix confusion;
};

struct EccentricityReport {
    std::vector<EccentricityRow> rows;
    double slope_arcsec_per_mm = 0.0;
    double intercept_arcsec = 0.0;
    double configured_slope_arcsec_per_mm = 0.0;
    bool p2p_strictly_increasing = false;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw InputError("line fit needs at least two points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (!(sxx > 0.0))
        throw InputError("line fit: x values are all equal");
    return {sxy / sxx, my - sxy / sxx * mx};
}

inline EccentricityRow evaluate_eccentric_set(const std::string& name, const EncoderModel& m, const Dataset& ds,
                                              const std::vector<int>& labels, std::span<const std::size_t> idx)
{
    EccentricityRow row;
    row.name = name;
    row.n = idx.size();
    row.eccentricity_mm = ds.imperfections.eccentricity_mm;
    row.confusion = ConfusionMatrix(m.layout().size());
    std::vector<double> reg, pipe;
    for (auto i : idx) {
        const auto& s = ds.samples[i];
        const int d = static_cast<int>(direction_value(s.direction));
        const auto I = combined_intensity(s.intensity).values;
        const int lab = labels.at(i);
        const double b = m.regressors.at(static_cast<std::size_t>(lab)).predict(reference_shift(m.bank, lab, I), d);
        reg.push_back(deg_to_arcsec(angle_diff_deg(b, s.beta_ref_deg)));
        try {
            const auto r = full_inference(m, s.intensity, s.direction);
            row.confusion.add(lab, r.sector);
            pipe.push_back(deg_to_arcsec(angle_diff_deg(r.beta_deg, s.beta_ref_deg)));
        } catch (const MeasurementInvalid&) {
            ++row.invalid;
            row.confusion.add(lab, m.classifier.predict(s.intensity).sector);
        }
    }
    row.plain_accuracy = row.confusion.plain_accuracy();
    row.adjacency_tolerant_accuracy = row.confusion.adjacency_tolerant_accuracy();
    row.regression = error_stats(reg);
    row.pipeline = error_stats(pipe);
    return row;
}

/// Ecc0 is one run split into training and holdout; the eccentric sets are
/// separate runs of the same geometry. Labels come from the threshold
/// labeller (the sector containing the reference angle).
inline EccentricityReport run_eccentricity_test(const EncoderGeometry& geometry, const ImperfectionConfig& base,
                                                const EccentricityOptions& opt)
{
    if (opt.test_eccentricities_mm.size() != opt.test_sizes.size())
        throw ConfigError("eccentricity test: one size per eccentric set required");
    auto labels_of = [](const Dataset& ds) { return threshold_label(ds, ThresholdParams{}).labels; };

    ImperfectionConfig imp0 = base;
    imp0.eccentricity_mm = 0.0;
    const Dataset ecc0 = generate_dataset(opt.n_train + opt.n_holdout, geometry, imp0, Schedule{}, opt.seed);
    const auto lab0 = labels_of(ecc0);
    const double frac = static_cast<double>(opt.n_holdout) / static_cast<double>(ecc0.size());
    Split split = make_split(ecc0.size(), SplitSpec{SplitMode::holdout, frac, opt.seed});
    // floor() can land one short of the requested holdout size.
    while (split.test.size() < opt.n_holdout && !split.train.empty()) {
        split.test.push_back(split.train.back());
        split.train.pop_back();
        std::sort(split.test.begin(), split.test.end());
    }
    const EncoderModel m = calibrate(ecc0, split.train, lab0, opt.calibration);

    EccentricityReport rep;
    rep.configured_slope_arcsec_per_mm = 2.0 * base.eccentricity_gain_arcsec_per_mm;
    rep.rows.push_back(evaluate_eccentric_set("Ecc0", m, ecc0, lab0, split.test));
    for (std::size_t k = 0; k < opt.test_sizes.size(); ++k) {
        ImperfectionConfig imp = base;
        imp.eccentricity_mm = opt.test_eccentricities_mm[k];
        const Dataset ds = generate_dataset(opt.test_sizes[k], geometry, imp, Schedule{}, splitmix64(opt.seed + k + 1));
        std::vector<std::size_t> all(ds.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        char name[32];
        std::snprintf(name, sizeof name, "Ecc%g", imp.eccentricity_mm);
        rep.rows.push_back(evaluate_eccentric_set(name, m, ds, labels_of(ds), all));
    }
    std::vector<double> x, y;
    rep.p2p_strictly_increasing = true;
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
        x.push_back(rep.rows[k].eccentricity_mm);
        y.push_back(rep.rows[k].regression.peak_to_peak);
        if (k > 0 && !(y[k] > y[k - 1]))
            rep.p2p_strictly_increasing = false;
    }
    const auto fit = least_squares_line(x, y);
    rep.slope_arcsec_per_mm = fit.slope;
    rep.intercept_arcsec = fit.intercept;
    return rep;
}

// ---------------------------------------------------------------- timing report

struct TimingRow {
    std::string name;
    LatencyStats latency;
    std::size_t size_bytes = 0;
};

/// Single-sample latencies of the stages of a calibrated model on the given
/// samples: classifier, shift measurement, regressor, and the whole chain.
inline std::vector<TimingRow> timing_and_size_report(const EncoderModel& m, const Dataset& ds,
                                                     std::span<const std::size_t> idx, std::size_t runs = 1000,
                                                     std::size_t warmup = 50)
{
    if (idx.empty())
        throw InputError("timing report: no samples");
    runs = std::max<std::size_t>(runs, 100);
    std::vector<TimingRow> out;
    std::vector<int> sec;
    std::vector<std::vector<double>> I;
    std::vector<double> shift;
    for (auto i : idx) {
        sec.push_back(m.classifier.predict(ds.samples[i].intensity).sector);
        I.push_back(combined_intensity(ds.samples[i].intensity).values);
        shift.push_back(measure_shift(m, sec.back(), I.back()).shift);
    }
    const auto& S = ds.samples;
    out.push_back({"classifier:" + to_string(m.classifier.kind()),
                   measure_latency(idx.size(), runs, warmup,
                                   [&](std::size_t j) { return double(m.classifier.predict(S[idx[j]].intensity).sector); }),
                   serialized_size(m.classifier)});
    out.push_back({"shift",
                   measure_latency(idx.size(), runs, warmup,
                                   [&](std::size_t j) { return measure_shift(m, sec[j], I[j]).shift; }),
                   serialized_size(m.bank) + (m.preshift.empty() ? 0 : [&] {
                       std::size_t s = 0;
                       for (const auto& p : m.preshift)
                           s += serialized_size(p);
                       return s;
                   }())});
    const std::string rname = m.regressors.empty() ? "none" : to_string(m.regressors.front().kind());
    out.push_back({"regressor:" + rname, measure_latency(idx.size(), runs, warmup, [&](std::size_t j) {
                       return m.regressors[static_cast<std::size_t>(sec[j])].predict(
                           shift[j], static_cast<int>(direction_value(S[idx[j]].direction)));
                   }),
                   serialized_size(m.regressors)});
    out.push_back({"full_inference", measure_latency(idx.size(), runs, warmup, [&](std::size_t j) {
                       try {
                           return full_inference(m, S[idx[j]].intensity, S[idx[j]].direction).beta_deg;
                       } catch (const MeasurementInvalid&) {
                           return 0.0;
                       }
                   }),
                   serialized_size(m)});
    return out;
}

// ---------------------------------------------------------------- JSON

inline nlohmann::json to_json(const LatencyStats& s)
{
    return {{"runs", s.runs}, {"mean_us", s.mean_us}, {"median_us", s.median_us}, {"p95_us", s.p95_us}, {"min_us", s.min_us}};
}

inline nlohmann::json to_json(const ErrorStats& s)
{
    return {{"n", s.n}, {"mean_arcsec", s.mean}, {"sigma_arcsec", s.sigma}, {"peak_to_peak_arcsec", s.peak_to_peak},
            {"max_abs_arcsec", s.max_abs}};
}

inline nlohmann::json to_json(const ClassificationReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& x : r.rows)
        rows.push_back({{"algorithm", x.name},
                        {"kind", to_string(x.kind)},
                        {"n_features", x.n_features},
                        {"latency", to_json(x.latency)},
                        {"model_size_bytes", x.model_size_bytes},
                        {"plain_accuracy", x.plain_accuracy},
                        {"adjacency_tolerant_accuracy", x.adjacency_tolerant_accuracy},
                        {"non_adjacent_errors", x.non_adjacent_errors}});
    return {{"disclaimer", kDisclaimer}, {"n_train", r.n_train}, {"n_test", r.n_test}, {"classifiers", rows}};
}

inline nlohmann::json to_json(const ErrorReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& a : r.algorithms) {
        nlohmann::json per = nlohmann::json::array();
        for (const auto& s : a.per_sector)
            per.push_back(to_json(s));
        rows.push_back({{"algorithm", a.name},
                        {"kind", to_string(a.kind)},
                        {"use_direction", a.use_direction},
                        {"clockwise_only", a.clockwise_only},
                        {"primary", to_json(a.primary())},
                        {"clockwise", to_json(a.cw)},
                        {"counter_clockwise", to_json(a.ccw)},
                        {"all", to_json(a.all)},
                        {"per_sector", per},
                        {"latency", to_json(a.latency)},
                        {"model_size_bytes", a.model_size_bytes}});
    }
    return {{"disclaimer", kDisclaimer}, {"n_train", r.n_train}, {"n_test", r.test.size()}, {"regressors", rows}};
}

inline nlohmann::json to_json(const EccentricityReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& x : r.rows)
        rows.push_back({{"set", x.name},
                        {"eccentricity_mm", x.eccentricity_mm},
                        {"n_samples", x.n},
                        {"plain_accuracy", x.plain_accuracy},
                        {"adjacency_tolerant_accuracy", x.adjacency_tolerant_accuracy},
                        {"regression", to_json(x.regression)},
                        {"pipeline", to_json(x.pipeline)},
                        {"invalid_measurements", x.invalid}});
    return {{"disclaimer", kDisclaimer},
            {"sets", rows},
            {"p2p_slope_arcsec_per_mm", r.slope_arcsec_per_mm},
            {"p2p_intercept_arcsec", r.intercept_arcsec},
            {"configured_slope_arcsec_per_mm", r.configured_slope_arcsec_per_mm},
            {"p2p_strictly_increasing", r.p2p_strictly_increasing}};
}

inline nlohmann::json to_json(const std::vector<TimingRow>& rows)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows)
        out.push_back({{"stage", r.name}, {"latency", to_json(r.latency)}, {"size_bytes", r.size_bytes}});
    return {{"disclaimer", kDisclaimer}, {"stages", out}};
}

} // namespace astras::bench

#endif // ASTRAS_BENCH_HPP
