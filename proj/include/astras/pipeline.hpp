#ifndef ASTRAS_PIPELINE_HPP
#define ASTRAS_PIPELINE_HPP

#include "astras/classify/classifier.hpp"
#include "astras/regress/regressor.hpp"
#include "astras/regress/subsets.hpp"
#include "astras/shift.hpp"
#include "astras/simkit.hpp"

namespace astras {

/// Per-sector reference pattern: the combined intensity vector of the
/// training sample closest to the nominal sector centre.
struct ReferenceBank {
    std::vector<std::vector<double>> intensity;
    std::vector<double> beta_ref_deg;

    int size() const noexcept { return static_cast<int>(intensity.size()); }
    bool operator==(const ReferenceBank&) const = default;
};

inline ReferenceBank build_reference_bank(const Dataset& ds, std::span<const std::size_t> train,
                                          const std::vector<int>& labels)
{
    const SectorLayout layout = ds.layout();
    const int n = layout.size();
    std::vector<std::size_t> pick(static_cast<std::size_t>(n), ds.size());
    std::vector<double> dist(static_cast<std::size_t>(n), HUGE_VAL);
    for (auto i : train) {
        const int s = labels.at(i);
        if (s < 0 || s >= n)
            throw InputError("reference bank: label out of range");
        const double d = std::abs(angle_diff_deg(ds.samples[i].beta_ref_deg, layout[s].center_deg()));
        if (d < dist[static_cast<std::size_t>(s)]) {
            dist[static_cast<std::size_t>(s)] = d;
            pick[static_cast<std::size_t>(s)] = i;
        }
    }
    ReferenceBank bank;
    for (int s = 0; s < n; ++s) {
        const auto i = pick[static_cast<std::size_t>(s)];
        if (i == ds.size())
            throw InsufficientDataError("reference bank: no training sample in sector " + layout[s].name, s);
        bank.intensity.push_back(combined_intensity(ds.samples[i].intensity).values);
        bank.beta_ref_deg.push_back(ds.samples[i].beta_ref_deg);
    }
    return bank;
}

inline double reference_shift(const ReferenceBank& bank, int sector, std::span<const double> I)
{
    return cross_correlation_shift(I, bank.intensity.at(static_cast<std::size_t>(sector))).shift;
}

/// Shift-to-angle training subsets, every shift measured by full correlation
/// against the subset's own reference.
inline std::vector<std::vector<RegressionSample>> regression_subsets(const Dataset& ds,
                                                                     std::span<const std::size_t> train,
                                                                     const std::vector<int>& labels,
                                                                     const ReferenceBank& bank, int n_neighbors)
{
    std::vector<double> beta;
    std::vector<int> dir, lab;
    for (auto i : train) {
        beta.push_back(ds.samples[i].beta_ref_deg);
        dir.push_back(static_cast<int>(direction_value(ds.samples[i].direction)));
        lab.push_back(labels.at(i));
    }
    std::vector<std::vector<double>> combined(train.size());
    auto shift = [&](int sector, std::size_t j) {
        if (combined[j].empty())
            combined[j] = combined_intensity(ds.samples[train[j]].intensity).values;
        return reference_shift(bank, sector, combined[j]);
    };
    return prep_sector_subsets(beta, dir, lab, ds.layout(), n_neighbors, shift);
}

struct InferenceOptions {
    int window_half_width = 32;
    /// Below this classifier confidence a boundary shift makes the measurement invalid.
    double min_confidence = 0.5;
    bool operator==(const InferenceOptions&) const = default;
};

/// The calibration artefact.
struct EncoderModel {
    int n_mirrors = 8;
    double single_span_deg = 35.0;
    double two_span_deg = 10.0;
    double nominal_sensitivity = 0.0;
    Classifier classifier;
    ReferenceBank bank;
    /// Optional per-sector coarse shift models (empty: full correlation).
    std::vector<PreshiftModel> preshift;
    std::vector<SectorRegressor> regressors;
    InferenceOptions inference;

    SectorLayout layout() const { return SectorLayout(n_mirrors, single_span_deg, two_span_deg); }
    bool operator==(const EncoderModel&) const = default;
};

struct CalibrationOptions {
    ClassifierOptions classifier;
    RegressorOptions regressor;
    /// Boundary samples borrowed from each adjacent sector. Off by default:
    /// an adjacent sector's image correlated against this sector's reference
    /// is biased by 12-15 px where single and two-shadow patterns meet.
    int n_neighbors = 0;
    bool use_preshift = true;
    PreshiftOptions preshift;
    /// Train the regressors on clockwise samples only.
    bool regress_clockwise_only = false;
    InferenceOptions inference;
};

inline std::vector<PreshiftModel> train_preshift_bank(const Dataset& ds, std::span<const std::size_t> train,
                                                      const std::vector<int>& labels, const ReferenceBank& bank,
                                                      const PreshiftOptions& opt)
{
    std::vector<std::vector<std::vector<double>>> X(static_cast<std::size_t>(bank.size()));
    std::vector<std::vector<double>> y(static_cast<std::size_t>(bank.size()));
    for (auto i : train) {
        const int s = labels.at(i);
        auto I = combined_intensity(ds.samples[i].intensity).values;
        y[static_cast<std::size_t>(s)].push_back(reference_shift(bank, s, I));
        X[static_cast<std::size_t>(s)].push_back(std::move(I));
    }
    std::vector<PreshiftModel> out;
    for (int s = 0; s < bank.size(); ++s)
        out.push_back(train_preshift(X[static_cast<std::size_t>(s)], y[static_cast<std::size_t>(s)], opt));
    return out;
}

/// Builds classifier, reference bank, coarse shift models and per-sector
/// regressors from the training indices of a labelled dataset. A given
/// classifier is used as is instead of training one.
inline EncoderModel calibrate(const Dataset& ds, std::span<const std::size_t> train, const std::vector<int>& labels,
                              const CalibrationOptions& opt, std::optional<Classifier> classifier = std::nullopt)
{
    if (labels.size() != ds.size())
        throw InputError("calibrate: one label per sample required");
    EncoderModel m;
    m.n_mirrors = ds.geometry.n_mirrors;
    m.single_span_deg = ds.geometry.single_sector_span_deg;
    m.two_span_deg = ds.geometry.two_sector_span_deg;
    m.nominal_sensitivity = ds.geometry.sensitivity_px_per_rad();
    m.inference = opt.inference;

    if (classifier) {
        m.classifier = std::move(*classifier);
    } else {
        std::vector<const CompactIntensity*> xs;
        std::vector<int> ys;
        for (auto i : train) {
            xs.push_back(&ds.samples[i].intensity);
            ys.push_back(labels[i]);
        }
        m.classifier = train_classifier<float>(xs, ys, opt.classifier);
    }
    m.bank = build_reference_bank(ds, train, labels);
    if (opt.use_preshift)
        m.preshift = train_preshift_bank(ds, train, labels, m.bank, opt.preshift);

    std::vector<std::size_t> reg;
    for (auto i : train)
        if (!opt.regress_clockwise_only || ds.samples[i].direction == Direction::clockwise)
            reg.push_back(i);
    const auto subsets = regression_subsets(ds, reg, labels, m.bank, opt.n_neighbors);
    m.regressors = train_regressors(subsets, m.layout(), m.nominal_sensitivity, opt.regressor, m.bank.beta_ref_deg);
    return m;
}

struct Measurement {
    int sector = -1;
    double confidence = 0.0;
    double shift = 0.0;
    double beta_deg = 0.0;
    /// Correlation peak on the edge of the searched lags.
    bool shift_boundary = false;
    bool used_window = false;
};

/// Shift against the sector reference: coarse estimate, then correlation in a
/// window around it; the full lag range when there is no coarse estimate or
/// the windowed peak sits on the window edge.
inline ShiftResult measure_shift(const EncoderModel& m, int sector, std::span<const double> I, bool* used_window = nullptr)
{
    const auto& ref = m.bank.intensity.at(static_cast<std::size_t>(sector));
    if (used_window)
        *used_window = false;
    if (!m.preshift.empty()) {
        if (const auto p = predict_preshift(m.preshift.at(static_cast<std::size_t>(sector)), I)) {
            const auto r = cross_correlation_shift(I, ref, ShiftWindow{*p, m.inference.window_half_width});
            if (!r.boundary) {
                if (used_window)
                    *used_window = true;
                return r;
            }
        }
    }
    return cross_correlation_shift(I, ref);
}

/// features -> sector -> shift -> beta. Throws MeasurementInvalid when the
/// classifier is unsure and the shift sits on the edge of the lag range at
/// the same time.
template <class T>
Measurement full_inference(const EncoderModel& m, const BasicIntensityVectors<T>& iv, Direction dir)
{
    Measurement out;
    const Prediction p = m.classifier.predict(iv);
    out.sector = p.sector;
    out.confidence = p.confidence;
    const auto I = combined_intensity(iv).values;
    const ShiftResult r = measure_shift(m, p.sector, I, &out.used_window);
    out.shift = r.shift;
    out.shift_boundary = r.boundary;
    if (out.shift_boundary && out.confidence < m.inference.min_confidence)
        throw MeasurementInvalid("measurement invalid: sector " + std::to_string(p.sector) + " with confidence "
                                 + std::to_string(p.confidence) + " and shift at the edge of the lag range");
    out.beta_deg = m.regressors.at(static_cast<std::size_t>(p.sector))
                       .predict(out.shift, static_cast<int>(direction_value(dir)));
    return out;
}

inline Measurement full_inference(const EncoderModel& m, const ShadowImage& image, Direction dir)
{
    return full_inference(m, intensity_vectors(image), dir);
}

} // namespace astras

#endif // ASTRAS_PIPELINE_HPP
