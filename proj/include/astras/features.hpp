#ifndef ASTRAS_FEATURES_HPP
#define ASTRAS_FEATURES_HPP

#include "astras/errors.hpp"
#include "astras/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace astras {

/// Scales a column-sum vector so that its maximum is 100. Returns false (and
/// leaves zeros) when the channel is identically zero.
template <class T>
bool normalize_to_100(std::span<const double> column_sums, std::vector<T>& out)
{
    out.assign(column_sums.size(), T(0));
    double mx = 0.0;
    for (double v : column_sums)
        mx = std::max(mx, v);
    if (!(mx > 0.0))
        return false;
    const double scale = 100.0 / mx;
    for (std::size_t k = 0; k < column_sums.size(); ++k)
        out[k] = static_cast<T>(column_sums[k] * scale);
    return true;
}

/// Normalised per-channel intensity vectors from raw column sums laid out as
/// [red(K), green(K), blue(K)].
template <class T = double>
BasicIntensityVectors<T> intensity_from_column_sums(std::span<const double> sums, std::size_t width)
{
    if (sums.size() != 3 * width)
        throw InputError("column sum buffer must hold 3 * width values");
    BasicIntensityVectors<T> iv;
    for (int c = 0; c < 3; ++c) {
        if (!normalize_to_100<T>(sums.subspan(c * width, width), iv.channel(c)))
            iv.degenerate_channels |= static_cast<std::uint8_t>(1u << c);
    }
    return iv;
}

/// I^R, I^G, I^B of an image: column sums over all rows, scaled to max 100.
inline IntensityVectors intensity_vectors(const ShadowImage& image)
{
    if (image.empty())
        throw InputError("intensity_vectors: empty image");
    const auto K = static_cast<std::size_t>(image.width);
    std::vector<double> sums(3 * K, 0.0);
    for (int j = 0; j < image.height; ++j) {
        const float* row = image.pixels.data() + static_cast<std::size_t>(j) * K * 3;
        for (std::size_t k = 0; k < K; ++k) {
            sums[k] += row[3 * k];
            sums[K + k] += row[3 * k + 1];
            sums[2 * K + k] += row[3 * k + 2];
        }
    }
    return intensity_from_column_sums<double>(sums, K);
}

/// HSI hue in degrees [0, 360); nullopt for achromatic input (r == g == b).
inline std::optional<double> rgb_to_hue(double r, double g, double b)
{
    const double num = 0.5 * ((r - g) + (r - b));
    const double den = std::sqrt((r - g) * (r - g) + (r - b) * (g - b));
    if (!(den > 0.0))
        return std::nullopt;
    const double c = std::clamp(num / den, -1.0, 1.0);
    double theta = std::acos(c) * 180.0 / std::numbers::pi;
    double h = b <= g ? theta : 360.0 - theta;
    if (h >= 360.0)
        h -= 360.0;
    return h;
}

/// Weighted hue histogram: bin b covers [b*360/n, (b+1)*360/n).
struct HueHistogram {
    std::vector<double> counts;

    int n_bins() const noexcept { return static_cast<int>(counts.size()); }
    double total() const noexcept
    {
        double s = 0.0;
        for (double c : counts)
            s += c;
        return s;
    }
    static int bin_of(double hue_deg, int n_bins) noexcept
    {
        int b = static_cast<int>(std::floor(hue_deg * n_bins / 360.0));
        return std::clamp(b, 0, n_bins - 1);
    }
};

/// Each chromatic column k adds I^R_k + I^G_k + I^B_k to the bin of its hue.
template <class T>
HueHistogram hue_histogram(const BasicIntensityVectors<T>& iv, int n_bins)
{
    if (n_bins < 2)
        throw ConfigError("hue_histogram: n_bins must be >= 2");
    HueHistogram h;
    h.counts.assign(static_cast<std::size_t>(n_bins), 0.0);
    for (std::size_t k = 0; k < iv.size(); ++k) {
        const double r = iv.red[k], g = iv.green[k], b = iv.blue[k];
        if (auto hue = rgb_to_hue(r, g, b))
            h.counts[static_cast<std::size_t>(HueHistogram::bin_of(*hue, n_bins))] += r + g + b;
    }
    return h;
}

struct CombinedIntensity {
    std::vector<double> values;
    double mean_intensity = 0.0;
    bool degenerate = false;
};

/// I = (I^R + I^G + I^B) / 3 renormalised to max 100; "mean intensity" is the
/// plain sum of I, as the feature is defined.
template <class T>
CombinedIntensity combined_intensity(const BasicIntensityVectors<T>& iv)
{
    CombinedIntensity out;
    const std::size_t K = iv.size();
    std::vector<double> avg(K);
    for (std::size_t k = 0; k < K; ++k)
        avg[k] = (static_cast<double>(iv.red[k]) + iv.green[k] + iv.blue[k]) / 3.0;
    out.degenerate = !normalize_to_100<double>(avg, out.values);
    double s = 0.0;
    for (double v : out.values)
        s += v;
    out.mean_intensity = s;
    return out;
}

/// Block-average downsampling (trailing partial block averaged on its own).
inline std::vector<double> downsample_mean(std::span<const double> x, std::size_t factor)
{
    if (factor == 0)
        throw ConfigError("downsample factor must be positive");
    std::vector<double> out;
    out.reserve((x.size() + factor - 1) / factor);
    for (std::size_t i = 0; i < x.size(); i += factor) {
        const std::size_t end = std::min(x.size(), i + factor);
        double s = 0.0;
        for (std::size_t j = i; j < end; ++j)
            s += x[j];
        out.push_back(s / static_cast<double>(end - i));
    }
    return out;
}

struct FeatureSet {
    IntensityVectors intensity;
    std::vector<double> combined;
    HueHistogram histogram;
    double mean_intensity = 0.0;
    Direction direction = Direction::clockwise;
};

template <class T>
FeatureSet make_features(const BasicIntensityVectors<T>& iv, Direction dir, int n_bins)
{
    FeatureSet fs;
    fs.intensity = iv.template cast<double>();
    auto ci = combined_intensity(fs.intensity);
    fs.combined = std::move(ci.values);
    fs.mean_intensity = ci.mean_intensity;
    fs.histogram = hue_histogram(fs.intensity, n_bins);
    fs.direction = dir;
    return fs;
}

inline FeatureSet extract_features(const ShadowImage& image, Direction dir, int n_bins)
{
    return make_features(intensity_vectors(image), dir, n_bins);
}

} // namespace astras

#endif // ASTRAS_FEATURES_HPP
