#ifndef ASTRAS_SIMKIT_HPP
#define ASTRAS_SIMKIT_HPP

#include "astras/angles.hpp"
#include "astras/errors.hpp"
#include "astras/features.hpp"
#include "astras/random.hpp"
#include "astras/sector.hpp"
#include "astras/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace astras {

/// Encoder construction constants. The slit mask, mirror colours and the
/// effective sensitivity parameterise a phenomenological image model; no ray
/// tracing is done.
struct EncoderGeometry {
    int n_mirrors = 8;
    double rotor_radius_mm = 25.0;
    double mask_sensor_distance_mm = 1.1;
    double pixel_pitch_um = 2.2;
    int sensor_width_px = 2592;
    int sensor_height_px = 64;
    int slit_count = 5;
    double slit_width_mm = 0.4;
    /// Slit centres relative to the mask centre. Irregular on purpose: the
    /// correlation of a periodic mask has competing peaks.
    std::vector<double> slit_centers_mm{-1.650, -0.858, 0.066, 0.726, 1.628};
    /// Filter hue of each mirror; empty means evenly spaced starting at 0.
    std::vector<double> mirror_hues_deg;
    double single_sector_span_deg = 35.0;
    double two_sector_span_deg = 10.0;
    /// Ratio between the effective sensitivity and d / pixel pitch.
    double optical_gain = 1.375;
    double color_saturation = 0.3;
    /// HSI intensity of a fully lit shadow (full scale is 1.0 per channel).
    double shadow_intensity = 0.6;
    /// White background light, fraction of full scale. After per-channel
    /// normalisation it is what carries the mirror colour in unlit columns.
    double ambient_level = 0.3;
    /// Brightness of each of the two patterns in a two-shadow sector.
    double two_shadow_weight = 0.8;
    /// Scales the hue change across a pattern. Column k sees the mirror at an
    /// extra incidence angle atan((k - pattern centre) / S), which shifts the
    /// filter hue by the same per-degree drift as a rotation would.
    double column_hue_gain = 0.6;
    /// Gaussian fall-off of the beam around the pattern centre, in pixels;
    /// 0 means flat. It travels with the pattern.
    double illumination_sigma_px = 600.0;

    /// Effective sensitivity S in pixels per radian.
    double sensitivity_px_per_rad() const noexcept
    {
        return optical_gain * mask_sensor_distance_mm / (pixel_pitch_um * 1e-3);
    }
    double slit_width_px() const noexcept { return slit_width_mm / (pixel_pitch_um * 1e-3); }

    SectorLayout layout() const { return SectorLayout(n_mirrors, single_sector_span_deg, two_sector_span_deg); }

    double mirror_hue(int m) const
    {
        if (mirror_hues_deg.empty())
            return 360.0 * m / n_mirrors;
        return mirror_hues_deg.at(static_cast<std::size_t>(m));
    }

    /// Half-extent of the slit pattern (outermost slit edge) in pixels.
    double pattern_half_extent_px() const
    {
        double m = 0.0;
        for (double c : slit_centers_mm)
            m = std::max(m, std::abs(c));
        return m / (pixel_pitch_um * 1e-3) + slit_width_px();
    }

    /// Offset of each pattern from the common shift in a two-shadow sector;
    /// makes every pattern position continuous across sector seams.
    double two_shadow_offset_px() const
    {
        return sensitivity_px_per_rad()
            * (std::tan(deg_to_rad(0.5 * single_sector_span_deg)) + std::tan(deg_to_rad(0.5 * two_sector_span_deg)));
    }

    void validate() const
    {
        (void)layout();
        if (!(sensitivity_px_per_rad() > 0.0))
            throw ConfigError("sensitivity must be positive");
        if (sensor_width_px <= 0 || sensor_height_px <= 0)
            throw ConfigError("sensor dimensions must be positive");
        if (slit_count <= 0 || static_cast<int>(slit_centers_mm.size()) != slit_count)
            throw ConfigError("slit_centers_mm must list slit_count positions");
        if (!(slit_width_mm > 0.0))
            throw ConfigError("slit width must be positive");
        if (!mirror_hues_deg.empty() && static_cast<int>(mirror_hues_deg.size()) != n_mirrors)
            throw ConfigError("mirror_hues_deg must list one hue per mirror");
        if (2.0 * pattern_half_extent_px() >= sensor_width_px)
            throw ConfigError("slit pattern does not fit within the sensor width");
        if (color_saturation < 0.0 || color_saturation > 1.0)
            throw ConfigError("color_saturation must be in [0, 1]");
        if (!(shadow_intensity > 0.0) || ambient_level < 0.0 || two_shadow_weight <= 0.0
            || !std::isfinite(column_hue_gain) || illumination_sigma_px < 0.0)
            throw ConfigError("illumination levels must be positive");
    }

    bool operator==(const EncoderGeometry&) const = default;
};

/// Error sources injected on top of the ideal measurement function.
struct ImperfectionConfig {
    double backlash_arcsec = 30.0;
    double nonlinearity_amp_arcsec = 420.0;
    double hue_drift_deg_per_deg = 0.8;
    double pixel_noise_sigma = 0.01;
    double eccentricity_mm = 0.0;
    double eccentricity_gain_arcsec_per_mm = 212.5;
    double cal_standard_resolution_arcsec = 0.21;
    double excluded_band_deg = 2.0;

    static ImperfectionConfig ideal()
    {
        ImperfectionConfig c;
        c.backlash_arcsec = 0.0;
        c.nonlinearity_amp_arcsec = 0.0;
        c.hue_drift_deg_per_deg = 0.0;
        c.pixel_noise_sigma = 0.0;
        c.eccentricity_mm = 0.0;
        c.cal_standard_resolution_arcsec = 0.0;
        return c;
    }

    void validate() const
    {
        for (double v : {backlash_arcsec, nonlinearity_amp_arcsec, hue_drift_deg_per_deg, pixel_noise_sigma,
                         eccentricity_mm, eccentricity_gain_arcsec_per_mm, cal_standard_resolution_arcsec,
                         excluded_band_deg})
            if (!(v >= 0.0))
                throw ConfigError("imperfection magnitudes must be finite and >= 0");
        if (excluded_band_deg >= 180.0)
            throw ConfigError("excluded band leaves no measurable range");
    }

    bool operator==(const ImperfectionConfig&) const = default;
};

/// HSI -> RGB (Gonzalez & Woods sector formulas), hue in degrees.
inline std::array<double, 3> hsi_to_rgb(double hue_deg, double sat, double intensity)
{
    double h = std::fmod(hue_deg, 360.0);
    if (h < 0.0)
        h += 360.0;
    auto lobe = [&](double hh) {
        return intensity * (1.0 + sat * std::cos(deg_to_rad(hh)) / std::cos(deg_to_rad(60.0 - hh)));
    };
    const double lo = intensity * (1.0 - sat);
    if (h < 120.0) {
        const double r = lobe(h);
        return {r, 3.0 * intensity - r - lo, lo};
    }
    if (h < 240.0) {
        const double g = lobe(h - 120.0);
        return {lo, g, 3.0 * intensity - g - lo};
    }
    const double b = lobe(h - 240.0);
    return {3.0 * intensity - b - lo, lo, b};
}

/// Forward model. Stateless after construction and safe to share.
class Simulator {
public:
    Simulator(EncoderGeometry geometry, ImperfectionConfig imperfections)
        : geo_(std::move(geometry)), imp_(imperfections), layout_(geo_.layout())
    {
        geo_.validate();
        imp_.validate();
        S_ = geo_.sensitivity_px_per_rad();
        const double pitch_mm = geo_.pixel_pitch_um * 1e-3;
        slit_w_ = geo_.slit_width_px();
        for (double c : geo_.slit_centers_mm)
            slits_.push_back(c / pitch_mm);
        std::sort(slits_.begin(), slits_.end());
        x0_ = 0.5 * (geo_.sensor_width_px - 1);
        p_ = geo_.two_shadow_offset_px();
        half_extent_ = geo_.pattern_half_extent_px();
    }

    const EncoderGeometry& geometry() const noexcept { return geo_; }
    const ImperfectionConfig& imperfections() const noexcept { return imp_; }
    const SectorLayout& layout() const noexcept { return layout_; }
    double sensitivity() const noexcept { return S_; }

    double backlash_term_deg(double beta_deg, Direction dir) const
    {
        // Axis play: a direction-signed offset plus a once-per-turn component.
        const double profile = 1.0 + std::numbers::sqrt2 * std::sin(deg_to_rad(beta_deg) + 0.7);
        return arcsec_to_deg(direction_sign(dir) * imp_.backlash_arcsec * profile);
    }

    double nonlinearity_term_deg(double beta_deg) const
    {
        if (imp_.nonlinearity_amp_arcsec == 0.0)
            return 0.0;
        const int i = layout_.sector_of(beta_deg);
        const Sector& s = layout_[i];
        const double n = geo_.n_mirrors;
        const double b = deg_to_rad(beta_deg);
        const double nominal = std::tan(deg_to_rad(angle_diff_deg(beta_deg, s.center_deg())))
            / std::tan(deg_to_rad(0.5 * s.span_deg));
        const double v = 1.0 * std::sin(n * b + 0.9 * i) + 0.5 * std::sin(2.0 * n * b + 2.1 * i + 0.4)
            + 0.6 * nominal * nominal * nominal;
        return arcsec_to_deg(imp_.nonlinearity_amp_arcsec * v);
    }

    double eccentricity_term_deg(double beta_deg) const
    {
        return arcsec_to_deg(imp_.eccentricity_gain_arcsec_per_mm * imp_.eccentricity_mm
                             * std::sin(deg_to_rad(beta_deg) + 0.5));
    }

    /// Angle the optics actually respond to.
    double effective_angle_deg(double beta_deg, Direction dir) const
    {
        return beta_deg + backlash_term_deg(beta_deg, dir) + nonlinearity_term_deg(beta_deg)
            + eccentricity_term_deg(beta_deg);
    }

    /// Pattern shift relative to the sector-centre reference: S * tan(beta_eff - beta_s).
    double shift_px(double beta_deg, Direction dir) const
    {
        const int i = layout_.sector_of(beta_deg);
        const double d = angle_diff_deg(effective_angle_deg(beta_deg, dir), layout_[i].center_deg());
        return S_ * std::tan(deg_to_rad(d));
    }

    /// Noiseless per-column channel values (one row) laid out [R(K), G(K), B(K)].
    std::vector<double> column_profile(double beta_deg, Direction dir) const
    {
        const double beta = wrap_deg(beta_deg);
        const int K = geo_.sensor_width_px;
        const int si = layout_.sector_of(beta);
        const Sector& sec = layout_[si];
        const double s = shift_px(beta, dir);

        struct Component {
            double offset, weight, hue;
        };
        std::vector<Component> comps;
        auto hue_of = [&](int m) {
            return geo_.mirror_hue(m)
                + imp_.hue_drift_deg_per_deg * angle_diff_deg(beta, layout_.mirror_center_deg(m));
        };
        if (sec.kind == SectorKind::single_shadow) {
            comps.push_back({0.0, 1.0, hue_of(sec.mirror_a)});
        } else {
            comps.push_back({+p_, geo_.two_shadow_weight, hue_of(sec.mirror_a)});
            comps.push_back({-p_, geo_.two_shadow_weight, hue_of(sec.mirror_b)});
        }

        std::vector<double> out(3 * static_cast<std::size_t>(K), geo_.ambient_level);
        for (const auto& c : comps) {
            const double center = x0_ + s + c.offset;
            if (center - half_extent_ < 0.0 || center + half_extent_ > K - 1)
                throw RangeError("shift exceeds sensor width at beta = " + std::to_string(beta) + " deg", beta);
            const double col_drift = imp_.hue_drift_deg_per_deg * geo_.column_hue_gain;
            for (double slit : slits_) {
                const double xc = center + slit;
                const int k0 = std::max(0, static_cast<int>(std::ceil(xc - slit_w_)));
                const int k1 = std::min(K - 1, static_cast<int>(std::floor(xc + slit_w_)));
                for (int k = k0; k <= k1; ++k) {
                    const double u = (k - xc) / slit_w_;
                    if (std::abs(u) >= 1.0)
                        continue;
                    // Triangular slit image (source as wide as the slit). A
                    // rounded top would leave several near-white columns per
                    // slit whose hue is set by noise alone.
                    double v = c.weight * (1.0 - std::abs(u));
                    if (geo_.illumination_sigma_px > 0.0) {
                        const double z = (k - center) / geo_.illumination_sigma_px;
                        v *= std::exp(-0.5 * z * z);
                    }
                    const double hue = c.hue + col_drift * rad_to_deg(std::atan((k - center) / S_));
                    const auto rgb = hsi_to_rgb(hue, geo_.color_saturation, geo_.shadow_intensity);
                    for (int ch = 0; ch < 3; ++ch)
                        out[static_cast<std::size_t>(ch) * K + k] += v * rgb[ch];
                }
            }
        }
        return out;
    }

    /// Column sums over all sensor rows, with per-pixel Gaussian noise folded
    /// into one N(0, sigma * sqrt(J)) draw per column.
    std::vector<double> column_sums(double beta_deg, Direction dir, std::mt19937_64* rng) const
    {
        auto prof = column_profile(beta_deg, dir);
        const double J = geo_.sensor_height_px;
        const double sd = imp_.pixel_noise_sigma * std::sqrt(J);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (double& v : prof) {
            v *= J;
            if (rng && sd > 0.0)
                v += sd * noise(*rng);
        }
        return prof;
    }

    ShadowImage render_image(double beta_deg, Direction dir, std::uint64_t seed) const
    {
        auto rng = stream_rng(seed, 0);
        return render_image(beta_deg, dir, rng);
    }

    ShadowImage render_image(double beta_deg, Direction dir, std::mt19937_64& rng) const
    {
        const auto prof = column_profile(beta_deg, dir);
        const int K = geo_.sensor_width_px;
        ShadowImage img(K, geo_.sensor_height_px);
        std::normal_distribution<double> noise(0.0, 1.0);
        const double sd = imp_.pixel_noise_sigma;
        for (int j = 0; j < img.height; ++j)
            for (int k = 0; k < K; ++k)
                for (int ch = 0; ch < 3; ++ch) {
                    double v = prof[static_cast<std::size_t>(ch) * K + k];
                    if (sd > 0.0)
                        v += sd * noise(rng);
                    img.at(j, k, ch) = static_cast<float>(v);
                }
        return img;
    }

    /// Stored reference of a sector: intensity vectors of the noiseless,
    /// imperfection-free image at the sector centre.
    IntensityVectors reference_intensity(int sector) const
    {
        const Simulator ideal(geo_, ImperfectionConfig::ideal());
        const auto sums = ideal.column_sums(layout_[sector].center_deg(), Direction::clockwise, nullptr);
        return intensity_from_column_sums<double>(sums, static_cast<std::size_t>(geo_.sensor_width_px));
    }

private:
    EncoderGeometry geo_;
    ImperfectionConfig imp_;
    SectorLayout layout_;
    double S_ = 0.0;
    double slit_w_ = 0.0;
    std::vector<double> slits_;
    double x0_ = 0.0;
    double p_ = 0.0;
    double half_extent_ = 0.0;
};

inline ShadowImage render_image(double beta_deg, const EncoderGeometry& geometry,
                                const ImperfectionConfig& imperfections, Direction dir, std::uint64_t seed)
{
    return Simulator(geometry, imperfections).render_image(beta_deg, dir, seed);
}

struct Sample {
    CompactIntensity intensity;
    std::optional<ShadowImage> image;
    /// What the calibration standard reports: the mechanical angle, quantised.
    double beta_ref_deg = 0.0;
    Direction direction = Direction::clockwise;
    /// Simulator ground truth; never consumed by unsupervised labelling.
    int true_sector = -1;
    double eccentricity_mm = 0.0;
    std::uint64_t timestamp = 0;
    /// Sector label assigned by a labeller (or read from a manifest).
    std::optional<int> label;
};

struct Schedule {
    double step_deg = 0.8;
    double step_jitter_frac = 0.5;
    bool keep_images = false;

    bool operator==(const Schedule&) const = default;
};

struct Dataset {
    EncoderGeometry geometry;
    ImperfectionConfig imperfections;
    Schedule schedule;
    std::uint64_t seed = 0;
    std::vector<Sample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    SectorLayout layout() const { return geometry.layout(); }
};

inline double quantize_deg(double beta_deg, double resolution_arcsec)
{
    if (resolution_arcsec <= 0.0)
        return beta_deg;
    const double q = arcsec_to_deg(resolution_arcsec);
    return std::round(beta_deg / q) * q;
}

/// Mechanical angles and directions of an alternating sweep with jittered
/// steps, confined to the measurable range.
inline std::vector<std::pair<double, Direction>> sweep_positions(std::size_t n, const ImperfectionConfig& imp,
                                                                 const Schedule& sched, std::uint64_t seed)
{
    const double hi = 180.0 - std::max(imp.excluded_band_deg, 1e-9);
    const double lo = -hi;
    auto rng = stream_rng(seed, ~std::uint64_t{0});
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<std::pair<double, Direction>> out;
    out.reserve(n);
    double beta = lo + sched.step_deg * u01(rng);
    Direction dir = Direction::clockwise;
    while (out.size() < n) {
        out.emplace_back(beta, dir);
        const double step = sched.step_deg * (1.0 + sched.step_jitter_frac * (2.0 * u01(rng) - 1.0));
        beta += direction_sign(dir) * step;
        if (beta > hi) {
            beta = std::max(lo, 2.0 * hi - beta);
            dir = Direction::counter_clockwise;
        } else if (beta < lo) {
            beta = std::min(hi, 2.0 * lo - beta);
            dir = Direction::clockwise;
        }
    }
    return out;
}

/// Emulated calibration run. A pure function of its arguments: every sample
/// draws its noise from its own (seed, index) stream.
inline Dataset generate_dataset(std::size_t n_samples, const EncoderGeometry& geometry,
                                const ImperfectionConfig& imperfections, const Schedule& schedule,
                                std::uint64_t seed)
{
    if (n_samples < 1)
        throw ConfigError("generate_dataset: n_samples must be >= 1");
    const Simulator sim(geometry, imperfections);
    Dataset ds;
    ds.geometry = geometry;
    ds.imperfections = imperfections;
    ds.schedule = schedule;
    ds.seed = seed;
    ds.samples.reserve(n_samples);
    const auto positions = sweep_positions(n_samples, imperfections, schedule, seed);
    const auto K = static_cast<std::size_t>(geometry.sensor_width_px);
    const SectorLayout& layout = sim.layout();
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto [beta, dir] = positions[i];
        if (std::abs(beta) > 180.0 - imperfections.excluded_band_deg)
            continue;
        auto rng = stream_rng(seed, i);
        Sample s;
        if (schedule.keep_images) {
            s.image = sim.render_image(beta, dir, rng);
            s.intensity = intensity_vectors(*s.image).cast<float>();
        } else {
            const auto sums = sim.column_sums(beta, dir, &rng);
            s.intensity = intensity_from_column_sums<float>(sums, K);
        }
        s.beta_ref_deg = quantize_deg(beta, imperfections.cal_standard_resolution_arcsec);
        s.direction = dir;
        s.true_sector = layout.sector_of(beta);
        s.eccentricity_mm = imperfections.eccentricity_mm;
        s.timestamp = i;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

} // namespace astras

#endif // ASTRAS_SIMKIT_HPP
