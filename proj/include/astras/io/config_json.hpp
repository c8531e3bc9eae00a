#ifndef ASTRAS_IO_CONFIG_JSON_HPP
#define ASTRAS_IO_CONFIG_JSON_HPP

// JSON mapping of the configuration structs. Missing keys keep their
// defaults; unknown keys are rejected by `check_keys` where it is called.

#include "astras/pipeline.hpp"

#include <json.hpp>

namespace astras {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EncoderGeometry, n_mirrors, rotor_radius_mm, mask_sensor_distance_mm,
                                                pixel_pitch_um, sensor_width_px, sensor_height_px, slit_count,
                                                slit_width_mm, slit_centers_mm, mirror_hues_deg, single_sector_span_deg,
                                                two_sector_span_deg, optical_gain, color_saturation, shadow_intensity,
                                                ambient_level, two_shadow_weight, column_hue_gain,
                                                illumination_sigma_px)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ImperfectionConfig, backlash_arcsec, nonlinearity_amp_arcsec,
                                                hue_drift_deg_per_deg, pixel_noise_sigma, eccentricity_mm,
                                                eccentricity_gain_arcsec_per_mm, cal_standard_resolution_arcsec,
                                                excluded_band_deg)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Schedule, step_deg, step_jitter_frac, keep_images)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CnnSpec, width, channels, filters, kernel, stride, pool, pool_stride,
                                                dropout, classes)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CnnTrainOptions, learning_rate, momentum, batch_size, max_epochs,
                                                validation_fraction, seed, verbose)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FfnnOptions, restarts, max_epochs, rmse_tol, validation_fraction, seed)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GpOptions, max_points, hyper_points, starts, max_evals, seed)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PreshiftOptions, downsample, spread)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(InferenceOptions, window_half_width, min_confidence)

inline void to_json(nlohmann::json& j, ClassifierKind k) { j = to_string(k); }
inline void from_json(const nlohmann::json& j, ClassifierKind& k) { k = classifier_kind_from_string(j.get<std::string>()); }
inline void to_json(nlohmann::json& j, RegressorKind k) { j = to_string(k); }
inline void from_json(const nlohmann::json& j, RegressorKind& k) { k = regressor_kind_from_string(j.get<std::string>()); }

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ClassifierOptions, kind, n_bins, knn_k, tree_max_splits, svm_C,
                                                cnn_spec, cnn_train)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RegressorOptions, kind, use_direction, per_direction_polynomial,
                                                max_degree_two_shadow, max_degree_single_shadow, degree,
                                                hidden_two_shadow, hidden_single_shadow, ffnn, gp)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CalibrationOptions, classifier, regressor, n_neighbors, use_preshift,
                                                preshift, regress_clockwise_only, inference)

inline std::string to_string(Direction d) { return d == Direction::clockwise ? "cw" : "ccw"; }

inline Direction direction_from_string(const std::string& s)
{
    if (s == "cw" || s == "clockwise")
        return Direction::clockwise;
    if (s == "ccw" || s == "counter_clockwise")
        return Direction::counter_clockwise;
    throw FormatError("unknown direction '" + s + "'");
}

/// Throws ConfigError naming the first key of `j` that `T` does not know.
template <class T>
void check_keys(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected a JSON object");
    const nlohmann::json known = T{};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
        if (known[key].is_object() && value.is_object()) {
            for (const auto& [k2, v2] : value.items())
                if (!known[key].contains(k2))
                    throw ConfigError(where + "." + key + ": unknown key '" + k2 + "'");
        }
    }
}

/// Parses `j` into T, turning JSON type errors into ConfigError.
template <class T>
T parse_config(const nlohmann::json& j, const std::string& where)
{
    check_keys<T>(j, where);
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

} // namespace astras

#endif // ASTRAS_IO_CONFIG_JSON_HPP
