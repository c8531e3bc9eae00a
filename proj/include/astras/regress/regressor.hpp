#ifndef ASTRAS_REGRESS_REGRESSOR_HPP
#define ASTRAS_REGRESS_REGRESSOR_HPP

#include "astras/regress/ffnn.hpp"
#include "astras/regress/gp.hpp"
#include "astras/regress/model_function.hpp"
#include "astras/regress/polynomial.hpp"

#include <optional>
#include <variant>

namespace astras {

enum class RegressorKind { model_function, polynomial, ffnn, gp };

inline std::string to_string(RegressorKind k)
{
    switch (k) {
    case RegressorKind::model_function: return "model";
    case RegressorKind::polynomial: return "poly";
    case RegressorKind::ffnn: return "ffnn";
    case RegressorKind::gp: return "gp";
    }
    return "?";
}

inline RegressorKind regressor_kind_from_string(const std::string& s)
{
    if (s == "model" || s == "model_function")
        return RegressorKind::model_function;
    if (s == "poly" || s == "polynomial")
        return RegressorKind::polynomial;
    if (s == "ffnn")
        return RegressorKind::ffnn;
    if (s == "gp")
        return RegressorKind::gp;
    throw ConfigError("unknown regressor '" + s + "'");
}

/// One polynomial, or one per rotation direction.
struct PolynomialRegressor {
    Polynomial cw;
    std::optional<Polynomial> ccw;
    bool operator==(const PolynomialRegressor&) const = default;
};

struct RegressorOptions {
    RegressorKind kind = RegressorKind::polynomial;
    /// FFNN / GP only; polynomials use `per_direction_polynomial` instead.
    bool use_direction = false;
    /// Separate coefficient sets for clockwise and counter-clockwise samples.
    bool per_direction_polynomial = false;
    int max_degree_two_shadow = 8;
    int max_degree_single_shadow = 20;
    /// Fixed degree instead of held-out selection (0 = select).
    int degree = 0;
    int hidden_two_shadow = 9;
    int hidden_single_shadow = 18;
    FfnnOptions ffnn;
    GpOptions gp;
};

struct SectorRegressor {
    int sector = -1;
    std::variant<ModelFunction, PolynomialRegressor, Ffnn, GaussianProcess> model;

    RegressorKind kind() const noexcept { return static_cast<RegressorKind>(model.index()); }

    /// beta in degrees, wrapped to (-180, 180].
    double predict(double shift, int direction) const
    {
        switch (model.index()) {
        case 0: return std::get<ModelFunction>(model).predict(shift);
        case 1: {
            const auto& p = std::get<PolynomialRegressor>(model);
            return (direction == 0 && p.ccw) ? p.ccw->predict(shift) : p.cw.predict(shift);
        }
        case 2: return std::get<Ffnn>(model).predict(shift, direction);
        default: return std::get<GaussianProcess>(model).predict(shift, direction);
        }
    }

    bool operator==(const SectorRegressor&) const = default;
};

/// `reference_deg`: angle of the sector's reference pattern, used by the
/// model function.
inline SectorRegressor train_sector_regressor(const std::vector<RegressionSample>& data, const Sector& sector,
                                              double nominal_sensitivity, const RegressorOptions& opt,
                                              std::optional<double> reference_deg = std::nullopt)
{
    SectorRegressor r;
    r.sector = sector.index;
    const double center = sector.center_deg();
    const bool two = sector.kind == SectorKind::two_shadow;
    switch (opt.kind) {
    case RegressorKind::model_function:
        r.model = fit_model_function(data, center, nominal_sensitivity, sector.index, reference_deg);
        break;
    case RegressorKind::polynomial: {
        const int max_deg = two ? opt.max_degree_two_shadow : opt.max_degree_single_shadow;
        auto fit = [&](const std::vector<RegressionSample>& d) {
            return opt.degree > 0 ? fit_polynomial(d, opt.degree, center, sector.index)
                                  : fit_polynomial_select_degree(d, max_deg, center, sector.index);
        };
        PolynomialRegressor p;
        if (opt.per_direction_polynomial) {
            std::vector<RegressionSample> cw, ccw;
            for (const auto& s : data)
                (s.direction ? cw : ccw).push_back(s);
            p.cw = fit(cw);
            p.ccw = fit(ccw);
        } else {
            p.cw = fit(data);
        }
        r.model = std::move(p);
        break;
    }
    case RegressorKind::ffnn: {
        FfnnOptions fo = opt.ffnn;
        fo.seed = splitmix64(opt.ffnn.seed ^ static_cast<std::uint64_t>(sector.index));
        r.model = train_ffnn(data, two ? opt.hidden_two_shadow : opt.hidden_single_shadow, opt.use_direction, center,
                             fo, sector.index);
        break;
    }
    case RegressorKind::gp: {
        GpOptions go = opt.gp;
        go.seed = splitmix64(opt.gp.seed ^ static_cast<std::uint64_t>(sector.index));
        r.model = train_gp(data, opt.use_direction, center, go, sector.index, nominal_sensitivity);
        break;
    }
    }
    return r;
}

inline std::vector<SectorRegressor> train_regressors(const std::vector<std::vector<RegressionSample>>& subsets,
                                                     const SectorLayout& layout, double nominal_sensitivity,
                                                     const RegressorOptions& opt,
                                                     const std::vector<double>& reference_deg = {})
{
    if (static_cast<int>(subsets.size()) != layout.size())
        throw InputError("train_regressors: one subset per sector required");
    if (!reference_deg.empty() && static_cast<int>(reference_deg.size()) != layout.size())
        throw InputError("train_regressors: one reference angle per sector required");
    std::vector<SectorRegressor> out;
    for (int s = 0; s < layout.size(); ++s) {
        std::optional<double> ref;
        if (!reference_deg.empty())
            ref = reference_deg[static_cast<std::size_t>(s)];
        out.push_back(
            train_sector_regressor(subsets[static_cast<std::size_t>(s)], layout[s], nominal_sensitivity, opt, ref));
    }
    return out;
}

} // namespace astras

#endif // ASTRAS_REGRESS_REGRESSOR_HPP
