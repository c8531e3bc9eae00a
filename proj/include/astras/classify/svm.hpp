#ifndef ASTRAS_CLASSIFY_SVM_HPP
#define ASTRAS_CLASSIFY_SVM_HPP

#include "astras/classify/common.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>

namespace astras {

struct SvmDualSolution {
    Eigen::VectorXd alpha;
    /// Decision function: sum_i alpha_i y_i K(x_i, x) + bias.
    double bias = 0.0;
    int iterations = 0;
    /// Final maximal KKT violation m(alpha) - M(alpha).
    double violation = 0.0;
};

/// Soft-margin dual  min 1/2 a'Qa - e'a,  0 <= a <= C,  y'a = 0,  Q_ij = y_i y_j K_ij,
/// by SMO with second-order working-set selection. Stops when the maximal
/// KKT violation drops below eps.
inline SvmDualSolution solve_svm_dual(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double C, double eps = 1e-6,
                                      int max_iter = 10000000)
{
    const Eigen::Index n = K.rows();
    if (K.cols() != n || y.size() != n || n < 2)
        throw InputError("svm dual: kernel matrix and labels must agree");
    if (!(C > 0.0))
        throw ConfigError("svm: C must be positive");
    constexpr double tau = 1e-12;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);
    auto Q = [&](Eigen::Index i, Eigen::Index j) { return y(i) * y(j) * K(i, j); };
    auto up = [&](Eigen::Index t) { return (y(t) > 0 && a(t) < C) || (y(t) < 0 && a(t) > 0); };
    auto low = [&](Eigen::Index t) { return (y(t) > 0 && a(t) > 0) || (y(t) < 0 && a(t) < C); };

    SvmDualSolution sol;
    int it = 0;
    for (; it < max_iter; ++it) {
        double gmax = -std::numeric_limits<double>::infinity(), gmax2 = gmax;
        Eigen::Index i = -1, j = -1;
        for (Eigen::Index t = 0; t < n; ++t)
            if (up(t) && -y(t) * G(t) >= gmax) {
                gmax = -y(t) * G(t);
                i = t;
            }
        double obj_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            if (!low(t))
                continue;
            gmax2 = std::max(gmax2, y(t) * G(t));
            const double b = gmax + y(t) * G(t);
            if (i >= 0 && b > 0.0) {
                double quad = K(i, i) + K(t, t) - 2.0 * K(i, t);
                if (quad <= 0.0)
                    quad = tau;
                if (-(b * b) / quad <= obj_min) {
                    obj_min = -(b * b) / quad;
                    j = t;
                }
            }
        }
        sol.violation = gmax + gmax2;
        if (i < 0 || j < 0 || gmax + gmax2 < eps)
            break;

        const double ai = a(i), aj = a(j);
        if (y(i) != y(j)) {
            double quad = K(i, i) + K(j, j) + 2.0 * Q(i, j);
            if (quad <= 0.0)
                quad = tau;
            const double delta = (-G(i) - G(j)) / quad;
            const double diff = a(i) - a(j);
            a(i) += delta;
            a(j) += delta;
            if (diff > 0) {
                if (a(j) < 0) {
                    a(j) = 0;
                    a(i) = diff;
                }
            } else if (a(i) < 0) {
                a(i) = 0;
                a(j) = -diff;
            }
            if (diff > 0) {
                if (a(i) > C) {
                    a(i) = C;
                    a(j) = C - diff;
                }
            } else if (a(j) > C) {
                a(j) = C;
                a(i) = C + diff;
            }
        } else {
            double quad = K(i, i) + K(j, j) - 2.0 * Q(i, j);
            if (quad <= 0.0)
                quad = tau;
            const double delta = (G(i) - G(j)) / quad;
            const double sum = a(i) + a(j);
            a(i) -= delta;
            a(j) += delta;
            if (sum > C) {
                if (a(i) > C) {
                    a(i) = C;
                    a(j) = sum - C;
                }
            } else if (a(j) < 0) {
                a(j) = 0;
                a(i) = sum;
            }
            if (sum > C) {
                if (a(j) > C) {
                    a(j) = C;
                    a(i) = sum - C;
                }
            } else if (a(i) < 0) {
                a(i) = 0;
                a(j) = sum;
            }
        }
        const double di = a(i) - ai, dj = a(j) - aj;
        for (Eigen::Index t = 0; t < n; ++t)
            G(t) += Q(t, i) * di + Q(t, j) * dj;
    }
    sol.iterations = it;

    // rho from free variables, otherwise the middle of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    int n_free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yG = y(t) * G(t);
        if (a(t) >= C) {
            if (y(t) < 0)
                ub = std::min(ub, yG);
            else
                lb = std::max(lb, yG);
        } else if (a(t) <= 0) {
            if (y(t) > 0)
                ub = std::min(ub, yG);
            else
                lb = std::max(lb, yG);
        } else {
            ++n_free;
            sum_free += yG;
        }
    }
    const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
    sol.alpha = a;
    sol.bias = -rho;
    return sol;
}

struct SvmMachine {
    int positive = 0;  // class voted for when the decision value is > 0
    int negative = 1;
    std::vector<double> w;
    double bias = 0.0;
    bool operator==(const SvmMachine&) const = default;
};

/// One-vs-one linear SVMs on standardised features.
struct SvmModel {
    int n_classes = 16;
    double C = 1.0;
    Standardizer standardizer;
    std::vector<SvmMachine> machines;
    bool operator==(const SvmModel&) const = default;
};

inline SvmMachine train_linear_svm_pair(const std::vector<std::vector<double>>& Z, const std::vector<double>& y,
                                        double C, double eps)
{
    const auto n = static_cast<Eigen::Index>(Z.size());
    const auto d = static_cast<Eigen::Index>(Z.front().size());
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            X(i, j) = Z[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    const Eigen::MatrixXd K = X * X.transpose();
    const Eigen::VectorXd yy = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    const auto sol = solve_svm_dual(K, yy, C, eps);
    const Eigen::VectorXd w = X.transpose() * (sol.alpha.array() * yy.array()).matrix();
    SvmMachine m;
    m.w.assign(w.data(), w.data() + d);
    m.bias = sol.bias;
    return m;
}

inline SvmModel train_svm(const std::vector<std::vector<double>>& X, const std::vector<int>& y, double C = 1.0,
                          int n_classes = 16, double eps = 1e-6)
{
    check_training_set(X, y, n_classes);
    SvmModel m;
    m.n_classes = n_classes;
    m.C = C;
    m.standardizer = Standardizer::fit(X);
    std::vector<std::vector<double>> Z;
    Z.reserve(X.size());
    for (const auto& x : X)
        Z.push_back(m.standardizer.apply(x));
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < y.size(); ++i)
        by_class[static_cast<std::size_t>(y[i])].push_back(i);
    for (int a = 0; a < n_classes; ++a)
        for (int b = a + 1; b < n_classes; ++b) {
            const auto& ia = by_class[static_cast<std::size_t>(a)];
            const auto& ib = by_class[static_cast<std::size_t>(b)];
            if (ia.empty() || ib.empty())
                continue;
            std::vector<std::vector<double>> Zp;
            std::vector<double> yp;
            for (auto i : ia) {
                Zp.push_back(Z[i]);
                yp.push_back(1.0);
            }
            for (auto i : ib) {
                Zp.push_back(Z[i]);
                yp.push_back(-1.0);
            }
            SvmMachine mach = train_linear_svm_pair(Zp, yp, C, eps);
            mach.positive = a;
            mach.negative = b;
            m.machines.push_back(std::move(mach));
        }
    if (m.machines.empty())
        throw InputError("svm: at least two classes are required");
    return m;
}

inline double decision_value(const SvmMachine& m, std::span<const double> z)
{
    double s = m.bias;
    for (std::size_t j = 0; j < z.size(); ++j)
        s += m.w[j] * z[j];
    return s;
}

/// Majority vote over all pairwise machines; ties go to the lower class index.
inline Prediction predict(const SvmModel& m, std::span<const double> x)
{
    const auto z = m.standardizer.apply(x);
    std::vector<int> votes(static_cast<std::size_t>(m.n_classes), 0);
    for (const auto& mach : m.machines)
        votes[static_cast<std::size_t>(decision_value(mach, z) > 0.0 ? mach.positive : mach.negative)]++;
    const int best = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    // A class can collect at most (number of classes - 1) votes.
    const int possible = std::max(1, static_cast<int>(std::round((1.0 + std::sqrt(1.0 + 8.0 * m.machines.size())) / 2.0)) - 1);
    return {best, static_cast<double>(votes[static_cast<std::size_t>(best)]) / possible};
}

} // namespace astras

#endif // ASTRAS_CLASSIFY_SVM_HPP
