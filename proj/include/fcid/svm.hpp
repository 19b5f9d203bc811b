#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fcid/labels.hpp"

namespace fcid {

using FeatureRow = std::vector<double>;

struct LabeledFeatures {
    std::vector<FeatureRow> rows;
    std::vector<Label> labels;
    /// Optional group id per row (e.g. a natural image and its colorized twin);
    /// empty when rows are independent.
    std::vector<std::int64_t> groups;

    std::size_t size() const noexcept { return rows.size(); }
    LabeledFeatures subset(std::span<const std::size_t> indices) const;
};

inline constexpr double kHistThreshold = 0.455;
inline constexpr double kFeThreshold = 0.492;

struct SvmConfig {
    double c = 1.0;
    double gamma = 0.5;
    /// Stopping tolerance on the maximal KKT violation.
    double tolerance = 1e-3;
    long max_iterations = 10'000'000;
    /// Folds used to produce out-of-sample decision values for Platt fitting;
    /// 0 fits on the training decision values directly.
    int platt_folds = 0;
    /// Probability at or above which a sample is labelled fake.
    double threshold = 0.5;

    static SvmConfig hist_defaults() { return {32.0, 0.5, 1e-3, 10'000'000, 0, kHistThreshold}; }
    static SvmConfig fe_defaults() { return {2.0, 0.5, 1e-3, 10'000'000, 0, kFeThreshold}; }
};

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// Per-dimension min-max map learnt from training rows; constant dimensions map to 0.
struct MinMaxScaling {
    std::vector<double> lo;
    std::vector<double> span;

    static MinMaxScaling fit(const std::vector<FeatureRow>& rows);
    FeatureRow apply(std::span<const double> x) const;
};

struct SvmModel {
    std::vector<FeatureRow> support_vectors;  // scaled
    std::vector<double> coefficients;         // alpha_i * y_i
    double bias = 0.0;
    double gamma = 0.5;
    MinMaxScaling scaling;
    double platt_a = -1.0;
    double platt_b = 0.0;
    double threshold = 0.5;

    std::size_t dimension() const noexcept { return scaling.lo.size(); }
    /// Positive values lean fake.
    double decision_value(std::span<const double> x) const;
    double probability_from_decision(double f) const noexcept;
    double predict_probability(std::span<const double> x) const;
    Label classify(std::span<const double> x) const;
    Label classify_probability(double p) const noexcept {
        return p >= threshold ? Label::fake : Label::natural;
    }
};

/// Solution of the soft-margin dual
///   max sum(a) - 1/2 a'Qa,  0 <= a_i <= C,  y'a = 0,  Q_ij = y_i y_j K_ij.
struct DualSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    double objective = 0.0;
    long iterations = 0;
    bool converged = false;
};

/// SMO with maximal-violating-pair working set selection. `labels` are +-1.
DualSolution solve_svm_dual(const std::vector<FeatureRow>& rows, std::span<const int> labels,
                            double c, double gamma, double tolerance, long max_iterations);

struct SvmFit {
    SvmModel model;
    DualSolution dual;
    /// Training rows after min-max scaling, in input order.
    std::vector<FeatureRow> scaled_rows;
};

SvmFit fit_svm(const LabeledFeatures& data, const SvmConfig& cfg, std::uint64_t seed = 0);
SvmModel train_svm(const LabeledFeatures& data, const SvmConfig& cfg, std::uint64_t seed = 0);

struct PlattParameters {
    double a = 0.0;
    double b = 0.0;
};

/// Regularized maximum-likelihood sigmoid fit, P(fake|f) = 1/(1+exp(a f + b)).
PlattParameters fit_platt(std::span<const double> decision_values, std::span<const int> labels);

}  // namespace fcid
