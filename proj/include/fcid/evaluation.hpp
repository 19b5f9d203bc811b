#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <span>
#include <utility>
#include <vector>

#include "fcid/labels.hpp"
#include "fcid/svm.hpp"

namespace fcid {

/// Positives are fake images.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
    double fpr() const;
    double fnr() const;
};

ConfusionCounts confusion(std::span<const Label> truth, std::span<const Label> predicted);

/// (FPR + FNR) / 2. Throws "undefined rate" if either class is absent.
double hter(const ConfusionCounts& counts);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Sweeps every distinct score (ties form one diagonal step); AUC by trapezoids.
RocCurve roc_auc(std::span<const double> scores, std::span<const Label> labels);

struct EvalReport {
    double hter = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
    ConfusionCounts counts;
    RocCurve roc;
};

EvalReport evaluate(std::span<const double> probabilities, std::span<const Label> labels,
                    double threshold);

/// Seeded shuffle then k near-equal disjoint folds. Rows sharing a group id
/// stay in one fold; with empty `groups` every index is its own group.
std::vector<std::vector<std::size_t>> k_fold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                                                   std::span<const std::int64_t> groups = {});

/// Group-preserving seeded split; returns (first, second) with the first
/// holding round(fraction * groups) groups.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double fraction, std::uint64_t seed, std::span<const std::int64_t> groups = {});

/// Powers of two 2^lo .. 2^hi.
std::vector<double> power_grid(int lo = -6, int hi = 6);

struct GridCell {
    double c = 0.0;
    double gamma = 0.0;
    std::optional<double> hter;  // empty when training failed
    std::string error;
};

struct GridResult {
    std::vector<GridCell> cells;  // c-major, in grid order
    double best_c = 0.0;
    double best_gamma = 0.0;
    double best_hter = 0.0;
};

/// Trains one SVM per (c, gamma) and scores HTER on `validate` at base.threshold.
GridResult grid_search(const LabeledFeatures& train, const LabeledFeatures& validate,
                       std::span<const double> c_grid, std::span<const double> g_grid,
                       const SvmConfig& base, std::uint64_t seed = 0);

/// Same, with a seeded group-aware 50/50 split of `data` for validation.
GridResult grid_search(const LabeledFeatures& data, std::span<const double> c_grid,
                       std::span<const double> g_grid, const SvmConfig& base,
                       std::uint64_t seed = 0);

struct ThresholdPoint {
    double threshold = 0.0;
    double hter = 0.0;
};

struct ThresholdSweep {
    std::vector<ThresholdPoint> curve;  // thresholds 0.00, 0.01, ..., 1.00
    double best_threshold = 0.0;
    double best_hter = 0.0;
};

ThresholdSweep threshold_sweep(std::span<const double> probabilities, std::span<const Label> labels);

/// Mean of per-fold optimal thresholds. Values on the 0.01 grid are averaged
/// in integer steps so the mean is the correctly rounded decimal.
double average_thresholds(std::span<const double> thresholds);

}  // namespace fcid
