#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcid/evaluation.hpp"
#include "fcid/manifest.hpp"
#include "fcid/model.hpp"

namespace fcid {

struct HistMethodConfig {
    HistConfig hist;
    SvmConfig svm = SvmConfig::hist_defaults();
};

struct FeMethodConfig {
    int components = 8;
    /// Pixels per image pooled for GMM fitting (0 = all).
    std::size_t gmm_samples_per_image = 2048;
    /// Pixels per image used for Fisher encoding (0 = all).
    std::size_t encode_samples_per_image = 0;
    /// em.seed is replaced by PipelineConfig::seed when fitting.
    EmConfig em;
    FisherConfig fisher;
    SvmConfig svm = SvmConfig::fe_defaults();
};

struct PipelineConfig {
    ChannelConfig channels;
    HistMethodConfig hist;
    FeMethodConfig fe;
    /// Seeds every randomized stage: pixel subsampling, k-means++, SVM folds.
    std::uint64_t seed = 0;
    int threads = 1;

    const SvmConfig& svm_for(Method m) const { return m == Method::hist ? hist.svm : fe.svm; }
    SvmConfig& svm_for(Method m) { return m == Method::hist ? hist.svm : fe.svm; }
};

/// Image access for the pipeline: count, labels, and a loader that may throw.
struct ImageSource {
    std::vector<std::string> ids;
    std::vector<Label> labels;
    std::vector<std::int64_t> groups;
    std::function<RgbImage(std::size_t)> load;

    std::size_t size() const noexcept { return labels.size(); }

    static ImageSource from_manifest(const DatasetManifest& manifest);
    /// Borrows `images`; they must outlive the source.
    static ImageSource from_images(std::span<const RgbImage> images, std::span<const Label> labels);
};

/// Per-image data derived once per method, so that representation fitting,
/// feature extraction and SVM training can be repeated over index subsets
/// (folds, grid cells) without touching the images again.
class PreparedDataset {
public:
    static PreparedDataset prepare(Method method, const ImageSource& source,
                                   const PipelineConfig& cfg);

    Method method() const noexcept { return method_; }
    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    const std::vector<std::int64_t>& groups() const noexcept { return groups_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    /// Class distributions + distinctive bins, or the GMM, fitted on `train`.
    FcidModel fit_representation(std::span<const std::size_t> train) const;
    LabeledFeatures features(const FcidModel& model, std::span<const std::size_t> indices) const;
    /// Representation + SVM on `train`.
    FcidModel train(std::span<const std::size_t> train) const;
    std::vector<double> probabilities(const FcidModel& model,
                                      std::span<const std::size_t> indices) const;

    std::vector<std::size_t> all() const;

private:
    Method method_ = Method::hist;
    PipelineConfig cfg_;
    std::vector<Label> labels_;
    std::vector<std::int64_t> groups_;
    std::vector<std::string> ids_;
    std::vector<ImageHistograms> hists_;
    std::vector<std::vector<Sample>> gmm_rows_;
    std::vector<std::vector<Sample>> encode_rows_;
};

FcidModel train_fcid_hist(const ImageSource& source, const PipelineConfig& cfg);
FcidModel train_fcid_fe(const ImageSource& source, const PipelineConfig& cfg);
FcidModel train_fcid(Method method, const ImageSource& source, const PipelineConfig& cfg);

/// Entries with split=test are never read.
FcidModel train_fcid(Method method, const DatasetManifest& manifest, const PipelineConfig& cfg);

/// The feature vector the model's SVM consumes for one image.
FeatureRow model_features(const FcidModel& model, const RgbImage& image);

struct Detection {
    std::string id;
    std::optional<Label> label;
    double probability = 0.0;
    bool grayscale = false;  // source had no colour; detection is unreliable
    std::string error;  // non-empty when the image could not be processed

    bool ok() const noexcept { return error.empty(); }
};

Detection detect_image(const FcidModel& model, const RgbImage& image);

/// Per-image failures are recorded and the batch continues; output order
/// matches input order regardless of thread count.
std::vector<Detection> detect(const FcidModel& model, const ImageSource& source, int threads = 1);
std::vector<Detection> detect_fcid_hist(const FcidModel& model, const ImageSource& source,
                                        int threads = 1);
std::vector<Detection> detect_fcid_fe(const FcidModel& model, const ImageSource& source,
                                      int threads = 1);

/// Throws if any manifest entry was part of the model's training set.
void check_disjoint_from_training(const FcidModel& model, const DatasetManifest& manifest);

struct FoldResult {
    std::size_t fold = 0;
    std::size_t test_size = 0;
    double hter = 0.0;
    double auc = 0.0;
    double best_threshold = 0.0;
    double best_threshold_hter = 0.0;
};

struct CrossValidationReport {
    std::vector<FoldResult> folds;
    double mean_hter = 0.0;
    double mean_auc = 0.0;
    /// Average of per-fold optimal thresholds.
    double selected_threshold = 0.0;
};

CrossValidationReport cross_validate(const PreparedDataset& data, std::size_t folds,
                                     std::uint64_t seed, int threads = 1);

/// Fits the representation on `train`, then grid-searches the SVM with HTER on `validate`.
GridResult grid_search_method(const PreparedDataset& data, std::span<const std::size_t> train,
                              std::span<const std::size_t> validate,
                              std::span<const double> c_grid, std::span<const double> g_grid,
                              std::uint64_t seed);

/// Class histograms of every entry, pooled per class (the content of the
/// histogram-dump CSV).
ClassDistributions dataset_distributions(const ImageSource& source, const PipelineConfig& cfg);

}  // namespace fcid
