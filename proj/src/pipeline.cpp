#include "fcid/pipeline.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "fcid/error.hpp"
#include "fcid/image_io.hpp"
#include "fcid/parallel.hpp"

namespace fcid {
namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Subsampling seed for the i-th training image's GMM rows.
std::uint64_t gmm_sample_seed(std::uint64_t seed, std::size_t i) noexcept {
    return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i) + 1));
}

// Subsampling seed for encoding; identical for every image so that an image's
// encoding never depends on its position in a batch.
std::uint64_t encode_sample_seed(std::uint64_t seed) noexcept { return splitmix64(seed ^ 0xE7C0DEULL); }

template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw Error(e.what(), stage);
    } catch (const std::exception& e) {
        throw Error(e.what(), stage);
    }
}

void require_both_classes(std::span<const Label> labels, std::span<const std::size_t> idx) {
    bool nat = false, fake = false;
    for (std::size_t i : idx) (labels[i] == Label::fake ? fake : nat) = true;
    if (!nat || !fake) throw Error("training data must contain natural and fake images");
}

}  // namespace

ImageSource ImageSource::from_manifest(const DatasetManifest& manifest) {
    ImageSource s;
    for (const auto& e : manifest.entries) {
        s.ids.push_back(e.path);
        s.labels.push_back(e.label);
    }
    s.groups = manifest.groups();
    s.load = [manifest](std::size_t i) { return read_image(manifest.resolve(manifest.entries.at(i))); };
    return s;
}

ImageSource ImageSource::from_images(std::span<const RgbImage> images, std::span<const Label> labels) {
    if (images.size() != labels.size()) throw Error("images and labels differ in length");
    ImageSource s;
    for (std::size_t i = 0; i < images.size(); ++i) {
        s.ids.push_back("#" + std::to_string(i));
        s.labels.push_back(labels[i]);
        s.groups.push_back(static_cast<std::int64_t>(i));
    }
    s.load = [images](std::size_t i) { return images[i]; };
    return s;
}

PreparedDataset PreparedDataset::prepare(Method method, const ImageSource& source,
                                         const PipelineConfig& cfg) {
    PreparedDataset d;
    d.method_ = method;
    d.cfg_ = cfg;
    d.labels_ = source.labels;
    d.ids_ = source.ids;
    d.groups_ = source.groups;
    if (d.groups_.empty())
        for (std::size_t i = 0; i < source.size(); ++i) d.groups_.push_back(static_cast<std::int64_t>(i));

    const std::size_t n = source.size();
    if (method == Method::hist) d.hists_.resize(n);
    else {
        d.gmm_rows_.resize(n);
        d.encode_rows_.resize(n);
    }
    staged("ingest", [&] {
        parallel_for(n, cfg.threads, [&](std::size_t i) {
            RgbImage image;
            try {
                image = source.load(i);
            } catch (const std::exception& e) {
                throw Error(source.ids[i] + ": " + e.what());
            }
            const ChannelPlanes planes = extract_channel_planes(image, cfg.channels);
            if (method == Method::hist) {
                d.hists_[i] = image_histograms(planes, cfg.hist.hist);
            } else {
                d.gmm_rows_[i] = image_samples(planes, cfg.fe.gmm_samples_per_image, gmm_sample_seed(cfg.seed, i));
                d.encode_rows_[i] = image_samples(planes, cfg.fe.encode_samples_per_image, encode_sample_seed(cfg.seed));
            }
        });
        return 0;
    });
    return d;
}

std::vector<std::size_t> PreparedDataset::all() const {
    std::vector<std::size_t> idx(size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

FcidModel PreparedDataset::fit_representation(std::span<const std::size_t> train) const {
    require_both_classes(labels_, train);
    FcidModel m;
    m.method = method_;
    m.channels = cfg_.channels;
    m.svm_config = cfg_.svm_for(method_);
    m.provenance.seed = cfg_.seed;
    m.provenance.training_images = train.size();
    for (std::size_t i : train) m.provenance.training_paths.push_back(ids_[i]);

    if (method_ == Method::hist) {
        staged("class-distributions", [&] {
            std::vector<ImageHistograms> hs;
            std::vector<Label> ls;
            for (std::size_t i : train) {
                hs.push_back(hists_[i]);
                ls.push_back(labels_[i]);
            }
            HistSection sec;
            sec.config = cfg_.hist.hist;
            sec.distributions = class_distributions(hs, ls, sec.config);
            sec.bins = distinctive_bins(sec.distributions);
            m.hist = std::move(sec);
            return 0;
        });
    } else {
        staged("gmm", [&] {
            std::vector<Sample> pooled;
            for (std::size_t i : train) pooled.insert(pooled.end(), gmm_rows_[i].begin(), gmm_rows_[i].end());
            FeSection sec;
            sec.components = cfg_.fe.components;
            sec.gmm_samples_per_image = cfg_.fe.gmm_samples_per_image;
            sec.encode_samples_per_image = cfg_.fe.encode_samples_per_image;
            sec.em = cfg_.fe.em;
            sec.em.seed = cfg_.seed;
            sec.fisher = cfg_.fe.fisher;
            sec.gmm = fit_gmm(pooled, sec.components, sec.em).model;
            m.fe = std::move(sec);
            return 0;
        });
    }
    return m;
}

LabeledFeatures PreparedDataset::features(const FcidModel& model, std::span<const std::size_t> indices) const {
    if (model.method != method_) throw Error("model method does not match prepared data");
    LabeledFeatures out;
    out.rows.resize(indices.size());
    staged(method_ == Method::hist ? "hist-features" : "fisher-encoding", [&] {
        parallel_for(indices.size(), cfg_.threads, [&](std::size_t k) {
            const std::size_t i = indices[k];
            if (method_ == Method::hist) {
                const HistFeature f = hist_feature(hists_[i], model.hist->bins);
                out.rows[k].assign(f.begin(), f.end());
            } else {
                out.rows[k] = encode_fisher(model.fe->gmm, encode_rows_[i], model.fe->fisher);
            }
        });
        return 0;
    });
    for (std::size_t i : indices) {
        out.labels.push_back(labels_[i]);
        out.groups.push_back(groups_[i]);
    }
    return out;
}

FcidModel PreparedDataset::train(std::span<const std::size_t> train) const {
    FcidModel m = fit_representation(train);
    const LabeledFeatures feats = features(m, train);
    m.svm = staged("svm", [&] { return train_svm(feats, m.svm_config, cfg_.seed); });
    return m;
}

std::vector<double> PreparedDataset::probabilities(const FcidModel& model,
                                                   std::span<const std::size_t> indices) const {
    const LabeledFeatures feats = features(model, indices);
    std::vector<double> p(feats.size());
    for (std::size_t k = 0; k < feats.size(); ++k) p[k] = model.svm.predict_probability(feats.rows[k]);
    return p;
}

FcidModel train_fcid(Method method, const ImageSource& source, const PipelineConfig& cfg) {
    if (source.size() == 0) throw Error("no training images", "ingest");
    const PreparedDataset data = PreparedDataset::prepare(method, source, cfg);
    return data.train(data.all());
}

FcidModel train_fcid_hist(const ImageSource& source, const PipelineConfig& cfg) {
    return train_fcid(Method::hist, source, cfg);
}

FcidModel train_fcid_fe(const ImageSource& source, const PipelineConfig& cfg) {
    return train_fcid(Method::fe, source, cfg);
}

FcidModel train_fcid(Method method, const DatasetManifest& manifest, const PipelineConfig& cfg) {
    const DatasetManifest train = manifest.select(Split::train);
    std::string missing;
    for (const auto& e : train.entries)
        if (!std::filesystem::exists(train.resolve(e)))
            missing += "\n  line " + std::to_string(e.line) + ": " + e.path;
    if (!missing.empty()) throw Error("missing training images:" + missing, "ingest");
    return train_fcid(method, ImageSource::from_manifest(train), cfg);
}

FeatureRow model_features(const FcidModel& model, const RgbImage& image) {
    const ChannelPlanes planes = extract_channel_planes(image, model.channels);
    if (model.method == Method::hist) {
        if (!model.hist) throw Error("model has no histogram section");
        const HistFeature f = hist_feature(planes, model.hist->bins, model.hist->config);
        return FeatureRow(f.begin(), f.end());
    }
    if (!model.fe) throw Error("model has no GMM section");
    const auto rows = image_samples(planes, model.fe->encode_samples_per_image,
                                    encode_sample_seed(model.provenance.seed));
    return encode_fisher(model.fe->gmm, rows, model.fe->fisher);
}

Detection detect_image(const FcidModel& model, const RgbImage& image) {
    Detection d;
    d.grayscale = image.from_grayscale;
    d.probability = model.svm.predict_probability(model_features(model, image));
    d.label = model.svm.classify_probability(d.probability);
    return d;
}

std::vector<Detection> detect(const FcidModel& model, const ImageSource& source, int threads) {
    std::vector<Detection> out(source.size());
    parallel_for(source.size(), threads, [&](std::size_t i) {
        try {
            out[i] = detect_image(model, source.load(i));
        } catch (const std::exception& e) {
            out[i] = Detection{};
            out[i].error = e.what();
        }
        out[i].id = source.ids[i];
    });
    return out;
}

std::vector<Detection> detect_fcid_hist(const FcidModel& model, const ImageSource& source, int threads) {
    if (model.method != Method::hist) throw Error("model is not a hist model");
    return detect(model, source, threads);
}

std::vector<Detection> detect_fcid_fe(const FcidModel& model, const ImageSource& source, int threads) {
    if (model.method != Method::fe) throw Error("model is not an fe model");
    return detect(model, source, threads);
}

void check_disjoint_from_training(const FcidModel& model, const DatasetManifest& manifest) {
    const std::set<std::string> trained(model.provenance.training_paths.begin(),
                                        model.provenance.training_paths.end());
    for (const auto& e : manifest.entries)
        if (trained.count(e.path))
            throw Error("line " + std::to_string(e.line) + ": '" + e.path +
                        "' was used to train this model", "detect");
}

CrossValidationReport cross_validate(const PreparedDataset& data, std::size_t folds, std::uint64_t seed,
                                     int threads) {
    const auto split = k_fold_split(data.size(), folds, seed, data.groups());
    CrossValidationReport report;
    report.folds.resize(split.size());
    parallel_for(split.size(), threads, [&](std::size_t f) {
        std::vector<std::size_t> train;
        for (std::size_t g = 0; g < split.size(); ++g)
            if (g != f) train.insert(train.end(), split[g].begin(), split[g].end());
        std::sort(train.begin(), train.end());
        const FcidModel model = data.train(train);
        const auto probs = data.probabilities(model, split[f]);
        std::vector<Label> truth;
        for (std::size_t i : split[f]) truth.push_back(data.labels()[i]);
        const EvalReport r = evaluate(probs, truth, model.svm.threshold);
        const ThresholdSweep sweep = threshold_sweep(probs, truth);
        report.folds[f] = {f, split[f].size(), r.hter, r.roc.auc, sweep.best_threshold, sweep.best_hter};
    });
    std::vector<double> thresholds;
    for (const auto& f : report.folds) {
        report.mean_hter += f.hter;
        report.mean_auc += f.auc;
        thresholds.push_back(f.best_threshold);
    }
    report.mean_hter /= static_cast<double>(report.folds.size());
    report.mean_auc /= static_cast<double>(report.folds.size());
    report.selected_threshold = average_thresholds(thresholds);
    return report;
}

GridResult grid_search_method(const PreparedDataset& data, std::span<const std::size_t> train,
                              std::span<const std::size_t> validate, std::span<const double> c_grid,
                              std::span<const double> g_grid, std::uint64_t seed) {
    const FcidModel rep = data.fit_representation(train);
    const LabeledFeatures train_f = data.features(rep, train);
    const LabeledFeatures val_f = data.features(rep, validate);
    return grid_search(train_f, val_f, c_grid, g_grid, rep.svm_config, seed);
}

ClassDistributions dataset_distributions(const ImageSource& source, const PipelineConfig& cfg) {
    std::vector<ImageHistograms> hs(source.size());
    staged("ingest", [&] {
        parallel_for(source.size(), cfg.threads, [&](std::size_t i) {
            try {
                hs[i] = image_histograms(extract_channel_planes(source.load(i), cfg.channels), cfg.hist.hist);
            } catch (const std::exception& e) {
                throw Error(source.ids[i] + ": " + e.what());
            }
        });
        return 0;
    });
    return staged("class-distributions", [&] { return class_distributions(hs, source.labels, cfg.hist.hist); });
}

}  // namespace fcid
