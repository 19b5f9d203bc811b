#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcid/channels.hpp"
#include "fcid/fisher.hpp"
#include "fcid/gmm.hpp"
#include "fcid/histogram.hpp"
#include "fcid/svm.hpp"

namespace fcid {

enum class Method { hist, fe };

std::string_view method_name(Method m) noexcept;
Method parse_method(std::string_view text);

inline constexpr std::string_view kModelFormat = "fcid-model/1";

struct HistSection {
    HistConfig config;
    ClassDistributions distributions;
    DistinctiveBins bins;
};

struct FeSection {
    int components = 8;
    std::size_t gmm_samples_per_image = 2048;
    std::size_t encode_samples_per_image = 0;
    Sample sample_scale = kSampleScale;
    EmConfig em;
    FisherConfig fisher;
    GmmModel gmm;
};

struct Provenance {
    std::uint64_t seed = 0;
    std::vector<std::string> training_paths;
    std::size_t training_images = 0;
    /// Left empty unless a timestamp is requested, so model files stay reproducible.
    std::string created;
};

/// A trained detector: the representation stage for its method plus the SVM.
struct FcidModel {
    Method method = Method::hist;
    ChannelConfig channels;
    std::optional<HistSection> hist;
    std::optional<FeSection> fe;
    SvmConfig svm_config;
    SvmModel svm;
    Provenance provenance;
};

std::string model_to_json(const FcidModel& model);
FcidModel model_from_json(std::string_view text);

void save_model(const FcidModel& model, const std::filesystem::path& path);
FcidModel load_model(const std::filesystem::path& path);

}  // namespace fcid
