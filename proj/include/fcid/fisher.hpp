#pragma once

#include <span>
#include <vector>

#include "fcid/gmm.hpp"

namespace fcid {

struct FisherConfig {
    /// Use the subset row count N inside the lambda normalizers. Off by
    /// default: gradients are already averaged over N, and the per-sample
    /// Fisher information keeps encodings comparable across image sizes.
    bool count_in_normalizer = false;
    bool signed_sqrt = false;
    bool l2_normalize = false;
};

/// Gradient of the mean log-likelihood of a subset, unscaled.
///  weight: d/dw_a with w_1 eliminated (w_1 = 1 - sum_{a>1} w_a); entry 0 is 0.
///  mean:   d/dmu_{a,v}, laid out a-major.
///  sigma:  d/dsigma_{a,v} where sigma is the standard deviation.
struct FisherGradients {
    std::vector<double> weight;
    std::vector<double> mean;
    std::vector<double> sigma;
};

FisherGradients fisher_gradients(const GmmModel& model, std::span<const Sample> subset);

/// Dimension of an encoding for a model with the given component count.
constexpr std::size_t fisher_dimension(std::size_t components) noexcept {
    return components * (1 + 2 * kSampleDims);
}

/// [weight block | mean block | sigma block], each gradient multiplied by its
/// Fisher-information normalizer.
std::vector<double> encode_fisher(const GmmModel& model, std::span<const Sample> subset,
                                  const FisherConfig& cfg = {});

}  // namespace fcid
