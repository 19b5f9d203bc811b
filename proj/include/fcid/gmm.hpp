#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fcid/channels.hpp"

namespace fcid {

inline constexpr int kSampleDims = 4;

/// One pixel sample: [hue, saturation, dark, bright] after feature scaling.
using Sample = std::array<double, kSampleDims>;

/// Scaling applied to raw plane values; dark/bright are brought to [0,1].
inline constexpr Sample kSampleScale{1.0, 1.0, 1.0 / 255.0, 1.0 / 255.0};

/// Pixel samples of one or more images. Image i owns rows
/// [offsets[i], offsets[i+1]).
struct SampleSet {
    std::vector<Sample> rows;
    std::vector<std::size_t> offsets{0};

    std::size_t images() const noexcept { return offsets.size() - 1; }
    std::span<const Sample> image(std::size_t i) const {
        return std::span<const Sample>(rows).subspan(offsets[i], offsets[i + 1] - offsets[i]);
    }
    void append(std::span<const Sample> image_rows);
};

/// Rows in row-major pixel order. When the image has more than
/// `max_samples` pixels (and max_samples > 0) a seeded uniform subset is kept,
/// still in row-major order.
std::vector<Sample> image_samples(const ChannelPlanes& planes, std::size_t max_samples,
                                  std::uint64_t seed);

SampleSet build_sample_set(const ChannelPlanes& planes, std::size_t max_samples,
                           std::uint64_t seed);

/// Diagonal-covariance Gaussian mixture.
struct GmmModel {
    std::vector<double> weights;
    std::vector<Sample> means;
    std::vector<Sample> variances;

    std::size_t components() const noexcept { return weights.size(); }
};

struct EmConfig {
    int max_iterations = 100;
    /// Stop when the relative mean log-likelihood gain drops below this.
    double tolerance = 1e-6;
    double variance_floor = 1e-6;
    int kmeans_iterations = 10;
    std::uint64_t seed = 0;
};

struct GmmFit {
    GmmModel model;
    /// Mean log-likelihood of the parameters entering each EM iteration,
    /// followed by that of the returned model.
    std::vector<double> log_likelihood;
    int iterations = 0;
    bool converged = false;
};

GmmFit fit_gmm(std::span<const Sample> samples, int components, const EmConfig& cfg = {});

/// log of one weighted component density, log(w_a) + log N(x; mu_a, sigma_a).
double component_log_density(const GmmModel& model, std::size_t a, const Sample& x) noexcept;

/// log sum_a w_a N(x; mu_a, sigma_a), evaluated with log-sum-exp.
double log_density(const GmmModel& model, const Sample& x) noexcept;

/// Mean of log_density over the samples.
double mean_log_likelihood(const GmmModel& model, std::span<const Sample> samples) noexcept;

/// Responsibilities, normalized to sum 1.
std::vector<double> posteriors(const GmmModel& model, const Sample& x);

/// Throws if weights, means or variances violate the model invariants.
void validate(const GmmModel& model, double variance_floor = 0.0);

}  // namespace fcid
