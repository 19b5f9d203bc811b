#include "fcid/fisher.hpp"

#include <cmath>

#include "fcid/error.hpp"

namespace fcid {

FisherGradients fisher_gradients(const GmmModel& model, std::span<const Sample> subset) {
    if (subset.empty()) throw Error("no samples for image");
    const std::size_t k = model.components();
    if (k == 0) throw Error("GMM has no components");

    std::vector<double> resp_sum(k, 0.0);
    FisherGradients g;
    g.weight.assign(k, 0.0);
    g.mean.assign(k * kSampleDims, 0.0);
    g.sigma.assign(k * kSampleDims, 0.0);

    std::vector<Sample> sd(k);
    for (std::size_t a = 0; a < k; ++a)
        for (int v = 0; v < kSampleDims; ++v) sd[a][v] = std::sqrt(model.variances[a][v]);

    for (const auto& x : subset) {
        const auto gamma = posteriors(model, x);
        for (std::size_t a = 0; a < k; ++a) {
            const double ga = gamma[a];
            resp_sum[a] += ga;
            for (int v = 0; v < kSampleDims; ++v) {
                const double z = (x[v] - model.means[a][v]) / sd[a][v];
                // d log p / d mu = gamma (x - mu) / sigma^2
                g.mean[a * kSampleDims + v] += ga * z / sd[a][v];
                // d log p / d sigma = gamma ((x - mu)^2 / sigma^3 - 1 / sigma)
                g.sigma[a * kSampleDims + v] += ga * (z * z - 1.0) / sd[a][v];
            }
        }
    }

    const double inv_n = 1.0 / static_cast<double>(subset.size());
    for (auto& v : g.mean) v *= inv_n;
    for (auto& v : g.sigma) v *= inv_n;
    // With w_1 = 1 - sum_{a>1} w_a: d log p / d w_a = gamma_a / w_a - gamma_1 / w_1.
    const double first = resp_sum[0] / model.weights[0];
    for (std::size_t a = 1; a < k; ++a) g.weight[a] = (resp_sum[a] / model.weights[a] - first) * inv_n;
    return g;
}

std::vector<double> encode_fisher(const GmmModel& model, std::span<const Sample> subset,
                                  const FisherConfig& cfg) {
    const FisherGradients g = fisher_gradients(model, subset);
    const std::size_t k = model.components();
    const double count = cfg.count_in_normalizer ? static_cast<double>(subset.size()) : 1.0;

    std::vector<double> out(fisher_dimension(k));
    double* weight_block = out.data();
    double* mean_block = weight_block + k;
    double* sigma_block = mean_block + k * kSampleDims;

    const double w1 = model.weights[0];
    for (std::size_t a = 0; a < k; ++a) {
        const double wa = model.weights[a];
        weight_block[a] = g.weight[a] / std::sqrt(count * (1.0 / wa + 1.0 / w1));
        for (int v = 0; v < kSampleDims; ++v) {
            const std::size_t i = a * kSampleDims + v;
            const double var = model.variances[a][v];
            mean_block[i] = g.mean[i] / std::sqrt(count * wa / var);
            sigma_block[i] = g.sigma[i] / std::sqrt(2.0 * count * wa / var);
        }
    }

    if (cfg.signed_sqrt)
        for (auto& v : out) v = std::copysign(std::sqrt(std::abs(v)), v);
    if (cfg.l2_normalize) {
        double norm = 0.0;
        for (double v : out) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (auto& v : out) v /= norm;
    }
    for (double v : out)
        if (!std::isfinite(v)) throw Error("non-finite Fisher vector entry");
    return out;
}

}  // namespace fcid
