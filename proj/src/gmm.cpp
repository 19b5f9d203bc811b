#include "fcid/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "fcid/error.hpp"

namespace fcid {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)

double squared_distance(const Sample& a, const Sample& b) noexcept {
    double d = 0.0;
    for (int v = 0; v < kSampleDims; ++v) d += (a[v] - b[v]) * (a[v] - b[v]);
    return d;
}

double log_sum_exp(std::span<const double> xs) noexcept {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// k-means++ seeding followed by Lloyd iterations. Returns the centres.
std::vector<Sample> kmeans(std::span<const Sample> xs, int k, int iterations, std::mt19937_64& rng) {
    const std::size_t n = xs.size();
    std::vector<Sample> centres;
    centres.reserve(static_cast<std::size_t>(k));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    centres.push_back(xs[pick(rng)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(xs[i], centres[0]);
    while (static_cast<int>(centres.size()) < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centres.push_back(xs[chosen]);
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], squared_distance(xs[i], centres.back()));
    }

    std::vector<int> assign(n, 0);
    for (int it = 0; it < iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = squared_distance(xs[i], centres[0]);
            for (int a = 1; a < k; ++a) {
                const double d = squared_distance(xs[i], centres[a]);
                if (d < best_d) {
                    best_d = d;
                    best = a;
                }
            }
            changed = changed || assign[i] != best;
            assign[i] = best;
        }
        std::vector<Sample> sums(static_cast<std::size_t>(k), Sample{});
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (int v = 0; v < kSampleDims; ++v) sums[assign[i]][v] += xs[i][v];
            ++counts[assign[i]];
        }
        for (int a = 0; a < k; ++a) {
            if (counts[a] == 0) continue;  // empty cluster keeps its centre
            for (int v = 0; v < kSampleDims; ++v) centres[a][v] = sums[a][v] / counts[a];
        }
        if (it > 0 && !changed) break;
    }
    return centres;
}

GmmModel initial_model(std::span<const Sample> xs, const std::vector<Sample>& centres,
                       double floor) {
    const std::size_t n = xs.size();
    const int k = static_cast<int>(centres.size());

    Sample global_mean{}, global_var{};
    for (const auto& x : xs)
        for (int v = 0; v < kSampleDims; ++v) global_mean[v] += x[v];
    for (auto& m : global_mean) m /= static_cast<double>(n);
    for (const auto& x : xs)
        for (int v = 0; v < kSampleDims; ++v)
            global_var[v] += (x[v] - global_mean[v]) * (x[v] - global_mean[v]);
    for (auto& s : global_var) s = std::max(s / static_cast<double>(n), floor);

    std::vector<Sample> sq(static_cast<std::size_t>(k), Sample{});
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (const auto& x : xs) {
        int best = 0;
        double best_d = squared_distance(x, centres[0]);
        for (int a = 1; a < k; ++a) {
            const double d = squared_distance(x, centres[a]);
            if (d < best_d) {
                best_d = d;
                best = a;
            }
        }
        ++counts[best];
        for (int v = 0; v < kSampleDims; ++v) sq[best][v] += (x[v] - centres[best][v]) * (x[v] - centres[best][v]);
    }

    GmmModel m;
    m.means = centres;
    m.weights.resize(static_cast<std::size_t>(k));
    m.variances.resize(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) {
        // Add-one smoothing keeps every initial weight positive.
        m.weights[a] = (counts[a] + 1.0) / (static_cast<double>(n) + k);
        for (int v = 0; v < kSampleDims; ++v)
            m.variances[a][v] = counts[a] > 1 ? std::max(sq[a][v] / counts[a], floor) : global_var[v];
    }
    return m;
}

struct Accumulator {
    std::vector<double> resp_sum;
    std::vector<Sample> first;
    std::vector<Sample> second;
    double log_likelihood = 0.0;

    explicit Accumulator(std::size_t k) : resp_sum(k, 0.0), first(k, Sample{}), second(k, Sample{}) {}
};

// E-step over all samples, accumulating sufficient statistics in sample order.
Accumulator expectation(const GmmModel& model, std::span<const Sample> xs) {
    const std::size_t k = model.components();
    Accumulator acc(k);
    std::vector<double> logp(k), offset(k);
    std::vector<Sample> inv_var(k);
    for (std::size_t a = 0; a < k; ++a) {
        double log_det = 0.0;
        for (int v = 0; v < kSampleDims; ++v) {
            inv_var[a][v] = 1.0 / model.variances[a][v];
            log_det += std::log(model.variances[a][v]);
        }
        offset[a] = std::log(model.weights[a]) - 0.5 * (kSampleDims * kLog2Pi + log_det);
    }
    for (const auto& x : xs) {
        for (std::size_t a = 0; a < k; ++a) {
            double quad = 0.0;
            for (int v = 0; v < kSampleDims; ++v) {
                const double d = x[v] - model.means[a][v];
                quad += d * d * inv_var[a][v];
            }
            logp[a] = offset[a] - 0.5 * quad;
        }
        const double lse = log_sum_exp(logp);
        acc.log_likelihood += lse;
        for (std::size_t a = 0; a < k; ++a) {
            const double g = std::exp(logp[a] - lse);
            acc.resp_sum[a] += g;
            for (int v = 0; v < kSampleDims; ++v) {
                acc.first[a][v] += g * x[v];
                acc.second[a][v] += g * x[v] * x[v];
            }
        }
    }
    return acc;
}

void maximization(GmmModel& model, const Accumulator& acc, std::size_t n, double floor) {
    const std::size_t k = model.components();
    double weight_total = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        const double nk = acc.resp_sum[a];
        if (nk > 0.0) {
            for (int v = 0; v < kSampleDims; ++v) {
                const double mu = acc.first[a][v] / nk;
                const double var = acc.second[a][v] / nk - mu * mu;
                model.means[a][v] = mu;
                model.variances[a][v] = std::max(var, floor);
            }
        }
        // A component whose responsibilities all underflowed keeps its
        // parameters and a vanishing (but positive) weight.
        model.weights[a] = std::max(nk / static_cast<double>(n), std::numeric_limits<double>::min());
        weight_total += model.weights[a];
    }
    for (auto& w : model.weights) w /= weight_total;
}

}  // namespace

void SampleSet::append(std::span<const Sample> image_rows) {
    rows.insert(rows.end(), image_rows.begin(), image_rows.end());
    offsets.push_back(rows.size());
}

std::vector<Sample> image_samples(const ChannelPlanes& planes, std::size_t max_samples,
                                  std::uint64_t seed) {
    const std::size_t n = planes.size();
    if (n == 0) throw Error("empty channel planes");
    auto row = [&](std::size_t i) {
        return Sample{planes.hue.values[i] * kSampleScale[0], planes.saturation.values[i] * kSampleScale[1],
                      planes.dark.values[i] * kSampleScale[2], planes.bright.values[i] * kSampleScale[3]};
    };

    std::vector<Sample> out;
    if (max_samples == 0 || n <= max_samples) {
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(row(i));
        return out;
    }
    // Partial Fisher-Yates draws a uniform subset; sorting restores row-major order.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < max_samples; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(max_samples);
    std::sort(idx.begin(), idx.end());
    out.reserve(max_samples);
    for (std::size_t i : idx) out.push_back(row(i));
    return out;
}

SampleSet build_sample_set(const ChannelPlanes& planes, std::size_t max_samples, std::uint64_t seed) {
    SampleSet s;
    s.append(image_samples(planes, max_samples, seed));
    return s;
}

double component_log_density(const GmmModel& model, std::size_t a, const Sample& x) noexcept {
    double quad = 0.0, log_det = 0.0;
    for (int v = 0; v < kSampleDims; ++v) {
        const double d = x[v] - model.means[a][v];
        quad += d * d / model.variances[a][v];
        log_det += std::log(model.variances[a][v]);
    }
    return std::log(model.weights[a]) - 0.5 * (kSampleDims * kLog2Pi + log_det + quad);
}

double log_density(const GmmModel& model, const Sample& x) noexcept {
    const std::size_t k = model.components();
    double buf[64];
    std::vector<double> heap;
    double* logp = buf;
    if (k > 64) {
        heap.resize(k);
        logp = heap.data();
    }
    for (std::size_t a = 0; a < k; ++a) logp[a] = component_log_density(model, a, x);
    return log_sum_exp(std::span<const double>(logp, k));
}

double mean_log_likelihood(const GmmModel& model, std::span<const Sample> samples) noexcept {
    double s = 0.0;
    for (const auto& x : samples) s += log_density(model, x);
    return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
}

std::vector<double> posteriors(const GmmModel& model, const Sample& x) {
    const std::size_t k = model.components();
    std::vector<double> g(k);
    for (std::size_t a = 0; a < k; ++a) g[a] = component_log_density(model, a, x);
    const double lse = log_sum_exp(g);
    for (auto& v : g) v = std::exp(v - lse);
    return g;
}

void validate(const GmmModel& model, double variance_floor) {
    const std::size_t k = model.components();
    if (k == 0) throw Error("GMM has no components");
    if (model.means.size() != k || model.variances.size() != k)
        throw Error("GMM parameter arrays differ in length");
    double total = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        if (!(model.weights[a] > 0.0)) throw Error("GMM weight must be positive");
        total += model.weights[a];
        for (int v = 0; v < kSampleDims; ++v) {
            if (!std::isfinite(model.means[a][v])) throw Error("GMM mean is not finite");
            if (!(model.variances[a][v] > 0.0) || model.variances[a][v] < variance_floor ||
                !std::isfinite(model.variances[a][v]))
                throw Error("GMM variance below floor");
        }
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error("GMM weights do not sum to 1");
}

GmmFit fit_gmm(std::span<const Sample> samples, int components, const EmConfig& cfg) {
    if (components < 1) throw Error("component count must be positive");
    if (samples.size() < static_cast<std::size_t>(components))
        throw Error("fewer samples (" + std::to_string(samples.size()) + ") than components (" +
                    std::to_string(components) + ")");
    if (!(cfg.variance_floor > 0.0)) throw Error("variance floor must be positive");
    for (const auto& x : samples)
        for (double v : x)
            if (!std::isfinite(v)) throw Error("non-finite sample");

    std::mt19937_64 rng(cfg.seed);
    const auto centres = kmeans(samples, components, cfg.kmeans_iterations, rng);

    GmmFit fit;
    fit.model = initial_model(samples, centres, cfg.variance_floor);
    const auto n = samples.size();

    double previous = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const Accumulator acc = expectation(fit.model, samples);
        const double ll = acc.log_likelihood / static_cast<double>(n);
        fit.log_likelihood.push_back(ll);
        if (it > 0 && ll - previous < cfg.tolerance * std::abs(previous)) {
            fit.converged = true;
            break;
        }
        previous = ll;
        maximization(fit.model, acc, n, cfg.variance_floor);
        fit.iterations = it + 1;
    }
    if (!fit.converged) fit.log_likelihood.push_back(mean_log_likelihood(fit.model, samples));
    return fit;
}

}  // namespace fcid
