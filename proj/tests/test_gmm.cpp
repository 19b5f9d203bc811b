#include <doctest.h>

#include <cmath>
#include <random>

#include "fcid/channels.hpp"
#include "fcid/gmm.hpp"
#include "oracles.hpp"

using namespace fcid;

TEST_CASE("sample set reads planes in row-major order") {
    RgbImage img(2, 2);
    img.pixels = {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {10, 20, 30}};
    const auto planes = extract_channel_planes(img, {0});
    const auto set = build_sample_set(planes, 0, 1);
    REQUIRE(set.rows.size() == 4);
    CHECK(set.images() == 1);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(set.rows[i][0] == planes.hue.values[i]);
        CHECK(set.rows[i][1] == planes.saturation.values[i]);
        CHECK(set.rows[i][2] == planes.dark.values[i] / 255.0);
        CHECK(set.rows[i][3] == planes.bright.values[i] / 255.0);
    }
}

TEST_CASE("constant image gives identical rows") {
    RgbImage img(5, 3, {40, 90, 200});
    const auto rows = image_samples(extract_channel_planes(img), 0, 0);
    for (const auto& r : rows) CHECK(r == rows.front());
}

TEST_CASE("subsampling is seeded and reproducible") {
    std::mt19937_64 rng(1);
    const auto planes = extract_channel_planes(oracle::random_image(rng, 16, 16), {1});
    const auto a = image_samples(planes, 64, 99);
    const auto b = image_samples(planes, 64, 99);
    const auto c = image_samples(planes, 64, 100);
    CHECK(a.size() == 64);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("single component is the closed-form estimate") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.3, 0.1);
    std::vector<Sample> xs(500);
    for (auto& x : xs)
        for (auto& v : x) v = g(rng);
    const auto fit = fit_gmm(xs, 1);
    for (int v = 0; v < kSampleDims; ++v) {
        double mean = 0.0, var = 0.0;
        for (const auto& x : xs) mean += x[v];
        mean /= xs.size();
        for (const auto& x : xs) var += (x[v] - mean) * (x[v] - mean);
        var /= xs.size();
        CHECK(fit.model.means[0][v] == doctest::Approx(mean).epsilon(1e-10));
        CHECK(fit.model.variances[0][v] == doctest::Approx(var).epsilon(1e-8));
    }
    CHECK(fit.model.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("two separated clusters are recovered") {
    const auto mix = oracle::synthetic_mixture(5, 2, 800);
    const auto fit = fit_gmm(mix.samples, 2, {.seed = 3});
    CHECK(oracle::best_permutation_error(mix.means, fit.model.means) <= 0.05);
}

TEST_CASE("em log-likelihood never decreases") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<Sample> xs(400);
        for (auto& x : xs)
            for (auto& v : x) v = u(rng) * u(rng);
        const auto fit = fit_gmm(xs, 4, {.seed = seed});
        for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
            const double prev = fit.log_likelihood[i - 1];
            CHECK(fit.log_likelihood[i] >= prev - 1e-8 * std::abs(prev));
        }
        CHECK_NOTHROW(validate(fit.model, 1e-6));
    }
}

TEST_CASE("fit is deterministic and checks its input") {
    const auto mix = oracle::synthetic_mixture(6, 3, 300);
    const auto a = fit_gmm(mix.samples, 3, {.seed = 4});
    const auto b = fit_gmm(mix.samples, 3, {.seed = 4});
    CHECK(a.model.weights == b.model.weights);
    CHECK(a.model.means == b.model.means);
    CHECK(a.model.variances == b.model.variances);
    std::vector<Sample> two(2);
    CHECK_THROWS(fit_gmm(two, 3));
}

TEST_CASE("identical samples collapse to one effective component") {
    const Sample point{0.5, 0.25, 0.75, 0.5};
    std::vector<Sample> xs(50, point);
    const auto fit = fit_gmm(xs, 3);
    CHECK_NOTHROW(validate(fit.model, 1e-6));
    for (std::size_t a = 0; a < fit.model.components(); ++a) {
        for (int v = 0; v < kSampleDims; ++v) CHECK(fit.model.means[a][v] == doctest::Approx(point[v]).epsilon(1e-12));
        for (double v : fit.model.variances[a]) CHECK(v == 1e-6);
    }
    const GmmModel single{{1.0}, {point}, {Sample{1e-6, 1e-6, 1e-6, 1e-6}}};
    CHECK(log_density(fit.model, point) == doctest::Approx(log_density(single, point)).epsilon(1e-12));
}

TEST_CASE("log density values") {
    GmmModel unit{{1.0}, {Sample{0.2, 0.4, 0.6, 0.8}}, {Sample{1, 1, 1, 1}}};
    CHECK(log_density(unit, unit.means[0]) == doctest::Approx(-2.0 * std::log(2.0 * M_PI)).epsilon(1e-14));
    CHECK(log_density(unit, unit.means[0]) == doctest::Approx(-3.67575).epsilon(1e-5));

    GmmModel narrow{{0.5, 0.5}, {Sample{0, 0, 0, 0}, Sample{1, 1, 1, 1}}, {Sample{1e-6, 1e-6, 1e-6, 1e-6}, Sample{1e-6, 1e-6, 1e-6, 1e-6}}};
    const double far = log_density(narrow, Sample{50, 50, 50, 50});
    CHECK(std::isfinite(far));
    CHECK(far < -1e9);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const auto m = oracle::random_gmm(rng, 1 + i % 6);
        Sample x{u(rng), u(rng), u(rng), u(rng)};
        CHECK(log_density(m, x) == doctest::Approx(static_cast<double>(oracle::gmm_log_density(m, x))).epsilon(1e-12));
    }
}

TEST_CASE("posteriors") {
    GmmModel one{{1.0}, {Sample{0, 0, 0, 0}}, {Sample{1, 1, 1, 1}}};
    CHECK(posteriors(one, Sample{3, 1, 2, 0}) == std::vector<double>{1.0});

    GmmModel two{{0.5, 0.5}, {Sample{0, 0, 0, 0}, Sample{1, 0, 0, 0}}, {Sample{1, 1, 1, 1}, Sample{1, 1, 1, 1}}};
    const auto g = posteriors(two, Sample{0.5, 0.3, 0.2, 0.1});
    CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-15));

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const auto m = oracle::random_gmm(rng, 7);
        const auto p = posteriors(m, Sample{u(rng), u(rng), u(rng), u(rng)});
        double s = 0.0;
        for (double v : p) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}
