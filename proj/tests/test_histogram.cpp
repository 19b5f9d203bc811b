#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "fcid/error.hpp"
#include "fcid/histogram.hpp"
#include "oracles.hpp"

using namespace fcid;

namespace {

Histogram hist_of(std::vector<double> bins, Channel c = Channel::hue) {
    Histogram h;
    h.channel = c;
    h.range = channel_range(c);
    h.bins = std::move(bins);
    return h;
}

double sum(const Histogram& h) { return std::accumulate(h.bins.begin(), h.bins.end(), 0.0); }

}  // namespace

TEST_CASE("binning rule") {
    Plane zeros(5, 4, 0.0, 1.0, 0.0);
    const auto h = normalized_histogram(zeros, 200);
    CHECK(h[0] == 1.0);
    CHECK(sum(h) == 1.0);

    Plane p(4, 1, 0.0, 1.0);
    p.values = {0.1, 0.1, 0.6, 0.9};
    const auto g = normalized_histogram(p, 10);
    CHECK(g[1] == 0.5);
    CHECK(g[6] == 0.25);
    CHECK(g[9] == 0.25);

    CHECK(bin_index(1.0, {0.0, 1.0}, 10) == 9);
    CHECK(bin_index(255.0, {0.0, 255.0}, 200) == 199);
    CHECK(bin_index(0.0, {0.0, 255.0}, 200) == 0);
}

TEST_CASE("histogram preconditions") {
    CHECK_THROWS_WITH(normalized_histogram(Plane{}, 10), "empty input plane");
    Plane p(2, 2, 0.0, 1.0);
    CHECK_THROWS(normalized_histogram(p, 1));
}

TEST_CASE("random planes give normalized histograms") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> dim(1, 40), k(2, 260);
    for (int i = 0; i < 100; ++i) {
        const auto p = oracle::random_plane(rng, dim(rng), dim(rng), 0.0, 1.0);
        const auto h = normalized_histogram(p, k(rng));
        CHECK(std::abs(sum(h) - 1.0) <= 1e-9);
        for (double b : h.bins) CHECK(b >= 0.0);
        const double tv = total_variation(h);
        CHECK(tv >= 0.0);
        CHECK(tv <= 2.0 + 1e-12);
    }
}

TEST_CASE("most distinctive bin and its tie rule") {
    CHECK(most_distinctive_bin(hist_of({0.5, 0.5, 0.0}), hist_of({0.2, 0.4, 0.4})) == 2);
    CHECK(most_distinctive_bin(hist_of({0.3, 0.3, 0.4}), hist_of({0.3, 0.3, 0.4})) == 0);
    CHECK(most_distinctive_bin(hist_of({1.0, 0.0}), hist_of({0.0, 1.0})) == 0);
    CHECK_THROWS(most_distinctive_bin(hist_of({1.0, 0.0}), hist_of({0.0, 0.5, 0.5})));

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> a(12), b(12);
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng);
        CHECK(most_distinctive_bin(hist_of(a), hist_of(b)) == most_distinctive_bin(hist_of(b), hist_of(a)));
    }
}

TEST_CASE("total variation examples") {
    CHECK(total_variation(hist_of({0.25, 0.25, 0.25, 0.25})) == 0.0);
    CHECK(total_variation(hist_of({1.0, 0.0, 0.0, 0.0})) == 1.0);
    CHECK(total_variation(hist_of({0.1, 0.3, 0.2, 0.4})) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("class distributions") {
    std::mt19937_64 rng(7);
    HistConfig cfg;
    const auto img = oracle::random_image(rng, 12, 9);
    const auto planes = extract_channel_planes(img, {1});

    SUBCASE("identical images give identical classes") {
        std::vector<ChannelPlanes> ps{planes, planes};
        std::vector<Label> ls{Label::natural, Label::fake};
        const auto d = class_distributions(std::span<const ChannelPlanes>(ps), ls, cfg);
        for (auto c : kAllChannels) CHECK(d.of(Label::natural, c).bins == d.of(Label::fake, c).bins);
    }

    SUBCASE("missing class") {
        std::vector<ChannelPlanes> ps{planes};
        std::vector<Label> ls{Label::natural};
        CHECK_THROWS_WITH(class_distributions(std::span<const ChannelPlanes>(ps), ls, cfg), "class has no images");
    }

    SUBCASE("pooling is the pixel-weighted mean") {
        const auto other = extract_channel_planes(oracle::random_image(rng, 7, 5), {1});
        std::vector<ChannelPlanes> ps{planes, other, planes};
        std::vector<Label> ls{Label::natural, Label::natural, Label::fake};
        const auto d = class_distributions(std::span<const ChannelPlanes>(ps), ls, cfg);
        const double n0 = planes.size(), n1 = other.size();
        for (auto c : kAllChannels) {
            const auto& pooled = d.of(Label::natural, c);
            const auto h0 = image_histograms(planes, cfg).normalized(c);
            const auto h1 = image_histograms(other, cfg).normalized(c);
            for (std::size_t b = 0; b < pooled.size(); ++b)
                CHECK(pooled[b] == doctest::Approx((n0 * h0[b] + n1 * h1[b]) / (n0 + n1)).epsilon(1e-12));
        }
    }
}

TEST_CASE("pooled distributions equal a brute-force recount") {
    std::mt19937_64 rng(8);
    HistConfig cfg;
    cfg.bins = {50, 60, 70, 80};
    std::vector<ChannelPlanes> ps;
    std::vector<Label> ls;
    std::uniform_int_distribution<int> dim(3, 15);
    for (int i = 0; i < 20; ++i) {
        ps.push_back(extract_channel_planes(oracle::random_image(rng, dim(rng), dim(rng)), {1}));
        ls.push_back(i % 3 == 0 ? Label::fake : Label::natural);
    }
    const auto d = class_distributions(std::span<const ChannelPlanes>(ps), ls, cfg);
    for (auto label : {Label::natural, Label::fake}) {
        for (auto c : kAllChannels) {
            const int k = cfg.bins_for(c);
            const auto range = channel_range(c);
            std::vector<double> counts(k, 0.0);
            double total = 0.0;
            for (std::size_t i = 0; i < ps.size(); ++i) {
                if (ls[i] != label) continue;
                const Plane* plane = c == Channel::hue ? &ps[i].hue
                                     : c == Channel::saturation ? &ps[i].saturation
                                     : c == Channel::dark ? &ps[i].dark
                                                          : &ps[i].bright;
                for (double v : plane->values) {
                    int b = static_cast<int>(std::floor((v - range.lo) / (range.hi - range.lo) * k));
                    counts[std::clamp(b, 0, k - 1)] += 1.0;
                    total += 1.0;
                }
            }
            const auto& h = d.of(label, c);
            for (int b = 0; b < k; ++b) CHECK(h[b] == doctest::Approx(counts[b] / total).epsilon(1e-12));
        }
    }
}

TEST_CASE("hist feature layout and point mass") {
    RgbImage img(4, 4, {200, 40, 40});
    const auto planes = extract_channel_planes(img, {1});
    HistConfig cfg;
    DistinctiveBins bins;
    bins.index[0] = bin_index(planes.hue.values[0], channel_range(Channel::hue), 200);
    const auto f = hist_feature(planes, bins, cfg);
    CHECK(f.size() == 8);
    CHECK(f[0] == 1.0);
    CHECK(f[1] == 1.0);
}

TEST_CASE("hist feature matches a recomputation from pixels") {
    std::mt19937_64 rng(9);
    HistConfig cfg;
    std::uniform_int_distribution<int> bin(0, 199), dim(4, 24);
    for (int i = 0; i < 10; ++i) {
        const auto img = oracle::random_image(rng, dim(rng), dim(rng));
        DistinctiveBins bins;
        for (auto& b : bins.index) b = bin(rng);
        const auto f = hist_feature(extract_channel_planes(img, {2}), bins, cfg);
        const auto ref = oracle::hist_feature_from_pixels(img, 2, cfg.bins, bins.index);
        for (int j = 0; j < 8; ++j) CHECK(std::abs(f[j] - ref[j]) <= 1e-12);
    }
}

TEST_CASE("hist feature ignores pixel order") {
    std::mt19937_64 rng(10);
    auto img = oracle::random_image(rng, 10, 10);
    HistConfig cfg;
    DistinctiveBins bins;
    bins.index = {3, 50, 120, 199};
    // Radius 0 keeps dark/bright per-pixel, so shuffling permutes every plane.
    const auto before = hist_feature(extract_channel_planes(img, {0}), bins, cfg);
    std::shuffle(img.pixels.begin(), img.pixels.end(), rng);
    const auto after = hist_feature(extract_channel_planes(img, {0}), bins, cfg);
    CHECK(before == after);
}

TEST_CASE("histogram csv has one row per channel bin") {
    std::mt19937_64 rng(11);
    HistConfig cfg;
    std::vector<ChannelPlanes> ps;
    for (int i = 0; i < 4; ++i) ps.push_back(extract_channel_planes(oracle::random_image(rng, 8, 8), {1}));
    std::vector<Label> ls{Label::natural, Label::fake, Label::natural, Label::fake};
    const auto d = class_distributions(std::span<const ChannelPlanes>(ps), ls, cfg);
    std::ostringstream out;
    write_histogram_csv(out, d);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "channel,bin_index,bin_center,natural_mass,fake_mass,abs_diff");
    int rows = 0;
    std::map<std::string, double> natural_sum;
    while (std::getline(in, line)) {
        ++rows;
        std::istringstream fields(line);
        std::string channel, index, center, nat, fake, diff;
        std::getline(fields, channel, ',');
        std::getline(fields, index, ',');
        std::getline(fields, center, ',');
        std::getline(fields, nat, ',');
        std::getline(fields, fake, ',');
        std::getline(fields, diff, ',');
        natural_sum[channel] += std::stod(nat);
        CHECK(std::stod(diff) == doctest::Approx(std::abs(std::stod(nat) - std::stod(fake))).epsilon(1e-12));
    }
    CHECK(rows == 4 * 200);
    CHECK(natural_sum.size() == 4);
    for (const auto& [channel, total] : natural_sum) CHECK(std::abs(total - 1.0) <= 1e-9);
}
