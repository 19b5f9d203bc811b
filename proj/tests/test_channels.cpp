#include <doctest.h>

#include <random>

#include "fcid/channels.hpp"
#include "oracles.hpp"

using namespace fcid;

TEST_CASE("hsv conversion of primaries and grays") {
    auto red = rgb_to_hsv({255, 0, 0});
    CHECK(red.hue == 0.0);
    CHECK(red.saturation == 1.0);
    CHECK(red.value == 1.0);

    auto gray = rgb_to_hsv({128, 128, 128});
    CHECK(gray.hue == 0.0);
    CHECK(gray.saturation == 0.0);
    CHECK(gray.value == doctest::Approx(128.0 / 255.0).epsilon(1e-15));

    auto blue = rgb_to_hsv({0, 0, 255});
    CHECK(blue.hue == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(blue.saturation == 1.0);
}

TEST_CASE("hue stays below one and agrees with the textbook formula") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> v(0, 255);
    for (int i = 0; i < 20000; ++i) {
        Rgb px{std::uint8_t(v(rng)), std::uint8_t(v(rng)), std::uint8_t(v(rng))};
        const auto hsv = rgb_to_hsv(px);
        const auto ref = oracle::hue_saturation(px);
        REQUIRE(hsv.hue >= 0.0);
        REQUIRE(hsv.hue < 1.0);
        REQUIRE(hsv.hue == doctest::Approx(ref[0]).epsilon(1e-12));
        REQUIRE(hsv.saturation == doctest::Approx(ref[1]).epsilon(1e-12));
    }
}

TEST_CASE("hsv round trip returns the original pixel") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> v(0, 255);
    for (int i = 0; i < 5000; ++i) {
        Rgb px{std::uint8_t(v(rng)), std::uint8_t(v(rng)), std::uint8_t(v(rng))};
        CHECK(hsv_to_rgb(rgb_to_hsv(px)) == px);
    }
}

TEST_CASE("sliding extremum trivial cases") {
    Plane constant(9, 7, 0, 255, 77.0);
    for (double v : sliding_extremum(constant, 3, Extremum::min).values) CHECK(v == 77.0);

    Plane single(1, 1, 0, 255, 10.0);
    CHECK(sliding_extremum(single, 0, Extremum::max).values[0] == 10.0);
}

TEST_CASE("sliding extremum equals an exhaustive window scan") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(1, 20);
    for (int trial = 0; trial < 60; ++trial) {
        const auto p = oracle::random_plane(rng, dim(rng), dim(rng));
        for (int r : {0, 1, 2, 3, 5, 7, 30}) {
            CHECK(sliding_extremum(p, r, Extremum::min).values == oracle::window_scan(p, r, true).values);
            CHECK(sliding_extremum(p, r, Extremum::max).values == oracle::window_scan(p, r, false).values);
        }
    }
    std::mt19937_64 rng8(8);
    const auto p = oracle::random_plane(rng8, 8, 8);
    CHECK(sliding_extremum(p, 2, Extremum::min).values == oracle::window_scan(p, 2, true).values);
}

TEST_CASE("radius zero is the identity and min filtering is monotone") {
    std::mt19937_64 rng(12);
    const auto p = oracle::random_plane(rng, 13, 9);
    CHECK(sliding_extremum(p, 0, Extremum::min).values == p.values);
    CHECK(sliding_extremum(p, 0, Extremum::max).values == p.values);

    auto larger = p;
    std::uniform_real_distribution<double> bump(0.0, 5.0);
    for (auto& v : larger.values) v += bump(rng);
    const auto a = sliding_extremum(p, 2, Extremum::min);
    const auto b = sliding_extremum(larger, 2, Extremum::min);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b.values[i] >= a.values[i]);
}

TEST_CASE("negative radius is rejected") {
    Plane p(2, 2, 0, 1);
    CHECK_THROWS(sliding_extremum(p, -1, Extremum::min));
}

TEST_CASE("channel planes of a single pixel") {
    RgbImage img(1, 1, {10, 200, 30});
    const auto planes = extract_channel_planes(img, {0});
    CHECK(planes.dark.values[0] == 10.0);
    CHECK(planes.bright.values[0] == 200.0);
}

TEST_CASE("gray image has zero saturation") {
    RgbImage img(6, 5);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto g = static_cast<std::uint8_t>(i * 7);
        img.pixels[i] = {g, g, g};
    }
    for (double s : extract_channel_planes(img).saturation.values) CHECK(s == 0.0);
}

TEST_CASE("dark and bright channels match the double-extremum oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const auto img = oracle::random_image(rng, 16, 16);
        const auto planes = extract_channel_planes(img, {2});
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                CHECK(planes.dark.at(x, y) == oracle::extreme_channel_at(img, x, y, 2, true));
                CHECK(planes.bright.at(x, y) == oracle::extreme_channel_at(img, x, y, 2, false));
            }
    }
}

TEST_CASE("dark/bright sandwich and radius monotonicity") {
    std::mt19937_64 rng(22);
    const auto img = oracle::random_image(rng, 23, 17);
    ChannelPlanes prev;
    for (int r = 0; r <= 8; ++r) {
        const auto planes = extract_channel_planes(img, {r});
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const auto px = img.at(x, y);
                const int lo = std::min({px[0], px[1], px[2]});
                const int hi = std::max({px[0], px[1], px[2]});
                CHECK(planes.dark.at(x, y) <= lo);
                CHECK(planes.bright.at(x, y) >= hi);
                if (r > 0) {
                    CHECK(planes.dark.at(x, y) <= prev.dark.at(x, y));
                    CHECK(planes.bright.at(x, y) >= prev.bright.at(x, y));
                }
            }
        prev = planes;
    }
}
