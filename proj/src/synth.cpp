#include "fcid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "fcid/channels.hpp"
#include "fcid/error.hpp"
#include "fcid/evaluation.hpp"
#include "fcid/image_io.hpp"

namespace fcid {
namespace {

using Colour = std::array<double, 3>;

constexpr int kPaletteSize = 8;

Colour random_colour(std::mt19937_64& rng, double s_lo, double v_lo) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Hsv hsv{u(rng) * 0.999999, s_lo + (1.0 - s_lo) * u(rng), v_lo + (1.0 - v_lo) * u(rng)};
    const Rgb c = hsv_to_rgb(hsv);
    return {double(c[0]), double(c[1]), double(c[2])};
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t i) noexcept {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (i + 1);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

RgbImage synth_natural(int width, int height, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double w = width, h = height;

    // Background: linear gradient between two colours.
    const Colour c0 = random_colour(rng, 0.25, 0.45), c1 = random_colour(rng, 0.25, 0.45);
    const double angle = u(rng) * 2.0 * std::numbers::pi;
    const double dx = std::cos(angle), dy = std::sin(angle);
    std::vector<Colour> canvas(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double t = std::clamp(0.5 + ((x / w - 0.5) * dx + (y / h - 0.5) * dy), 0.0, 1.0);
            for (int k = 0; k < 3; ++k) canvas[y * width + x][k] = c0[k] + (c1[k] - c0[k]) * t;
        }
    }

    // Filled shapes with a soft radial shading.
    const int shapes = 4 + static_cast<int>(u(rng) * 6);
    for (int s = 0; s < shapes; ++s) {
        const Colour col = random_colour(rng, 0.35, 0.4);
        const int kind = static_cast<int>(u(rng) * 3);
        const double cx = u(rng) * w, cy = u(rng) * h;
        const double rx = (0.08 + 0.25 * u(rng)) * w;
        const double ry = kind == 0 ? rx : (0.08 + 0.25 * u(rng)) * h;
        const double shade = 0.15 * u(rng);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double nx = (x - cx) / rx, ny = (y - cy) / ry;
                const double r2 = nx * nx + ny * ny;
                const bool inside = kind == 2 ? (std::abs(nx) <= 1.0 && std::abs(ny) <= 1.0) : r2 <= 1.0;
                if (!inside) continue;
                const double light = 1.0 - shade * std::min(1.0, r2);
                for (int k = 0; k < 3; ++k) canvas[y * width + x][k] = col[k] * light;
            }
        }
    }

    // Texture: an oriented sinusoid plus Gaussian noise.
    const double amp = 10.0 * u(rng);
    const double freq = 0.1 + 0.6 * u(rng);
    const double phase = u(rng) * 2.0 * std::numbers::pi;
    const double ta = u(rng) * std::numbers::pi;
    std::normal_distribution<double> noise(0.0, 2.0 + 6.0 * u(rng));
    RgbImage img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double wave = amp * std::sin(freq * (x * std::cos(ta) + y * std::sin(ta)) + phase);
            for (int k = 0; k < 3; ++k) {
                const double v = canvas[y * width + x][k] + wave + noise(rng);
                img.at(x, y)[k] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return img;
}

RgbImage synth_fake(const RgbImage& natural, double strength) {
    if (!(strength >= 0.0 && strength <= 1.0)) throw Error("strength must lie in [0,1]");
    RgbImage out = natural;
    out.from_grayscale = false;
    for (auto& px : out.pixels) {
        Hsv hsv = rgb_to_hsv(px);
        hsv.saturation *= 1.0 - strength;
        const double nearest = std::round(hsv.hue * kPaletteSize) / kPaletteSize;
        hsv.hue += strength * (nearest - hsv.hue);
        if (hsv.hue >= 1.0) hsv.hue -= 1.0;
        px = hsv_to_rgb(hsv);
    }
    return out;
}

DatasetManifest synth_generate(const std::filesystem::path& out_dir, const SynthConfig& cfg) {
    if (cfg.n_pairs < 1) throw Error("n_pairs must be at least 1");
    if (cfg.width < 1 || cfg.height < 1) throw Error("image size must be positive");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw Error("cannot create output directory '" + out_dir.string() + "'");

    std::set<std::size_t> test_pairs;
    if (cfg.test_fraction > 0.0) {
        const auto split = split_indices(cfg.n_pairs, 1.0 - cfg.test_fraction, mix(cfg.seed, ~0ULL));
        test_pairs.insert(split.second.begin(), split.second.end());
    }

    DatasetManifest m;
    m.base_dir = out_dir;
    char name[64];
    for (std::size_t i = 0; i < cfg.n_pairs; ++i) {
        const RgbImage natural = synth_natural(cfg.width, cfg.height, mix(cfg.seed, i));
        const RgbImage fake = synth_fake(natural, cfg.strength);
        std::snprintf(name, sizeof name, "p%04zu", i);
        const std::string pair = name;
        const Split split = cfg.test_fraction > 0.0 ? (test_pairs.count(i) ? Split::test : Split::train)
                                                    : Split::unassigned;
        std::snprintf(name, sizeof name, "natural_%04zu.png", i);
        write_png(out_dir / name, natural);
        m.entries.push_back({name, Label::natural, pair, split, 0});
        std::snprintf(name, sizeof name, "fake_%04zu.png", i);
        write_png(out_dir / name, fake);
        m.entries.push_back({name, Label::fake, pair, split, 0});
    }
    for (std::size_t i = 0; i < m.entries.size(); ++i) m.entries[i].line = i + 2;
    save_manifest(out_dir / "manifest.csv", m);
    return m;
}

}  // namespace fcid
