#pragma once

#include <cstdint>
#include <filesystem>

#include "fcid/image.hpp"
#include "fcid/manifest.hpp"

namespace fcid {

struct SynthConfig {
    std::size_t n_pairs = 100;
    /// 0 leaves the twin identical; 1 removes all saturation.
    double strength = 0.4;
    std::uint64_t seed = 0;
    int width = 64;
    int height = 64;
    /// Fraction of pairs assigned split=test (0 writes no split column values).
    double test_fraction = 0.5;
};

/// A random "natural" scene: gradient background, filled shapes, noise texture.
RgbImage synth_natural(int width, int height, std::uint64_t seed);

/// Colorization-like twin: saturation scaled by (1 - strength), hue pulled
/// toward a fixed palette by `strength`.
RgbImage synth_fake(const RgbImage& natural, double strength);

/// Writes natural_NNNN.png / fake_NNNN.png and manifest.csv into out_dir.
DatasetManifest synth_generate(const std::filesystem::path& out_dir, const SynthConfig& cfg);

}  // namespace fcid
