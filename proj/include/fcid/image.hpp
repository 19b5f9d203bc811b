#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace fcid {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB raster, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;
    /// Source was single-channel and promoted by replication.
    bool from_grayscale = false;

    RgbImage() = default;
    RgbImage(int w, int h, Rgb fill = {0, 0, 0});

    std::size_t size() const noexcept { return pixels.size(); }
    Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Real-valued image plane with a declared value range [lo, hi].
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    double lo = 0.0;
    double hi = 1.0;

    Plane() = default;
    Plane(int w, int h, double lo_, double hi_, double fill = 0.0);

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

}  // namespace fcid
