#pragma once

#include "fcid/image.hpp"

namespace fcid {

struct Hsv {
    double hue = 0.0;         // [0,1)
    double saturation = 0.0;  // [0,1]
    double value = 0.0;       // [0,1]
};

struct ChannelConfig {
    /// Patch is the (2r+1)x(2r+1) window centred on the pixel, clipped at borders.
    int patch_radius = 7;
};

/// The four planes analysed per image.
struct ChannelPlanes {
    Plane hue;         // [0,1)
    Plane saturation;  // [0,1]
    Plane dark;        // [0,255]
    Plane bright;      // [0,255]

    int width() const noexcept { return hue.width; }
    int height() const noexcept { return hue.height; }
    std::size_t size() const noexcept { return hue.size(); }
};

enum class Extremum { min, max };

/// Achromatic pixels map to hue 0, saturation 0.
Hsv rgb_to_hsv(Rgb pixel) noexcept;

/// Inverse of rgb_to_hsv, rounded to the nearest 8-bit value.
Rgb hsv_to_rgb(const Hsv& hsv) noexcept;

/// Exact windowed min/max over a clipped (2r+1)^2 window. Separable
/// monotonic-deque passes, linear in pixel count and independent of r.
Plane sliding_extremum(const Plane& plane, int radius, Extremum mode);

/// Hue/saturation per pixel; dark = window-min of per-pixel channel minima,
/// bright = window-max of per-pixel channel maxima.
ChannelPlanes extract_channel_planes(const RgbImage& image, const ChannelConfig& cfg = {});

}  // namespace fcid
