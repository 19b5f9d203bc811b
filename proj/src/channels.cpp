#include "fcid/channels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fcid/error.hpp"

namespace fcid {

Hsv rgb_to_hsv(Rgb pixel) noexcept {
    const int r = pixel[0], g = pixel[1], b = pixel[2];
    const int hi = std::max({r, g, b});
    const int lo = std::min({r, g, b});
    Hsv out;
    out.value = hi / 255.0;
    if (hi == lo) return out;

    const double delta = hi - lo;
    out.saturation = delta / hi;
    double h;
    if (hi == r) {
        h = (g - b) / delta;
        if (h < 0.0) h += 6.0;
    } else if (hi == g) {
        h = (b - r) / delta + 2.0;
    } else {
        h = (r - g) / delta + 4.0;
    }
    out.hue = h / 6.0;
    if (out.hue >= 1.0) out.hue = 0.0;
    return out;
}

Rgb hsv_to_rgb(const Hsv& hsv) noexcept {
    const double v = std::clamp(hsv.value, 0.0, 1.0) * 255.0;
    const double s = std::clamp(hsv.saturation, 0.0, 1.0);
    double h = hsv.hue - std::floor(hsv.hue);
    h *= 6.0;
    if (h >= 6.0) h = 0.0;

    const int sector = static_cast<int>(h);
    const double f = h - sector;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    double r, g, b;
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
    auto to8 = [](double x) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(x), 0L, 255L));
    };
    return {to8(r), to8(g), to8(b)};
}

namespace {

// Windowed extremum along one line of `count` values spaced `stride` apart.
// The deque holds indices whose values are monotone, so each element is pushed
// and popped at most once.
template <typename Better>
void extremum_line(const double* in, double* out, int count, std::ptrdiff_t stride, int radius,
                   std::vector<int>& deque, Better better) {
    deque.resize(static_cast<std::size_t>(count));
    int head = 0, tail = 0;
    int next = 0;
    for (int p = 0; p < count; ++p) {
        const int last = std::min(count - 1, p + radius);
        for (; next <= last; ++next) {
            const double v = in[next * stride];
            while (tail > head && !better(in[deque[tail - 1] * stride], v)) --tail;
            deque[tail++] = next;
        }
        while (deque[head] < p - radius) ++head;
        out[p * stride] = in[deque[head] * stride];
    }
}

template <typename Better>
Plane separable_extremum(const Plane& plane, int radius, Better better) {
    Plane rows = plane;
    std::vector<int> deque;
    for (int y = 0; y < plane.height; ++y) {
        const std::size_t off = static_cast<std::size_t>(y) * plane.width;
        extremum_line(plane.values.data() + off, rows.values.data() + off, plane.width, 1, radius,
                      deque, better);
    }
    Plane out = rows;
    for (int x = 0; x < plane.width; ++x) {
        extremum_line(rows.values.data() + x, out.values.data() + x, plane.height, plane.width,
                      radius, deque, better);
    }
    return out;
}

}  // namespace

Plane sliding_extremum(const Plane& plane, int radius, Extremum mode) {
    if (radius < 0) throw Error("radius must be non-negative");
    if (radius == 0 || plane.empty()) return plane;
    // `better(a, b)`: a strictly dominates b, so b cannot evict a.
    if (mode == Extremum::min)
        return separable_extremum(plane, radius, [](double a, double b) { return a < b; });
    return separable_extremum(plane, radius, [](double a, double b) { return a > b; });
}

ChannelPlanes extract_channel_planes(const RgbImage& image, const ChannelConfig& cfg) {
    if (image.width < 1 || image.height < 1 || image.pixels.size() !=
        static_cast<std::size_t>(image.width) * image.height)
        throw Error("invalid image");
    if (cfg.patch_radius < 0) throw Error("patch_radius must be non-negative");

    const int w = image.width, h = image.height;
    ChannelPlanes out{Plane(w, h, 0.0, 1.0), Plane(w, h, 0.0, 1.0), Plane(w, h, 0.0, 255.0),
                      Plane(w, h, 0.0, 255.0)};
    Plane lo(w, h, 0.0, 255.0), hi(w, h, 0.0, 255.0);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        const Rgb& px = image.pixels[i];
        const Hsv hsv = rgb_to_hsv(px);
        out.hue.values[i] = hsv.hue;
        out.saturation.values[i] = hsv.saturation;
        lo.values[i] = std::min({px[0], px[1], px[2]});
        hi.values[i] = std::max({px[0], px[1], px[2]});
    }
    out.dark = sliding_extremum(lo, cfg.patch_radius, Extremum::min);
    out.bright = sliding_extremum(hi, cfg.patch_radius, Extremum::max);
    return out;
}

}  // namespace fcid
