#include "fcid/image.hpp"

#include "fcid/error.hpp"

namespace fcid {

RgbImage::RgbImage(int w, int h, Rgb fill) : width(w), height(h) {
    if (w < 1 || h < 1) throw Error("image dimensions must be positive");
    pixels.assign(static_cast<std::size_t>(w) * h, fill);
}

Plane::Plane(int w, int h, double lo_, double hi_, double fill)
    : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill), lo(lo_), hi(hi_) {}

}  // namespace fcid
