#pragma once

#include <filesystem>

#include "fcid/image.hpp"

namespace fcid {

/// Decodes PNG or JPEG (sniffed from the file signature) into 8-bit RGB.
/// Grayscale sources are replicated into RGB and flagged via from_grayscale.
RgbImage read_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG.
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace fcid
