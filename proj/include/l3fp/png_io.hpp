#pragma once

#include <filesystem>

#include "l3fp/image.hpp"

namespace l3fp {

/// Writes an 8-bit grayscale PNG. Output bytes depend only on the pixels.
void write_png(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_png(const std::filesystem::path& path);

/// Binary raster as PNG with 0 for foreground and 255 for background.
void write_binary_png(const std::filesystem::path& path, const BinaryImage& image);

}  // namespace l3fp
