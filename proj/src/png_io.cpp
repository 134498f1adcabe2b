#include "l3fp/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "l3fp/error.hpp"

namespace l3fp {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_handler(png_structp, png_const_charp message) {
  throw IoError(std::string("libpng: ") + message);
}

void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  if (image.empty()) throw InvalidArgument("cannot write empty image");
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_handler, png_warning_handler);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  if (!info) throw IoError("png_create_info_struct failed");

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    auto row = image.row(y);
    png_write_row(png, const_cast<png_bytep>(row.data()));
  }
  png_write_end(png, nullptr);
}

GrayImage read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_handler, png_warning_handler);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  if (!info) throw IoError("png_create_info_struct failed");

  png_init_io(png, file.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  GrayImage image(w, h);
  for (int y = 0; y < h; ++y) png_read_row(png, image.row(y).data(), nullptr);
  png_read_end(png, nullptr);
  return image;
}

void write_binary_png(const std::filesystem::path& path, const BinaryImage& image) {
  GrayImage out(image.width(), image.height());
  auto src = image.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? kRidgeValue : kValleyValue;
  write_png(path, out);
}

}  // namespace l3fp
