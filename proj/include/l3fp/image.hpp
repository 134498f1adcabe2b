#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace l3fp {

/// Row-major single-channel raster with value semantics.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative image size");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

  /// Value at (x, y), or `outside` when the coordinate is off-canvas.
  T at_or(int x, int y, T outside) const noexcept {
    return contains(x, y) ? data_[index(x, y)] : outside;
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  std::span<T> row(int y) noexcept {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
  }
  std::span<const T> row(int y) const noexcept {
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// 8-bit grayscale; in rendered fingerprints 0 is ridge and 255 is valley.
using GrayImage = Image<std::uint8_t>;
/// Binary raster holding 0 or 1; 1 marks foreground.
using BinaryImage = Image<std::uint8_t>;
using FloatImage = Image<float>;

inline constexpr std::uint8_t kRidgeValue = 0;
inline constexpr std::uint8_t kValleyValue = 255;

}  // namespace l3fp
