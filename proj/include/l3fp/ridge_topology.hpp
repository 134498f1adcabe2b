#pragma once

#include <cstddef>
#include <vector>

#include "l3fp/geometry.hpp"
#include "l3fp/image.hpp"
#include "l3fp/random.hpp"
#include "l3fp/ridge_generator.hpp"

namespace l3fp {

inline constexpr int kUpscaleFactor = 3;
inline constexpr int kMasterWidth = kRidgeMapWidth * kUpscaleFactor;    // 825
inline constexpr int kMasterHeight = kRidgeMapHeight * kUpscaleFactor;  // 1200

enum class Resampler {
  Lanczos3,   ///< separable windowed sinc, a = 3
  Replicate,  ///< pixel replication
};

/// x3 resampling of a 0/1 raster into a foreground-intensity image where 255
/// is fully foreground. Borders replicate the edge pixel.
FloatImage resample_x3(const BinaryImage& src, Resampler resampler);

/// One 3x3 box-filter pass with edge replication.
FloatImage mean_filter3x3(const FloatImage& src);

/// Ridge map (275x400) -> 825x1200 foreground intensity (255 = ridge).
GrayImage upscale_and_smooth(const RidgeMap& ridge_map, Resampler resampler = Resampler::Lanczos3);
GrayImage upscale_and_smooth(const BinaryImage& ridge_pixels,
                             Resampler resampler = Resampler::Lanczos3);

inline constexpr std::uint8_t kThinningThreshold = 128;

struct Skeleton {
  BinaryImage pixels;  ///< 1 = skeleton

  int width() const { return pixels.width(); }
  int height() const { return pixels.height(); }
};

/// Binarizes at 128 (>= is foreground) and thins.
Skeleton thin(const GrayImage& image);

/// Zhang-Suen two-subiteration thinning until no pixel changes. Pixels
/// beyond the border count as background.
Skeleton thin_binary(const BinaryImage& binary);

/// Number of 0->1 transitions around the 8-neighbourhood (N, NE, ..., NW).
int crossing_number(const BinaryImage& image, int x, int y);
int neighbour_count(const BinaryImage& image, int x, int y);

/// Foreground pixels where three or more branches meet (crossing number >= 3).
BinaryImage branch_points(const Skeleton& skeleton);

struct RidgeSegment {
  int id = 0;
  std::vector<Pixel> pixels;  ///< 8-connected, end to end

  std::size_t length() const { return pixels.size(); }
  bool operator==(const RidgeSegment&) const = default;
};

inline constexpr std::size_t kMinSegmentLength = 5;

/// Splits the skeleton into maximal branch-free chains. A branch pixel
/// adjacent to a chain end is appended as that chain's endpoint. Open chains
/// start at their raster-first end; closed loops at their raster-first pixel.
/// Chains shorter than `min_length` are discarded. Ids follow the returned
/// order, which is sorted by starting pixel (row, then column).
std::vector<RidgeSegment> split_segments(const Skeleton& skeleton,
                                         std::size_t min_length = kMinSegmentLength);

/// Sinusoidal ridge width counter. The phase is t0 + 0.1 * step, computed
/// directly rather than accumulated.
struct ThicknessState {
  static constexpr double kIncrement = 0.1;
  static constexpr double kAmplitude = 3.0;
  static constexpr double kMinWidth = 1.0;

  double t0 = 0.0;
  int step = 0;

  double t() const { return t0 + kIncrement * step; }
  /// max(1, |3 sin t|)
  double width() const;
  void advance() { ++step; }
};

/// Rendered stroke radius for a recorded width.
int stroke_radius(double width);

struct MasterFingerprint {
  GrayImage image;  ///< ridge = 0, valley = 255
  std::vector<RidgeSegment> segments;  ///< in processing order; id == index
  std::vector<double> widths;          ///< widths[i] belongs to segments[i]
  double t0 = 0.0;

  int width() const { return image.width(); }
  int height() const { return image.height(); }
};

/// Orders segments by starting pixel, draws t0 ~ Uniform[0, 2 pi) and
/// renders each as a stroke of width max(1, |3 sin t|), advancing t by 0.1
/// per segment.
MasterFingerprint modulate_thickness(std::vector<RidgeSegment> segments, Rng& rng,
                                     int width = kMasterWidth, int height = kMasterHeight);

/// Same with an explicit starting counter value.
MasterFingerprint modulate_thickness_from(std::vector<RidgeSegment> segments, double t0,
                                          int width = kMasterWidth,
                                          int height = kMasterHeight);

/// Draws a disk of the given radius (d^2 <= r(r+1)) at every pixel.
void stamp_disk(GrayImage& image, Pixel center, int radius, std::uint8_t value);

/// Every intermediate of the master-fingerprint stage.
struct MasterBuild {
  GrayImage upscaled;
  Skeleton skeleton;
  MasterFingerprint master;
};

MasterBuild build_master(const RidgeMap& ridge_map, Rng& rng,
                         Resampler resampler = Resampler::Lanczos3);

}  // namespace l3fp
