#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "l3fp/geometry.hpp"
#include "l3fp/image.hpp"
#include "l3fp/random.hpp"

namespace l3fp {

inline constexpr int kRidgeMapWidth = 275;
inline constexpr int kRidgeMapHeight = 400;

enum class FingerprintClass { Whorl = 0, RightLoop, LeftLoop, PlainArch, TentedArch };

inline constexpr std::array<FingerprintClass, 5> kAllClasses = {
    FingerprintClass::Whorl, FingerprintClass::RightLoop, FingerprintClass::LeftLoop,
    FingerprintClass::PlainArch, FingerprintClass::TentedArch};

std::string_view to_string(FingerprintClass c);
FingerprintClass class_from_string(std::string_view name);

/// Sampling weights in declaration order of FingerprintClass.
struct ClassWeights {
  std::array<double, 5> weights{};

  /// Global population mix: whorl .41, right loop .50, left loop .03 and
  /// arches .06 split 72.22 : 27.77 between plain and tented.
  static ClassWeights population();
  double operator[](FingerprintClass c) const { return weights[static_cast<int>(c)]; }
  /// Throws InvalidArgument unless all weights are >= 0 and sum to 1.
  void validate() const;
  bool operator==(const ClassWeights&) const = default;
};

/// Inverse-CDF lookup for u in [0, 1), buckets in declaration order.
FingerprintClass class_at(const ClassWeights& weights, double u);
FingerprintClass sample_class(const ClassWeights& weights, Rng& rng);

struct SingularityLayout {
  std::vector<Point2d> cores;
  std::vector<Point2d> deltas;
};

/// Fixed per-class singularity template on a width x height canvas.
SingularityLayout layout_template(FingerprintClass c, int width = kRidgeMapWidth,
                                  int height = kRidgeMapHeight);

/// Template plus uniform jitter of up to `jitter` px per coordinate. Layouts
/// with a singularity closer than `border_margin` to the edge are re-jittered.
SingularityLayout sample_layout(FingerprintClass c, Rng& rng, double jitter = 8.0,
                                double border_margin = 10.0, int width = kRidgeMapWidth,
                                int height = kRidgeMapHeight);

/// Throws InvalidArgument when the singularity counts do not match the class
/// or a point lies outside the canvas.
void validate_layout(FingerprintClass c, const SingularityLayout& layout,
                     int width = kRidgeMapWidth, int height = kRidgeMapHeight);

/// Ridge direction per pixel, in radians within [0, pi).
struct OrientationField {
  FingerprintClass fingerprint_class = FingerprintClass::PlainArch;
  SingularityLayout layout;
  FloatImage theta;

  int width() const { return theta.width(); }
  int height() const { return theta.height(); }
};

/// Class-dependent background direction at a point (radians, unwrapped).
double background_orientation(FingerprintClass c, Point2d p, int width, int height);

/// Zero-pole orientation at an arbitrary point, in [0, pi).
double zero_pole_orientation(FingerprintClass c, const SingularityLayout& layout, Point2d p,
                             int width = kRidgeMapWidth, int height = kRidgeMapHeight);

OrientationField build_orientation_field(FingerprintClass c, const SingularityLayout& layout,
                                         int width = kRidgeMapWidth,
                                         int height = kRidgeMapHeight);

/// Accumulated change of a pi-periodic direction sampled along a closed
/// polyline; consecutive differences are wrapped into (-pi/2, pi/2].
double accumulated_rotation(const std::vector<double>& directions);

/// Discrete line integral of the field around a circle (bilinear-free,
/// nearest-pixel samples). Returns radians; +pi per enclosed core.
double field_winding(const OrientationField& field, Point2d center, double radius,
                     int samples = 720);

struct GaborParams {
  double base_scale = 8.0;         ///< ridge wavelength in px at 275x400
  double max_jitter = 0.2;         ///< scale factor drawn from [1-j, 1+j]
  double kernel_bandwidth = 0.5;   ///< envelope sigma as a fraction of the scale
  int iterations = 30;
  double seed_density = 0.002;     ///< fraction of canvas pixels seeded
  int orientation_bins = 64;
  double convergence_tolerance = 0.03;  ///< max fraction of sign flips in the last step

  void validate() const;
  bool operator==(const GaborParams&) const = default;
};

/// base_scale * factor; throws unless factor is within the jitter band.
double gabor_scale_from_factor(const GaborParams& params, double factor);
/// base_scale * u with u ~ Uniform[1 - max_jitter, 1 + max_jitter].
double sample_gabor_scale(const GaborParams& params, Rng& rng);

struct RidgeMap {
  BinaryImage pixels;  ///< 1 = ridge
  double effective_scale = 0.0;

  double foreground_fraction() const;
};

inline constexpr double kMinForegroundFraction = 0.25;
inline constexpr double kMaxForegroundFraction = 0.65;

/// One filtering pass: each pixel correlated with the zero-mean Gabor kernel
/// (radius round(scale), envelope sigma bandwidth * scale) of its quantized
/// orientation. Pixels beyond the canvas read as 0.
FloatImage gabor_response(const FloatImage& canvas, const OrientationField& field,
                          double effective_scale, const GaborParams& params);

/// Iterative Gabor growth from sparse random seeds, binarized at the median
/// of the final response. Throws RegenerationRequired on non-convergence or
/// when the foreground fraction leaves [0.25, 0.65].
RidgeMap synthesize_ridge_map(const OrientationField& field, const GaborParams& params,
                              double effective_scale, Rng& rng);

struct RidgeGeneration {
  FingerprintClass fingerprint_class{};
  SingularityLayout layout;
  double effective_scale = 0.0;
  RidgeMap ridge_map;
  int attempts = 0;
};

/// Class, layout, scale and ridge map in one go, regenerating on failure.
RidgeGeneration generate_ridge_map(const ClassWeights& weights, const GaborParams& params,
                                   Rng& rng, int max_attempts = 10);

}  // namespace l3fp
