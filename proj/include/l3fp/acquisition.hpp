#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "l3fp/geometry.hpp"
#include "l3fp/image.hpp"
#include "l3fp/l3_features.hpp"
#include "l3fp/random.hpp"

namespace l3fp {

/// Per-axis spread of finger placement relative to the master centre.
struct AcquisitionStats {
  double sigma_x = 20.0;        ///< px
  double sigma_y = 20.0;        ///< px
  double sigma_theta_deg = 5.0;

  void validate() const;
  bool operator==(const AcquisitionStats&) const = default;
};

/// dx, dy, theta drawn independently from zero-mean normals.
RigidTransform sample_rigid(const AcquisitionStats& stats, Rng& rng);

enum class AffineMode {
  Translation,  ///< gamma added to the translation part of the map
  Shear,        ///< gamma / 100 added to the off-diagonal matrix terms
};

struct AffinePerturbation {
  static constexpr double kMaxGamma = 10.0;

  double gamma_x = 0.0;
  double gamma_y = 0.0;
  AffineMode mode = AffineMode::Translation;

  void validate() const;
  Point2d apply(Point2d p, Point2d center) const;
  Point2d apply_inverse(Point2d p, Point2d center) const;
  bool operator==(const AffinePerturbation&) const = default;
};

AffinePerturbation sample_affine(AffineMode mode, Rng& rng);

/// Bilinear sample; pixels beyond the canvas read as `outside`.
double sample_bilinear(const GrayImage& image, Point2d p, double outside = kValleyValue);

/// out(q) = src(inverse_map(q)) for every pixel of a width x height output.
template <typename InverseMap>
GrayImage warp_inverse(const GrayImage& src, int width, int height, InverseMap&& inverse_map) {
  GrayImage out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double v = sample_bilinear(src, inverse_map(Point2d{x + 0.0, y + 0.0}));
      out(x, y) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  return out;
}

/// Same-size warp with the affine perturbation about the image centre;
/// points follow the forward map.
std::pair<GrayImage, std::vector<Point2d>> perturb_affine(const GrayImage& image,
                                                          std::span<const Point2d> points,
                                                          const AffinePerturbation& gamma);

struct ElasticParams {
  double alpha = 8.0;             ///< px, maximum displacement component
  double smoothing_sigma = 30.0;  ///< px

  void validate() const;
  bool operator==(const ElasticParams&) const = default;
};

/// Smoothed random displacement field, scaled so that no component exceeds
/// alpha. Fold-free: det(I - grad D) > 0 is checked on construction.
class DisplacementField {
 public:
  DisplacementField() = default;
  DisplacementField(int width, int height, const ElasticParams& params, std::uint64_t seed);

  int width() const { return dx_.width(); }
  int height() const { return dx_.height(); }
  /// Bilinear, clamped to the grid edge.
  Point2d at(Point2d p) const;
  double max_component() const { return max_component_; }
  /// Solves q = p + D(q): where a feature at p lands under the inverse warp
  /// out(q) = in(q - D(q)).
  Point2d forward(Point2d p) const;
  Point2d inverse(Point2d q) const { return q - at(q); }

 private:
  FloatImage dx_;
  FloatImage dy_;
  double max_component_ = 0.0;
};

std::pair<GrayImage, std::vector<Point2d>> elastic_deform(const GrayImage& image,
                                                          std::span<const Point2d> points,
                                                          const ElasticParams& params, Rng& rng);

struct DropoutResult {
  std::vector<Pore> kept;
  std::vector<int> dropped_ids;
};

/// Removes each pore independently with probability `rate`.
DropoutResult dropout_pores(std::span<const Pore> pores, double rate, Rng& rng);

struct SeedConfig {
  int crop_width = 512;
  int crop_height = 512;
  bool rigid_enabled = true;
  bool affine_enabled = true;
  AffineMode affine_mode = AffineMode::Translation;
  bool elastic_enabled = false;
  ElasticParams elastic;
  double dropout_rate = 0.03;
  int max_retries = 10;
  /// How far (px) the crop's preimage may extend past the master canvas.
  double max_padding = 0.0;

  void validate() const;
  bool operator==(const SeedConfig&) const = default;
};

/// Everything needed to re-derive a seed image from its L3 master.
struct Provenance {
  RigidTransform rigid;
  AffinePerturbation affine;
  bool elastic_enabled = false;
  ElasticParams elastic;
  std::uint64_t elastic_seed = 0;
  std::vector<int> dropped_pore_ids;
  int crop_width = 512;
  int crop_height = 512;
  Point2d crop_origin;    ///< top-left of the crop on the master canvas
  Point2d canvas_center;  ///< rotation / shear centre
  int attempts = 1;

  bool operator==(const Provenance&) const = default;
};

struct SeedPore {
  int id = 0;
  Point2d position;  ///< seed-image coordinates
  int segment_id = 0;
  double arc_position = 0.0;  ///< master-frame arc along the segment
  bool operator==(const SeedPore&) const = default;
};

struct SeedImage {
  int identity_id = 0;
  int sample_id = 0;
  GrayImage image;
  Provenance provenance;
  std::vector<SeedPore> pores;
};

/// Master point -> seed point under a provenance.
class AcquisitionMap {
 public:
  explicit AcquisitionMap(const Provenance& provenance);

  Point2d forward(Point2d master_point) const;
  Point2d inverse(Point2d seed_point) const;

 private:
  Provenance prov_;
  std::optional<DisplacementField> field_;
};

/// Renders the seed image and its annotation from a provenance: surviving
/// pores are drawn, the composite warp applied, then annotations clipped
/// to the crop.
SeedImage render_seed_image(const L3MasterFingerprint& l3, const Provenance& provenance,
                            int sample_id = 0);

/// Samples dropout, affine, rigid and elastic parameters (in that order),
/// retrying while the crop's preimage leaves the canvas.
SeedImage make_seed_image(const L3MasterFingerprint& l3, const AcquisitionStats& stats,
                          const SeedConfig& config, Rng& rng, int sample_id = 0);

}  // namespace l3fp
