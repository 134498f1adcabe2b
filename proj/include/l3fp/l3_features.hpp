#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "l3fp/geometry.hpp"
#include "l3fp/image.hpp"
#include "l3fp/random.hpp"
#include "l3fp/ridge_topology.hpp"

namespace l3fp {

/// Normal model of the along-ridge distance between neighbouring pores.
struct PoreSpacingDistribution {
  static constexpr double kMinDistance = 3.0;

  double mean = 17.0;
  double std_dev = 5.0;

  void validate() const;
  bool operator==(const PoreSpacingDistribution&) const = default;
};

/// Truncated normal: redraws until the distance is >= 3 px.
double sample_pore_distance(const PoreSpacingDistribution& dist, Rng& rng);

struct Pore {
  int id = 0;
  Pixel position;
  int segment_id = 0;
  double arc_position = 0.0;  ///< along the chain from its first pixel
  int radius = 1;

  bool operator==(const Pore&) const = default;
};

/// Cumulative chain length at each pixel; diagonal steps count sqrt(2).
std::vector<double> chain_arc_lengths(const RidgeSegment& segment);

using DistanceSource = std::function<double()>;

/// Walks the chain placing each pore `next_distance()` beyond the previous
/// one (the first beyond the start pixel, which is not itself a pore). The
/// walk stops once the target passes the chain end, taken as one pixel past
/// the last pixel's arc position.
std::vector<Pore> place_pores_on_segment(const RidgeSegment& segment, const DistanceSource& next_distance,
                                         int radius = 1);

/// Pore disk radius for a ridge of the given width: max(1, floor(w / 2)).
int pore_radius(double ridge_width);

std::vector<Pore> place_pores(std::span<const RidgeSegment> segments,
                              std::span<const double> widths, const DistanceSource& next_distance);
std::vector<Pore> place_pores(std::span<const RidgeSegment> segments,
                              std::span<const double> widths, const PoreSpacingDistribution& dist,
                              Rng& rng);

/// Step function u -> scratch count; `steps` holds (count, cumulative
/// probability) pairs with strictly increasing counts.
struct ScratchCountCDF {
  std::vector<std::pair<int, double>> steps;

  /// Placeholder until estimated from annotated data.
  static ScratchCountCDF fallback();
  void validate() const;
  /// Smallest count whose cumulative probability exceeds u.
  int count_at(double u) const;
  int max_count() const;
  bool operator==(const ScratchCountCDF&) const = default;
};

int sample_scratch_count(const ScratchCountCDF& cdf, Rng& rng);

struct ScratchLeg {
  double length = 0.0;    ///< px, in (0, 150]
  double turn_deg = 0.0;  ///< heading change relative to the previous leg
  bool operator==(const ScratchLeg&) const = default;
};

struct Scratch {
  static constexpr int kMaxLegs = 4;
  static constexpr double kMaxLength = 150.0;
  static constexpr double kMaxTurnDeg = 15.0;
  static constexpr double kDefaultStrokeWidth = 2.0;

  Point2d start;
  double heading_deg = 0.0;  ///< direction of the first leg
  std::vector<ScratchLeg> legs;
  double stroke_width = kDefaultStrokeWidth;

  std::vector<Point2d> vertices() const;
  bool operator==(const Scratch&) const = default;
};

/// Throws InvalidArgument if leg count, length or turn bounds are violated.
void validate_scratch(const Scratch& scratch);

/// Start uniform on the canvas, 1-4 legs of Uniform(0, 150] length, first
/// heading uniform in [0, 360), later turns uniform in [-15, 15] degrees.
Scratch generate_scratch(int width, int height, Rng& rng);

void render_scratch(GrayImage& image, const Scratch& scratch);
void render_pore(GrayImage& image, const Pore& pore);

struct L3MasterFingerprint {
  int identity_id = 0;
  MasterFingerprint master;
  std::vector<Pore> pores;
  std::vector<Scratch> scratches;
  GrayImage image;
};

/// Master render with the given pores, then scratches drawn on top.
GrayImage render_l3(const MasterFingerprint& master, std::span<const Pore> pores,
                    std::span<const Scratch> scratches);

L3MasterFingerprint apply_l3(MasterFingerprint master, const PoreSpacingDistribution& dist,
                             const ScratchCountCDF& cdf, Rng& rng, int identity_id = 0);

}  // namespace l3fp
