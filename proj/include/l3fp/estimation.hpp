#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "l3fp/geometry.hpp"
#include "l3fp/l3_features.hpp"
#include "l3fp/random.hpp"

namespace l3fp {

struct Correspondence {
  Point2d a;  ///< point in the first image
  Point2d b;  ///< matching point in the second image
  bool operator==(const Correspondence&) const = default;
};

using CorrespondenceSet = std::vector<Correspondence>;

struct RansacParams {
  double inlier_threshold = 3.0;  ///< px
  int iterations = 1000;
  /// Rotation centre of the fitted model b = R(a - c) + c + t.
  Point2d center;
  /// Optional bound on admissible models; rejected candidates are skipped.
  std::function<bool(const RigidTransform&)> accept;

  void validate() const;
};

struct RigidFit {
  RigidTransform transform;
  std::vector<int> inlier_indices;  ///< ascending
  double residual_rms = 0.0;        ///< over inliers, px
};

/// Orthogonal Procrustes (rotation + translation, no scale) over all pairs.
RigidTransform fit_rigid_least_squares(std::span<const Correspondence> pairs, Point2d center = {});

double residual(const RigidTransform& t, const Correspondence& c, Point2d center = {});

/// Throws EstimationFailure with fewer than 3 pairs or when no model reaches
/// 3 inliers.
RigidFit ransac_rigid(std::span<const Correspondence> pairs, const RansacParams& params, Rng& rng);

struct SigmaEstimates {
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double sigma_theta_deg = 0.0;
  int n_pairs = 0;
};

/// `pairwise` holds the relative transform between two samples of one
/// identity; sigma = sqrt(mean squared difference / 2) per axis, with
/// rotations wrapped to (-180, 180] first.
SigmaEstimates estimate_sigmas(std::span<const RigidTransform> pairwise);

/// One pore annotation row. segment_id < 0 or a NaN arc marks the field as
/// absent.
struct PoreAnnotation {
  int identity_id = 0;
  int sample_id = 0;
  int pore_id = 0;
  Point2d position;
  int segment_id = -1;
  double arc = std::numeric_limits<double>::quiet_NaN();
};

/// Consecutive same-segment distances per (identity, sample, segment): arc
/// differences when every row of the segment has an arc, otherwise straight
/// distances in pore-id order. Without segment ids each pore contributes its
/// nearest-neighbour distance within its image. Population std.
PoreSpacingDistribution estimate_pore_spacing(std::span<const PoreAnnotation> annotations);

/// The raw neighbour distances the spacing estimate is computed from.
std::vector<double> pore_spacings(std::span<const PoreAnnotation> annotations);

/// Empirical CDF over observed per-image scratch counts.
ScratchCountCDF estimate_scratch_cdf(std::span<const int> counts);

}  // namespace l3fp
