#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "l3fp/estimation.hpp"
#include "l3fp/geometry.hpp"

namespace l3fp {

struct MatcherParams {
  int neighbours = 6;             ///< descriptor length
  double inlier_threshold = 3.0;  ///< px
  int iterations = 2000;
  double max_rotation_deg = 45.0;
  double max_translation = 256.0;  ///< px, per axis
  Point2d center{255.5, 255.5};    ///< rotation centre for the bounds
  std::uint64_t seed = 0x5eedULL;

  void validate() const;
};

struct MatchResult {
  double score = 0.0;  ///< inliers / min(|A|, |B|), in [0, 1]
  int inliers = 0;
  int candidates = 0;
  RigidTransform transform;  ///< maps A onto B; identity when no fit
  bool aligned = false;
};

/// Rotation-invariant descriptor: ascending distances to the k nearest
/// other points, padded with +inf when the set is small.
std::vector<std::vector<double>> neighbour_descriptors(std::span<const Point2d> points, int k);

/// Mutual nearest neighbours in descriptor space, as (index in A, index in B).
std::vector<std::pair<int, int>> mutual_descriptor_matches(std::span<const Point2d> a,
                                                           std::span<const Point2d> b, int k);

/// Descriptor candidates feed a bounded RANSAC rigid fit; the score counts
/// mutual nearest points within the threshold once A is aligned onto B.
/// The pair is put in a canonical order first so that swapping the
/// arguments does not change the result.
MatchResult match_pores(std::span<const Point2d> a, std::span<const Point2d> b,
                        const MatcherParams& params = {});

enum class PairKind { Genuine, Impostor };
std::string_view to_string(PairKind k);

struct ProtocolSample {
  int identity_id = 0;
  int session = 0;
  int sample_id = 0;
  std::vector<Point2d> pores;
};

enum class GenuinePolicy { CrossSession, AllPairs };
enum class ImpostorPolicy { FirstSample, AllSamples };

struct ProtocolParams {
  GenuinePolicy genuine = GenuinePolicy::CrossSession;
  ImpostorPolicy impostor = ImpostorPolicy::FirstSample;
  MatcherParams matcher;
};

struct ScoredPair {
  int identity_a = 0;
  int sample_a = 0;
  int identity_b = 0;
  int sample_b = 0;
  PairKind kind = PairKind::Genuine;
  double score = 0.0;
};

/// Comparison list without scores, in the order they are evaluated.
std::vector<ScoredPair> protocol_pairs(std::span<const ProtocolSample> samples,
                                       const ProtocolParams& params = {});

/// Scores every protocol pair across `workers` threads.
std::vector<ScoredPair> run_protocol(std::span<const ProtocolSample> samples,
                                     const ProtocolParams& params = {}, int workers = 1);

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;  ///< fraction of impostors with score >= threshold
  double frr = 0.0;  ///< fraction of genuines with score < threshold
};

struct RocCurve {
  std::vector<RocPoint> points;  ///< ascending threshold
  double eer = 0.0;              ///< percent
  std::size_t eer_index = 0;     ///< point with minimal |FAR - FRR|
};

RocCurve compute_roc(std::span<const double> genuine, std::span<const double> impostor);
RocCurve compute_roc(std::span<const ScoredPair> scores);

/// FRR as a function of FAR, lowest FRR at repeated FAR values, linear in
/// between; the curve is closed by (FAR 0, FRR 1) and (FAR 1, FRR 0).
double frr_at_far(const RocCurve& curve, double far);

struct MeanRoc {
  std::vector<double> far;  ///< shared grid
  std::vector<double> mean_frr;
  std::vector<double> ci_half_width;  ///< 95%, Student t with n - 1 dof
  double mean_eer = 0.0;
  double eer_ci_half_width = 0.0;
  int replicas = 0;
};

MeanRoc aggregate_replicas(std::span<const RocCurve> curves, int grid_points = 101);

/// Half width of the two-sided 95% t interval of the mean.
double t_confidence_half_width(std::span<const double> values);

}  // namespace l3fp
