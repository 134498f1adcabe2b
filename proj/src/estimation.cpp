#include "l3fp/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "l3fp/error.hpp"

namespace l3fp {

void RansacParams::validate() const {
  if (!(inlier_threshold > 0.0)) throw InvalidArgument("inlier threshold must be > 0");
  if (iterations < 1) throw InvalidArgument("RANSAC iterations must be >= 1");
}

RigidTransform fit_rigid_least_squares(std::span<const Correspondence> pairs, Point2d center) {
  if (pairs.empty()) throw EstimationFailure("rigid fit needs at least one pair");
  Point2d ma, mb;
  for (const auto& c : pairs) {
    ma = ma + (c.a - center);
    mb = mb + (c.b - center);
  }
  const double n = static_cast<double>(pairs.size());
  ma = ma * (1.0 / n);
  mb = mb * (1.0 / n);
  double dot = 0.0, cross = 0.0;
  for (const auto& c : pairs) {
    const Point2d a = c.a - center - ma, b = c.b - center - mb;
    dot += a.x * b.x + a.y * b.y;
    cross += a.x * b.y - a.y * b.x;
  }
  const double theta = (dot == 0.0 && cross == 0.0) ? 0.0 : std::atan2(cross, dot);
  const double co = std::cos(theta), si = std::sin(theta);
  RigidTransform t;
  t.theta_deg = rad_to_deg(theta);
  t.dx = mb.x - (co * ma.x - si * ma.y);
  t.dy = mb.y - (si * ma.x + co * ma.y);
  return t;
}

double residual(const RigidTransform& t, const Correspondence& c, Point2d center) {
  return distance(t.apply(c.a, center), c.b);
}

namespace {

struct Scored {
  std::vector<int> inliers;
  double rms = 0.0;
};

Scored score_model(std::span<const Correspondence> pairs, const RigidTransform& t,
                   const RansacParams& p) {
  Scored s;
  double sq = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double r = residual(t, pairs[i], p.center);
    if (r <= p.inlier_threshold) {
      s.inliers.push_back(static_cast<int>(i));
      sq += r * r;
    }
  }
  if (!s.inliers.empty()) s.rms = std::sqrt(sq / s.inliers.size());
  return s;
}

bool better(const Scored& a, const Scored& b) {
  if (a.inliers.size() != b.inliers.size()) return a.inliers.size() > b.inliers.size();
  return a.rms < b.rms;
}

}  // namespace

RigidFit ransac_rigid(std::span<const Correspondence> pairs, const RansacParams& params, Rng& rng) {
  params.validate();
  if (pairs.size() < 3) throw EstimationFailure("RANSAC needs at least 3 correspondences");
  for (const auto& c : pairs)
    if (!std::isfinite(c.a.x) || !std::isfinite(c.a.y) || !std::isfinite(c.b.x) ||
        !std::isfinite(c.b.y))
      throw InvalidArgument("correspondence coordinates must be finite");

  const int n = static_cast<int>(pairs.size());
  std::uniform_int_distribution<int> pick(0, n - 1);
  Scored best;
  RigidTransform best_t;
  bool found = false;
  for (int it = 0; it < params.iterations; ++it) {
    const int i = pick(rng);
    int j = pick(rng);
    if (i == j) continue;
    const Point2d va = pairs[j].a - pairs[i].a, vb = pairs[j].b - pairs[i].b;
    if (norm(va) < 1e-6 || norm(vb) < 1e-6) continue;
    const Correspondence sample[2] = {pairs[i], pairs[j]};
    const RigidTransform t = fit_rigid_least_squares(sample, params.center);
    if (params.accept && !params.accept(t)) continue;
    Scored s = score_model(pairs, t, params);
    if (!found || better(s, best)) {
      best = std::move(s);
      best_t = t;
      found = true;
    }
  }
  if (!found || best.inliers.size() < 3)
    throw EstimationFailure("no rigid model reached 3 inliers");

  // Refit on the inliers until the set stops changing.
  for (int round = 0; round < 20; ++round) {
    std::vector<Correspondence> in;
    in.reserve(best.inliers.size());
    for (int k : best.inliers) in.push_back(pairs[k]);
    const RigidTransform t = fit_rigid_least_squares(in, params.center);
    if (params.accept && !params.accept(t)) break;
    Scored s = score_model(pairs, t, params);
    if (s.inliers.size() < 3) break;
    const bool same = s.inliers == best.inliers;
    best = std::move(s);
    best_t = t;
    if (same) break;
  }

  RigidFit fit;
  fit.transform = best_t;
  fit.inlier_indices = std::move(best.inliers);
  fit.residual_rms = best.rms;
  return fit;
}

SigmaEstimates estimate_sigmas(std::span<const RigidTransform> pairwise) {
  if (pairwise.empty()) throw EstimationFailure("sigma estimation needs at least one pair");
  double sx = 0.0, sy = 0.0, st = 0.0;
  for (const auto& t : pairwise) {
    const double th = wrap_degrees(t.theta_deg);
    sx += t.dx * t.dx;
    sy += t.dy * t.dy;
    st += th * th;
  }
  const double n = static_cast<double>(pairwise.size());
  SigmaEstimates e;
  e.sigma_x = std::sqrt(sx / n / 2.0);
  e.sigma_y = std::sqrt(sy / n / 2.0);
  e.sigma_theta_deg = std::sqrt(st / n / 2.0);
  e.n_pairs = static_cast<int>(pairwise.size());
  return e;
}

std::vector<double> pore_spacings(std::span<const PoreAnnotation> annotations) {
  using ImageKey = std::pair<int, int>;
  std::map<ImageKey, std::vector<const PoreAnnotation*>> loose;
  std::map<std::tuple<int, int, int>, std::vector<const PoreAnnotation*>> chains;
  for (const auto& a : annotations) {
    if (a.segment_id >= 0)
      chains[{a.identity_id, a.sample_id, a.segment_id}].push_back(&a);
    else
      loose[{a.identity_id, a.sample_id}].push_back(&a);
  }

  std::vector<double> d;
  for (auto& [key, v] : chains) {
    const bool arcs = std::all_of(v.begin(), v.end(), [](auto* p) { return std::isfinite(p->arc); });
    if (arcs)
      std::stable_sort(v.begin(), v.end(), [](auto* p, auto* q) { return p->arc < q->arc; });
    else
      std::stable_sort(v.begin(), v.end(), [](auto* p, auto* q) { return p->pore_id < q->pore_id; });
    for (std::size_t i = 1; i < v.size(); ++i)
      d.push_back(arcs ? v[i]->arc - v[i - 1]->arc : distance(v[i]->position, v[i - 1]->position));
  }
  for (auto& [key, v] : loose) {
    if (v.size() < 2) continue;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double nn = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < v.size(); ++j)
        if (j != i) nn = std::min(nn, distance(v[i]->position, v[j]->position));
      d.push_back(nn);
    }
  }
  return d;
}

PoreSpacingDistribution estimate_pore_spacing(std::span<const PoreAnnotation> annotations) {
  if (annotations.size() < 2) throw EstimationFailure("pore spacing needs at least 2 pores");
  const std::vector<double> d = pore_spacings(annotations);
  if (d.empty()) throw EstimationFailure("no neighbouring pore pairs in the annotations");
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / d.size();
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  PoreSpacingDistribution out;
  out.mean = mean;
  out.std_dev = std::sqrt(var / d.size());
  return out;
}

ScratchCountCDF estimate_scratch_cdf(std::span<const int> counts) {
  if (counts.empty()) throw EstimationFailure("scratch CDF needs at least one count");
  std::map<int, int> tally;
  for (int c : counts) {
    if (c < 0) throw InvalidArgument("scratch counts must be >= 0");
    ++tally[c];
  }
  ScratchCountCDF cdf;
  int running = 0;
  for (const auto& [count, n] : tally) {
    running += n;
    cdf.steps.emplace_back(count, static_cast<double>(running) / counts.size());
  }
  cdf.steps.back().second = 1.0;
  return cdf;
}

}  // namespace l3fp
