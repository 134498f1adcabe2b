#include "l3fp/matcher.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "l3fp/error.hpp"

namespace l3fp {

void MatcherParams::validate() const {
  if (neighbours < 1) throw InvalidArgument("matcher neighbours must be >= 1");
  if (!(inlier_threshold > 0.0)) throw InvalidArgument("matcher threshold must be > 0");
  if (iterations < 1) throw InvalidArgument("matcher iterations must be >= 1");
  if (!(max_rotation_deg > 0.0 && max_translation > 0.0))
    throw InvalidArgument("matcher search bounds must be > 0");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Uniform bucket grid for radius queries.
class PointGrid {
 public:
  PointGrid(std::span<const Point2d> pts, double cell) : pts_(pts), cell_(cell) {
    if (pts.empty()) return;
    min_ = max_ = pts[0];
    for (Point2d p : pts) {
      min_ = {std::min(min_.x, p.x), std::min(min_.y, p.y)};
      max_ = {std::max(max_.x, p.x), std::max(max_.y, p.y)};
    }
    nx_ = static_cast<int>((max_.x - min_.x) / cell_) + 1;
    ny_ = static_cast<int>((max_.y - min_.y) / cell_) + 1;
    start_.assign(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
    for (Point2d p : pts) ++start_[index(cell_of(p.x, min_.x, nx_), cell_of(p.y, min_.y, ny_)) + 1];
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    items_.resize(pts.size());
    std::vector<int> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i)
      items_[fill[index(cell_of(pts[i].x, min_.x, nx_), cell_of(pts[i].y, min_.y, ny_))]++] =
          static_cast<int>(i);
  }

  /// Nearest point within `radius` of q (excluding `skip`), or -1.
  int nearest(Point2d q, double radius, int skip = -1) const {
    if (pts_.empty()) return -1;
    const int r = static_cast<int>(std::ceil(radius / cell_));
    const int cx = static_cast<int>(std::floor((q.x - min_.x) / cell_));
    const int cy = static_cast<int>(std::floor((q.y - min_.y) / cell_));
    int best = -1;
    double best_d = radius;
    for (int y = std::max(0, cy - r); y <= std::min(ny_ - 1, cy + r); ++y)
      for (int x = std::max(0, cx - r); x <= std::min(nx_ - 1, cx + r); ++x)
        for (int k = start_[index(x, y)]; k < start_[index(x, y) + 1]; ++k) {
          const int i = items_[k];
          if (i == skip) continue;
          const double d = distance(pts_[i], q);
          if (d < best_d || (d == best_d && (best < 0 || i < best))) {
            best_d = d;
            best = i;
          }
        }
    return best;
  }

  /// Distances from q to every point within `radius` (excluding `skip`).
  void within(Point2d q, double radius, int skip, std::vector<double>& out) const {
    out.clear();
    if (pts_.empty()) return;
    const int r = static_cast<int>(std::ceil(radius / cell_));
    const int cx = static_cast<int>(std::floor((q.x - min_.x) / cell_));
    const int cy = static_cast<int>(std::floor((q.y - min_.y) / cell_));
    for (int y = std::max(0, cy - r); y <= std::min(ny_ - 1, cy + r); ++y)
      for (int x = std::max(0, cx - r); x <= std::min(nx_ - 1, cx + r); ++x)
        for (int k = start_[index(x, y)]; k < start_[index(x, y) + 1]; ++k) {
          const int i = items_[k];
          if (i == skip) continue;
          const double d = distance(pts_[i], q);
          if (d <= radius) out.push_back(d);
        }
  }

 private:
  int cell_of(double v, double lo, int n) const {
    return std::clamp(static_cast<int>((v - lo) / cell_), 0, n - 1);
  }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * nx_ + x; }

  std::span<const Point2d> pts_;
  double cell_;
  Point2d min_, max_;
  int nx_ = 0, ny_ = 0;
  std::vector<int> start_;
  std::vector<int> items_;
};

double descriptor_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ia = std::isinf(a[i]), ib = std::isinf(b[i]);
    if (ia && ib) continue;
    if (ia || ib) return kInf;
    s += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return s;
}

}  // namespace

std::vector<std::vector<double>> neighbour_descriptors(std::span<const Point2d> points, int k) {
  std::vector<std::vector<double>> out(points.size());
  if (points.empty()) return out;
  const PointGrid grid(points, 16.0);
  std::vector<double> near;
  for (std::size_t i = 0; i < points.size(); ++i) {
    // Grow the search radius until k neighbours are found or all points seen.
    double radius = 32.0;
    for (;;) {
      grid.within(points[i], radius, static_cast<int>(i), near);
      if (static_cast<int>(near.size()) >= k || near.size() + 1 >= points.size()) break;
      radius *= 2.0;
    }
    std::sort(near.begin(), near.end());
    near.resize(std::min<std::size_t>(near.size(), k));
    near.resize(k, kInf);
    out[i] = near;
  }
  return out;
}

std::vector<std::pair<int, int>> mutual_descriptor_matches(std::span<const Point2d> a,
                                                           std::span<const Point2d> b, int k) {
  std::vector<std::pair<int, int>> out;
  if (a.empty() || b.empty()) return out;
  const auto da = neighbour_descriptors(a, k);
  const auto db = neighbour_descriptors(b, k);
  std::vector<int> best_ab(a.size(), -1), best_ba(b.size(), -1);
  std::vector<double> dist_ba(b.size(), kInf);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double best = kInf;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = descriptor_distance(da[i], db[j]);
      if (d < best) {
        best = d;
        best_ab[i] = static_cast<int>(j);
      }
      if (d < dist_ba[j]) {
        dist_ba[j] = d;
        best_ba[j] = static_cast<int>(i);
      }
    }
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (best_ab[i] >= 0 && best_ba[best_ab[i]] == static_cast<int>(i))
      out.emplace_back(static_cast<int>(i), best_ab[i]);
  return out;
}

namespace {

int count_mutual_within(std::span<const Point2d> a, std::span<const Point2d> b,
                        const RigidTransform& t, Point2d center, double threshold) {
  std::vector<Point2d> moved;
  moved.reserve(a.size());
  for (Point2d p : a) moved.push_back(t.apply(p, center));
  const PointGrid ga(moved, std::max(threshold, 4.0));
  const PointGrid gb(b, std::max(threshold, 4.0));
  int n = 0;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    const int j = gb.nearest(moved[i], threshold);
    if (j >= 0 && ga.nearest(b[j], threshold) == static_cast<int>(i)) ++n;
  }
  return n;
}

MatchResult match_ordered(std::span<const Point2d> a, std::span<const Point2d> b,
                          const MatcherParams& params) {
  MatchResult r;
  if (a.empty() || b.empty()) return r;
  const auto cand = mutual_descriptor_matches(a, b, params.neighbours);
  r.candidates = static_cast<int>(cand.size());
  if (cand.size() < 3) return r;

  CorrespondenceSet pairs;
  pairs.reserve(cand.size());
  for (auto [i, j] : cand) pairs.push_back({a[i], b[j]});
  RansacParams rp;
  rp.inlier_threshold = params.inlier_threshold;
  rp.iterations = params.iterations;
  rp.center = params.center;
  rp.accept = [&](const RigidTransform& t) {
    return std::abs(wrap_degrees(t.theta_deg)) <= params.max_rotation_deg &&
           std::abs(t.dx) <= params.max_translation && std::abs(t.dy) <= params.max_translation;
  };
  Rng rng(params.seed);
  RigidFit fit;
  try {
    fit = ransac_rigid(pairs, rp, rng);
  } catch (const EstimationFailure&) {
    return r;
  }
  r.aligned = true;
  r.transform = fit.transform;
  r.inliers = count_mutual_within(a, b, fit.transform, params.center, params.inlier_threshold);
  r.score = static_cast<double>(r.inliers) / std::min(a.size(), b.size());
  return r;
}

bool lexicographically_less(std::span<const Point2d> a, std::span<const Point2d> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [](Point2d p, Point2d q) {
                                        return p.x < q.x || (p.x == q.x && p.y < q.y);
                                      });
}

}  // namespace

MatchResult match_pores(std::span<const Point2d> a, std::span<const Point2d> b,
                        const MatcherParams& params) {
  params.validate();
  if (!lexicographically_less(b, a)) return match_ordered(a, b, params);
  // Report the transform in the caller's direction.
  MatchResult r = match_ordered(b, a, params);
  if (r.aligned) {
    const RigidTransform t = r.transform;
    const double th = deg_to_rad(-t.theta_deg);
    const Point2d u{-t.dx, -t.dy};
    r.transform = {std::cos(th) * u.x - std::sin(th) * u.y, std::sin(th) * u.x + std::cos(th) * u.y,
                   -t.theta_deg};
  }
  return r;
}

std::string_view to_string(PairKind k) { return k == PairKind::Genuine ? "genuine" : "impostor"; }

std::vector<ScoredPair> protocol_pairs(std::span<const ProtocolSample> samples,
                                       const ProtocolParams& params) {
  std::vector<const ProtocolSample*> sorted;
  for (const auto& s : samples) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(), [](auto* p, auto* q) {
    return std::tie(p->identity_id, p->session, p->sample_id) <
           std::tie(q->identity_id, q->session, q->sample_id);
  });

  std::vector<ScoredPair> out;
  auto add = [&](const ProtocolSample& x, const ProtocolSample& y, PairKind kind) {
    out.push_back({x.identity_id, x.sample_id, y.identity_id, y.sample_id, kind, 0.0});
  };
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const auto& x = *sorted[i];
      const auto& y = *sorted[j];
      if (x.identity_id != y.identity_id) break;
      if (params.genuine == GenuinePolicy::AllPairs || x.session != y.session)
        add(x, y, PairKind::Genuine);
    }

  std::vector<const ProtocolSample*> firsts;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (params.impostor == ImpostorPolicy::AllSamples || i == 0 ||
        sorted[i]->identity_id != sorted[i - 1]->identity_id)
      firsts.push_back(sorted[i]);
  for (std::size_t i = 0; i < firsts.size(); ++i)
    for (std::size_t j = i + 1; j < firsts.size(); ++j)
      if (firsts[i]->identity_id != firsts[j]->identity_id)
        add(*firsts[i], *firsts[j], PairKind::Impostor);
  return out;
}

std::vector<ScoredPair> run_protocol(std::span<const ProtocolSample> samples,
                                     const ProtocolParams& params, int workers) {
  params.matcher.validate();
  std::vector<ScoredPair> pairs = protocol_pairs(samples, params);
  std::map<std::pair<int, int>, const ProtocolSample*> index;
  for (const auto& s : samples) {
    if (!index.emplace(std::pair{s.identity_id, s.sample_id}, &s).second)
      throw InvalidArgument("duplicate sample " + std::to_string(s.identity_id) + "/" +
                            std::to_string(s.sample_id));
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < pairs.size();) {
      auto& p = pairs[k];
      p.score = match_pores(index.at({p.identity_a, p.sample_a})->pores,
                            index.at({p.identity_b, p.sample_b})->pores, params.matcher)
                    .score;
    }
  };
  const int n = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return pairs;
}

RocCurve compute_roc(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty())
    throw InvalidArgument("ROC needs at least one genuine and one impostor score");
  std::vector<double> g(genuine.begin(), genuine.end()), im(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> thresholds;
  thresholds.reserve(g.size() + im.size());
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  RocCurve roc;
  for (double t : thresholds) {
    const auto below_g = std::lower_bound(g.begin(), g.end(), t) - g.begin();
    const auto below_i = std::lower_bound(im.begin(), im.end(), t) - im.begin();
    RocPoint p;
    p.threshold = t;
    p.far = static_cast<double>(im.size() - below_i) / im.size();
    p.frr = static_cast<double>(below_g) / g.size();
    roc.points.push_back(p);
  }

  double best = kInf;
  for (std::size_t i = 0; i < roc.points.size(); ++i) {
    const double d = std::abs(roc.points[i].far - roc.points[i].frr);
    if (d < best) {
      best = d;
      roc.eer_index = i;
    }
  }
  const auto& m = roc.points[roc.eer_index];
  double eer = (m.far + m.frr) / 2.0;
  // FAR - FRR decreases with the threshold; interpolate across a crossing
  // next to the minimum.
  auto crossing = [&](std::size_t i) {
    const auto& p = roc.points[i];
    const auto& q = roc.points[i + 1];
    const double dp = p.far - p.frr, dq = q.far - q.frr;
    if (!(dp > 0.0 && dq < 0.0)) return false;
    const double a = dp / (dp - dq);
    eer = p.far + a * (q.far - p.far);
    return true;
  };
  if (best > 0.0) {
    if (roc.eer_index + 1 < roc.points.size() && crossing(roc.eer_index)) {
    } else if (roc.eer_index > 0) {
      crossing(roc.eer_index - 1);
    }
  }
  roc.eer = 100.0 * eer;
  return roc;
}

RocCurve compute_roc(std::span<const ScoredPair> scores) {
  std::vector<double> g, im;
  for (const auto& s : scores) (s.kind == PairKind::Genuine ? g : im).push_back(s.score);
  return compute_roc(g, im);
}

double frr_at_far(const RocCurve& curve, double far) {
  std::vector<std::pair<double, double>> pts{{0.0, 1.0}, {1.0, 0.0}};
  for (const auto& p : curve.points) pts.emplace_back(p.far, p.frr);
  std::sort(pts.begin(), pts.end());
  // Keep the lowest FRR per FAR value.
  std::vector<std::pair<double, double>> uniq;
  for (const auto& p : pts)
    if (uniq.empty() || uniq.back().first != p.first) uniq.push_back(p);
  const double f = std::clamp(far, 0.0, 1.0);
  auto hi = std::lower_bound(uniq.begin(), uniq.end(), f,
                             [](const auto& p, double v) { return p.first < v; });
  if (hi->first == f) return hi->second;
  auto lo = hi - 1;
  const double a = (f - lo->first) / (hi->first - lo->first);
  return lo->second + a * (hi->second - lo->second);
}

double t_confidence_half_width(std::span<const double> values) {
  if (values.size() < 2) throw InvalidArgument("confidence interval needs >= 2 values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  return boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(n);
}

MeanRoc aggregate_replicas(std::span<const RocCurve> curves, int grid_points) {
  if (curves.size() < 2) throw InvalidArgument("aggregation needs at least 2 curves");
  if (grid_points < 2) throw InvalidArgument("FAR grid needs at least 2 points");
  MeanRoc m;
  m.replicas = static_cast<int>(curves.size());
  std::vector<double> v(curves.size());
  for (int k = 0; k < grid_points; ++k) {
    const double f = static_cast<double>(k) / (grid_points - 1);
    for (std::size_t c = 0; c < curves.size(); ++c) v[c] = frr_at_far(curves[c], f);
    m.far.push_back(f);
    m.mean_frr.push_back(std::accumulate(v.begin(), v.end(), 0.0) / v.size());
    m.ci_half_width.push_back(t_confidence_half_width(v));
  }
  for (std::size_t c = 0; c < curves.size(); ++c) v[c] = curves[c].eer;
  m.mean_eer = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  m.eer_ci_half_width = t_confidence_half_width(v);
  return m;
}

}  // namespace l3fp
