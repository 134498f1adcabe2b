#include "l3fp/l3_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "l3fp/error.hpp"

namespace l3fp {

void PoreSpacingDistribution::validate() const {
  if (!(mean > 0.0)) throw InvalidArgument("pore spacing mean must be > 0");
  if (!(std_dev >= 0.0)) throw InvalidArgument("pore spacing std_dev must be >= 0");
}

double sample_pore_distance(const PoreSpacingDistribution& dist, Rng& rng) {
  if (dist.std_dev == 0.0) return std::max(dist.mean, PoreSpacingDistribution::kMinDistance);
  for (int i = 0; i < 1000; ++i) {
    const double d = normal(rng, dist.mean, dist.std_dev);
    if (d >= PoreSpacingDistribution::kMinDistance) return d;
  }
  // Mean far below the floor; the truncated mass is concentrated at 3 px.
  return PoreSpacingDistribution::kMinDistance;
}

std::vector<double> chain_arc_lengths(const RidgeSegment& segment) {
  std::vector<double> arcs;
  arcs.reserve(segment.pixels.size());
  double s = 0.0;
  for (std::size_t i = 0; i < segment.pixels.size(); ++i) {
    if (i > 0) {
      const Pixel a = segment.pixels[i - 1], b = segment.pixels[i];
      s += (a.x != b.x && a.y != b.y) ? std::numbers::sqrt2 : 1.0;
    }
    arcs.push_back(s);
  }
  return arcs;
}

std::vector<Pore> place_pores_on_segment(const RidgeSegment& segment,
                                         const DistanceSource& next_distance, int radius) {
  std::vector<Pore> pores;
  if (segment.pixels.empty()) return pores;
  const std::vector<double> arcs = chain_arc_lengths(segment);
  const double end = arcs.back() + 1.0;
  double prev = 0.0;
  for (;;) {
    const double d = next_distance();
    if (!(d > 0.0)) throw InvalidArgument("pore distances must be positive");
    const double target = prev + d;
    if (target > end + 1e-9) break;
    // Nearest pixel to the target arc position.
    auto it = std::lower_bound(arcs.begin(), arcs.end(), target);
    std::size_t idx = static_cast<std::size_t>(it - arcs.begin());
    if (idx == arcs.size()) {
      idx = arcs.size() - 1;
    } else if (idx > 0 && target - arcs[idx - 1] <= arcs[idx] - target) {
      --idx;
    }
    if (arcs[idx] <= prev && !pores.empty()) break;  // no progress left on this chain
    pores.push_back({0, segment.pixels[idx], segment.id, arcs[idx], radius});
    prev = arcs[idx];
  }
  return pores;
}

int pore_radius(double ridge_width) {
  return std::max(1, static_cast<int>(std::floor(ridge_width / 2.0)));
}

std::vector<Pore> place_pores(std::span<const RidgeSegment> segments,
                              std::span<const double> widths, const DistanceSource& next_distance) {
  if (widths.size() != segments.size())
    throw InvalidArgument("place_pores needs one width per segment");
  std::vector<Pore> all;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    auto pores = place_pores_on_segment(segments[i], next_distance, pore_radius(widths[i]));
    all.insert(all.end(), pores.begin(), pores.end());
  }
  for (std::size_t i = 0; i < all.size(); ++i) all[i].id = static_cast<int>(i);
  return all;
}

std::vector<Pore> place_pores(std::span<const RidgeSegment> segments,
                              std::span<const double> widths, const PoreSpacingDistribution& dist,
                              Rng& rng) {
  dist.validate();
  return place_pores(segments, widths, [&] { return sample_pore_distance(dist, rng); });
}

ScratchCountCDF ScratchCountCDF::fallback() { return {{{0, 0.45}, {1, 0.75}, {2, 0.9}, {3, 1.0}}}; }

void ScratchCountCDF::validate() const {
  if (steps.empty()) throw InvalidArgument("scratch count CDF is empty");
  double prev_p = 0.0;
  int prev_count = -1;
  for (const auto& [count, p] : steps) {
    if (count < 0 || count <= prev_count)
      throw InvalidArgument("scratch counts must be non-negative and increasing");
    if (p < prev_p || p > 1.0 + 1e-12) throw InvalidArgument("scratch CDF must be non-decreasing in [0, 1]");
    prev_p = p;
    prev_count = count;
  }
  if (std::abs(prev_p - 1.0) > 1e-9) throw InvalidArgument("scratch CDF must end at 1");
}

int ScratchCountCDF::count_at(double u) const {
  if (steps.empty()) throw InvalidArgument("scratch count CDF is empty");
  for (const auto& [count, p] : steps)
    if (u < p) return count;
  return steps.back().first;
}

int ScratchCountCDF::max_count() const {
  if (steps.empty()) throw InvalidArgument("scratch count CDF is empty");
  return steps.back().first;
}

int sample_scratch_count(const ScratchCountCDF& cdf, Rng& rng) {
  cdf.validate();
  return cdf.count_at(uniform01(rng));
}

std::vector<Point2d> Scratch::vertices() const {
  std::vector<Point2d> v{start};
  double heading = heading_deg;
  for (std::size_t i = 0; i < legs.size(); ++i) {
    if (i > 0) heading += legs[i].turn_deg;
    const double a = deg_to_rad(heading);
    v.push_back(v.back() + Point2d{std::cos(a), std::sin(a)} * legs[i].length);
  }
  return v;
}

void validate_scratch(const Scratch& scratch) {
  if (scratch.legs.empty() || scratch.legs.size() > Scratch::kMaxLegs)
    throw InvalidArgument("scratch must have 1 to 4 legs");
  for (std::size_t i = 0; i < scratch.legs.size(); ++i) {
    const auto& leg = scratch.legs[i];
    if (!(leg.length > 0.0 && leg.length <= Scratch::kMaxLength))
      throw InvalidArgument("scratch leg length outside (0, 150]");
    if (i > 0 && std::abs(leg.turn_deg) > Scratch::kMaxTurnDeg)
      throw InvalidArgument("scratch turn outside [-15, 15] degrees");
  }
  if (!(scratch.stroke_width > 0.0)) throw InvalidArgument("scratch stroke width must be > 0");
}

Scratch generate_scratch(int width, int height, Rng& rng) {
  Scratch s;
  s.start = {uniform(rng, 0.0, width), uniform(rng, 0.0, height)};
  s.heading_deg = uniform(rng, 0.0, 360.0);
  const int legs = std::uniform_int_distribution<int>(1, Scratch::kMaxLegs)(rng);
  for (int i = 0; i < legs; ++i) {
    ScratchLeg leg;
    leg.length = Scratch::kMaxLength * (1.0 - uniform01(rng));  // (0, 150]
    leg.turn_deg = i == 0 ? 0.0 : uniform(rng, -Scratch::kMaxTurnDeg, Scratch::kMaxTurnDeg);
    s.legs.push_back(leg);
  }
  validate_scratch(s);
  return s;
}

namespace {

double segment_distance(Point2d p, Point2d a, Point2d b) {
  const Point2d ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double t = len2 > 0.0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + ab * t);
}

}  // namespace

void render_scratch(GrayImage& image, const Scratch& scratch) {
  const auto v = scratch.vertices();
  const double half = scratch.stroke_width / 2.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(v[i].x, v[i + 1].x) - half)));
    const int x1 = std::min(image.width() - 1, static_cast<int>(std::ceil(std::max(v[i].x, v[i + 1].x) + half)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(v[i].y, v[i + 1].y) - half)));
    const int y1 = std::min(image.height() - 1, static_cast<int>(std::ceil(std::max(v[i].y, v[i + 1].y) + half)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (segment_distance({x + 0.0, y + 0.0}, v[i], v[i + 1]) <= half) image(x, y) = kValleyValue;
  }
}

void render_pore(GrayImage& image, const Pore& pore) {
  const int r = pore.radius;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy > r * r) continue;
      const int x = pore.position.x + dx, y = pore.position.y + dy;
      if (image.contains(x, y)) image(x, y) = kValleyValue;
    }
}

GrayImage render_l3(const MasterFingerprint& master, std::span<const Pore> pores,
                    std::span<const Scratch> scratches) {
  GrayImage image = master.image;
  for (const Pore& p : pores) render_pore(image, p);
  for (const Scratch& s : scratches) render_scratch(image, s);
  return image;
}

L3MasterFingerprint apply_l3(MasterFingerprint master, const PoreSpacingDistribution& dist,
                             const ScratchCountCDF& cdf, Rng& rng, int identity_id) {
  dist.validate();
  cdf.validate();
  L3MasterFingerprint l3;
  l3.identity_id = identity_id;
  l3.pores = place_pores(master.segments, master.widths, dist, rng);
  const int scratches = sample_scratch_count(cdf, rng);
  for (int i = 0; i < scratches; ++i)
    l3.scratches.push_back(generate_scratch(master.width(), master.height(), rng));
  l3.image = render_l3(master, l3.pores, l3.scratches);
  l3.master = std::move(master);
  return l3;
}

}  // namespace l3fp
