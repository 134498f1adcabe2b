#include "l3fp/ridge_topology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "l3fp/error.hpp"

namespace l3fp {
namespace {

constexpr double kPi = std::numbers::pi;

// Neighbour offsets in Zhang-Suen order P2..P9: N, NE, E, SE, S, SW, W, NW.
constexpr std::array<int, 8> kDx = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDy = {-1, -1, 0, 1, 1, 1, 0, -1};

double lanczos3(double x) {
  x = std::abs(x);
  if (x < 1e-12) return 1.0;
  if (x >= 3.0) return 0.0;
  const double px = kPi * x;
  return 3.0 * std::sin(px) * std::sin(px / 3.0) / (px * px);
}

struct Taps {
  std::array<int, 6> index{};
  std::array<double, 6> weight{};
};

std::vector<Taps> lanczos_taps(int src_len, int factor) {
  std::vector<Taps> taps(static_cast<std::size_t>(src_len) * factor);
  for (int o = 0; o < src_len * factor; ++o) {
    const double u = (o + 0.5) / factor - 0.5;
    const int base = static_cast<int>(std::floor(u)) - 2;
    Taps& t = taps[o];
    double sum = 0.0;
    for (int k = 0; k < 6; ++k) {
      const int i = base + k;
      t.index[k] = std::clamp(i, 0, src_len - 1);
      t.weight[k] = lanczos3(u - i);
      sum += t.weight[k];
    }
    for (double& w : t.weight) w /= sum;
  }
  return taps;
}

// 8-bit neighbourhood code, bit k set when neighbour P(k+2) is foreground.
std::uint8_t neighbour_code(const BinaryImage& img, int x, int y) {
  std::uint8_t code = 0;
  for (int k = 0; k < 8; ++k)
    if (img.at_or(x + kDx[k], y + kDy[k], 0)) code |= static_cast<std::uint8_t>(1u << k);
  return code;
}

int transitions(std::uint8_t code) {
  int a = 0;
  for (int k = 0; k < 8; ++k) {
    const bool cur = code & (1u << k);
    const bool next = code & (1u << ((k + 1) % 8));
    if (!cur && next) ++a;
  }
  return a;
}

// Deletion tables for the two Zhang-Suen subiterations.
struct ZhangSuenTables {
  std::array<std::array<bool, 256>, 2> deletable{};

  ZhangSuenTables() {
    for (int code = 0; code < 256; ++code) {
      auto p = [&](int n) { return (code >> (n - 2)) & 1; };  // p(2)..p(9)
      const int b = __builtin_popcount(static_cast<unsigned>(code));
      const int a = transitions(static_cast<std::uint8_t>(code));
      const bool common = b >= 2 && b <= 6 && a == 1;
      deletable[0][code] = common && p(2) * p(4) * p(6) == 0 && p(4) * p(6) * p(8) == 0;
      deletable[1][code] = common && p(2) * p(4) * p(8) == 0 && p(2) * p(6) * p(8) == 0;
    }
  }
};

const ZhangSuenTables& zs_tables() {
  static const ZhangSuenTables tables;
  return tables;
}

}  // namespace

FloatImage resample_x3(const BinaryImage& src, Resampler resampler) {
  const int w = src.width(), h = src.height();
  const int ow = w * kUpscaleFactor, oh = h * kUpscaleFactor;
  FloatImage out(ow, oh);
  if (resampler == Resampler::Replicate) {
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        out(x, y) = src(x / kUpscaleFactor, y / kUpscaleFactor) ? 255.0f : 0.0f;
    return out;
  }
  const auto tx = lanczos_taps(w, kUpscaleFactor);
  const auto ty = lanczos_taps(h, kUpscaleFactor);
  FloatImage horizontal(ow, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 6; ++k) acc += tx[x].weight[k] * (src(tx[x].index[k], y) ? 255.0 : 0.0);
      horizontal(x, y) = static_cast<float>(acc);
    }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 6; ++k) acc += ty[y].weight[k] * horizontal(x, ty[y].index[k]);
      out(x, y) = static_cast<float>(acc);
    }
  return out;
}

FloatImage mean_filter3x3(const FloatImage& src) {
  const int w = src.width(), h = src.height();
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          acc += src(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1));
      out(x, y) = static_cast<float>(acc / 9.0);
    }
  return out;
}

GrayImage upscale_and_smooth(const BinaryImage& ridge_pixels, Resampler resampler) {
  if (ridge_pixels.width() != kRidgeMapWidth || ridge_pixels.height() != kRidgeMapHeight)
    throw InvalidArgument("upscale_and_smooth expects a 275x400 ridge map");
  const FloatImage smooth = mean_filter3x3(resample_x3(ridge_pixels, resampler));
  GrayImage out(smooth.width(), smooth.height());
  auto src = smooth.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(src[i]), 0L, 255L));
  return out;
}

GrayImage upscale_and_smooth(const RidgeMap& ridge_map, Resampler resampler) {
  return upscale_and_smooth(ridge_map.pixels, resampler);
}

Skeleton thin(const GrayImage& image) {
  BinaryImage binary(image.width(), image.height());
  auto src = image.pixels();
  auto dst = binary.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= kThinningThreshold ? 1 : 0;
  return thin_binary(binary);
}

Skeleton thin_binary(const BinaryImage& binary) {
  const auto& tables = zs_tables();
  BinaryImage img = binary;
  std::vector<Pixel> live;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img(x, y)) live.push_back({x, y});

  std::vector<Pixel> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int sub = 0; sub < 2; ++sub) {
      doomed.clear();
      for (const Pixel& p : live)
        if (tables.deletable[sub][neighbour_code(img, p.x, p.y)]) doomed.push_back(p);
      if (doomed.empty()) continue;
      changed = true;
      for (const Pixel& p : doomed) img(p.x, p.y) = 0;
      std::erase_if(live, [&](const Pixel& p) { return img(p.x, p.y) == 0; });
    }
  }
  return Skeleton{std::move(img)};
}

int crossing_number(const BinaryImage& image, int x, int y) {
  return transitions(neighbour_code(image, x, y));
}

int neighbour_count(const BinaryImage& image, int x, int y) {
  return __builtin_popcount(neighbour_code(image, x, y));
}

BinaryImage branch_points(const Skeleton& skeleton) {
  BinaryImage out(skeleton.width(), skeleton.height());
  for (int y = 0; y < skeleton.height(); ++y)
    for (int x = 0; x < skeleton.width(); ++x)
      if (skeleton.pixels(x, y) && crossing_number(skeleton.pixels, x, y) >= 3) out(x, y) = 1;
  return out;
}

namespace {

// Edge neighbours before diagonal ones, so staircase corners are visited
// rather than skipped.
constexpr std::array<int, 8> kWalkDx = {1, 0, -1, 0, 1, -1, -1, 1};
constexpr std::array<int, 8> kWalkDy = {0, 1, 0, -1, 1, 1, -1, -1};

struct Tracer {
  const BinaryImage& skel;
  const BinaryImage& branch;
  BinaryImage visited;

  Tracer(const BinaryImage& s, const BinaryImage& b)
      : skel(s), branch(b), visited(s.width(), s.height()) {}

  bool chain_pixel(int x, int y) const {
    return skel.at_or(x, y, 0) && !branch.at_or(x, y, 0);
  }

  // A diagonal step may not cut the corner of a branch pixel; otherwise two
  // arms meeting at a junction would be traced as one chain.
  bool reachable(Pixel from, int nx, int ny) const {
    if (!chain_pixel(nx, ny)) return false;
    if (nx == from.x || ny == from.y) return true;
    return !branch.at_or(nx, from.y, 0) && !branch.at_or(from.x, ny, 0);
  }

  // Chain end: at most one run of reachable chain pixels around it.
  bool is_end(int x, int y) const {
    std::uint8_t code = 0;
    for (int k = 0; k < 8; ++k)
      if (reachable({x, y}, x + kDx[k], y + kDy[k])) code |= static_cast<std::uint8_t>(1u << k);
    return transitions(code) <= 1;
  }

  void extend(std::vector<Pixel>& path, Pixel cur) {
    for (;;) {
      bool moved = false;
      for (int k = 0; k < 8; ++k) {
        const int nx = cur.x + kWalkDx[k], ny = cur.y + kWalkDy[k];
        if (reachable(cur, nx, ny) && !visited(nx, ny)) {
          cur = {nx, ny};
          visited(nx, ny) = 1;
          path.push_back(cur);
          moved = true;
          break;
        }
      }
      if (!moved) return;
    }
  }

  // Walks away from `start`, then back out of its other side when the start
  // was not a chain end.
  std::vector<Pixel> walk(Pixel start) {
    std::vector<Pixel> path{start};
    visited(start.x, start.y) = 1;
    extend(path, start);
    std::vector<Pixel> back;
    extend(back, start);
    if (!back.empty()) {
      std::reverse(back.begin(), back.end());
      back.insert(back.end(), path.begin(), path.end());
      path = std::move(back);
    }
    return path;
  }

  // First branch pixel adjacent to `p`, preferring edge neighbours.
  std::optional<Pixel> adjacent_branch(Pixel p, std::optional<Pixel> exclude) const {
    for (int k = 0; k < 8; ++k) {
      const Pixel q{p.x + kWalkDx[k], p.y + kWalkDy[k]};
      if (branch.at_or(q.x, q.y, 0) && q != exclude) return q;
    }
    return std::nullopt;
  }
};

bool adjacent8(Pixel a, Pixel b) {
  return a != b && std::abs(a.x - b.x) <= 1 && std::abs(a.y - b.y) <= 1;
}

}  // namespace

std::vector<RidgeSegment> split_segments(const Skeleton& skeleton, std::size_t min_length) {
  const BinaryImage branch = branch_points(skeleton);
  Tracer tracer(skeleton.pixels, branch);
  std::vector<std::vector<Pixel>> chains;
  std::vector<bool> closed;

  // Open chains from their ends, then whatever remains (closed loops).
  for (int pass = 0; pass < 2; ++pass)
    for (int y = 0; y < skeleton.height(); ++y)
      for (int x = 0; x < skeleton.width(); ++x) {
        if (!tracer.chain_pixel(x, y) || tracer.visited(x, y)) continue;
        if (pass == 0 && !tracer.is_end(x, y)) continue;
        chains.push_back(tracer.walk({x, y}));
        closed.push_back(pass == 1 && chains.back().size() > 2 &&
                         adjacent8(chains.back().front(), chains.back().back()));
      }

  std::vector<RidgeSegment> segments;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    std::vector<Pixel> px = std::move(chains[c]);
    if (!closed[c]) {
      const auto head = tracer.adjacent_branch(px.front(), std::nullopt);
      const auto tail = tracer.adjacent_branch(px.back(), head);
      if (head) px.insert(px.begin(), *head);
      if (tail && (px.size() > 1 || !head)) px.push_back(*tail);
      if (px.back() < px.front()) std::reverse(px.begin(), px.end());
    }
    if (px.size() < min_length) continue;
    segments.push_back({0, std::move(px)});
  }
  std::stable_sort(segments.begin(), segments.end(),
                   [](const RidgeSegment& a, const RidgeSegment& b) {
                     return a.pixels.front() < b.pixels.front();
                   });
  for (std::size_t i = 0; i < segments.size(); ++i) segments[i].id = static_cast<int>(i);
  return segments;
}

double ThicknessState::width() const {
  return std::max(kMinWidth, std::abs(kAmplitude * std::sin(t())));
}

int stroke_radius(double width) { return static_cast<int>(std::lround(width)); }

void stamp_disk(GrayImage& image, Pixel center, int radius, std::uint8_t value) {
  const int limit = radius * (radius + 1);
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > limit) continue;
      const int x = center.x + dx, y = center.y + dy;
      if (image.contains(x, y)) image(x, y) = value;
    }
}

MasterFingerprint modulate_thickness_from(std::vector<RidgeSegment> segments, double t0,
                                          int width, int height) {
  std::stable_sort(segments.begin(), segments.end(),
                   [](const RidgeSegment& a, const RidgeSegment& b) {
                     return a.pixels.front() < b.pixels.front();
                   });
  MasterFingerprint master{GrayImage(width, height, kValleyValue), {}, {}, t0};
  ThicknessState state{t0};
  master.widths.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    segments[i].id = static_cast<int>(i);
    const double w = state.width();
    master.widths.push_back(w);
    const int radius = stroke_radius(w);
    for (const Pixel& p : segments[i].pixels) stamp_disk(master.image, p, radius, kRidgeValue);
    state.advance();
  }
  master.segments = std::move(segments);
  return master;
}

MasterFingerprint modulate_thickness(std::vector<RidgeSegment> segments, Rng& rng, int width,
                                     int height) {
  if (segments.empty()) throw InvalidArgument("modulate_thickness needs at least one segment");
  const double t0 = uniform(rng, 0.0, 2.0 * kPi);
  return modulate_thickness_from(std::move(segments), t0, width, height);
}

MasterBuild build_master(const RidgeMap& ridge_map, Rng& rng, Resampler resampler) {
  MasterBuild build;
  build.upscaled = upscale_and_smooth(ridge_map, resampler);
  build.skeleton = thin(build.upscaled);
  build.master = modulate_thickness(split_segments(build.skeleton), rng);
  return build;
}

}  // namespace l3fp
