#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "l3fp/error.hpp"
#include "l3fp/ridge_topology.hpp"
#include "oracles/zhang_suen.hpp"

using namespace l3fp;

namespace {

constexpr double kPi = std::numbers::pi;

oracle::Grid to_grid(const BinaryImage& img) {
  oracle::Grid g{img.width(), img.height(), {}};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) g.v.push_back(img(x, y) ? 1 : 0);
  return g;
}

bool same(const BinaryImage& img, const oracle::Grid& g) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if ((img(x, y) ? 1 : 0) != g.at(x, y)) return false;
  return true;
}

/// Blobby random binary image: thresholded box-smoothed noise.
BinaryImage random_blobs(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> noise(static_cast<std::size_t>(w) * h);
  for (double& v : noise) v = uniform01(rng);
  BinaryImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      int n = 0;
      for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          acc += noise[static_cast<std::size_t>(yy) * w + xx];
          ++n;
        }
      out(x, y) = acc / n > 0.5 ? 1 : 0;
    }
  return out;
}

Skeleton skeleton_of(std::initializer_list<Pixel> pixels, int w = 40, int h = 40) {
  Skeleton s{BinaryImage(w, h)};
  for (Pixel p : pixels) s.pixels(p.x, p.y) = 1;
  return s;
}

RidgeSegment horizontal_segment(int x0, int y, int len) {
  RidgeSegment s;
  for (int i = 0; i < len; ++i) s.pixels.push_back({x0 + i, y});
  return s;
}

double lanczos(double x) {
  if (x == 0.0) return 1.0;
  if (std::abs(x) >= 3.0) return 0.0;
  return 3.0 * std::sin(kPi * x) * std::sin(kPi * x / 3.0) / (kPi * kPi * x * x);
}

/// Normalized Lanczos-3 weights of source index i for output index o, with
/// edge clamping folded into the boundary samples.
double lanczos_weight(int o, int i, int n) {
  const double u = (o + 0.5) / 3.0 - 0.5;
  const int base = static_cast<int>(std::floor(u)) - 2;
  double sum = 0.0, w = 0.0;
  for (int k = base; k < base + 6; ++k) {
    const double v = lanczos(u - k);
    sum += v;
    if (std::clamp(k, 0, n - 1) == i) w += v;
  }
  return w / sum;
}

}  // namespace

TEST(Upscale, ConstantForegroundStaysConstant) {
  BinaryImage all(kRidgeMapWidth, kRidgeMapHeight, 1);
  for (auto r : {Resampler::Lanczos3, Resampler::Replicate}) {
    const GrayImage up = upscale_and_smooth(all, r);
    EXPECT_EQ(up.width(), kMasterWidth);
    EXPECT_EQ(up.height(), kMasterHeight);
    for (auto v : up.pixels()) ASSERT_EQ(v, 255);
  }
}

TEST(Upscale, RejectsWrongSize) {
  EXPECT_THROW(upscale_and_smooth(BinaryImage(100, 100)), InvalidArgument);
}

TEST(Upscale, ReplicatedPixelBlursToFiveByFive) {
  BinaryImage one(kRidgeMapWidth, kRidgeMapHeight);
  one(100, 200) = 1;
  const GrayImage up = upscale_and_smooth(one, Resampler::Replicate);
  // Block covers 300..302 x 600..602; the box filter spreads it one pixel.
  for (int y = 595; y < 608; ++y)
    for (int x = 295; x < 308; ++x) {
      const bool inside = x >= 299 && x <= 303 && y >= 599 && y <= 603;
      if (!inside) {
        EXPECT_EQ(up(x, y), 0) << x << "," << y;
        continue;
      }
      int covered = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          covered += (x + dx >= 300 && x + dx <= 302 && y + dy >= 600 && y + dy <= 602);
      EXPECT_EQ(up(x, y), std::lround(255.0 * covered / 9.0)) << x << "," << y;
    }
}

TEST(Upscale, LanczosPixelMatchesDirectConvolution) {
  BinaryImage one(kRidgeMapWidth, kRidgeMapHeight);
  one(100, 200) = 1;
  const GrayImage up = upscale_and_smooth(one, Resampler::Lanczos3);
  for (int y = 585; y < 618; ++y)
    for (int x = 285; x < 318; ++x) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          acc += 255.0 * lanczos_weight(x + dx, 100, kRidgeMapWidth) *
                 lanczos_weight(y + dy, 200, kRidgeMapHeight);
      const long expected = std::clamp(std::lround(acc / 9.0), 0L, 255L);
      EXPECT_NEAR(up(x, y), expected, 1) << x << "," << y;
    }
}

TEST(Thinning, ThickBarBecomesLine) {
  BinaryImage bar(80, 20);
  for (int y = 9; y < 12; ++y)
    for (int x = 15; x < 65; ++x) bar(x, y) = 1;
  const Skeleton s = thin_binary(bar);
  int count = 0;
  std::set<int> rows;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 80; ++x)
      if (s.pixels(x, y)) {
        ++count;
        rows.insert(y);
      }
  EXPECT_EQ(rows.size(), 1u);
  EXPECT_GE(count, 48);
  EXPECT_TRUE(same(s.pixels, oracle::zhang_suen(to_grid(bar))));
}

TEST(Thinning, ThinLineIsFixpoint) {
  BinaryImage line(60, 30);
  for (int x = 5; x < 55; ++x) line(x, 10 + x / 10) = 1;
  EXPECT_TRUE(thin_binary(line).pixels == line);
}

TEST(Thinning, EmptyStaysEmpty) {
  const Skeleton s = thin_binary(BinaryImage(30, 30));
  for (auto v : s.pixels.pixels()) EXPECT_EQ(v, 0);
}

TEST(Thinning, ThresholdAt128) {
  GrayImage g(9, 9, 0);
  g(4, 4) = 128;
  g(2, 2) = 127;
  const Skeleton s = thin(g);
  EXPECT_EQ(s.pixels(4, 4), 1);
  EXPECT_EQ(s.pixels(2, 2), 0);
}

TEST(Thinning, MatchesReferenceOnRandomImages) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const BinaryImage img = random_blobs(150, 120, seed);
    EXPECT_TRUE(same(thin_binary(img).pixels, oracle::zhang_suen(to_grid(img)))) << seed;
  }
}

TEST(Thinning, IdempotentOnRealRidgeMap) {
  Rng rng(21);
  const auto g = generate_ridge_map(ClassWeights::population(), GaborParams{}, rng);
  const Skeleton once = thin(upscale_and_smooth(g.ridge_map));
  const Skeleton twice = thin_binary(once.pixels);
  EXPECT_TRUE(once.pixels == twice.pixels);
  EXPECT_TRUE(same(once.pixels, oracle::zhang_suen(to_grid([&] {
                     BinaryImage b(kMasterWidth, kMasterHeight);
                     const GrayImage up = upscale_and_smooth(g.ridge_map);
                     for (int y = 0; y < kMasterHeight; ++y)
                       for (int x = 0; x < kMasterWidth; ++x) b(x, y) = up(x, y) >= 128;
                     return b;
                   }()))));

  // Away from branch points the skeleton is a simple curve: one run of
  // foreground on either side at most.
  const BinaryImage br = branch_points(once);
  for (int y = 0; y < kMasterHeight; ++y)
    for (int x = 0; x < kMasterWidth; ++x)
      if (once.pixels(x, y) && !br(x, y)) {
        ASSERT_LE(crossing_number(once.pixels, x, y), 2);
      }
}

TEST(Segments, SingleOpenCurve) {
  std::vector<Pixel> curve;
  for (int x = 3; x < 30; ++x) curve.push_back({x, 10 + (x > 15 ? (x - 15) / 2 : 0)});
  Skeleton s{BinaryImage(40, 40)};
  for (Pixel p : curve) s.pixels(p.x, p.y) = 1;
  const auto segs = split_segments(s);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].length(), curve.size());
  EXPECT_EQ(segs[0].pixels.front(), curve.front());
  const std::set<Pixel> got(segs[0].pixels.begin(), segs[0].pixels.end());
  EXPECT_EQ(got, std::set<Pixel>(curve.begin(), curve.end()));
}

TEST(Segments, PlusSignSplitsIntoFourArms) {
  Skeleton s{BinaryImage(21, 21)};
  for (int i = 0; i < 21; ++i) {
    s.pixels(i, 10) = 1;
    s.pixels(10, i) = 1;
  }
  const auto segs = split_segments(s);
  ASSERT_EQ(segs.size(), 4u);
  for (const auto& seg : segs) {
    EXPECT_GE(seg.length(), 10u);
    EXPECT_LE(seg.length(), 11u);
    const bool touches_center =
        std::find(seg.pixels.begin(), seg.pixels.end(), Pixel{10, 10}) != seg.pixels.end();
    EXPECT_TRUE(touches_center);
  }
}

TEST(Segments, EmptySkeleton) { EXPECT_TRUE(split_segments(Skeleton{BinaryImage(10, 10)}).empty()); }

TEST(Segments, ClosedLoopIsOneSegment) {
  Skeleton s{BinaryImage(40, 40)};
  for (int i = 0; i < 10; ++i) {
    s.pixels(10 + i, 10) = 1;
    s.pixels(10 + i, 19) = 1;
    s.pixels(10, 10 + i) = 1;
    s.pixels(19, 10 + i) = 1;
  }
  const auto segs = split_segments(s);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].length(), 36u);
  EXPECT_EQ(segs[0].pixels.front(), (Pixel{10, 10}));
}

TEST(Segments, ShortChainsDiscarded) {
  EXPECT_TRUE(split_segments(skeleton_of({{1, 1}, {2, 1}, {3, 1}, {4, 1}})).empty());
  EXPECT_EQ(split_segments(skeleton_of({{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}})).size(), 1u);
}

TEST(Segments, PartitionOfRealSkeleton) {
  Rng rng(22);
  const auto g = generate_ridge_map(ClassWeights::population(), GaborParams{}, rng);
  const Skeleton sk = thin(upscale_and_smooth(g.ridge_map));
  const BinaryImage br = branch_points(sk);
  const auto segs = split_segments(sk);
  ASSERT_FALSE(segs.empty());

  BinaryImage owner(kMasterWidth, kMasterHeight);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& px = segs[i].pixels;
    EXPECT_EQ(segs[i].id, static_cast<int>(i));
    EXPECT_GE(px.size(), kMinSegmentLength);
    if (i > 0) {
      EXPECT_FALSE(px.front() < segs[i - 1].pixels.front());
    }
    for (std::size_t k = 0; k < px.size(); ++k) {
      ASSERT_TRUE(sk.pixels(px[k].x, px[k].y));
      if (k > 0) {
        ASSERT_LE(std::abs(px[k].x - px[k - 1].x), 1);
        ASSERT_LE(std::abs(px[k].y - px[k - 1].y), 1);
        ASSERT_NE(px[k], px[k - 1]);
      }
      const bool interior = k > 0 && k + 1 < px.size();
      if (interior) {
        ASSERT_FALSE(br(px[k].x, px[k].y)) << "branch inside segment " << i;
      }
      if (!br(px[k].x, px[k].y)) {
        ASSERT_EQ(owner(px[k].x, px[k].y), 0) << "pixel in two segments";
        owner(px[k].x, px[k].y) = 1;
      }
    }
  }
  // Uncovered non-branch pixels can only come from discarded short chains.
  int uncovered = 0, skeleton_px = 0;
  for (int y = 0; y < kMasterHeight; ++y)
    for (int x = 0; x < kMasterWidth; ++x) {
      if (!sk.pixels(x, y)) continue;
      ++skeleton_px;
      if (!br(x, y) && !owner(x, y)) ++uncovered;
    }
  EXPECT_LT(uncovered, skeleton_px / 50);
}

TEST(Thickness, WidthFormula) {
  EXPECT_DOUBLE_EQ(ThicknessState{kPi / 2}.width(), 3.0);
  EXPECT_DOUBLE_EQ(ThicknessState{0.0}.width(), 1.0);
  EXPECT_DOUBLE_EQ(ThicknessState{kPi}.width(), 1.0);
  ThicknessState s{1.0};
  const double expected[] = {2.524413, 2.673622, 2.796117};
  for (double e : expected) {
    EXPECT_NEAR(s.width(), e, 1e-6);
    s.advance();
  }
}

TEST(Thickness, RecordedWidthsFollowTheCounter) {
  std::vector<RidgeSegment> segs;
  for (int i = 0; i < 40; ++i) segs.push_back(horizontal_segment(10, 10 + 25 * i, 30));
  Rng rng(23);
  const auto m = modulate_thickness(segs, rng);
  EXPECT_EQ(m.width(), kMasterWidth);
  EXPECT_EQ(m.height(), kMasterHeight);
  EXPECT_GE(m.t0, 0.0);
  EXPECT_LT(m.t0, 2 * kPi);
  ASSERT_EQ(m.widths.size(), segs.size());
  for (std::size_t i = 0; i < m.widths.size(); ++i) {
    EXPECT_EQ(m.widths[i], std::max(1.0, std::abs(3.0 * std::sin(m.t0 + 0.1 * i))));
    if (i > 0) {
      EXPECT_LE(std::abs(m.widths[i] - m.widths[i - 1]), 0.3);
    }
  }
}

TEST(Thickness, ProcessingOrderIsRasterOfStartPixel) {
  std::vector<RidgeSegment> segs{horizontal_segment(50, 30, 10), horizontal_segment(5, 30, 10),
                                 horizontal_segment(70, 8, 10)};
  const auto m = modulate_thickness_from(segs, 1.0);
  ASSERT_EQ(m.segments.size(), 3u);
  EXPECT_EQ(m.segments[0].pixels.front(), (Pixel{70, 8}));
  EXPECT_EQ(m.segments[1].pixels.front(), (Pixel{5, 30}));
  EXPECT_EQ(m.segments[2].pixels.front(), (Pixel{50, 30}));
  for (int i = 0; i < 3; ++i) EXPECT_EQ(m.segments[i].id, i);
}

TEST(Thickness, RenderedStrokeRadiusMatchesWidth) {
  for (double t0 : {0.0, 0.35, 0.55, 0.9, kPi / 2}) {
    const auto m = modulate_thickness_from({horizontal_segment(100, 100, 60)}, t0);
    const double w = m.widths[0];
    int extent = 0;
    for (int y = 90; y <= 110; ++y) extent += m.image(130, y) == kRidgeValue;
    const double radius = (extent - 1) / 2.0;
    EXPECT_LE(std::abs(radius - w), 0.5) << "w = " << w;
    for (auto v : m.image.pixels()) ASSERT_TRUE(v == kRidgeValue || v == kValleyValue);
  }
}

TEST(Thickness, EmptyInputRejected) {
  Rng rng(1);
  EXPECT_THROW(modulate_thickness({}, rng), InvalidArgument);
}

TEST(MasterBuild, DeterministicAndFullSize) {
  Rng a(30), b(30);
  const auto ga = generate_ridge_map(ClassWeights::population(), GaborParams{}, a);
  const auto gb = generate_ridge_map(ClassWeights::population(), GaborParams{}, b);
  const auto ma = build_master(ga.ridge_map, a);
  const auto mb = build_master(gb.ridge_map, b);
  EXPECT_TRUE(ma.master.image == mb.master.image);
  EXPECT_EQ(ma.master.width(), kMasterWidth);
  EXPECT_EQ(ma.master.height(), kMasterHeight);
  EXPECT_EQ(ma.master.widths, mb.master.widths);
}
