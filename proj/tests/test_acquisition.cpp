#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include "l3fp/acquisition.hpp"
#include "l3fp/error.hpp"

using namespace l3fp;

namespace {

const L3MasterFingerprint& shared_l3() {
  static const L3MasterFingerprint l3 = [] {
    Rng rng(101);
    const auto g = generate_ridge_map(ClassWeights::population(), GaborParams{}, rng);
    MasterFingerprint m = build_master(g.ridge_map, rng).master;
    return apply_l3(std::move(m), PoreSpacingDistribution{}, ScratchCountCDF::fallback(), rng, 3);
  }();
  return l3;
}

SeedConfig all_disabled() {
  SeedConfig c;
  c.rigid_enabled = false;
  c.affine_enabled = false;
  c.elastic_enabled = false;
  c.dropout_rate = 0.0;
  return c;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Hand-written replay of the translation-mode chain for a master point.
Point2d replay(const Provenance& p, Point2d m) {
  const double t = p.rigid.theta_deg * std::numbers::pi / 180.0;
  const double ax = m.x + p.affine.gamma_x - p.canvas_center.x;
  const double ay = m.y + p.affine.gamma_y - p.canvas_center.y;
  const double rx = std::cos(t) * ax - std::sin(t) * ay + p.canvas_center.x + p.rigid.dx;
  const double ry = std::sin(t) * ax + std::cos(t) * ay + p.canvas_center.y + p.rigid.dy;
  return {rx - p.crop_origin.x, ry - p.crop_origin.y};
}

}  // namespace

TEST(RigidSampling, ZeroStatsGiveIdentity) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_rigid(AcquisitionStats{0, 0, 0}, rng), RigidTransform{});
}

TEST(RigidSampling, SpreadAndIndependence) {
  Rng rng(2);
  std::vector<double> dx, dy, th;
  for (int i = 0; i < 100000; ++i) {
    const auto t = sample_rigid(AcquisitionStats{4.0, 7.0, 2.0}, rng);
    dx.push_back(t.dx);
    dy.push_back(t.dy);
    th.push_back(t.theta_deg);
  }
  EXPECT_GE(stddev(dx), 3.9);
  EXPECT_LE(stddev(dx), 4.1);
  EXPECT_NEAR(stddev(dy), 7.0, 0.1);
  EXPECT_NEAR(stddev(th), 2.0, 0.05);
  EXPECT_LT(std::abs(correlation(dx, dy)), 0.02);
  EXPECT_LT(std::abs(correlation(dx, th)), 0.02);
}

TEST(RigidSampling, PairwiseMeanSquareIsTwoSigmaSquared) {
  const AcquisitionStats stats{6.0, 3.0, 4.0};
  auto ratios = [&](Rng& rng, int n) {
    std::array<double, 3> s{};
    for (int i = 0; i < n; ++i) {
      const auto a = sample_rigid(stats, rng), b = sample_rigid(stats, rng);
      s[0] += (a.dx - b.dx) * (a.dx - b.dx);
      s[1] += (a.dy - b.dy) * (a.dy - b.dy);
      s[2] += (a.theta_deg - b.theta_deg) * (a.theta_deg - b.theta_deg);
    }
    return std::array<double, 3>{s[0] / n / 72.0, s[1] / n / 18.0, s[2] / n / 32.0};
  };
  Rng big(3);
  for (double r : ratios(big, 100000)) EXPECT_NEAR(r, 1.0, 0.02);
  // At 10^3 pairs the relative standard error is ~4.5%: a 10% band holds on
  // one axis in ~97% of runs, on all three jointly in ~91%.
  int within = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    const auto r = ratios(rng, 1000);
    within += std::abs(r[0] - 1) <= 0.1 && std::abs(r[1] - 1) <= 0.1 && std::abs(r[2] - 1) <= 0.1;
  }
  EXPECT_GE(within, 16);
}

TEST(Affine, ZeroGammaIsIdentity) {
  const GrayImage& img = shared_l3().image;
  const std::vector<Point2d> pts{{10, 20}, {400.5, 600.25}};
  for (auto mode : {AffineMode::Translation, AffineMode::Shear}) {
    const auto [out, moved] = perturb_affine(img, pts, AffinePerturbation{0, 0, mode});
    EXPECT_TRUE(out == img);
    EXPECT_EQ(moved, pts);
  }
}

TEST(Affine, MarkedPixelMovesWithItsAnnotation) {
  for (auto mode : {AffineMode::Translation, AffineMode::Shear}) {
    GrayImage img(200, 200, 255);
    img(60, 140) = 0;
    const std::vector<Point2d> pts{{60, 140}};
    const AffinePerturbation g{10.0, -10.0, mode};
    const auto [out, moved] = perturb_affine(img, pts, g);
    // darkest output pixel is the nearest pixel to the moved annotation
    int bx = 0, by = 0;
    for (int y = 0; y < 200; ++y)
      for (int x = 0; x < 200; ++x)
        if (out(x, y) < out(bx, by)) bx = x, by = y;
    EXPECT_LE(std::abs(bx - moved[0].x), 0.5 + 1e-9);
    EXPECT_LE(std::abs(by - moved[0].y), 0.5 + 1e-9);
    if (mode == AffineMode::Translation) {
      EXPECT_EQ(moved[0], (Point2d{70, 130}));
      EXPECT_EQ(out(70, 130), 0);
    }
  }
}

TEST(Affine, RoundTripWithinInterpolationTolerance) {
  const GrayImage& img = shared_l3().image;
  for (auto mode : {AffineMode::Translation, AffineMode::Shear}) {
    const AffinePerturbation g{10.0, 10.0, mode};
    const AffinePerturbation back{-10.0, -10.0, mode};
    const auto [fwd, p1] = perturb_affine(img, {}, g);
    const auto [rt, p2] = perturb_affine(fwd, {}, back);
    if (mode == AffineMode::Translation) {
      int worst = 0;
      for (int y = 20; y < img.height() - 20; ++y)
        for (int x = 20; x < img.width() - 20; ++x)
          worst = std::max(worst, std::abs(int(rt(x, y)) - int(img(x, y))));
      EXPECT_LE(worst, 2);
    }
    Point2d c{(img.width() - 1) / 2.0, (img.height() - 1) / 2.0};
    const Point2d p{123.0, 456.0};
    const Point2d q = g.apply_inverse(g.apply(p, c), c);
    EXPECT_NEAR(q.x, p.x, 1e-9);
    EXPECT_NEAR(q.y, p.y, 1e-9);
  }
}

TEST(Affine, BoundsAndSampling) {
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const auto g = sample_affine(AffineMode::Translation, rng);
    ASSERT_LE(std::abs(g.gamma_x), 10.0);
    ASSERT_LE(std::abs(g.gamma_y), 10.0);
  }
  EXPECT_THROW((AffinePerturbation{10.5, 0}.validate()), InvalidArgument);
}

TEST(Elastic, ZeroAlphaIsIdentity) {
  const GrayImage& img = shared_l3().image;
  Rng rng(5);
  const std::vector<Point2d> pts{{100, 100}, {700.5, 33}};
  const auto [out, moved] = elastic_deform(img, pts, ElasticParams{0.0, 30.0}, rng);
  EXPECT_TRUE(out == img);
  EXPECT_EQ(moved, pts);
}

TEST(Elastic, DisplacementBoundedByAlpha) {
  const ElasticParams params{8.0, 30.0};
  const DisplacementField field(kMasterWidth, kMasterHeight, params, 77);
  EXPECT_LE(field.max_component(), params.alpha + 1e-6);
  EXPECT_GT(field.max_component(), 0.5 * params.alpha);
  Rng rng(6);
  for (int i = 0; i < 2000; ++i) {
    const Point2d p{uniform(rng, 0, kMasterWidth - 1), uniform(rng, 0, kMasterHeight - 1)};
    const Point2d q = field.forward(p);
    ASSERT_LE(std::abs(q.x - p.x), params.alpha + 1e-6);
    ASSERT_LE(std::abs(q.y - p.y), params.alpha + 1e-6);
    // forward is the inverse of the pull-back map
    const Point2d back = field.inverse(q);
    ASSERT_NEAR(back.x, p.x, 1e-6);
    ASSERT_NEAR(back.y, p.y, 1e-6);
  }
}

TEST(Elastic, Deterministic) {
  const GrayImage& img = shared_l3().image;
  Rng a(7), b(7);
  const auto x = elastic_deform(img, {}, ElasticParams{}, a);
  const auto y = elastic_deform(img, {}, ElasticParams{}, b);
  EXPECT_TRUE(x.first == y.first);
  EXPECT_FALSE(x.first == img);
}

TEST(Dropout, Extremes) {
  const auto& pores = shared_l3().pores;
  Rng rng(8);
  const auto none = dropout_pores(pores, 0.0, rng);
  EXPECT_EQ(none.kept, pores);
  EXPECT_TRUE(none.dropped_ids.empty());
  const auto all = dropout_pores(pores, 1.0, rng);
  EXPECT_TRUE(all.kept.empty());
  EXPECT_EQ(all.dropped_ids.size(), pores.size());
  EXPECT_THROW(dropout_pores(pores, 1.5, rng), InvalidArgument);
}

TEST(Dropout, BinomialBound) {
  std::vector<Pore> pores(100000);
  for (int i = 0; i < 100000; ++i) pores[i].id = i;
  Rng rng(9);
  const auto r = dropout_pores(pores, 0.03, rng);
  const double bound = 3.0 * std::sqrt(1e5 * 0.03 * 0.97);
  EXPECT_LE(std::abs(static_cast<double>(r.dropped_ids.size()) - 3000.0), bound);
  EXPECT_EQ(r.kept.size() + r.dropped_ids.size(), pores.size());
}

TEST(SeedImage, AllDisabledIsCentreCrop) {
  const auto& l3 = shared_l3();
  Rng rng(10);
  const SeedImage s = make_seed_image(l3, AcquisitionStats{}, all_disabled(), rng, 2);
  ASSERT_EQ(s.image.width(), 512);
  ASSERT_EQ(s.image.height(), 512);
  EXPECT_EQ(s.provenance.crop_origin, (Point2d{156, 344}));
  for (int y = 0; y < 512; ++y)
    for (int x = 0; x < 512; ++x) ASSERT_EQ(s.image(x, y), l3.image(156 + x, 344 + y));
  EXPECT_EQ(s.sample_id, 2);
  EXPECT_EQ(s.identity_id, 3);
  int inside = 0;
  for (const Pore& p : l3.pores)
    inside += p.position.x >= 156 && p.position.x < 668 && p.position.y >= 344 &&
              p.position.y < 856;
  EXPECT_EQ(static_cast<int>(s.pores.size()), inside);
}

TEST(SeedImage, SamplesDifferButShareIdentity) {
  const auto& l3 = shared_l3();
  Rng rng(11);
  std::vector<SeedImage> seeds;
  for (int i = 0; i < 10; ++i)
    seeds.push_back(make_seed_image(l3, AcquisitionStats{}, SeedConfig{}, rng, i));
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    EXPECT_EQ(seeds[i].identity_id, 3);
    EXPECT_EQ(seeds[i].image.width(), 512);
    EXPECT_EQ(seeds[i].image.height(), 512);
    for (std::size_t j = 0; j < i; ++j) {
      EXPECT_FALSE(seeds[i].provenance == seeds[j].provenance);
      EXPECT_FALSE(seeds[i].image == seeds[j].image);
    }
  }
}

TEST(SeedImage, ProvenanceReplayOracle) {
  const auto& l3 = shared_l3();
  Rng rng(12);
  SeedConfig cfg;
  cfg.dropout_rate = 0.2;
  for (int k = 0; k < 5; ++k) {
    const SeedImage s = make_seed_image(l3, AcquisitionStats{}, cfg, rng, k);
    const auto& prov = s.provenance;
    const std::set<int> dropped(prov.dropped_pore_ids.begin(), prov.dropped_pore_ids.end());
    std::vector<SeedPore> expected;
    for (const Pore& p : l3.pores) {
      if (dropped.count(p.id)) continue;
      const Point2d q = replay(prov, {p.position.x + 0.0, p.position.y + 0.0});
      if (q.x >= 0 && q.y >= 0 && q.x < 512 && q.y < 512)
        expected.push_back({p.id, q, p.segment_id, p.arc_position});
    }
    ASSERT_EQ(s.pores.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(s.pores[i].id, expected[i].id);
      EXPECT_NEAR(s.pores[i].position.x, expected[i].position.x, 1e-9);
      EXPECT_NEAR(s.pores[i].position.y, expected[i].position.y, 1e-9);
      EXPECT_FALSE(dropped.count(s.pores[i].id));
    }
    // replay from the provenance alone is bit-identical
    const SeedImage again = render_seed_image(l3, prov, k);
    EXPECT_TRUE(again.image == s.image);
    EXPECT_EQ(again.pores, s.pores);
  }
}

TEST(SeedImage, DroppedPoresLeaveNoPixels) {
  const auto& l3 = shared_l3();
  ASSERT_FALSE(l3.pores.empty());
  // Drop every pore; with no other perturbation the seed equals the crop of
  // the pore-free render.
  Provenance prov;
  prov.crop_origin = {156, 344};
  prov.canvas_center = {412, 599.5};
  for (const Pore& p : l3.pores) prov.dropped_pore_ids.push_back(p.id);
  const SeedImage s = render_seed_image(l3, prov);
  EXPECT_TRUE(s.pores.empty());
  const GrayImage bare = render_l3(l3.master, {}, l3.scratches);
  for (int y = 0; y < 512; ++y)
    for (int x = 0; x < 512; ++x) ASSERT_EQ(s.image(x, y), bare(156 + x, 344 + y));
}

TEST(SeedImage, ElasticSeedsReplayAndStayInsideCrop) {
  const auto& l3 = shared_l3();
  Rng rng(13);
  SeedConfig cfg;
  cfg.elastic_enabled = true;
  const SeedImage s = make_seed_image(l3, AcquisitionStats{}, cfg, rng);
  EXPECT_TRUE(s.provenance.elastic_enabled);
  const SeedImage again = render_seed_image(l3, s.provenance);
  EXPECT_TRUE(again.image == s.image);
  const AcquisitionMap map(s.provenance);
  for (const SeedPore& p : s.pores) {
    ASSERT_GE(p.position.x, 0);
    ASSERT_LT(p.position.x, 512);
    const Point2d m = map.inverse(p.position);
    const auto& src = l3.pores[p.id].position;
    ASSERT_NEAR(m.x, src.x, 1e-6);
    ASSERT_NEAR(m.y, src.y, 1e-6);
  }
}

TEST(SeedImage, ImpossibleCropFailsAfterRetries) {
  const auto& l3 = shared_l3();
  Rng rng(14);
  SeedConfig cfg;
  cfg.max_retries = 3;
  EXPECT_THROW(make_seed_image(l3, AcquisitionStats{400, 400, 0}, cfg, rng), GenerationFailure);
  SeedConfig big = all_disabled();
  big.crop_width = 900;
  EXPECT_THROW(make_seed_image(l3, AcquisitionStats{}, big, rng), GenerationFailure);
}
