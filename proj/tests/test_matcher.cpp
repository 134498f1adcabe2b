#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "l3fp/error.hpp"
#include "l3fp/matcher.hpp"

using namespace l3fp;

namespace {

std::vector<Point2d> random_set(Rng& rng, int n, double extent = 512.0) {
  std::vector<Point2d> pts;
  for (int i = 0; i < n; ++i) pts.push_back({uniform(rng, 0, extent), uniform(rng, 0, extent)});
  return pts;
}

std::vector<ProtocolSample> structure(int identities, int sessions, int per_session) {
  std::vector<ProtocolSample> out;
  for (int id = 0; id < identities; ++id)
    for (int s = 0; s < sessions; ++s)
      for (int k = 0; k < per_session; ++k) out.push_back({id, s, s * per_session + k, {}});
  return out;
}

std::size_t count(const std::vector<ScoredPair>& pairs, PairKind kind) {
  return std::count_if(pairs.begin(), pairs.end(), [&](const auto& p) { return p.kind == kind; });
}

/// Direct FAR / FRR counts at threshold t.
std::pair<double, double> rates_at(const std::vector<double>& g, const std::vector<double>& im,
                                   double t) {
  double fa = 0, fr = 0;
  for (double s : im) fa += s >= t;
  for (double s : g) fr += s < t;
  return {fa / im.size(), fr / g.size()};
}

RocCurve curve_of(std::vector<RocPoint> pts) {
  RocCurve c;
  c.points = std::move(pts);
  return c;
}

}  // namespace

TEST(Matcher, IdenticalSetsScoreOne) {
  Rng rng(1);
  const auto a = random_set(rng, 80);
  const auto r = match_pores(a, a);
  EXPECT_DOUBLE_EQ(r.score, 1.0);
  EXPECT_TRUE(r.aligned);
  EXPECT_EQ(r.inliers, 80);
}

TEST(Matcher, RigidCopyScoresHigh) {
  Rng rng(2);
  const Point2d c{255.5, 255.5};
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_set(rng, 120);
    const RigidTransform t{uniform(rng, -40, 40), uniform(rng, -40, 40), uniform(rng, -30, 30)};
    std::vector<Point2d> b;
    for (Point2d p : a) b.push_back(t.apply(p, c));
    const auto r = match_pores(a, b);
    EXPECT_GE(r.score, 0.95) << trial;
    EXPECT_NEAR(r.transform.theta_deg, t.theta_deg, 0.01);
    EXPECT_NEAR(r.transform.dx, t.dx, 0.05);
    EXPECT_NEAR(r.transform.dy, t.dy, 0.05);
  }
}

TEST(Matcher, JitteredPartialCopy) {
  Rng rng(3);
  const auto a = random_set(rng, 150);
  const RigidTransform t{12, -9, 7};
  std::vector<Point2d> b;
  for (Point2d p : a) {
    if (uniform01(rng) < 0.05) continue;
    const Point2d q = t.apply(p, {255.5, 255.5});
    b.push_back({q.x + normal(rng, 0, 0.3), q.y + normal(rng, 0, 0.3)});
  }
  EXPECT_GE(match_pores(a, b).score, 0.9);
}

TEST(Matcher, IndependentRandomSetsScoreLow) {
  Rng rng(4);
  int low = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    const auto a = random_set(rng, 50), b = random_set(rng, 50);
    low += match_pores(a, b).score < 0.3;
  }
  EXPECT_GE(low, 990);
}

TEST(Matcher, SymmetricInArguments) {
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_set(rng, 60);
    std::vector<Point2d> b;
    const RigidTransform t{5, 3, -4};
    for (std::size_t k = 0; k < a.size(); ++k)
      if (k % 4) b.push_back(t.apply(a[k], {255.5, 255.5}));
    const auto noise = random_set(rng, 15);
    b.insert(b.end(), noise.begin(), noise.end());
    const auto ab = match_pores(a, b), ba = match_pores(b, a);
    EXPECT_DOUBLE_EQ(ab.score, ba.score);
    EXPECT_EQ(ab.inliers, ba.inliers);
  }
}

TEST(Matcher, EmptyAndTinySets) {
  const std::vector<Point2d> none, two{{1, 1}, {5, 5}};
  EXPECT_EQ(match_pores(none, two).score, 0.0);
  EXPECT_EQ(match_pores(two, none).score, 0.0);
  EXPECT_EQ(match_pores(none, none).score, 0.0);
  EXPECT_FALSE(match_pores(two, two).aligned);
}

TEST(Matcher, DescriptorsAreSortedAndPadded) {
  const std::vector<Point2d> pts{{0, 0}, {3, 4}, {6, 8}};
  const auto d = neighbour_descriptors(pts, 4);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0][0], 5.0);
  EXPECT_EQ(d[0][1], 10.0);
  EXPECT_TRUE(std::isinf(d[0][2]));
  EXPECT_TRUE(std::is_sorted(d[1].begin(), d[1].end()));
}

TEST(Protocol, TwoIdentitiesTwoSessions) {
  const auto samples = structure(2, 2, 1);
  const auto pairs = protocol_pairs(samples);
  EXPECT_EQ(count(pairs, PairKind::Genuine), 2u);
  EXPECT_EQ(count(pairs, PairKind::Impostor), 1u);
  for (const auto& p : pairs) {
    if (p.kind == PairKind::Genuine) {
      EXPECT_EQ(p.identity_a, p.identity_b);
    }
    if (p.kind == PairKind::Impostor) {
      EXPECT_NE(p.identity_a, p.identity_b);
    }
  }
}

TEST(Protocol, FullStructureCounts) {
  const auto samples = structure(148, 2, 5);
  const auto pairs = protocol_pairs(samples);
  EXPECT_EQ(count(pairs, PairKind::Genuine), 148u * 25u);
  EXPECT_EQ(count(pairs, PairKind::Impostor), 148u * 147u / 2u);
  ProtocolParams all;
  all.genuine = GenuinePolicy::AllPairs;
  all.impostor = ImpostorPolicy::AllSamples;
  const auto every = protocol_pairs(samples, all);
  EXPECT_EQ(count(every, PairKind::Genuine), 148u * 45u);
  EXPECT_EQ(count(every, PairKind::Impostor), (1480u * 1479u / 2u) - 148u * 45u);
  std::set<std::tuple<int, int, int, int>> seen;
  for (const auto& p : every)
    EXPECT_TRUE(seen.insert({p.identity_a, p.sample_a, p.identity_b, p.sample_b}).second);
}

TEST(Protocol, EmptyDataset) {
  EXPECT_TRUE(protocol_pairs({}).empty());
  EXPECT_TRUE(run_protocol({}).empty());
}

TEST(Protocol, ScoresAreLabelledAndWorkerIndependent) {
  Rng rng(6);
  std::vector<ProtocolSample> samples = structure(3, 2, 2);
  std::map<int, std::vector<Point2d>> base;
  for (int id = 0; id < 3; ++id) base[id] = random_set(rng, 60);
  for (auto& s : samples) {
    const RigidTransform t{normal(rng, 0, 8), normal(rng, 0, 8), normal(rng, 0, 4)};
    for (Point2d p : base[s.identity_id]) s.pores.push_back(t.apply(p, {255.5, 255.5}));
  }
  const auto one = run_protocol(samples, {}, 1);
  const auto three = run_protocol(samples, {}, 3);
  ASSERT_EQ(one.size(), three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].score, three[i].score);
    EXPECT_EQ(one[i].kind, three[i].kind);
    if (one[i].kind == PairKind::Genuine) {
      EXPECT_GE(one[i].score, 0.95);
    }
    if (one[i].kind == PairKind::Impostor) {
      EXPECT_LT(one[i].score, 0.3);
    }
  }
  EXPECT_EQ(to_string(PairKind::Genuine), "genuine");
  EXPECT_EQ(to_string(PairKind::Impostor), "impostor");
}

TEST(Roc, SeparableScores) {
  const std::vector<double> g{.9, .8}, im{.1, .2};
  EXPECT_DOUBLE_EQ(compute_roc(g, im).eer, 0.0);
}

TEST(Roc, NullDistributionNearFifty) {
  Rng rng(7);
  std::vector<double> g(1000), im(1000);
  for (double& v : g) v = uniform01(rng);
  for (double& v : im) v = uniform01(rng);
  EXPECT_NEAR(compute_roc(g, im).eer, 50.0, 3.0);
}

TEST(Roc, OneErrorEachSide) {
  // One of two genuines and one of two impostors are misclassified for any
  // t in (.4, .6], so FAR = FRR = 1/2 there.
  const std::vector<double> g{.9, .4}, im{.6, .1};
  const RocCurve roc = compute_roc(g, im);
  for (double t : {0.45, 0.5, 0.6}) {
    const auto [fa, fr] = rates_at(g, im, t);
    EXPECT_DOUBLE_EQ(fa, 0.5);
    EXPECT_DOUBLE_EQ(fr, 0.5);
  }
  EXPECT_DOUBLE_EQ(roc.eer, 50.0);
}

TEST(Roc, MatchesBruteForceOnSmallSets) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int ng = 1 + trial % 7, ni = 1 + (trial / 7) % 6;
    std::vector<double> g(ng), im(ni);
    // coarse values force ties
    for (double& v : g) v = std::round(uniform(rng, 0.2, 1.0) * 10) / 10;
    for (double& v : im) v = std::round(uniform(rng, 0.0, 0.8) * 10) / 10;
    const RocCurve roc = compute_roc(g, im);

    std::set<double> thresholds(g.begin(), g.end());
    thresholds.insert(im.begin(), im.end());
    ASSERT_EQ(roc.points.size(), thresholds.size());
    double best = 1e9;
    std::size_t k = 0;
    for (double t : thresholds) {
      const auto [fa, fr] = rates_at(g, im, t);
      EXPECT_EQ(roc.points[k].threshold, t);
      EXPECT_DOUBLE_EQ(roc.points[k].far, fa);
      EXPECT_DOUBLE_EQ(roc.points[k].frr, fr);
      best = std::min(best, std::abs(fa - fr));
      ++k;
    }
    const auto& m = roc.points[roc.eer_index];
    EXPECT_DOUBLE_EQ(std::abs(m.far - m.frr), best);
    if (best == 0.0) {
      EXPECT_DOUBLE_EQ(roc.eer, 100.0 * m.far);
    }
    EXPECT_GE(roc.eer, 0.0);
    EXPECT_LE(roc.eer, 100.0);

    // monotone: FAR falls and FRR rises with the threshold
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
      EXPECT_LE(roc.points[i].far, roc.points[i - 1].far);
      EXPECT_GE(roc.points[i].frr, roc.points[i - 1].frr);
    }
  }
}

TEST(Roc, InterpolatesAcrossCrossing) {
  // FAR - FRR goes from +.5 to -.5 between the two middle thresholds.
  const std::vector<double> g{.4, .8}, im{.2, .6};
  const RocCurve roc = compute_roc(g, im);
  EXPECT_DOUBLE_EQ(roc.eer, 50.0);
  std::vector<double> g2{.3, .5, .7, .9}, im2{.1, .35, .6};
  const RocCurve r2 = compute_roc(g2, im2);
  EXPECT_GE(r2.eer, 0.0);
  EXPECT_LE(r2.eer, 100.0 * std::max(r2.points[r2.eer_index].far, r2.points[r2.eer_index].frr));
}

TEST(Roc, NeedsBothClasses) {
  const std::vector<double> g{.5}, none;
  EXPECT_THROW(compute_roc(g, none), InvalidArgument);
  EXPECT_THROW(compute_roc(none, g), InvalidArgument);
}

TEST(Roc, FrrAtFarClosesTheCurve) {
  const RocCurve c = curve_of({{0.5, 0.5, 0.2}});
  EXPECT_DOUBLE_EQ(frr_at_far(c, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(frr_at_far(c, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(frr_at_far(c, 0.5), 0.2);
  EXPECT_DOUBLE_EQ(frr_at_far(c, 0.25), 0.6);
  EXPECT_DOUBLE_EQ(frr_at_far(c, 0.75), 0.1);
}

TEST(Aggregate, IdenticalCurvesHaveZeroWidth) {
  const RocCurve c = curve_of({{0.1, 0.6, 0.1}, {0.5, 0.2, 0.4}});
  const std::vector<RocCurve> curves(4, c);
  const MeanRoc m = aggregate_replicas(curves);
  ASSERT_EQ(m.far.size(), 101u);
  EXPECT_EQ(m.replicas, 4);
  for (std::size_t i = 0; i < m.far.size(); ++i) {
    EXPECT_DOUBLE_EQ(m.ci_half_width[i], 0.0);
    EXPECT_DOUBLE_EQ(m.mean_frr[i], frr_at_far(c, m.far[i]));
  }
}

TEST(Aggregate, MeanAtMidpoint) {
  const RocCurve a = curve_of({{0.5, 0.5, 0.30}});
  const RocCurve b = curve_of({{0.5, 0.5, 0.32}});
  const std::vector<RocCurve> curves{a, b};
  const MeanRoc m = aggregate_replicas(curves, 11);
  EXPECT_DOUBLE_EQ(m.far[5], 0.5);
  EXPECT_NEAR(m.mean_frr[5], 0.31, 1e-15);
}

TEST(Aggregate, StudentTHalfWidth) {
  // Value of the 0.975 quantile of Student t with 4 degrees of freedom.
  const double t4 = 2.7764451051977987;
  const std::vector<double> frr{0.10, 0.14, 0.09, 0.12, 0.15};
  std::vector<RocCurve> curves;
  for (double f : frr) {
    RocCurve c = curve_of({{0.5, 0.5, f}});
    c.eer = 100 * f;
    curves.push_back(c);
  }
  const MeanRoc m = aggregate_replicas(curves, 3);
  const double mean = std::accumulate(frr.begin(), frr.end(), 0.0) / 5;
  double ss = 0;
  for (double f : frr) ss += (f - mean) * (f - mean);
  const double expected = t4 * std::sqrt(ss / 4) / std::sqrt(5.0);
  EXPECT_NEAR(m.mean_frr[1], mean, 1e-12);
  EXPECT_NEAR(m.ci_half_width[1], expected, 1e-9);
  EXPECT_NEAR(m.eer_ci_half_width, 100 * expected, 1e-7);
  EXPECT_NEAR(m.mean_eer, 100 * mean, 1e-12);
}

TEST(Aggregate, NeedsTwoCurves) {
  const std::vector<RocCurve> one(1);
  EXPECT_THROW(aggregate_replicas(one), InvalidArgument);
  const std::vector<double> single{1.0};
  EXPECT_THROW(t_confidence_half_width(single), InvalidArgument);
}
