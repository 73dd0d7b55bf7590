#include <gtest/gtest.h>

#include <cmath>

#include "atk/error.hpp"
#include "atk/extraction.hpp"
#include "atk/json_io.hpp"
#include "atk/random.hpp"
#include "fixture_set.hpp"

using namespace atk;

namespace {

TemplateSet first_n(std::size_t n) {
  TemplateSet s = fixture::box_set();
  s.templates.resize(std::min(n, s.templates.size()));
  return s;
}

PerturbationSpec spec_with(double sigma_t, double sigma_r, int trials = 10) {
  PerturbationSpec s;
  s.translation_sigma = sigma_t;
  s.rotation_sigma = sigma_r;
  s.trials = trials;
  return s;
}

}  // namespace

TEST(Moment, Examples) {
  EXPECT_DOUBLE_EQ(extraction_moment(Vec3(0.1, 0, 0), Vec3::Zero(), Vec3(0, 0, 10)), 1.0);
  EXPECT_EQ(extraction_moment(Vec3(0.3, 0.2, 0.1), Vec3(0.3, 0.2, 0.1), Vec3(1, 2, 3)), 0.0);
  EXPECT_EQ(extraction_moment(Vec3(0, 0, 0.5), Vec3::Zero(), Vec3(0, 0, 10)), 0.0);
}

TEST(Moment, LinearInForceAndPerpendicularOffset) {
  const Vec3 g(0.01, -0.02, 0.03);
  const Vec3 f(0, 0, 7.0);
  const Vec3 c = g + Vec3(0.004, 0.003, 0.05);
  const double m1 = extraction_moment(c, g, f);
  EXPECT_DOUBLE_EQ(m1, 7.0 * 0.005);
  for (double k : {2.0, 4.0, 0.5}) {
    EXPECT_DOUBLE_EQ(extraction_moment(c, g, k * f), k * m1);
    EXPECT_NEAR(extraction_moment(g + k * (c - g), g, f), k * m1, 1e-15);
  }
}

TEST(Moment, TemplateOverloadUsesHullCentroid) {
  const auto& set = fixture::box_set();
  ASSERT_FALSE(set.templates.empty());
  const auto& t = set.templates.front();
  const Vec3 f(10, 0, 0);
  const Vec3 c = hull_vertex_centroid(convex_hull(t.hull_vertices));
  EXPECT_DOUBLE_EQ(extraction_moment(t, set.center_of_mass, f), extraction_moment(c, set.center_of_mass, f));
}

TEST(Perturbation, ZeroSigmaIsIdentity) {
  const Vec3 pivot(0.1, 0.2, 0.3);
  const Pose p = sample_perturbation(spec_with(0, 0), 17, pivot);
  EXPECT_LT(pose_error(p, Pose()).distance, 1e-15);
  EXPECT_LT(pose_error(p, Pose()).angle, 1e-15);
  const Pose q = sample_perturbation(spec_with(0.01, 0.1), 17, pivot);
  EXPECT_TRUE(q == sample_perturbation(spec_with(0.01, 0.1), 17, pivot));
  EXPECT_FALSE(q == sample_perturbation(spec_with(0.01, 0.1), 18, pivot));
  // Pure rotation keeps the pivot fixed.
  EXPECT_LT((sample_perturbation(spec_with(0, 0.3), 5, pivot).apply(pivot) - pivot).norm(), 1e-15);
}

TEST(Survival, ZeroSigmaSurvivesLargeSigmaBreaks) {
  const auto& set = fixture::box_set();
  for (const auto& t : set.templates) {
    EXPECT_EQ(perturb_and_recheck(t, set, fixture::box(), fixture::hand(), spec_with(0, 0)), 1.0) << t.id;
    EXPECT_EQ(perturb_and_recheck(t, set, fixture::box(), fixture::hand(), spec_with(1.0, 0)), 0.0) << t.id;
  }
}

TEST(Survival, MonotoneInSigma) {
  const auto& set = fixture::box_set();
  double total_small = 0, total_large = 0;
  for (const auto& t : set.templates) {
    const double s0 = perturb_and_recheck(t, set, fixture::box(), fixture::hand(), spec_with(0, 0));
    const double s1 = perturb_and_recheck(t, set, fixture::box(), fixture::hand(), spec_with(0.001, 0.01));
    const double s2 = perturb_and_recheck(t, set, fixture::box(), fixture::hand(), spec_with(0.05, 0.5));
    EXPECT_GE(s0, s1) << t.id;
    EXPECT_GE(s1, s2) << t.id;
    total_small += s1;
    total_large += s2;
  }
  EXPECT_GT(total_small, total_large);
}

TEST(Survival, DeterministicAcrossJobs) {
  const auto& set = fixture::box_set();
  auto spec = spec_with(0.002, 0.02, 16);
  for (const auto& t : set.templates) {
    spec.jobs = 1;
    const auto a = perturb_and_recheck(t, set, fixture::box(), fixture::hand(), spec, Vec3(10, 0, 0), 9);
    spec.jobs = 4;
    const auto b = perturb_and_recheck(t, set, fixture::box(), fixture::hand(), spec, Vec3(10, 0, 0), 9);
    EXPECT_EQ(a.rate, b.rate);
    EXPECT_EQ(a.mean_moment, b.mean_moment);
  }
}

TEST(Survival, RejectsUncagedTemplateAndBadSpec) {
  const auto& set = fixture::box_set();
  TemplateSet moved = set;
  moved.object_pose = Pose::from_translation(Vec3(1, 0, 0));
  EXPECT_THROW(perturb_and_recheck(set.templates.front(), moved, fixture::box(), fixture::hand(), spec_with(0, 0)),
               InvalidTemplate);
  EXPECT_THROW(perturb_and_recheck(set.templates.front(), set, fixture::box(), fixture::hand(), spec_with(-1, 0)),
               InvalidInput);
  EXPECT_THROW(perturb_and_recheck(set.templates.front(), set, fixture::box(), fixture::hand(), spec_with(0, 0, 0)),
               InvalidInput);
}

TEST(Spearman, MatchesIndependentRecompute) {
  EXPECT_DOUBLE_EQ(spearman_correlation({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman_correlation({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  EXPECT_TRUE(std::isnan(spearman_correlation({1, 2, 3}, {5, 5, 5})));
  Rng rng(71);
  for (int c = 0; c < 50; ++c) {
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) {
      x.push_back(std::round(rng.uniform(0, 5)));
      y.push_back(std::round(rng.uniform(0, 5)));
    }
    const double a = spearman_correlation(x, y), b = oracle::spearman(x, y);
    if (std::isnan(b)) EXPECT_TRUE(std::isnan(a));
    else EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(Report, SingleTemplateZeroSigma) {
  const auto set = first_n(1);
  const auto report = run_trials(set, fixture::box(), fixture::hand(), spec_with(0, 0), Vec3(10, 0, 0));
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].survival, 1.0);
  EXPECT_EQ(report.rows[0].level, "High");
  EXPECT_TRUE(std::isnan(report.spearman));
  const Json doc = parse_json(report_to_json(report), "report");
  EXPECT_TRUE(doc.at("spearman_dh_survival").is_null());
}

TEST(Report, RowsSortedSpearmanRecomputedBytesStable) {
  const auto set = first_n(12);
  const auto spec = spec_with(0.002, 0.02);
  const Vec3 f = default_extraction_force(fixture::box(), set.object_pose, 10.0);
  EXPECT_LT((f - Vec3(10, 0, 0)).norm(), 1e-12);
  const auto report = run_trials(set, fixture::box(), fixture::hand(), spec, f);
  ASSERT_EQ(report.rows.size(), set.templates.size());
  std::vector<double> dh, surv;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    if (i > 0) EXPECT_LE(report.rows[i - 1].d_h, report.rows[i].d_h);
    dh.push_back(report.rows[i].d_h);
    surv.push_back(report.rows[i].survival);
  }
  const double rho = oracle::spearman(dh, surv);
  if (std::isnan(rho)) EXPECT_TRUE(std::isnan(report.spearman));
  else EXPECT_NEAR(report.spearman, rho, 1e-12);

  const auto again = run_trials(set, fixture::box(), fixture::hand(), spec, f);
  EXPECT_EQ(report_to_json(report), report_to_json(again));
  EXPECT_EQ(report_to_table(report), report_to_table(again));
  const auto table = report_to_table(report);
  EXPECT_NE(table.find("Success rate [%]"), std::string::npos);
  EXPECT_NE(table.find(report.rows.front().id), std::string::npos);
  EXPECT_THROW(run_trials(TemplateSet{}, fixture::box(), fixture::hand(), spec, f), InvalidInput);
}

TEST(Report, QualityLevelsByTercile) {
  const auto set = first_n(12);
  const auto report = run_trials(set, fixture::box(), fixture::hand(), spec_with(0, 0, 1), Vec3(0, 10, 0));
  EXPECT_EQ(report.rows.front().level, "High");
  EXPECT_EQ(report.rows.back().level, "Low");
}

TEST(Mechanism, MomentIncreasesWithLeverArm) {
  const auto& set = fixture::box_set();
  const Vec3 f(10, 0, 0);
  const Vec3 u = f.normalized();
  std::vector<std::pair<double, double>> arm_moment;
  for (const auto& t : set.templates) {
    const Vec3 r = hull_vertex_centroid(convex_hull(t.hull_vertices)) - set.center_of_mass;
    arm_moment.emplace_back((r - r.dot(u) * u).norm(), extraction_moment(t, set.center_of_mass, f));
  }
  std::sort(arm_moment.begin(), arm_moment.end());
  for (std::size_t i = 1; i < arm_moment.size(); ++i) {
    if (arm_moment[i].first > arm_moment[i - 1].first) EXPECT_GT(arm_moment[i].second, arm_moment[i - 1].second);
  }
}
