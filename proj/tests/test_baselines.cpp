#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

#include "c2p/baselines/cpd.hpp"
#include "c2p/baselines/icp.hpp"
#include "c2p/baselines/nicp.hpp"
#include "c2p/geom/chamfer.hpp"
#include "c2p/synthgen/dataset.hpp"
#include "support.hpp"

using namespace c2p;
using namespace c2p::baselines;

namespace {

const LabeledCloud& small_ear() {
  static const LabeledCloud t = [] {
    synthgen::TemplateConfig cfg;
    cfg.points_per_structure = {200, 100, 100, 80, 300};
    return synthgen::build_template(cfg);
  }();
  return t;
}

// Smoothly bent copy of the small template.
const LabeledCloud& bent_ear() {
  static const LabeledCloud b = [] {
    synthgen::NonRigidParams p;
    p.displacement_bounds = {0.8, 0.8, 0.5};
    p.scale_bounds = {0.95, 1.05};
    p.seed = 3;
    return synthgen::simulate_nonrigid(small_ear(), p);
  }();
  return b;
}

// Quadratic bend plus shift applied to the whole small template.
const Points& globally_bent() {
  static const Points b = [] {
    Points out = small_ear().points;
    const Vec3 c = centroid(out);
    for (auto& p : out) {
      const Vec3 q = p - c;
      p += Vec3(0.02 * q.z() * q.z() + 0.3, 0.015 * q.x() * q.y(), -0.02 * q.x() * q.x());
    }
    return out;
  }();
  return b;
}

void expect_non_increasing(const std::vector<double>& trace, double slack) {
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + slack) << "step " << i;
}

}  // namespace

TEST(Icp, SelfIsIdentity) {
  const IcpResult r = icp(small_ear().points, small_ear().points);
  EXPECT_LT((r.transform.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(r.iterations, 2);
  EXPECT_TRUE(r.converged);
}

TEST(Icp, RecoversTenDegreesAboutZ) {
  std::mt19937_64 gen(1);
  const Points src = testing_support::random_points(400, gen, 5.0);
  const RigidTransform t{Eigen::AngleAxisd(10.0 * EIGEN_PI / 180.0, Vec3::UnitZ()).toRotationMatrix(), Vec3::Zero()};
  const IcpResult r = icp(src, apply_rigid(t, PointSpan(src)));
  EXPECT_LT(rotation_angle_between(r.transform.rotation, t.rotation), 1e-4);
}

TEST(Icp, ResidualTraceNonIncreasing) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Points src = testing_support::random_points(300, gen, 5.0);
    Points tgt = apply_rigid(testing_support::random_rigid(gen, 0.4, 1.0), PointSpan(src));
    for (std::size_t i = 0; i < 60; ++i) tgt.pop_back();
    const IcpResult r = icp(src, tgt);
    ASSERT_FALSE(r.residuals.empty());
    for (std::size_t i = 1; i < r.residuals.size(); ++i) EXPECT_LE(r.residuals[i], r.residuals[i - 1]);
  }
}

TEST(Icp, TooFewPoints) {
  const Points two = {Vec3::Zero(), Vec3::UnitX()};
  EXPECT_THROW(icp(two, two), Error);
}

TEST(Nicp, SelfIsIdentity) {
  const NicpResult r = nicp(small_ear().points, small_ear().points);
  for (const auto& v : r.field.vectors) EXPECT_LT(v.norm(), 1e-6);
}

TEST(Nicp, SmoothBendReducesChamfer) {
  const double before = chamfer_distance(small_ear().points, bent_ear().points);
  const NicpResult r = nicp(small_ear().points, bent_ear().points);
  EXPECT_LE(chamfer_distance(r.mapped, bent_ear().points), 0.1 * before);
}

TEST(Nicp, EnergyTraceNonIncreasing) {
  const NicpResult r = nicp(small_ear().points, bent_ear().points);
  ASSERT_FALSE(r.energies.empty());
  expect_non_increasing(r.energies, 1e-9);
}

TEST(Nicp, StiffLimitIsGlobalAffine) {
  NicpConfig cfg;
  cfg.stiffness = {1e6};
  const Points& src = small_ear().points;
  const NicpResult r = nicp(src, bent_ear().points, cfg);
  // Best single affine map from src to the result; residual must vanish.
  Eigen::MatrixXd a(src.size(), 4), b(src.size(), 3);
  for (std::size_t i = 0; i < src.size(); ++i) {
    a.row(static_cast<Eigen::Index>(i)) << src[i].transpose(), 1.0;
    b.row(static_cast<Eigen::Index>(i)) = r.mapped[i].transpose();
  }
  const Eigen::MatrixXd x = a.colPivHouseholderQr().solve(b);
  EXPECT_LT((a * x - b).rowwise().norm().maxCoeff(), 1e-3);
}

TEST(Nicp, DisconnectedGraphIsBridgedWithWarning) {
  Points src;
  for (int i = 0; i < 20; ++i) src.emplace_back(0.1 * i, 0.0, 0.0);
  for (int i = 0; i < 20; ++i) src.emplace_back(0.1 * i + 50.0, 0.0, 0.0);
  NicpConfig cfg;
  cfg.graph_k = 3;
  const NicpResult r = nicp(src, src, cfg);
  EXPECT_FALSE(r.warnings.empty());
  for (const auto& v : r.field.vectors) EXPECT_LT(v.norm(), 1e-6);
}

TEST(Nicp, Deterministic) {
  const NicpResult a = nicp(small_ear().points, bent_ear().points);
  const NicpResult b = nicp(small_ear().points, bent_ear().points);
  EXPECT_EQ(a.mapped, b.mapped);
}

TEST(Cpd, SelfIsNearZero) {
  const CpdResult r = cpd_nonrigid(small_ear().points, small_ear().points);
  double worst = 0.0;
  for (const auto& v : r.field.vectors) worst = std::max(worst, v.norm());
  EXPECT_LT(worst, 1e-3);
}

TEST(Cpd, SelfIsNearZeroWhenThinned) {
  const LabeledCloud full = synthgen::build_template(synthgen::TemplateConfig{});
  ASSERT_GT(full.size(), CpdConfig{}.max_centroids);
  double worst = 0.0;
  for (const auto& v : cpd_nonrigid(full.points, full.points).field.vectors) worst = std::max(worst, v.norm());
  EXPECT_LT(worst, 1e-3);
}

// The outlier constant shrinks with sigma^2, so a heavy outlier weight
// only damps the early EM steps.
TEST(Cpd, OutlierWeightNearOneDampsFirstStep) {
  CpdConfig heavy, light;
  heavy.w = 0.999;
  heavy.max_iterations = light.max_iterations = 1;
  const double moved_heavy = cpd_nonrigid(small_ear().points, globally_bent(), heavy).field.mean_norm();
  const double moved_light = cpd_nonrigid(small_ear().points, globally_bent(), light).field.mean_norm();
  EXPECT_LT(moved_heavy, 0.6 * moved_light);
}

TEST(Cpd, SmoothDeformationReducesChamfer) {
  const double before = chamfer_distance(small_ear().points, globally_bent());
  const CpdResult r = cpd_nonrigid(small_ear().points, globally_bent());
  EXPECT_LE(chamfer_distance(r.mapped, globally_bent()), 0.2 * before);
  expect_non_increasing(r.objective, 1e-9);
}

TEST(Cpd, ObjectiveNonIncreasingOnLocalDeformation) {
  const CpdResult r = cpd_nonrigid(small_ear().points, bent_ear().points);
  expect_non_increasing(r.objective, 1e-9);
  EXPECT_LT(chamfer_distance(r.mapped, bent_ear().points), chamfer_distance(small_ear().points, bent_ear().points));
}

TEST(Cpd, InvalidParameters) {
  CpdConfig cfg;
  cfg.w = 1.0;
  EXPECT_THROW(cpd_nonrigid(small_ear().points, small_ear().points, cfg), Error);
}

TEST(Cpd, Deterministic) {
  const CpdResult a = cpd_nonrigid(small_ear().points, globally_bent());
  const CpdResult b = cpd_nonrigid(small_ear().points, globally_bent());
  EXPECT_EQ(a.mapped, b.mapped);
}
