#include <gtest/gtest.h>

#include <random>

#include "c2p/geom/chamfer.hpp"
#include "c2p/geom/io.hpp"
#include "c2p/geom/pca.hpp"
#include "c2p/geom/rigid.hpp"
#include "support.hpp"

using namespace c2p;
using testing_support::brute_chamfer;
using testing_support::brute_nearest;
using testing_support::random_points;
using testing_support::random_rigid;

namespace {

LabeledCloud small_cloud() {
  LabeledCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 3}};
  c.labels = {0, 0, 1, 1};
  c.structure_names = {"a", "b"};
  c.support_points = {{0.5, 0, 0}, {0, 1, 1.5}};
  c.landmarks = {{0, {1, 0, 0}}, {1, {0, 0, 3}}};
  return c;
}

}  // namespace

TEST(NearestNeighbor, PicksClosest) {
  LabeledCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}};
  c.labels = {0, 0};
  c.structure_names = {"s"};
  const Neighbor nb = nearest_neighbor({0.1, 0, 0}, c);
  EXPECT_EQ(nb.index, 0u);
  EXPECT_NEAR(nb.distance, 0.1, 1e-15);
}

TEST(NearestNeighbor, QueryOnPointHasZeroDistance) {
  const LabeledCloud c = small_cloud();
  const Neighbor nb = nearest_neighbor(c.points[2], c);
  EXPECT_EQ(nb.index, 2u);
  EXPECT_EQ(nb.distance, 0.0);
}

TEST(NearestNeighbor, EmptyCloudThrows) {
  try {
    nearest_neighbor({0, 0, 0}, LabeledCloud{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCloud);
  }
}

TEST(NearestNeighbor, TiesGoToLowestIndex) {
  const Points pts = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {1, 0, 0}};
  const KdTree tree(pts, 1);
  EXPECT_EQ(tree.nearest({0, 0, 0}).index, 0u);
  EXPECT_EQ(tree.nearest({1, 0, 0}).index, 0u);
}

TEST(KdTree, MatchesBruteForce) {
  std::mt19937_64 gen(1);
  for (std::size_t n : {1u, 7u, 500u, 10000u}) {
    const Points pts = random_points(n, gen);
    const KdTree tree(pts);
    for (const auto& q : random_points(100, gen, 12.0)) {
      const auto [bi, bd] = brute_nearest(pts, q);
      const Neighbor nb = tree.nearest(q);
      EXPECT_EQ(nb.index, bi);
      EXPECT_EQ(nb.distance, bd);
    }
  }
}

TEST(KdTree, KnnSortedAndExact) {
  std::mt19937_64 gen(2);
  const Points pts = random_points(400, gen);
  const KdTree tree(pts);
  for (const auto& q : random_points(30, gen)) {
    const auto nbs = tree.knn(q, 6);
    ASSERT_EQ(nbs.size(), 6u);
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < pts.size(); ++i) all.emplace_back((pts[i] - q).squaredNorm(), i);
    std::sort(all.begin(), all.end());
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(nbs[k].index, all[k].second);
  }
}

TEST(KdTree, RadiusQuery) {
  std::mt19937_64 gen(3);
  const Points pts = random_points(300, gen);
  const KdTree tree(pts);
  const Vec3 q(0.5, -0.2, 1.0);
  std::vector<std::size_t> expect;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if ((pts[i] - q).norm() <= 4.0) expect.push_back(i);
  EXPECT_EQ(tree.radius(q, 4.0), expect);
}

TEST(KnnGraph, UndirectedUnique) {
  std::mt19937_64 gen(4);
  const Points pts = random_points(60, gen);
  const auto edges = knn_graph(pts, 4);
  for (std::size_t i = 1; i < edges.size(); ++i) EXPECT_LT(edges[i - 1], edges[i]);
  for (const auto& [a, b] : edges) EXPECT_LT(a, b);
}

TEST(Chamfer, SingletonPair) { EXPECT_DOUBLE_EQ(chamfer_distance(Points{{0, 0, 0}}, Points{{1, 0, 0}}), 2.0); }

TEST(Chamfer, SelfIsZero) {
  std::mt19937_64 gen(5);
  const Points a = random_points(50, gen);
  EXPECT_EQ(chamfer_distance(a, a), 0.0);
}

TEST(Chamfer, MatchesOracleAndIsSymmetric) {
  std::mt19937_64 gen(6);
  const Points a = random_points(300, gen), b = random_points(300, gen);
  EXPECT_NEAR(chamfer_distance(a, b), brute_chamfer(a, b), 1e-12);
  EXPECT_EQ(chamfer_distance(a, b), chamfer_distance(b, a));
}

TEST(Chamfer, RigidInvariance) {
  std::mt19937_64 gen(7);
  const Points a = random_points(200, gen), b = random_points(150, gen);
  const RigidTransform t = random_rigid(gen);
  EXPECT_NEAR(chamfer_distance(apply_rigid(t, PointSpan(a)), apply_rigid(t, PointSpan(b))), chamfer_distance(a, b),
              1e-9);
}

TEST(Chamfer, EmptyThrows) { EXPECT_THROW(chamfer_distance(Points{}, Points{{0, 0, 0}}), Error); }

TEST(ApplyRigid, IdentityIsBitwise) {
  const LabeledCloud c = small_cloud();
  const LabeledCloud d = apply_rigid(RigidTransform::identity(), c);
  EXPECT_EQ(d.points, c.points);
  EXPECT_EQ(d.labels, c.labels);
}

TEST(ApplyRigid, QuarterTurn) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()).toRotationMatrix();
  EXPECT_LT((t.apply({1, 0, 0}) - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(ApplyRigid, MapsSupportAndLandmarks) {
  std::mt19937_64 gen(8);
  const RigidTransform t = random_rigid(gen);
  const LabeledCloud c = small_cloud();
  const LabeledCloud d = apply_rigid(t, c);
  EXPECT_LT((d.support_points[1] - t.apply(c.support_points[1])).norm(), 1e-12);
  EXPECT_LT((d.landmarks[0].position - t.apply(c.landmarks[0].position)).norm(), 1e-12);
}

TEST(ApplyRigid, ComposeMatchesSequential) {
  std::mt19937_64 gen(9);
  const RigidTransform t1 = random_rigid(gen), t2 = random_rigid(gen);
  const Points p = random_points(40, gen);
  const Points seq = apply_rigid(t2, PointSpan(apply_rigid(t1, PointSpan(p))));
  const Points comp = apply_rigid(t2.compose(t1), PointSpan(p));
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_LT((seq[i] - comp[i]).norm(), 1e-9);
}

TEST(ApplyRigid, GroupAxioms) {
  std::mt19937_64 gen(10);
  const RigidTransform a = random_rigid(gen), b = random_rigid(gen), c = random_rigid(gen);
  const RigidTransform ab_c = a.compose(b).compose(c), a_bc = a.compose(b.compose(c));
  EXPECT_LT((ab_c.matrix() - a_bc.matrix()).norm(), 1e-9);
  EXPECT_LT((a.compose(a.inverse()).matrix() - Eigen::Matrix4d::Identity()).norm(), 1e-9);
}

TEST(ApplyRigid, PreservesDistances) {
  std::mt19937_64 gen(11);
  const RigidTransform t = random_rigid(gen);
  const Points p = random_points(30, gen);
  const Points q = apply_rigid(t, PointSpan(p));
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) EXPECT_NEAR((p[i] - p[j]).norm(), (q[i] - q[j]).norm(), 1e-9);
}

TEST(ApplyRigid, RejectsNonRotation) {
  RigidTransform t;
  t.rotation = Mat3::Identity() * 2.0;
  try {
    apply_rigid(t, small_cloud());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidTransform);
  }
  t.rotation = Mat3::Identity();
  t.rotation(2, 2) = -1.0;  // reflection
  EXPECT_THROW(apply_rigid(t, small_cloud()), Error);
}

TEST(RotationAngle, AccurateFromTinyToLarge) {
  const Vec3 axis = Vec3(1.0, -2.0, 0.5).normalized();
  for (double angle : {1e-12, 1e-8, 1e-3, 0.5, 3.0}) {
    const Mat3 r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    EXPECT_NEAR(rotation_angle_between(Mat3::Identity(), r), angle, 1e-15 + 1e-12 * angle);
    EXPECT_NEAR(rotation_angle_between(r, Mat3::Identity()), angle, 1e-15 + 1e-12 * angle);
  }
}

TEST(EstimateRigid, IdentityPairing) {
  std::mt19937_64 gen(12);
  const Points p = random_points(20, gen);
  CorrespondenceSet corr;
  for (std::size_t i = 0; i < p.size(); ++i) corr.pairs.push_back({i, i, 1.0});
  const RigidTransform t = estimate_rigid_from_correspondences(p, p, corr);
  EXPECT_LT((t.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(t.translation.norm(), 1e-12);
}

TEST(EstimateRigid, RecoversKnownTransform) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Points p = random_points(50, gen);
    const RigidTransform truth = random_rigid(gen);
    const Points q = apply_rigid(truth, PointSpan(p));
    CorrespondenceSet corr;
    for (std::size_t i = 0; i < p.size(); ++i) corr.pairs.push_back({i, i, 1.0});
    const RigidTransform t = estimate_rigid_from_correspondences(p, q, corr);
    EXPECT_LT(rotation_angle_between(t.rotation, truth.rotation), 1e-9);
    EXPECT_LT((t.translation - truth.translation).norm(), 1e-9);
    EXPECT_NEAR(t.rotation.determinant(), 1.0, 1e-12);
  }
}

TEST(EstimateRigid, ThreePointsSuffice) {
  std::mt19937_64 gen(14);
  const Points p = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const RigidTransform truth = random_rigid(gen);
  const RigidTransform t = fit_rigid(p, apply_rigid(truth, PointSpan(p)));
  EXPECT_LT(rotation_angle_between(t.rotation, truth.rotation), 1e-9);
}

TEST(EstimateRigid, Degenerate) {
  const Points line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CorrespondenceSet corr;
  for (std::size_t i = 0; i < 3; ++i) corr.pairs.push_back({i, i, 1.0});
  try {
    estimate_rigid_from_correspondences(line, line, corr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateCorrespondences);
  }
  corr.pairs.pop_back();
  EXPECT_THROW(estimate_rigid_from_correspondences(line, line, corr), Error);
}

TEST(CorrespondenceSet, Validation) {
  CorrespondenceSet c;
  c.pairs = {{0, 1, 0.5}, {1, 1, 1.0}};
  EXPECT_NO_THROW(c.validate(2, 2));
  EXPECT_THROW(c.validate(1, 2), Error);
  c.pairs.push_back({0, 1, 0.2});
  EXPECT_THROW(c.validate(2, 2), Error);
  c.pairs = {{0, 0, 1.5}};
  EXPECT_THROW(c.validate(2, 2), Error);
}

TEST(LabeledCloud, ValidateRejectsBadLabels) {
  LabeledCloud c = small_cloud();
  EXPECT_NO_THROW(c.validate(true));
  c.labels[0] = 5;
  EXPECT_THROW(c.validate(), Error);
  c = small_cloud();
  c.points[0].x() = std::nan("");
  EXPECT_THROW(c.validate(), Error);
  c = small_cloud();
  c.labels = {0, 0, 0, 0};
  EXPECT_NO_THROW(c.validate(false));
  EXPECT_THROW(c.validate(true), Error);
}

TEST(Pca, AxesOrthonormalDescending) {
  std::mt19937_64 gen(15);
  Points p = random_points(200, gen);
  for (auto& v : p) v.x() *= 3.0;
  const PrincipalFrame f = principal_frame(p);
  EXPECT_GE(f.variances[0], f.variances[1]);
  EXPECT_GE(f.variances[1], f.variances[2]);
  EXPECT_LT((f.axes.transpose() * f.axes - Mat3::Identity()).norm(), 1e-9);
  EXPECT_NEAR(f.axes.determinant(), 1.0, 1e-9);
  EXPECT_GT(std::abs(f.axes.col(0).x()), 0.9);
}

TEST(Io, CloudRoundTrip) {
  const LabeledCloud c = small_cloud();
  const LabeledCloud d = io::parse_cloud(io::format_cloud(c));
  EXPECT_EQ(d.structure_names, c.structure_names);
  EXPECT_EQ(d.labels, c.labels);
  ASSERT_EQ(d.points.size(), c.points.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_LT((d.points[i] - c.points[i]).norm(), 1e-12);
  ASSERT_EQ(d.landmarks.size(), 2u);
  EXPECT_EQ(d.landmarks[1].structure, 1);
  EXPECT_EQ(io::format_cloud(d), io::format_cloud(c));
}

TEST(Io, NineSignificantDigits) { EXPECT_EQ(io::fmt9(1.0 / 3.0), "0.333333333"); }

TEST(Io, FieldTransformCorrespondenceFiles) {
  const auto dir = testing_support::temp_dir("geom_io");
  DisplacementField f(Points{{1, 2, 3}, {-0.5, 0, 1e-3}});
  io::write_field(dir / "f.txt", f);
  EXPECT_EQ(io::read_field(dir / "f.txt").vectors, f.vectors);
  std::mt19937_64 gen(16);
  const RigidTransform t = random_rigid(gen);
  io::write_transform(dir / "t.txt", t);
  EXPECT_LT((io::read_transform(dir / "t.txt").matrix() - t.matrix()).norm(), 1e-7);
  CorrespondenceSet c;
  c.pairs = {{0, 3, 0.25}, {4, 1, 1.0}};
  io::write_correspondences(dir / "c.txt", c);
  const auto r = io::read_correspondences(dir / "c.txt");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.pairs[1].source, 4u);
  EXPECT_THROW(io::read_cloud(dir / "missing.xyz"), Error);
}

TEST(Io, MalformedCloudRejected) {
  EXPECT_THROW(io::parse_cloud("1 2\n"), Error);
  EXPECT_THROW(io::parse_cloud("1 2 nan 0\n"), Error);
}
