#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "c2p/synthgen/dataset.hpp"
#include "support.hpp"

using namespace c2p;
using namespace c2p::synthgen;

namespace {

const LabeledCloud& default_template() {
  static const LabeledCloud t = build_template(TemplateConfig{});
  return t;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Every regular file below `root`, keyed by relative path.
std::map<std::string, std::string> tree_contents(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

}  // namespace

TEST(Template, FiveNonEmptyStructuresAndDiagonal) {
  const LabeledCloud& t = default_template();
  ASSERT_EQ(t.structure_count(), 5);
  for (int k = 0; k < 5; ++k) EXPECT_FALSE(t.indices_of(k).empty());
  EXPECT_GE(t.size(), 2000u);
  EXPECT_LE(t.size(), 5000u);
  const double diag = bounding_box_diagonal(t.points);
  EXPECT_GE(diag, 13.0);
  EXPECT_LE(diag, 17.0);
}

TEST(Template, SupportPointsAreCentroidsAndLandmarksPerStructure) {
  const LabeledCloud& t = default_template();
  for (int k = 0; k < 5; ++k) {
    Points pts;
    for (std::size_t i : t.indices_of(k)) pts.push_back(t.points[i]);
    EXPECT_LT((t.support_points[static_cast<std::size_t>(k)] - centroid(pts)).norm(), 1e-12);
    int count = 0;
    for (const auto& l : t.landmarks) count += l.structure == k;
    EXPECT_GE(count, 4);
  }
}

TEST(Template, Deterministic) {
  const LabeledCloud a = build_template(TemplateConfig{});
  EXPECT_EQ(a.points, default_template().points);
  EXPECT_EQ(a.labels, default_template().labels);
}

TEST(Template, RejectsTooFewPoints) {
  TemplateConfig cfg;
  cfg.points_per_structure[2] = 0;
  try {
    build_template(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  cfg = TemplateConfig{};
  cfg.scale = 0.0;
  EXPECT_THROW(build_template(cfg), Error);
}

TEST(Ffd, NullParamsAreIdentity) {
  NonRigidParams p;
  p.displacement_bounds = {0, 0, 0};
  p.scale_bounds = {1, 1};
  p.seed = 3;
  const LabeledCloud out = simulate_nonrigid(default_template(), p);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_LT((out.points[i] - default_template().points[i]).norm(), 1e-12);
}

TEST(Ffd, ReproducesAffineMapsOfTheLattice) {
  std::mt19937_64 gen(21);
  const Points pts = testing_support::random_points(200, gen, 3.0);
  Lattice lat = Lattice::fit(pts, {4, 3, 5});
  Mat3 a = Mat3::Identity();
  a << 1.1, 0.2, -0.1, 0.05, 0.9, 0.3, -0.2, 0.1, 1.2;
  const Vec3 b(0.4, -1.0, 2.0);
  const auto res = lat.resolution();
  for (int i = 0; i < res[0]; ++i)
    for (int j = 0; j < res[1]; ++j)
      for (int k = 0; k < res[2]; ++k) lat.set_position(i, j, k, a * lat.rest_position(i, j, k) + b);
  for (const auto& p : pts) EXPECT_LT((lat.deform(p) - (a * p + b)).norm(), 1e-9);
}

TEST(Ffd, DisplacementBoundedByControlPoints) {
  NonRigidParams p;
  p.seed = 5;
  const LabeledCloud& t = default_template();
  Rng rng(9);
  for (int k = 0; k < t.structure_count(); ++k) {
    Points pts;
    for (std::size_t i : t.indices_of(k)) pts.push_back(t.points[i]);
    Lattice lat = Lattice::fit(pts, p.lattice_resolution);
    randomize_lattice(lat, p, rng);
    const double bound = lat.max_control_displacement();
    for (const auto& q : pts) EXPECT_LE(lat.displacement_at(q).norm(), bound + 1e-12);
  }
}

TEST(Ffd, OutsideLatticeIsInternalError) {
  std::mt19937_64 gen(22);
  const Points pts = testing_support::random_points(50, gen, 1.0);
  const Lattice lat = Lattice::fit(pts, {3, 3, 3});
  try {
    lat.displacement_at(Vec3(100, 100, 100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Internal);
  }
}

TEST(Ffd, DeterministicPerSeed) {
  NonRigidParams p;
  p.seed = 77;
  EXPECT_EQ(simulate_nonrigid(default_template(), p).points, simulate_nonrigid(default_template(), p).points);
}

TEST(Armature, NullParamsAreIdentity) {
  const Armature arm = build_armature(default_template());
  RigidParams p;
  p.root_rotation_bound = 0.0;
  p.root_translation_bound = 0.0;
  p.bone_rotation_bounds = {0, 0, 0, 0};
  const LabeledCloud out = simulate_rigid(default_template(), arm, p);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_LT((out.points[i] - default_template().points[i]).norm(), 1e-12);
}

TEST(Armature, PivotsCoincideAfterPosing) {
  const Armature arm = build_armature(default_template());
  ASSERT_EQ(arm.bones.size(), 4u);
  for (std::uint64_t s = 0; s < 20; ++s) {
    RigidParams p;
    p.seed = s;
    p.bone_rotation_bounds = {0.3, 0.3, 0.3, 0.3};
    const ArmaturePose pose = draw_pose(arm, p);
    for (std::size_t b = 0; b < arm.bones.size(); ++b) {
      const Bone& bone = arm.bones[b];
      const RigidTransform& parent = bone.parent < 0 ? pose.root : pose.bones[static_cast<std::size_t>(bone.parent)];
      EXPECT_LT((pose.bones[b].apply(bone.pivot) - parent.apply(bone.pivot)).norm(), 1e-9);
    }
  }
}

TEST(Armature, MotionIsRigidPerStructure) {
  const LabeledCloud& t = default_template();
  const Armature arm = build_armature(t);
  RigidParams p;
  p.seed = 4;
  const LabeledCloud out = simulate_rigid(t, arm, p);
  for (int k = 0; k < t.structure_count(); ++k) {
    const auto idx = t.indices_of(k);
    for (std::size_t a = 0; a < idx.size(); a += 37)
      for (std::size_t b = a + 1; b < idx.size(); b += 53)
        EXPECT_NEAR((t.points[idx[a]] - t.points[idx[b]]).norm(), (out.points[idx[a]] - out.points[idx[b]]).norm(),
                    1e-9);
  }
}

TEST(Armature, MalleusRotationLeavesCanalFixed) {
  const LabeledCloud& t = default_template();
  const Armature arm = build_armature(t);
  ArmaturePose pose;
  pose.bones.assign(arm.bones.size(), RigidTransform::identity());
  const int malleus = t.find_structure("malleus");
  for (std::size_t b = 0; b < arm.bones.size(); ++b)
    if (arm.bones[b].structure == malleus)
      pose.bones[b] = rotation_about(arm.bones[b].pivot, rotation_from_vector({0.2, -0.1, 0.3}));
  const LabeledCloud out = apply_pose(t, arm, pose);
  const int canal = t.find_structure("ear_canal");
  for (std::size_t i : t.indices_of(canal)) EXPECT_EQ(out.points[i], t.points[i]);
  bool moved = false;
  for (std::size_t i : t.indices_of(malleus)) moved = moved || (out.points[i] - t.points[i]).norm() > 1e-6;
  EXPECT_TRUE(moved);
}

TEST(Sampling, DegenerateSettingsReturnInput) {
  SamplingParams p;
  p.jitter = 0.0;
  p.visible_ratio_range = {1.0, 1.0};
  p.depth_attenuation = 0.0;
  const PartialSample s = sample_partial(default_template(), p);
  EXPECT_EQ(s.cloud.size(), default_template().size());
  for (std::size_t i = 0; i < s.cloud.size(); ++i) EXPECT_EQ(s.cloud.points[i], default_template().points[s.source_indices[i]]);
  EXPECT_DOUBLE_EQ(s.visible_ratio, 1.0);
}

TEST(Sampling, RequestedRatioIsHit) {
  SamplingParams p;
  p.visible_ratio_range = {0.5, 0.5};
  p.depth_attenuation = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    p.seed = s;
    const PartialSample out = sample_partial(default_template(), p);
    EXPECT_GE(out.visible_ratio, 0.45);
    EXPECT_LE(out.visible_ratio, 0.55);
  }
}

TEST(Sampling, WithoutJitterIsSubset) {
  SamplingParams p;
  p.jitter = 0.0;
  p.seed = 12;
  const PartialSample s = sample_partial(default_template(), p);
  for (std::size_t i = 0; i < s.cloud.size(); ++i)
    EXPECT_EQ(s.cloud.points[i], default_template().points[s.source_indices[i]]);
}

TEST(Sampling, JitterIsBounded) {
  SamplingParams p;
  p.seed = 13;
  const PartialSample s = sample_partial(default_template(), p);
  for (std::size_t i = 0; i < s.cloud.size(); ++i)
    EXPECT_LE((s.cloud.points[i] - default_template().points[s.source_indices[i]]).cwiseAbs().maxCoeff(),
              p.jitter + 1e-12);
}

TEST(Sampling, StapesThinnerThanMembrane) {
  const LabeledCloud& t = default_template();
  const int tm = t.find_structure("tympanic_membrane"), st = t.find_structure("stapes");
  double f_tm = 0.0, f_st = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    SamplingParams p;
    p.seed = s;
    const PartialSample out = sample_partial(t, p);
    std::size_t n_tm = 0, n_st = 0;
    for (int l : out.cloud.labels) {
      n_tm += l == tm;
      n_st += l == st;
    }
    f_tm += static_cast<double>(n_tm) / static_cast<double>(t.indices_of(tm).size());
    f_st += static_cast<double>(n_st) / static_cast<double>(t.indices_of(st).size());
  }
  EXPECT_LT(f_st, f_tm);
}

TEST(Sample, Invariants) {
  const Armature arm = build_armature(default_template());
  for (std::uint64_t s = 0; s < 5; ++s) {
    const SyntheticSample smp = make_sample(default_template(), arm, GeneratorConfig{}, sample_seed(1, s));
    ASSERT_EQ(smp.gt_field.size(), default_template().size());
    for (std::size_t i = 0; i < smp.deformed.size(); ++i)
      EXPECT_EQ(smp.deformed.points[i], default_template().points[i] + smp.gt_field.vectors[i]);
    EXPECT_DOUBLE_EQ(smp.visible_ratio,
                     static_cast<double>(smp.partial.size()) / static_cast<double>(smp.deformed.size()));
    EXPECT_GT(smp.visible_ratio, 0.0);
    EXPECT_LE(smp.visible_ratio, 1.0);
  }
}

TEST(Sample, CompositionOrderNonRigidThenRigid) {
  const Armature arm = build_armature(default_template());
  GeneratorConfig cfg;
  const SyntheticSample smp = make_sample(default_template(), arm, cfg, 99);
  const LabeledCloud expect = simulate_rigid(simulate_nonrigid(default_template(), smp.nonrigid), arm, smp.rigid);
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_LT((expect.points[i] - smp.deformed.points[i]).norm(), 1e-12);
}

TEST(Calibration, MeanDisplacementNearTarget) {
  const Armature arm = build_armature(default_template());
  double s = 0.0;
  const int n = 200;
  for (int i = 0; i < n; ++i) s += make_sample(default_template(), arm, GeneratorConfig{}, sample_seed(1, i)).gt_field.mean_norm();
  EXPECT_NEAR(s / n, 1.54, 0.5);
}

TEST(Dataset, ThreeSamplesOnDisk) {
  const auto dir = testing_support::temp_dir("dataset3");
  const DatasetManifest m = generate_dataset(3, GeneratorConfig{}, dir, 5);
  ASSERT_EQ(m.samples.size(), 3u);
  const DatasetManifest loaded = load_dataset(dir);
  ASSERT_EQ(loaded.samples.size(), 3u);
  const LabeledCloud tmpl = io::read_cloud(loaded.resolve(loaded.template_path));
  for (const auto& e : loaded.samples) {
    const LabeledCloud deformed = io::read_cloud(loaded.resolve(e.deformed));
    const LabeledCloud partial = io::read_cloud(loaded.resolve(e.partial));
    const DisplacementField gt = io::read_field(loaded.resolve(e.gt_field));
    ASSERT_EQ(gt.size(), tmpl.size());
    for (std::size_t i = 0; i < tmpl.size(); ++i)
      EXPECT_LT((tmpl.points[i] + gt.vectors[i] - deformed.points[i]).norm(), 1e-6);
    EXPECT_NEAR(e.visible_ratio, static_cast<double>(partial.size()) / static_cast<double>(deformed.size()), 1e-12);
  }
}

TEST(Dataset, ByteIdenticalReruns) {
  const auto a = testing_support::temp_dir("dataset_a");
  const auto b = testing_support::temp_dir("dataset_b");
  generate_dataset(2, GeneratorConfig{}, a, 11);
  generate_dataset(2, GeneratorConfig{}, b, 11);
  EXPECT_EQ(tree_contents(a), tree_contents(b));
}

TEST(Dataset, UnwritableDirectory) {
  const auto dir = testing_support::temp_dir("dataset_blocked");
  { std::ofstream(dir / "file") << "x"; }
  try {
    generate_dataset(1, GeneratorConfig{}, dir / "file" / "sub", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(Dataset, RigidOnlyConfig) {
  const GeneratorConfig cfg = rigid_only(GeneratorConfig{});
  EXPECT_TRUE(cfg.nonrigid.is_null());
  for (double b : cfg.rigid.bone_rotation_bounds) EXPECT_EQ(b, 0.0);
}
