#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "c2p/eval/benchmark.hpp"
#include "support.hpp"

using namespace c2p;
using namespace c2p::eval;

namespace {

DisplacementField random_field(std::size_t n, std::mt19937_64& gen) {
  return DisplacementField(testing_support::random_points(n, gen, 2.0));
}

std::vector<Landmark> random_landmarks(std::size_t n, int structures, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> s(0, structures - 1);
  std::vector<Landmark> out;
  for (const auto& p : testing_support::random_points(n, gen, 5.0)) out.push_back({s(gen), p});
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

BenchConfig icp_only() {
  BenchConfig cfg;
  cfg.methods = {"icp"};
  return cfg;
}

const synthgen::DatasetManifest& tiny_dataset() {
  static const synthgen::DatasetManifest m = [] {
    const auto dir = testing_support::temp_dir("eval_dataset");
    synthgen::generate_dataset(4, synthgen::GeneratorConfig{}, dir, 21);
    return synthgen::load_dataset(dir);
  }();
  return m;
}

}  // namespace

TEST(Mde, Examples) {
  std::mt19937_64 gen(1);
  const DisplacementField f = random_field(50, gen);
  EXPECT_EQ(mde(f, f), 0.0);
  DisplacementField g = f;
  for (auto& v : g.vectors) v += Vec3(1, 0, 0);
  EXPECT_NEAR(mde(g, f), 1.0, 1e-12);
}

TEST(Mde, MatchesBruteForce) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<std::size_t> size(1, 500);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = size(gen);
    const DisplacementField a = random_field(n, gen), b = random_field(n, gen);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 d = a.vectors[i] - b.vectors[i];
      s += std::sqrt(d.x() * d.x() + d.y() * d.y() + d.z() * d.z());
    }
    EXPECT_NEAR(mde(a, b), s / static_cast<double>(n), 1e-12);
  }
}

TEST(Mde, ShapeMismatch) {
  try {
    mde(DisplacementField(3), DisplacementField(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Landmarks, Examples) {
  std::mt19937_64 gen(3);
  const auto l = random_landmarks(20, 3, gen);
  EXPECT_EQ(landmark_error(l, l).error, 0.0);
  const std::vector<Landmark> a = {{1, Vec3(0, 0, 0)}}, b = {{1, Vec3(0, 2, 0)}};
  EXPECT_DOUBLE_EQ(landmark_error(a, b).error, 2.0);
}

TEST(Landmarks, MatchesBruteForce) {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<std::size_t> size(1, 60);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_landmarks(size(gen), 5, gen);
    auto b = random_landmarks(size(gen), 5, gen);
    b.push_back({a.front().structure, Vec3::Zero()});  // at least one evaluable landmark
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& x : a) {
      double best = -1.0;
      for (const auto& y : b)
        if (y.structure == x.structure) {
          const double d = (x.position - y.position).norm();
          if (best < 0.0 || d < best) best = d;
        }
      if (best >= 0.0) {
        sum += best;
        ++count;
      }
    }
    const LandmarkResult r = landmark_error(a, b);
    EXPECT_EQ(r.evaluated, count);
    EXPECT_NEAR(r.error, sum / static_cast<double>(count), 1e-12);
  }
}

TEST(Landmarks, SkippedAndEmpty) {
  const std::vector<Landmark> a = {{0, Vec3::Zero()}, {2, Vec3::Ones()}}, b = {{0, Vec3::UnitX()}};
  const LandmarkResult r = landmark_error(a, b);
  EXPECT_EQ(r.evaluated, 1u);
  EXPECT_EQ(r.skipped_structures, std::vector<int>{2});
  try {
    landmark_error(a, std::vector<Landmark>{{4, Vec3::Zero()}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyLandmarks);
  }
}

TEST(Interpolation, ExactOnPointsAndConstantFields) {
  std::mt19937_64 gen(5);
  const Points pts = testing_support::random_points(200, gen);
  const DisplacementField f = random_field(200, gen);
  const KdTree tree(pts);
  for (std::size_t i = 0; i < pts.size(); i += 17) EXPECT_EQ(interpolate_field(tree, f, pts[i]), f.vectors[i]);
  const DisplacementField c(Points(200, Vec3(0.5, -1, 2)));
  for (const auto& q : testing_support::random_points(20, gen)) EXPECT_LT((interpolate_field(tree, c, q) - Vec3(0.5, -1, 2)).norm(), 1e-12);
}

TEST(Interpolation, InverseDistanceOracle) {
  std::mt19937_64 gen(6);
  const Points pts = testing_support::random_points(100, gen);
  const DisplacementField f = random_field(100, gen);
  const KdTree tree(pts);
  for (const auto& q : testing_support::random_points(20, gen)) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t i = 0; i < pts.size(); ++i) d.emplace_back((pts[i] - q).norm(), i);
    std::sort(d.begin(), d.end());
    Vec3 v = Vec3::Zero();
    double w = 0.0;
    for (int k = 0; k < 4; ++k) {
      v += f.vectors[d[k].second] / d[k].first;
      w += 1.0 / d[k].first;
    }
    EXPECT_LT((interpolate_field(tree, f, q) - v / w).norm(), 1e-12);
  }
}

TEST(Trends, PerfectMonotone) {
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(0.3 + 0.02 * i);
    y.push_back(std::exp(-i));
  }
  EXPECT_DOUBLE_EQ(*spearman(x, y), -1.0);
  EXPECT_DOUBLE_EQ(*spearman(x, x), 1.0);
}

TEST(Trends, IndependentPairsNearZero) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u;
  std::vector<double> x(1000), y(1000);
  for (auto& v : x) v = u(gen);
  for (auto& v : y) v = u(gen);
  EXPECT_LT(std::abs(*spearman(x, y)), 0.1);
}

TEST(Trends, ConstantSeriesIsUndefined) {
  const std::vector<double> c(25, 1.0);
  std::vector<double> y(25);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i);
  EXPECT_FALSE(spearman(c, y).has_value());
  const TrendReport t = trend_analysis(c, y, y);
  EXPECT_FALSE(t.visible_ratio_vs_mde.has_value());
  EXPECT_DOUBLE_EQ(*t.initial_error_vs_mde, 1.0);
}

TEST(Trends, AverageRanksForTies) {
  const std::vector<double> v = {3.0, 1.0, 3.0, 2.0};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

TEST(Trends, NeedsTwentySamples) {
  const std::vector<double> v(10, 0.0);
  EXPECT_THROW(trend_analysis(v, v, v), Error);
}

TEST(Csv, RoundTripIsExact) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<SampleRecord> recs;
  for (std::size_t i = 0; i < 30; ++i) {
    SampleRecord r;
    r.sample_id = i;
    r.method = i % 2 ? "icp" : "c2p";
    r.mde_mm = u(gen);
    r.chamfer_mm = u(gen);
    r.landmark_mm = u(gen);
    r.visible_ratio = u(gen) / 3.0;
    r.init_rigid_chamfer_mm = u(gen);
    if (i == 7) {
      r.status = "failed:RegistrationFailed";
      r.mde_mm = r.chamfer_mm = r.landmark_mm = NAN;
    }
    recs.push_back(r);
  }
  const auto back = parse_csv(format_csv(recs));
  ASSERT_EQ(back.size(), recs.size());
  EXPECT_EQ(format_csv(back), format_csv(recs));
  // Aggregates recomputed from the CSV rows match exactly.
  const auto a = summarize(recs), b = summarize(back);
  for (std::size_t m = 0; m < a.size(); ++m) {
    EXPECT_EQ(a[m].mde_mm, b[m].mde_mm);
    EXPECT_EQ(a[m].landmark_mm, b[m].landmark_mm);
    EXPECT_EQ(a[m].chamfer_mm, b[m].chamfer_mm);
  }
  EXPECT_EQ(a[0].method, "c2p");
  EXPECT_EQ(a[1].failed, 1u);
}

TEST(Csv, BadHeader) { EXPECT_THROW(parse_csv("a,b\n"), Error); }

TEST(Svg, WellFormedScatter) {
  const std::string s = scatter_svg("t", "x", "y", {Series{"a<b", "#000", {0, 1, 2}, {1, 2, 3}}});
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
  EXPECT_NE(s.find("a&lt;b"), std::string::npos);
}

TEST(Benchmark, ReportsAndFiles) {
  const auto out = testing_support::temp_dir("bench_out");
  const RunReport rep = run_benchmark(tiny_dataset(), icp_only(), out);
  ASSERT_EQ(rep.records.size(), 4u);
  for (const char* f : {"results.csv", "summary.txt", "summary.json", "run_manifest.json", "mde_vs_visible_ratio.svg",
                        "mde_vs_initial_error.svg"})
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  std::vector<double> mdes;
  for (const auto& r : rep.records) {
    EXPECT_TRUE(r.ok()) << r.status;
    EXPECT_GE(r.mde_mm, 0.0);
    EXPECT_GE(r.landmark_mm, 0.0);
    EXPECT_EQ(r.wall_time_s, 0.0);
    mdes.push_back(r.mde_mm);
  }
  EXPECT_EQ(rep.summary("icp")->mde_mm, dataset_mean(mdes));
  const auto parsed = parse_csv(slurp(out / "results.csv"));
  EXPECT_EQ(summarize(parsed)[0].mde_mm, rep.summary("icp")->mde_mm);
}

TEST(Benchmark, ByteIdenticalReruns) {
  const auto a = testing_support::temp_dir("bench_a"), b = testing_support::temp_dir("bench_b");
  BenchConfig cfg = icp_only();
  run_benchmark(tiny_dataset(), cfg, a);
  cfg.jobs = 3;
  run_benchmark(tiny_dataset(), cfg, b);
  for (const char* f : {"results.csv", "summary.txt", "summary.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Benchmark, ConfigurationErrors) {
  const auto out = testing_support::temp_dir("bench_err");
  BenchConfig cfg;
  try {
    run_benchmark(tiny_dataset(), cfg, out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  cfg.methods = {"svd"};
  EXPECT_THROW(run_benchmark(tiny_dataset(), cfg, out), Error);
}

TEST(Benchmark, FailuresAreRecordedThenFatal) {
  const auto dir = testing_support::temp_dir("eval_broken");
  synthgen::generate_dataset(2, synthgen::GeneratorConfig{}, dir, 3);
  const auto ds = synthgen::load_dataset(dir);
  io::write_text(ds.resolve(ds.samples[1].partial), "garbage\n");
  const auto out = testing_support::temp_dir("bench_broken");
  EXPECT_THROW(run_benchmark(ds, icp_only(), out), Error);
  const auto recs = parse_csv(slurp(out / "results.csv"));
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_TRUE(recs[0].ok());
  EXPECT_EQ(recs[1].status, "failed:IoError");
}

TEST(Methods, IdentityOnSelf) {
  const LabeledCloud t = synthgen::build_template(synthgen::TemplateConfig{});
  const MethodConfigs cfg;
  for (const std::string m : {"icp", "nicp"}) {
    const MethodOutput out = run_method(m, t, t, cfg);
    EXPECT_LT(out.field.mean_norm(), 1e-6) << m;
  }
}
