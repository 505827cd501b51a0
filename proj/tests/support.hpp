#pragma once

#include <Eigen/Geometry>

#include <filesystem>
#include <limits>
#include <random>
#include <string>

#include "c2p/geom/types.hpp"

namespace testing_support {

inline c2p::Points random_points(std::size_t n, std::mt19937_64& gen, double extent = 10.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  c2p::Points p(n);
  for (auto& v : p) v = c2p::Vec3(u(gen), u(gen), u(gen));
  return p;
}

inline c2p::RigidTransform random_rigid(std::mt19937_64& gen, double max_angle = 3.0, double max_shift = 5.0) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  c2p::Vec3 axis(g(gen), g(gen), g(gen));
  axis.normalize();
  c2p::RigidTransform t;
  t.rotation = Eigen::AngleAxisd(max_angle * u(gen), axis).toRotationMatrix();
  t.translation = c2p::Vec3(u(gen), u(gen), u(gen)) * max_shift;
  return t;
}

// Exhaustive nearest neighbour: lowest index wins ties.
inline std::pair<std::size_t, double> brute_nearest(const c2p::Points& cloud, const c2p::Vec3& q) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double d = (cloud[i] - q).norm();
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return {best, bd};
}

inline double brute_chamfer(const c2p::Points& a, const c2p::Points& b) {
  double sa = 0.0, sb = 0.0;
  for (const auto& p : a) sa += brute_nearest(b, p).second;
  for (const auto& p : b) sb += brute_nearest(a, p).second;
  return sa / static_cast<double>(a.size()) + sb / static_cast<double>(b.size());
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("c2p_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
