#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "c2p/geom/types.hpp"

namespace c2p::io {

/// Shortest "%.9g" rendering; every coordinate in the text formats uses it.
inline std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string fmt_vec(const Vec3& v) { return fmt9(v.x()) + " " + fmt9(v.y()) + " " + fmt9(v.z()); }

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  return in;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Labeled cloud text format:
//   # structure <id> <name>
//   # support <id> x y z
//   # landmark <id> x y z
//   x y z label
inline std::string format_cloud(const LabeledCloud& cloud) {
  std::string out;
  out.reserve(cloud.size() * 48 + 256);
  for (int k = 0; k < cloud.structure_count(); ++k)
    out += "# structure " + std::to_string(k) + " " + cloud.structure_names[static_cast<std::size_t>(k)] + "\n";
  for (std::size_t k = 0; k < cloud.support_points.size(); ++k)
    out += "# support " + std::to_string(k) + " " + fmt_vec(cloud.support_points[k]) + "\n";
  for (const auto& lm : cloud.landmarks)
    out += "# landmark " + std::to_string(lm.structure) + " " + fmt_vec(lm.position) + "\n";
  for (std::size_t i = 0; i < cloud.size(); ++i)
    out += fmt_vec(cloud.points[i]) + " " + std::to_string(cloud.labels[i]) + "\n";
  return out;
}

inline void write_cloud(const std::filesystem::path& path, const LabeledCloud& cloud) {
  write_text(path, format_cloud(cloud));
}

inline LabeledCloud parse_cloud(const std::string& text, const std::string& origin = "<memory>") {
  LabeledCloud cloud;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::IoError, origin + ":" + std::to_string(lineno) + ": " + why);
  };
  auto grow = [&](std::size_t id) {
    if (id > 4096) fail("structure id too large");
    if (cloud.structure_names.size() <= id) cloud.structure_names.resize(id + 1);
    if (cloud.support_points.size() <= id) cloud.support_points.resize(id + 1, Vec3::Zero());
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, kind;
      ls >> hash >> kind;
      if (kind == "structure") {
        std::size_t id;
        std::string name;
        if (!(ls >> id >> name)) fail("malformed structure record");
        grow(id);
        cloud.structure_names[id] = name;
      } else if (kind == "support") {
        std::size_t id;
        Vec3 p;
        if (!(ls >> id >> p.x() >> p.y() >> p.z())) fail("malformed support record");
        grow(id);
        cloud.support_points[id] = p;
      } else if (kind == "landmark") {
        Landmark lm;
        if (!(ls >> lm.structure >> lm.position.x() >> lm.position.y() >> lm.position.z()))
          fail("malformed landmark record");
        cloud.landmarks.push_back(lm);
      }
      continue;  // other comments are ignored
    }
    Vec3 p;
    int label = 0;
    if (!(ls >> p.x() >> p.y() >> p.z())) fail("expected 'x y z label'");
    if (!(ls >> label)) label = 0;
    cloud.points.push_back(p);
    cloud.labels.push_back(label);
  }
  if (cloud.structure_names.empty()) {
    int max_label = -1;
    for (int l : cloud.labels) max_label = std::max(max_label, l);
    for (int k = 0; k <= max_label; ++k) grow(static_cast<std::size_t>(k));
  }
  for (std::size_t k = 0; k < cloud.structure_names.size(); ++k)
    if (cloud.structure_names[k].empty()) cloud.structure_names[k] = "structure_" + std::to_string(k);
  cloud.validate();
  return cloud;
}

inline LabeledCloud read_cloud(const std::filesystem::path& path) {
  return parse_cloud(read_text(path), path.string());
}

/// Field files: one "dx dy dz" line per source point.
inline std::string format_field(const DisplacementField& field) {
  std::string out;
  out.reserve(field.size() * 40);
  for (const auto& v : field.vectors) out += fmt_vec(v) + "\n";
  return out;
}

inline void write_field(const std::filesystem::path& path, const DisplacementField& field) {
  write_text(path, format_field(field));
}

inline DisplacementField read_field(const std::filesystem::path& path) {
  auto in = open_in(path);
  DisplacementField f;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Vec3 v;
    if (!(ls >> v.x() >> v.y() >> v.z()))
      throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(lineno) + ": expected 'dx dy dz'");
    f.vectors.push_back(v);
  }
  return f;
}

/// Correspondence files: one "u v score" line per pair.
inline void write_correspondences(const std::filesystem::path& path, const CorrespondenceSet& corr) {
  std::string out;
  for (const auto& c : corr.pairs)
    out += std::to_string(c.source) + " " + std::to_string(c.target) + " " + fmt9(c.score) + "\n";
  write_text(path, out);
}

inline CorrespondenceSet read_correspondences(const std::filesystem::path& path) {
  auto in = open_in(path);
  CorrespondenceSet corr;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Correspondence c;
    if (!(ls >> c.source >> c.target >> c.score))
      throw Error(ErrorCode::IoError, path.string() + ": expected 'u v score'");
    corr.pairs.push_back(c);
  }
  return corr;
}

/// Transform files: the 4x4 homogeneous matrix, one row per line.
inline void write_transform(const std::filesystem::path& path, const RigidTransform& t) {
  const Eigen::Matrix4d m = t.matrix();
  std::string out;
  for (int r = 0; r < 4; ++r)
    out += fmt9(m(r, 0)) + " " + fmt9(m(r, 1)) + " " + fmt9(m(r, 2)) + " " + fmt9(m(r, 3)) + "\n";
  write_text(path, out);
}

inline RigidTransform read_transform(const std::filesystem::path& path) {
  auto in = open_in(path);
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(in >> m(r, c))) throw Error(ErrorCode::IoError, path.string() + ": expected a 4x4 matrix");
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

}  // namespace c2p::io
