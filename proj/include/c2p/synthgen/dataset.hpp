#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "c2p/geom/io.hpp"
#include "c2p/hash.hpp"
#include "c2p/synthgen/armature.hpp"
#include "c2p/synthgen/ffd.hpp"
#include "c2p/synthgen/sampling.hpp"
#include "c2p/synthgen/template.hpp"

namespace c2p::synthgen {

inline void to_json(nlohmann::json& j, const TemplateConfig& c) {
  j = {{"points_per_structure", c.points_per_structure}, {"scale", c.scale}, {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, TemplateConfig& c) {
  j.at("points_per_structure").get_to(c.points_per_structure);
  j.at("scale").get_to(c.scale);
  j.at("seed").get_to(c.seed);
}
inline void to_json(nlohmann::json& j, const NonRigidParams& p) {
  j = {{"lattice_resolution", p.lattice_resolution},
       {"displacement_bounds", p.displacement_bounds},
       {"scale_bounds", p.scale_bounds},
       {"seed", p.seed}};
}
inline void from_json(const nlohmann::json& j, NonRigidParams& p) {
  j.at("lattice_resolution").get_to(p.lattice_resolution);
  j.at("displacement_bounds").get_to(p.displacement_bounds);
  j.at("scale_bounds").get_to(p.scale_bounds);
  p.seed = j.value("seed", std::uint64_t{0});
}
inline void to_json(nlohmann::json& j, const RigidParams& p) {
  j = {{"root_rotation_bound", p.root_rotation_bound},
       {"root_translation_bound", p.root_translation_bound},
       {"bone_rotation_bounds", p.bone_rotation_bounds},
       {"seed", p.seed}};
}
inline void from_json(const nlohmann::json& j, RigidParams& p) {
  j.at("root_rotation_bound").get_to(p.root_rotation_bound);
  j.at("root_translation_bound").get_to(p.root_translation_bound);
  j.at("bone_rotation_bounds").get_to(p.bone_rotation_bounds);
  p.seed = j.value("seed", std::uint64_t{0});
}
inline void to_json(nlohmann::json& j, const SamplingParams& p) {
  j = {{"visible_ratio_range", p.visible_ratio_range},
       {"support_weight", p.support_weight},
       {"score_spread", p.score_spread},
       {"depth_attenuation", p.depth_attenuation},
       {"random_factor_range", p.random_factor_range},
       {"jitter", p.jitter},
       {"posterior_structures", p.posterior_structures},
       {"seed", p.seed}};
}
inline void from_json(const nlohmann::json& j, SamplingParams& p) {
  j.at("visible_ratio_range").get_to(p.visible_ratio_range);
  j.at("support_weight").get_to(p.support_weight);
  j.at("score_spread").get_to(p.score_spread);
  j.at("depth_attenuation").get_to(p.depth_attenuation);
  j.at("random_factor_range").get_to(p.random_factor_range);
  j.at("jitter").get_to(p.jitter);
  j.at("posterior_structures").get_to(p.posterior_structures);
  p.seed = j.value("seed", std::uint64_t{0});
}
inline void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"template", c.template_config}, {"nonrigid", c.nonrigid}, {"rigid", c.rigid}, {"sampling", c.sampling}};
}
inline void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  j.at("template").get_to(c.template_config);
  j.at("nonrigid").get_to(c.nonrigid);
  j.at("rigid").get_to(c.rigid);
  j.at("sampling").get_to(c.sampling);
}

/// One template -> deformed -> partial triple with its ground truth.
struct SyntheticSample {
  LabeledCloud template_cloud;  // P_exv
  LabeledCloud deformed;        // complete shape variant
  LabeledCloud partial;         // P_inv
  std::vector<std::size_t> partial_indices;
  DisplacementField gt_field;   // deformed - template, per template point
  double visible_ratio = 0.0;
  double requested_ratio = 0.0;
  std::uint64_t seed = 0;
  NonRigidParams nonrigid;
  RigidParams rigid;
  SamplingParams sampling;
};

inline std::uint64_t sample_seed(std::uint64_t master_seed, std::size_t index) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(index));
}

/// Deformed = S_r(S_nr(template)); partial sampled from the deformed shape.
inline SyntheticSample make_sample(const LabeledCloud& tmpl, const Armature& arm, const GeneratorConfig& cfg,
                                   std::uint64_t seed) {
  SyntheticSample s;
  s.seed = seed;
  s.nonrigid = cfg.nonrigid;
  s.rigid = cfg.rigid;
  s.sampling = cfg.sampling;
  s.nonrigid.seed = derive_seed(seed, 1);
  s.rigid.seed = derive_seed(seed, 2);
  s.sampling.seed = derive_seed(seed, 3);

  s.template_cloud = tmpl;
  s.deformed = simulate_rigid(simulate_nonrigid(tmpl, s.nonrigid), arm, s.rigid);
  s.gt_field = DisplacementField::between(tmpl.points, s.deformed.points);
  // deformed[i] == template[i] + gt[i] must hold bitwise; re-derive from the field.
  for (std::size_t i = 0; i < tmpl.size(); ++i) s.deformed.points[i] = tmpl.points[i] + s.gt_field.vectors[i];
  auto partial = sample_partial(s.deformed, s.sampling);
  s.partial = std::move(partial.cloud);
  s.partial_indices = std::move(partial.source_indices);
  s.visible_ratio = partial.visible_ratio;
  s.requested_ratio = partial.requested_ratio;
  return s;
}

struct DatasetEntry {
  std::size_t id = 0;
  std::string deformed;
  std::string partial;
  std::string gt_field;
  std::string partial_indices;
  std::uint64_t seed = 0;
  double visible_ratio = 0.0;
  double mean_gt_norm = 0.0;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::string template_path;
  std::uint64_t master_seed = 0;
  GeneratorConfig config;
  std::string config_hash;
  std::vector<DatasetEntry> samples;

  std::filesystem::path resolve(const std::string& rel) const { return root / rel; }

  double mean_gt_norm() const {
    double s = 0.0;
    for (const auto& e : samples) s += e.mean_gt_norm;
    return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
  }
  double mean_visible_ratio() const {
    double s = 0.0;
    for (const auto& e : samples) s += e.visible_ratio;
    return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
  }
};

inline std::string config_hash(const GeneratorConfig& cfg) { return hex64(fnv1a(nlohmann::json(cfg).dump())); }

inline std::string sample_dir_name(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "samples/%05zu", id);
  return buf;
}

/// Writes `n` samples under `out_dir` plus manifest.json; identical
/// (n, seed, config) produce byte-identical trees.
inline DatasetManifest generate_dataset(std::size_t n, const GeneratorConfig& cfg,
                                        const std::filesystem::path& out_dir, std::uint64_t master_seed) {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "dataset needs at least one sample");
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw Error(ErrorCode::IoError, "cannot create dataset directory '" + out_dir.string() + "'");

  const LabeledCloud tmpl = build_template(cfg.template_config);
  const Armature arm = build_armature(tmpl);

  DatasetManifest m;
  m.root = out_dir;
  m.template_path = "template.xyz";
  m.master_seed = master_seed;
  m.config = cfg;
  m.config_hash = config_hash(cfg);
  io::write_cloud(out_dir / m.template_path, tmpl);

  for (std::size_t i = 0; i < n; ++i) {
    const SyntheticSample s = make_sample(tmpl, arm, cfg, sample_seed(master_seed, i));
    DatasetEntry e;
    e.id = i;
    const std::string dir = sample_dir_name(i);
    e.deformed = dir + "/deformed.xyz";
    e.partial = dir + "/partial.xyz";
    e.gt_field = dir + "/gt_field.txt";
    e.partial_indices = dir + "/partial_indices.txt";
    e.seed = s.seed;
    e.visible_ratio = s.visible_ratio;
    e.mean_gt_norm = s.gt_field.mean_norm();
    io::write_cloud(out_dir / e.deformed, s.deformed);
    io::write_cloud(out_dir / e.partial, s.partial);
    io::write_field(out_dir / e.gt_field, s.gt_field);
    std::string idx;
    for (std::size_t v : s.partial_indices) idx += std::to_string(v) + "\n";
    io::write_text(out_dir / e.partial_indices, idx);
    m.samples.push_back(e);
  }

  nlohmann::json j;
  j["format"] = "c2p-dataset/1";
  j["master_seed"] = master_seed;
  j["count"] = n;
  j["template"] = m.template_path;
  j["config"] = cfg;
  j["config_hash"] = m.config_hash;
  nlohmann::json bones = nlohmann::json::array();
  for (const auto& b : arm.bones)
    bones.push_back({{"structure", tmpl.structure_names[static_cast<std::size_t>(b.structure)]},
                     {"parent", b.parent},
                     {"pivot", {b.pivot.x(), b.pivot.y(), b.pivot.z()}}});
  j["armature"] = bones;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& e : m.samples)
    samples.push_back({{"id", e.id},
                       {"deformed", e.deformed},
                       {"partial", e.partial},
                       {"gt_field", e.gt_field},
                       {"partial_indices", e.partial_indices},
                       {"seed", e.seed},
                       {"nonrigid_seed", derive_seed(e.seed, 1)},
                       {"rigid_seed", derive_seed(e.seed, 2)},
                       {"sampling_seed", derive_seed(e.seed, 3)},
                       {"visible_ratio", e.visible_ratio},
                       {"mean_gt_norm", e.mean_gt_norm}});
  j["samples"] = samples;
  io::write_text(out_dir / "manifest.json", j.dump(2) + "\n");
  return m;
}

/// Reads and validates manifest.json (plus the existence of every file).
inline DatasetManifest load_dataset(const std::filesystem::path& dir) {
  const auto path = std::filesystem::is_directory(dir) ? dir / "manifest.json" : dir;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, "malformed dataset manifest '" + path.string() + "': " + e.what());
  }
  DatasetManifest m;
  m.root = path.parent_path();
  try {
    m.template_path = j.at("template").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.config = j.at("config").get<GeneratorConfig>();
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& s : j.at("samples")) {
      DatasetEntry e;
      e.id = s.at("id").get<std::size_t>();
      e.deformed = s.at("deformed").get<std::string>();
      e.partial = s.at("partial").get<std::string>();
      e.gt_field = s.at("gt_field").get<std::string>();
      e.partial_indices = s.value("partial_indices", std::string{});
      e.seed = s.at("seed").get<std::uint64_t>();
      e.visible_ratio = s.at("visible_ratio").get<double>();
      e.mean_gt_norm = s.value("mean_gt_norm", 0.0);
      m.samples.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, "invalid dataset manifest '" + path.string() + "': " + e.what());
  }
  if (m.samples.empty()) throw Error(ErrorCode::InvalidConfig, "dataset has no samples");
  auto must_exist = [&](const std::string& rel) {
    if (!std::filesystem::exists(m.resolve(rel)))
      throw Error(ErrorCode::IoError, "dataset file missing: " + m.resolve(rel).string());
  };
  must_exist(m.template_path);
  for (const auto& e : m.samples) {
    must_exist(e.partial);
    must_exist(e.gt_field);
  }
  return m;
}

}  // namespace c2p::synthgen
