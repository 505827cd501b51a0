#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <sstream>
#include <string>

#include "c2p/eval/methods.hpp"
#include "c2p/geom/io.hpp"
#include "c2p/hash.hpp"
#include "c2p/synthgen/dataset.hpp"

#ifndef C2P_VERSION
#define C2P_VERSION "0.1.0"
#endif

namespace c2p {

namespace coarse {
inline void to_json(nlohmann::json& j, const CoarseConfig& c) {
  j = {{"radii", c.descriptors.radii},
       {"keypoint_fraction", c.descriptors.keypoint_fraction},
       {"min_votes", c.matching.min_votes},
       {"within_structure", c.matching.within_structure},
       {"max_candidate_pairs", c.matching.max_pairs},
       {"ransac_iterations", c.ransac.iterations},
       {"inlier_threshold", c.ransac.inlier_threshold},
       {"refinement_rounds", c.ransac.refinement_rounds},
       {"low_confidence_ratio", c.ransac.low_confidence_ratio},
       {"seed", c.ransac.seed},
       {"polish_iterations", c.polish.iterations},
       {"robust_scale", c.polish.robust_scale},
       {"score_cap", c.polish.score_cap},
       {"polish_tolerance", c.polish.tolerance},
       {"guided_radius", c.guided.radius},
       {"reverse_radius", c.guided.reverse_radius},
       {"max_pairs", c.guided.max_pairs},
       {"identity_hypothesis", c.identity_hypothesis},
       {"use_labels", c.use_labels}};
}
inline void from_json(const nlohmann::json& j, CoarseConfig& c) {
  j.at("radii").get_to(c.descriptors.radii);
  j.at("keypoint_fraction").get_to(c.descriptors.keypoint_fraction);
  j.at("min_votes").get_to(c.matching.min_votes);
  j.at("within_structure").get_to(c.matching.within_structure);
  j.at("max_candidate_pairs").get_to(c.matching.max_pairs);
  j.at("ransac_iterations").get_to(c.ransac.iterations);
  j.at("inlier_threshold").get_to(c.ransac.inlier_threshold);
  j.at("refinement_rounds").get_to(c.ransac.refinement_rounds);
  j.at("low_confidence_ratio").get_to(c.ransac.low_confidence_ratio);
  j.at("seed").get_to(c.ransac.seed);
  j.at("polish_iterations").get_to(c.polish.iterations);
  j.at("robust_scale").get_to(c.polish.robust_scale);
  j.at("score_cap").get_to(c.polish.score_cap);
  j.at("polish_tolerance").get_to(c.polish.tolerance);
  j.at("guided_radius").get_to(c.guided.radius);
  j.at("reverse_radius").get_to(c.guided.reverse_radius);
  j.at("max_pairs").get_to(c.guided.max_pairs);
  j.at("identity_hypothesis").get_to(c.identity_hypothesis);
  j.at("use_labels").get_to(c.use_labels);
}
}  // namespace coarse

namespace ndp {
inline void to_json(nlohmann::json& j, const PyramidConfig& c) {
  j = {{"levels", c.levels},
       {"iterations", c.iterations},
       {"k0", c.k0},
       {"width", c.width},
       {"depth", c.depth},
       {"learning_rate", c.learning_rate},
       {"decay", c.decay},
       {"lambda", c.lambda},
       {"graph_k", c.graph_k},
       {"plateau_tolerance", c.plateau_tolerance},
       {"plateau_window", c.plateau_window},
       {"max_regularization_nodes", c.max_regularization_nodes},
       {"use_labels", c.use_labels},
       {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, PyramidConfig& c) {
  j.at("levels").get_to(c.levels);
  j.at("iterations").get_to(c.iterations);
  j.at("k0").get_to(c.k0);
  j.at("width").get_to(c.width);
  j.at("depth").get_to(c.depth);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("decay").get_to(c.decay);
  j.at("lambda").get_to(c.lambda);
  j.at("graph_k").get_to(c.graph_k);
  j.at("plateau_tolerance").get_to(c.plateau_tolerance);
  j.at("plateau_window").get_to(c.plateau_window);
  j.at("max_regularization_nodes").get_to(c.max_regularization_nodes);
  j.at("use_labels").get_to(c.use_labels);
  j.at("seed").get_to(c.seed);
}
}  // namespace ndp

namespace baselines {
inline void to_json(nlohmann::json& j, const IcpConfig& c) {
  j = {{"max_iterations", c.max_iterations}, {"tolerance", c.tolerance}};
}
inline void from_json(const nlohmann::json& j, IcpConfig& c) {
  j.at("max_iterations").get_to(c.max_iterations);
  j.at("tolerance").get_to(c.tolerance);
}
inline void to_json(nlohmann::json& j, const NicpConfig& c) {
  j = {{"stiffness", c.stiffness},
       {"max_iterations", c.max_iterations},
       {"tolerance", c.tolerance},
       {"gamma", c.gamma},
       {"graph_k", c.graph_k}};
}
inline void from_json(const nlohmann::json& j, NicpConfig& c) {
  j.at("stiffness").get_to(c.stiffness);
  j.at("max_iterations").get_to(c.max_iterations);
  j.at("tolerance").get_to(c.tolerance);
  j.at("gamma").get_to(c.gamma);
  j.at("graph_k").get_to(c.graph_k);
}
inline void to_json(nlohmann::json& j, const CpdConfig& c) {
  j = {{"beta", c.beta},
       {"lambda", c.lambda},
       {"w", c.w},
       {"max_iterations", c.max_iterations},
       {"tolerance", c.tolerance},
       {"max_centroids", c.max_centroids}};
}
inline void from_json(const nlohmann::json& j, CpdConfig& c) {
  j.at("beta").get_to(c.beta);
  j.at("lambda").get_to(c.lambda);
  j.at("w").get_to(c.w);
  j.at("max_iterations").get_to(c.max_iterations);
  j.at("tolerance").get_to(c.tolerance);
  j.at("max_centroids").get_to(c.max_centroids);
}
}  // namespace baselines

/// Every tunable of the tool chain in one place.
struct Settings {
  synthgen::GeneratorConfig generator;
  eval::MethodConfigs methods;
};

inline nlohmann::json to_json(const Settings& s) {
  nlohmann::json j = nlohmann::json(s.generator);
  j["coarse"] = s.methods.c2p.coarse;
  j["ndp"] = s.methods.c2p.pyramid;
  j["ndp"]["allow_identity_init"] = s.methods.c2p.allow_identity_init;
  j["icp"] = s.methods.icp;
  j["nicp"] = s.methods.nicp;
  j["cpd"] = s.methods.cpd;
  return j;
}

inline Settings settings_from_json(const nlohmann::json& j) {
  Settings s;
  try {
    j.get_to(s.generator);
    j.at("coarse").get_to(s.methods.c2p.coarse);
    j.at("ndp").get_to(s.methods.c2p.pyramid);
    j.at("ndp").at("allow_identity_init").get_to(s.methods.c2p.allow_identity_init);
    j.at("icp").get_to(s.methods.icp);
    j.at("nicp").get_to(s.methods.nicp);
    j.at("cpd").get_to(s.methods.cpd);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad config value: ") + e.what());
  }
  s.generator.validate();
  s.methods.c2p.pyramid.validate();
  return s;
}

inline std::string settings_hash(const Settings& s) { return hex64(fnv1a(to_json(s).dump())); }

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

}  // namespace detail

/// Sets `section.key` to a value written in config syntax (number, true,
/// false, "string" or [list]). Unknown keys are rejected.
inline void apply_override(nlohmann::json& j, const std::string& section, const std::string& key,
                           const std::string& value, const std::string& where) {
  if (!j.contains(section) || !j[section].is_object())
    throw Error(ErrorCode::InvalidConfig, where + ": unknown section [" + section + "]");
  if (!j[section].contains(key))
    throw Error(ErrorCode::InvalidConfig, where + ": unknown key '" + key + "' in [" + section + "]");
  nlohmann::json v;
  try {
    v = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidConfig, where + ": cannot parse value '" + value + "'");
  }
  j[section][key] = v;
}

/// Applies a `section.key=value` assignment.
inline void apply_assignment(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw Error(ErrorCode::InvalidConfig, "override '" + assignment + "' is not section.key=value");
  apply_override(j, detail::trim(assignment.substr(0, dot)), detail::trim(assignment.substr(dot + 1, eq - dot - 1)),
                 detail::trim(assignment.substr(eq + 1)), "override");
}

/// TOML-style text: `[section]` headers, `key = value` lines, `#` comments.
inline void apply_config_text(nlohmann::json& j, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::string s = detail::trim(detail::strip_comment(line));
    const std::string where = origin + ":" + std::to_string(no);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw Error(ErrorCode::InvalidConfig, where + ": malformed section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      if (!j.contains(section)) throw Error(ErrorCode::InvalidConfig, where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, where + ": expected key = value");
    if (section.empty()) throw Error(ErrorCode::InvalidConfig, where + ": key outside any section");
    apply_override(j, section, detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)), where);
  }
}

inline Settings load_settings(const std::filesystem::path& path) {
  nlohmann::json j = to_json(Settings{});
  apply_config_text(j, io::read_text(path), path.string());
  return settings_from_json(j);
}

/// Config file text holding every current value.
inline std::string format_settings(const Settings& s) {
  const nlohmann::json j = to_json(s);
  std::string out;
  for (const auto& [section, body] : j.items()) {
    out += "[" + section + "]\n";
    for (const auto& [key, value] : body.items()) out += key + " = " + value.dump() + "\n";
    out += "\n";
  }
  return out;
}

}  // namespace c2p
