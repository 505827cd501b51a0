#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "c2p/config.hpp"
#include "c2p/eval/metrics.hpp"
#include "c2p/eval/svg.hpp"
#include "c2p/eval/trends.hpp"

namespace c2p::eval {

struct BenchConfig {
  std::vector<std::string> methods;
  Settings settings;
  std::size_t jobs = 1;
  std::size_t limit = 0;       // 0 = every sample
  bool record_time = false;    // wall_time_s stays 0 unless set, keeping reruns byte-identical
  double max_failure_ratio = 0.2;
  nlohmann::json provenance;   // extra fields for the run manifest (command line, ...)
};

struct SampleRecord {
  std::size_t sample_id = 0;
  std::string method;
  double mde_mm = NAN;
  double chamfer_mm = NAN;
  double landmark_mm = NAN;
  double visible_ratio = NAN;
  double init_rigid_chamfer_mm = NAN;
  double wall_time_s = 0.0;
  std::string status = "ok";
  double gt_norm = NAN;  // mean |phi_gt| of the sample, not part of the CSV

  bool ok() const { return status == "ok"; }
};

struct MethodSummary {
  std::string method;
  std::size_t ok = 0, failed = 0;
  double mde_mm = NAN, landmark_mm = NAN, chamfer_mm = NAN;
  double mean_gt_norm = NAN;  // over the samples this method succeeded on
};

struct RunReport {
  std::vector<SampleRecord> records;
  std::vector<MethodSummary> summaries;
  std::map<std::string, TrendReport> trends;
  std::string dataset_hash, config_hash;
  double mean_gt_norm = 0.0;

  const MethodSummary* summary(const std::string& m) const {
    for (const auto& s : summaries)
      if (s.method == m) return &s;
    return nullptr;
  }
};

namespace detail {

inline std::string num17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace detail

inline const char* kCsvHeader =
    "sample_id,method,mde_mm,chamfer_mm,landmark_mm,visible_ratio,init_rigid_chamfer_mm,wall_time_s,status";

inline std::string format_csv(const std::vector<SampleRecord>& records) {
  std::string out = std::string(kCsvHeader) + "\n";
  using detail::num17;
  for (const auto& r : records)
    out += std::to_string(r.sample_id) + "," + r.method + "," + num17(r.mde_mm) + "," + num17(r.chamfer_mm) + "," +
           num17(r.landmark_mm) + "," + num17(r.visible_ratio) + "," + num17(r.init_rigid_chamfer_mm) + "," +
           num17(r.wall_time_s) + "," + r.status + "\n";
  return out;
}

inline std::vector<SampleRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != kCsvHeader) throw Error(ErrorCode::IoError, "unexpected results CSV header");
  std::vector<SampleRecord> out;
  int no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw Error(ErrorCode::IoError, "results CSV line " + std::to_string(no) + " has bad arity");
    auto d = [](const std::string& s) { return s == "nan" ? NAN : std::stod(s); };
    SampleRecord r;
    r.sample_id = std::stoull(f[0]);
    r.method = f[1];
    r.mde_mm = d(f[2]);
    r.chamfer_mm = d(f[3]);
    r.landmark_mm = d(f[4]);
    r.visible_ratio = d(f[5]);
    r.init_rigid_chamfer_mm = d(f[6]);
    r.wall_time_s = d(f[7]);
    r.status = f[8];
    out.push_back(std::move(r));
  }
  return out;
}

/// Per-method means over successful records, in the order methods first appear.
inline std::vector<MethodSummary> summarize(const std::vector<SampleRecord>& records) {
  std::vector<MethodSummary> out;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MethodSummary& s) { return s.method == r.method; });
    if (it == out.end()) {
      out.push_back({});
      out.back().method = r.method;
    }
  }
  for (auto& s : out) {
    std::vector<double> mde, lm, cd, gt;
    for (const auto& r : records) {
      if (r.method != s.method) continue;
      if (!r.ok()) {
        ++s.failed;
        continue;
      }
      ++s.ok;
      mde.push_back(r.mde_mm);
      lm.push_back(r.landmark_mm);
      cd.push_back(r.chamfer_mm);
      if (!std::isnan(r.gt_norm)) gt.push_back(r.gt_norm);
    }
    if (s.ok > 0) {
      s.mde_mm = dataset_mean(mde);
      s.landmark_mm = dataset_mean(lm);
      s.chamfer_mm = dataset_mean(cd);
    }
    if (!gt.empty()) s.mean_gt_norm = dataset_mean(gt);
  }
  return out;
}

inline std::string format_summary_table(const std::vector<MethodSummary>& summaries) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %12s %12s %12s %10s\n", "method", "M_MDE[mm]", "M_L[mm]", "M_CD[mm]", "ok/total");
  out += buf;
  for (const auto& s : summaries) {
    std::snprintf(buf, sizeof buf, "%-8s %12.4f %12.4f %12.4f %6zu/%-3zu\n", s.method.c_str(), s.mde_mm, s.landmark_mm,
                  s.chamfer_mm, s.ok, s.ok + s.failed);
    out += buf;
  }
  return out;
}

inline const char* series_color(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  return colors[i % 6];
}

/// Both trend scatters (MDE against visible ratio and against initial
/// rigid error), one series per method.
inline void write_scatter_plots(const std::vector<SampleRecord>& records, const std::filesystem::path& out_dir) {
  const auto summaries = summarize(records);
  std::vector<Series> vis, init;
  for (std::size_t m = 0; m < summaries.size(); ++m) {
    Series a{summaries[m].method, series_color(m), {}, {}}, b = a;
    for (const auto& r : records) {
      if (r.method != summaries[m].method || !r.ok()) continue;
      a.x.push_back(r.visible_ratio);
      a.y.push_back(r.mde_mm);
      b.x.push_back(r.init_rigid_chamfer_mm);
      b.y.push_back(r.mde_mm);
    }
    vis.push_back(std::move(a));
    init.push_back(std::move(b));
  }
  io::write_text(out_dir / "mde_vs_visible_ratio.svg",
                 scatter_svg("MDE vs visible ratio", "visible points ratio", "MDE [mm]", vis));
  io::write_text(out_dir / "mde_vs_initial_error.svg",
                 scatter_svg("MDE vs initial rigid error", "initial rigid Chamfer [mm]", "MDE [mm]", init));
}

inline std::map<std::string, TrendReport> trends_of(const std::vector<SampleRecord>& records,
                                                    const std::vector<MethodSummary>& summaries) {
  std::map<std::string, TrendReport> out;
  for (const auto& s : summaries) {
    std::vector<double> v, e, m;
    for (const auto& r : records)
      if (r.method == s.method && r.ok()) {
        v.push_back(r.visible_ratio);
        e.push_back(r.init_rigid_chamfer_mm);
        m.push_back(r.mde_mm);
      }
    if (m.size() >= 20) out[s.method] = trend_analysis(v, e, m);
  }
  return out;
}

inline nlohmann::json summary_json(const RunReport& rep) {
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& s : rep.summaries) {
    methods[s.method] = {{"M_MDE_mm", detail::opt(std::isnan(s.mde_mm) ? std::nullopt : std::optional(s.mde_mm))},
                         {"M_L_mm", detail::opt(std::isnan(s.landmark_mm) ? std::nullopt : std::optional(s.landmark_mm))},
                         {"M_CD_mm", detail::opt(std::isnan(s.chamfer_mm) ? std::nullopt : std::optional(s.chamfer_mm))},
                         {"ok", s.ok},
                         {"failed", s.failed}};
  }
  nlohmann::json trends = nlohmann::json::object();
  for (const auto& [m, t] : rep.trends)
    trends[m] = {{"samples", t.samples},
                 {"spearman_visible_ratio_vs_mde", detail::opt(t.visible_ratio_vs_mde)},
                 {"spearman_initial_error_vs_mde", detail::opt(t.initial_error_vs_mde)}};
  return {{"dataset_hash", rep.dataset_hash},
          {"config_hash", rep.config_hash},
          {"mean_gt_norm_mm", rep.mean_gt_norm},
          {"methods", methods},
          {"trends", trends}};
}

/// Runs every method on every sample of a generated dataset and writes
/// results.csv, summary.txt, summary.json, the two scatter plots and a run
/// manifest into `out_dir`. Throws after writing when a method fails on more
/// than `max_failure_ratio` of the samples.
inline RunReport run_benchmark(const synthgen::DatasetManifest& ds, const BenchConfig& cfg,
                               const std::filesystem::path& out_dir) {
  if (cfg.methods.empty()) throw Error(ErrorCode::InvalidConfig, "no methods to benchmark");
  for (const auto& m : cfg.methods)
    if (!is_method(m)) throw Error(ErrorCode::InvalidConfig, "unknown method '" + m + "' (valid: icp, nicp, cpd, c2p)");
  if (cfg.jobs < 1) throw Error(ErrorCode::InvalidConfig, "jobs must be >= 1");
  const std::size_t n = cfg.limit > 0 ? std::min(cfg.limit, ds.samples.size()) : ds.samples.size();
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "dataset has no samples");

  const LabeledCloud tmpl = io::read_cloud(ds.resolve(ds.template_path));
  RunReport rep;
  rep.dataset_hash = hex64(fnv1a(io::read_text(ds.root / "manifest.json")));
  rep.config_hash = settings_hash(cfg.settings);

  const std::size_t nm = cfg.methods.size();
  rep.records.resize(n * nm);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n * nm) return;
      const std::size_t si = task / nm;
      const auto& entry = ds.samples[si];
      SampleRecord& rec = rep.records[task];
      rec.sample_id = entry.id;
      rec.method = cfg.methods[task % nm];
      rec.visible_ratio = entry.visible_ratio;
      rec.gt_norm = entry.mean_gt_norm;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const LabeledCloud partial = io::read_cloud(ds.resolve(entry.partial));
        const DisplacementField gt = io::read_field(ds.resolve(entry.gt_field));
        const MethodOutput out = run_method(rec.method, tmpl, partial, cfg.settings.methods);
        rec.mde_mm = mde(out.field, gt);
        rec.chamfer_mm = chamfer_distance(out.mapped, partial.points);
        const auto moved = deform_landmarks(tmpl.landmarks, tmpl.points, out.field);
        rec.landmark_mm = landmark_error(moved, partial.landmarks).error;
        rec.init_rigid_chamfer_mm = out.initial_rigid_chamfer;
      } catch (const Error& e) {
        rec.status = "failed:" + std::string(to_string(e.code()));
        rec.mde_mm = rec.chamfer_mm = rec.landmark_mm = NAN;
      } catch (const std::exception& e) {
        rec.status = "failed:Internal";
        rec.mde_mm = rec.chamfer_mm = rec.landmark_mm = NAN;
      }
      if (cfg.record_time)
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  if (cfg.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < cfg.jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  rep.summaries = summarize(rep.records);
  rep.trends = trends_of(rep.records, rep.summaries);
  std::vector<double> gt;
  for (std::size_t i = 0; i < n; ++i) gt.push_back(ds.samples[i].mean_gt_norm);
  rep.mean_gt_norm = dataset_mean(gt);

  io::write_text(out_dir / "results.csv", format_csv(rep.records));
  io::write_text(out_dir / "summary.txt", format_summary_table(rep.summaries));
  io::write_text(out_dir / "summary.json", summary_json(rep).dump(2) + "\n");
  write_scatter_plots(rep.records, out_dir);
  nlohmann::json manifest = cfg.provenance.is_object() ? cfg.provenance : nlohmann::json::object();
  manifest["tool_version"] = C2P_VERSION;
  manifest["dataset"] = ds.root.string();
  manifest["dataset_hash"] = rep.dataset_hash;
  manifest["dataset_seed"] = ds.master_seed;
  manifest["samples"] = n;
  manifest["methods"] = cfg.methods;
  manifest["config_hash"] = rep.config_hash;
  manifest["config"] = to_json(cfg.settings);
  manifest["record_time"] = cfg.record_time;
  io::write_text(out_dir / "run_manifest.json", manifest.dump(2) + "\n");

  for (const auto& s : rep.summaries) {
    const double ratio = static_cast<double>(s.failed) / static_cast<double>(s.ok + s.failed);
    if (ratio > cfg.max_failure_ratio)
      throw Error(ErrorCode::RegistrationFailed, "method " + s.method + " failed on " + std::to_string(s.failed) +
                                                     " of " + std::to_string(s.ok + s.failed) + " samples");
  }
  return rep;
}

}  // namespace c2p::eval
