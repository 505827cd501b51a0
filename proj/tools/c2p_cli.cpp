#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include "c2p/c2p.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kRuntime = 3;

int exit_code_for(const c2p::Error& e) {
  switch (e.code()) {
    case c2p::ErrorCode::InvalidConfig:
    case c2p::ErrorCode::IoError:
      return kUsage;
    default:
      return kRuntime;
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("C2P_SEED");
  if (!s || !*s) return std::nullopt;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != std::string(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw c2p::Error(c2p::ErrorCode::InvalidConfig, std::string("C2P_SEED is not an unsigned integer: ") + s);
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  c2p::Settings settings() const {
    nlohmann::json j = c2p::to_json(c2p::Settings{});
    if (!config.empty()) c2p::apply_config_text(j, c2p::io::read_text(config), config);
    for (const auto& o : overrides) c2p::apply_assignment(j, o);
    return c2p::settings_from_json(j);
  }

  std::optional<std::uint64_t> effective_seed() const { return seed ? seed : env_seed(); }
};

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

int cmd_generate(const Common& common, std::size_t n, const std::string& out, bool rigid_only,
                 const std::string& cmdline) {
  c2p::Settings settings = common.settings();
  if (rigid_only) settings.generator = c2p::synthgen::rigid_only(settings.generator);
  const std::uint64_t seed = common.effective_seed().value_or(0);
  const auto ds = c2p::synthgen::generate_dataset(n, settings.generator, out, seed);
  nlohmann::json run = {{"command", cmdline},
                        {"tool_version", C2P_VERSION},
                        {"seed", seed},
                        {"samples", n},
                        {"rigid_only", rigid_only},
                        {"config_hash", c2p::settings_hash(settings)},
                        {"config", c2p::to_json(settings)}};
  c2p::io::write_text(std::filesystem::path(out) / "run_manifest.json", run.dump(2) + "\n");
  std::printf("manifest: %s\n", (std::filesystem::path(out) / "manifest.json").string().c_str());
  std::printf("samples: %zu\nmean |phi_gt|: %.4f mm\nmean visible ratio: %.4f\n", ds.samples.size(),
              ds.mean_gt_norm(), ds.mean_visible_ratio());
  return 0;
}

int cmd_register(const Common& common, const std::string& method, const std::string& src, const std::string& tgt,
                 const std::string& out, bool allow_identity_init, const std::string& cmdline) {
  if (!c2p::eval::is_method(method)) {
    std::cerr << "error: unknown method '" << method << "'; valid methods: icp, nicp, cpd, c2p\n";
    return kUsage;
  }
  c2p::Settings settings = common.settings();
  if (const auto s = common.effective_seed()) {
    settings.methods.c2p.pyramid.seed = *s;
    settings.methods.c2p.coarse.ransac.seed = *s;
  }
  settings.methods.c2p.allow_identity_init = settings.methods.c2p.allow_identity_init || allow_identity_init;
  const c2p::LabeledCloud source = c2p::io::read_cloud(src);
  const c2p::LabeledCloud target = c2p::io::read_cloud(tgt);
  const std::filesystem::path dir(out);
  nlohmann::json diag = {{"command", cmdline},
                         {"tool_version", C2P_VERSION},
                         {"method", method},
                         {"source", src},
                         {"target", tgt},
                         {"source_points", source.size()},
                         {"target_points", target.size()},
                         {"config_hash", c2p::settings_hash(settings)},
                         {"config", c2p::to_json(settings)}};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto r = c2p::eval::run_method(method, source, target, settings.methods);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c2p::io::write_field(dir / "field.txt", r.field);
    c2p::io::write_transform(dir / "transform.txt", r.transform);
    if (method == "c2p") c2p::io::write_correspondences(dir / "correspondences.txt", r.sigma);
    diag["status"] = "ok";
    diag["wall_time_s"] = secs;
    diag["initial_rigid_chamfer_mm"] = r.initial_rigid_chamfer;
    diag["final_chamfer_mm"] = c2p::chamfer_distance(r.mapped, target.points);
    diag["details"] = r.diagnostics;
    c2p::io::write_text(dir / "diagnostics.json", diag.dump(2) + "\n");
    std::printf("%s: %zu points registered in %.2f s, Chamfer %.4f -> %.4f mm\n", method.c_str(), source.size(), secs,
                r.initial_rigid_chamfer, diag["final_chamfer_mm"].get<double>());
    std::printf("field: %s\n", (dir / "field.txt").string().c_str());
  } catch (const c2p::Error& e) {
    diag["status"] = "failed";
    diag["error"] = e.what();
    diag["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c2p::io::write_text(dir / "diagnostics.json", diag.dump(2) + "\n");
    std::cerr << "registration failed: " << e.what() << "\n";
    return e.code() == c2p::ErrorCode::InvalidConfig ? kUsage : kRuntime;
  }
  return 0;
}

int cmd_bench(const Common& common, const std::string& dataset, const std::string& methods, const std::string& out,
              std::size_t jobs, std::size_t limit, bool record_time, const std::string& cmdline) {
  c2p::eval::BenchConfig cfg;
  cfg.methods = split(methods, ',');
  cfg.settings = common.settings();
  if (const auto s = common.effective_seed()) {
    cfg.settings.methods.c2p.pyramid.seed = *s;
    cfg.settings.methods.c2p.coarse.ransac.seed = *s;
  }
  cfg.jobs = jobs;
  cfg.limit = limit;
  cfg.record_time = record_time;
  cfg.provenance = {{"command", cmdline}};
  const auto ds = c2p::synthgen::load_dataset(dataset);
  const auto rep = c2p::eval::run_benchmark(ds, cfg, out);
  std::cout << c2p::eval::format_summary_table(rep.summaries);
  std::printf("mean |phi_gt|: %.4f mm\n", rep.mean_gt_norm);
  for (const auto& [m, t] : rep.trends) {
    auto f = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("undefined"); };
    std::printf("%s: spearman(visible ratio, MDE) = %s, spearman(initial error, MDE) = %s\n", m.c_str(),
                f(t.visible_ratio_vs_mde).c_str(), f(t.initial_error_vs_mde).c_str());
  }
  std::printf("results: %s\n", (std::filesystem::path(out) / "results.csv").string().c_str());
  return 0;
}

int cmd_plot(const std::string& results, const std::string& out) {
  const auto records = c2p::eval::parse_csv(c2p::io::read_text(results));
  const std::filesystem::path dir = out.empty() ? std::filesystem::path(results).parent_path() : std::filesystem::path(out);
  c2p::eval::write_scatter_plots(records, dir);
  std::printf("plots: %s\n", dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complete-to-partial point cloud registration toolkit"};
  app.set_version_flag("--version", std::string(C2P_VERSION));
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Common common;
  std::uint64_t seed_value = 0;
  app.add_option("--config", common.config, "Config file (TOML-style sections)")->check(CLI::ExistingFile);
  app.add_option("--set", common.overrides, "Override a config value: section.key=value (repeatable)");
  auto* seed_opt = app.add_option("--seed", seed_value, "Master seed (falls back to C2P_SEED)");

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  std::size_t n = 0;
  std::string gen_out;
  bool rigid_only = false;
  gen->add_option("--n", n, "Number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_flag("--rigid-only", rigid_only, "Zero the non-rigid and articulation parameters");
  gen->add_option("--seed", seed_value, "Master seed");

  auto* reg = app.add_subcommand("register", "Register a source cloud onto a target cloud");
  std::string method = "c2p", src, tgt, reg_out = ".";
  bool allow_identity = false;
  reg->add_option("--method", method, "icp | nicp | cpd | c2p");
  reg->add_option("--src", src, "Source (complete template) cloud")->required();
  reg->add_option("--tgt", tgt, "Target (partial) cloud")->required();
  reg->add_option("--out", reg_out, "Output directory");
  reg->add_flag("--allow-identity-init", allow_identity, "Continue with an identity pose if stage 1 fails");
  reg->add_option("--seed", seed_value, "Seed for RANSAC and network initialisation");

  auto* bench = app.add_subcommand("bench", "Benchmark methods on a generated dataset");
  std::string dataset, methods = "icp,nicp,cpd,c2p", bench_out;
  std::size_t jobs = 1, limit = 0;
  bool record_time = false;
  bench->add_option("--dataset", dataset, "Dataset directory")->required();
  bench->add_option("--methods", methods, "Comma-separated methods");
  bench->add_option("--out", bench_out, "Report directory")->required();
  bench->add_option("--jobs", jobs, "Samples processed in parallel")->check(CLI::PositiveNumber);
  bench->add_option("--limit", limit, "Only the first N samples");
  bench->add_flag("--record-time", record_time, "Fill wall_time_s (makes reruns differ)");
  bench->add_option("--seed", seed_value, "Seed for RANSAC and network initialisation");

  auto* plot = app.add_subcommand("plot", "Re-render scatter plots from a results CSV");
  std::string results, plot_out;
  plot->add_option("--results", results, "results.csv from bench")->required();
  plot->add_option("--out", plot_out, "Output directory (default: next to the CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  const bool seed_given = seed_opt->count() > 0 || gen->count("--seed") > 0 || reg->count("--seed") > 0 ||
                          bench->count("--seed") > 0;
  if (seed_given) common.seed = seed_value;
  const std::string cmdline = command_line(argc, argv);
  try {
    if (*gen) return cmd_generate(common, n, gen_out, rigid_only, cmdline);
    if (*reg) return cmd_register(common, method, src, tgt, reg_out, allow_identity, cmdline);
    if (*bench) return cmd_bench(common, dataset, methods, bench_out, jobs, limit, record_time, cmdline);
    if (*plot) return cmd_plot(results, plot_out);
  } catch (const c2p::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
