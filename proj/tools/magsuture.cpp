// magsuture: command-line front end.
//
//   magsuture simulate  <config> [--seed N] [--out DIR] [--seeds K] [--jobs J]
//   magsuture gen-scene <config> [--seed N] [--out DIR] [--frames N]
//   magsuture localize  <mask_dir> [--config FILE] [--out DIR]
//   magsuture eval      <trace.csv> [--config FILE] [--tolerance MM]
//
// Errors are reported as one JSON object on stderr and a nonzero exit status.

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "magsuture/magsuture.hpp"

namespace ms = magsuture;
using nlohmann::json;

namespace {

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const ms::ConfigError*>(&e)) return "config";
  if (dynamic_cast<const ms::IoError*>(&e)) return "io";
  if (dynamic_cast<const ms::CalibrationError*>(&e)) return "calibration";
  if (dynamic_cast<const ms::SingularityError*>(&e)) return "singularity";
  if (dynamic_cast<const ms::DomainError*>(&e)) return "domain";
  return "internal";
}

int report_error(const std::exception& e) {
  std::cerr << json{{"status", "error"}, {"kind", error_kind(e)}, {"message", e.what()}}.dump() << std::endl;
  return 1;
}

ms::ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed,
                                 const std::string& out) {
  ms::KeyValueConfig kv = path.empty() ? ms::KeyValueConfig{} : ms::KeyValueConfig::load(path);
  if (seed) kv.set("seed", std::to_string(*seed));
  if (!out.empty()) kv.set("output_dir", out);
  return ms::load_experiment_config(kv);
}

int cmd_simulate(const ms::ExperimentConfig& base, unsigned seeds, unsigned jobs) {
  if (seeds <= 1) {
    const auto r = ms::run_experiment(base, base.output_dir);
    json j = ms::metrics_json(r.metrics);
    j["status"] = r.trace.complete() ? "ok" : "truncated";
    j["output_dir"] = base.output_dir;
    if (r.trace.error) j["error"] = *r.trace.error;
    std::cout << j.dump() << std::endl;
    return r.trace.complete() ? 0 : 3;
  }
  // Fan-out over consecutive seeds; each run is independent and writes out/seed_<n>/.
  std::vector<json> results(seeds);
  std::atomic<unsigned> next{0};
  std::mutex err_mu;
  std::optional<std::string> first_error;
  const auto worker = [&] {
    for (unsigned i; (i = next++) < seeds;) {
      ms::ExperimentConfig c = base;
      c.seed = base.seed + i;
      const std::string dir = base.output_dir + "/seed_" + std::to_string(c.seed);
      try {
        const auto r = ms::run_experiment(c, dir);
        results[i] = ms::metrics_json(r.metrics);
        results[i]["seed"] = c.seed;
        results[i]["complete"] = r.trace.complete();
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = "seed " + std::to_string(c.seed) + ": " + e.what();
      }
    }
  };
  const unsigned n = std::clamp(jobs, 1u, seeds);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) throw ms::IoError(*first_error);
  json summary{{"status", "ok"}, {"runs", results}};
  std::ofstream(std::filesystem::path(base.output_dir) / "summary.json") << summary.dump(2) << "\n";
  std::cout << summary.dump() << std::endl;
  return 0;
}

int cmd_gen_scene(const ms::ExperimentConfig& c) {
  const auto rows = ms::generate_scene_corpus(c, c.output_dir);
  std::cout << json{{"status", "ok"}, {"frames", rows.size()}, {"output_dir", c.output_dir}}.dump() << std::endl;
  return 0;
}

int cmd_localize(const ms::ExperimentConfig& c, const std::string& mask_dir) {
  const auto r = ms::eval_offline(c, mask_dir);
  std::filesystem::create_directories(c.output_dir);
  const auto csv_path = std::filesystem::path(c.output_dir) / "localization.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw ms::IoError("cannot write " + csv_path.string());
  csv << "frame,gt_x_mm,gt_y_mm,gt_theta_rad,est_x_mm,est_y_mm,est_theta_rad,detect_tag,flip_corrected\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& f = r.records[i];
    const bool det = f.estimate.has_value();
    csv << i << ',' << ms::format_double(f.truth.center_mm.x()) << ',' << ms::format_double(f.truth.center_mm.y())
        << ',' << ms::format_double(f.truth.theta_rad) << ',' << ms::format_double(det ? f.estimate->center_mm.x() : nan)
        << ',' << ms::format_double(det ? f.estimate->center_mm.y() : nan) << ','
        << ms::format_double(det ? f.estimate->theta_rad : nan) << ','
        << (det ? ms::kTagDetected : ms::kTagNoDetection) << ',' << (f.flip_corrected ? 1 : 0) << '\n';
  }
  json j = ms::metrics_json(r.metrics);
  std::ofstream(std::filesystem::path(c.output_dir) / "metrics.json") << j.dump(2) << "\n";
  j["status"] = "ok";
  j["output_dir"] = c.output_dir;
  std::cout << j.dump() << std::endl;
  return 0;
}

int cmd_eval(const std::string& trace, double tolerance) {
  json j = ms::metrics_json(ms::eval_trace_file(trace, tolerance));
  j["status"] = "ok";
  std::cout << j.dump() << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnetic needle steering simulation and localization tools"};
  app.require_subcommand(1);

  std::string config_path, out_dir, input;
  std::optional<std::uint64_t> seed;
  unsigned seeds = 1, jobs = 1;
  std::size_t frames = 0;
  double tolerance = 0.0;

  auto* sim = app.add_subcommand("simulate", "Run a closed-loop scenario");
  sim->add_option("config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "Override the configured seed");
  sim->add_option("--out", out_dir, "Output directory");
  sim->add_option("--seeds", seeds, "Run this many consecutive seeds")->check(CLI::PositiveNumber);
  sim->add_option("--jobs", jobs, "Parallel runs for --seeds")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-scene", "Generate a synthetic mask corpus");
  gen->add_option("config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", seed, "Override the configured seed");
  gen->add_option("--out", out_dir, "Output directory");
  gen->add_option("--frames", frames, "Override gen.frames")->check(CLI::PositiveNumber);

  auto* loc = app.add_subcommand("localize", "Localize a mask corpus offline");
  loc->add_option("mask_dir", input, "Directory with frame_*.pgm and truth.csv")->required();
  loc->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
  loc->add_option("--seed", seed, "Override the configured seed");
  loc->add_option("--out", out_dir, "Output directory");

  auto* ev = app.add_subcommand("eval", "Compute metrics for a trace");
  ev->add_option("trace", input, "trace.csv")->required();
  ev->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
  ev->add_option("--tolerance", tolerance, "Incorrect Detection tolerance in mm")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"status", "error"}, {"kind", "usage"}, {"message", e.what()}}.dump() << std::endl;
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(load_config(config_path, seed, out_dir), seeds, jobs);
    if (*gen) {
      ms::KeyValueConfig kv = ms::KeyValueConfig::load(config_path);
      if (frames > 0) kv.set("gen.frames", std::to_string(frames));
      if (seed) kv.set("seed", std::to_string(*seed));
      if (!out_dir.empty()) kv.set("output_dir", out_dir);
      return cmd_gen_scene(ms::load_experiment_config(kv));
    }
    if (*loc) return cmd_localize(load_config(config_path, seed, out_dir), input);
    if (*ev) {
      const auto c = load_config(config_path, std::nullopt, "");
      return cmd_eval(input, tolerance > 0.0 ? tolerance : c.tolerance());
    }
  } catch (const std::exception& e) {
    return report_error(e);
  }
  return 0;
}
