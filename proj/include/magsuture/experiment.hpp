#pragma once

/// @file experiment.hpp
/// @brief End-to-end runs: closed-loop scenarios, scene corpora and offline evaluation.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magsuture/config.hpp"
#include "magsuture/dynamics.hpp"
#include "magsuture/metrics.hpp"
#include "magsuture/pgm.hpp"
#include "magsuture/random.hpp"
#include "magsuture/trace_io.hpp"

namespace magsuture {

namespace fs = std::filesystem;

// Stream identifiers for seed derivation.
inline constexpr std::uint64_t kSceneStream = 0x5CE7E;
inline constexpr std::uint64_t kPipelineStream = 0x919E;
inline constexpr std::uint64_t kPoseStream = 0x905E;

inline ReferencePath build_path(const ExperimentConfig& c) {
  if (c.path.kind == PathKind::RunningSuture)
    return running_suture_path(c.path.suture, safe_radius(c.sim.dish, c.sim.spec));
  const double r = safe_radius(c.sim.dish, c.sim.spec);
  for (std::size_t i = 0; i < c.path.waypoints.size(); ++i)
    if (c.path.waypoints[i].norm() > r)
      throw DomainError("path.waypoints: waypoint " + std::to_string(i) + " lies outside the safe radius");
  return ReferencePath(c.path.waypoints, c.path.suture.v_des);
}

inline SceneGenerator make_scene_generator(const ExperimentConfig& c) {
  SceneConfig s = c.scene;
  s.rng_seed = derive_seed(c.seed, kSceneStream, 0);
  return SceneGenerator(s, c.sim.spec, c.sim.dish, c.pipeline.needle_width_px);
}

inline LocalizationSession make_session(const ExperimentConfig& c) {
  PipelineParams p = c.pipeline;
  p.seed = derive_seed(c.seed, kPipelineStream, 0);
  return LocalizationSession(p, c.sim.spec, c.sim.dish);
}

inline SimTrace simulate(const ExperimentConfig& c) {
  c.validate();
  const ReferencePath path = build_path(c);
  const TipController controller{c.controller_gain, c.sim.spec};
  SimConfig sim = c.sim;
  sim.rng_seed = c.seed;
  if (c.vision == VisionKind::Perfect) return run_closed_loop(sim, path, controller, PerfectVision{});
  SyntheticVision vision(make_scene_generator(c), make_session(c));
  return run_closed_loop(sim, path, controller, vision);
}

inline nlohmann::json metrics_json(const MetricsReport& m) {
  nlohmann::json j;
  j["rms_along_mm"] = m.rms_along_mm;
  j["rms_across_mm"] = m.rms_across_mm;
  j["rms_orientation_deg"] = m.rms_orientation_deg;
  j["flip_rate"] = m.flip_rate;
  j["no_detection_rate"] = m.no_detection_rate;
  j["incorrect_detection_rate"] = m.incorrect_detection_rate;
  j["tip_tracking_rms_mm"] = m.tip_tracking_rms_mm;
  j["frame_count"] = m.frame_count;
  j["detected_count"] = m.detected_count;
  j["correct_count"] = m.correct_count;
  j["flip_count"] = m.flip_count;
  j["incorrect_tolerance_mm"] = m.tolerance_mm;
  return j;
}

namespace detail {
inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("write failed: " + p.string());
}

inline void write_json(const fs::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}
}  // namespace detail

struct ExperimentResult {
  SimTrace trace;
  MetricsReport metrics;
};

/// Writes trace.csv, metrics.json and resolved_config.cfg into `out_dir`.
/// A run that stopped early still writes its partial trace; metrics.json then carries the error.
inline ExperimentResult run_experiment(const ExperimentConfig& c, const fs::path& out_dir) {
  detail::ensure_dir(out_dir);
  detail::write_text(out_dir / "resolved_config.cfg", format_experiment_config(c));
  ExperimentResult r;
  r.trace = simulate(c);
  {
    std::ofstream out(out_dir / "trace.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (out_dir / "trace.csv").string());
    write_trace_csv(out, r.trace);
  }
  const auto records = trace_records(r.trace);
  r.metrics = compute_metrics(records, c.tolerance());
  nlohmann::json j = metrics_json(r.metrics);
  j["seed"] = c.seed;
  j["complete"] = r.trace.complete();
  if (r.trace.error) j["error"] = *r.trace.error;
  detail::write_json(out_dir / "metrics.json", j);
  return r;
}

// ---------------------------------------------------------------------------
// Scene corpora

/// Uniform center over the disc that keeps the needle inside the dish, uniform heading.
inline NeedleState random_pose(const ExperimentConfig& c, std::uint64_t index) {
  Rng rng(derive_seed(c.seed, kPoseStream, index));
  const double rmax = safe_radius(c.sim.dish, c.sim.spec);
  const double r = rmax * std::sqrt(uniform01(rng));
  const double a = 2.0 * kPi * uniform01(rng);
  const double theta = 2.0 * kPi * uniform01(rng) - kPi;
  return NeedleState(Vec2(r * std::cos(a), r * std::sin(a)), theta);
}

/// Poses along a perfect-vision closed-loop run, resampled to gen.frames frames.
inline std::vector<NeedleState> path_poses(const ExperimentConfig& c) {
  ExperimentConfig pc = c;
  pc.vision = VisionKind::Perfect;
  const SimTrace t = simulate(pc);
  if (t.rows.empty()) throw DomainError("gen.poses = path: simulation produced no frames");
  std::vector<NeedleState> out;
  out.reserve(c.gen_frames);
  for (std::size_t i = 0; i < c.gen_frames; ++i) {
    const std::size_t k = c.gen_frames == 1 ? 0 : i * (t.rows.size() - 1) / (c.gen_frames - 1);
    out.push_back(t.rows[k].truth);
  }
  return out;
}

inline std::string frame_filename(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.pgm", i);
  return buf;
}

/// Writes frame_%05d.pgm masks, truth.csv (pose and bits per frame) and resolved_config.cfg.
inline std::vector<TruthRow> generate_scene_corpus(const ExperimentConfig& c, const fs::path& out_dir) {
  c.validate();
  detail::ensure_dir(out_dir);
  detail::write_text(out_dir / "resolved_config.cfg", format_experiment_config(c));
  const SceneGenerator gen = make_scene_generator(c);
  std::vector<NeedleState> poses;
  if (c.gen_poses == PoseSampling::Path) poses = path_poses(c);
  std::ofstream truth(out_dir / "truth.csv", std::ios::binary);
  if (!truth) throw IoError("cannot write " + (out_dir / "truth.csv").string());
  write_truth_header(truth);
  std::vector<TruthRow> rows;
  rows.reserve(c.gen_frames);
  for (std::size_t i = 0; i < c.gen_frames; ++i) {
    const NeedleState pose = c.gen_poses == PoseSampling::Path ? poses[i] : random_pose(c, i);
    const SyntheticFrame f = gen.generate(pose, i);
    write_mask_pgm((out_dir / frame_filename(i)).string(), f.mask);
    TruthRow r{i, pose, f.bits, f.truth.tip_visible, f.truth.tail_visible, f.truth.occluded_fraction};
    write_truth_row(truth, r);
    rows.push_back(r);
  }
  if (!truth) throw IoError("write failed: truth.csv");
  return rows;
}

struct OfflineResult {
  std::vector<FrameRecord> records;
  MetricsReport metrics;
};

/// Localizes every frame listed in `mask_dir`/truth.csv, in order, with one session.
inline OfflineResult eval_offline(const ExperimentConfig& c, const fs::path& mask_dir) {
  c.validate();
  if (!fs::is_directory(mask_dir)) throw IoError("mask directory not found: " + mask_dir.string());
  const fs::path truth_path = mask_dir / "truth.csv";
  std::ifstream in(truth_path, std::ios::binary);
  if (!in) throw IoError("missing " + truth_path.string());
  const std::vector<TruthRow> truth = read_truth_csv(in);
  if (truth.empty()) throw IoError("no frames listed in " + truth_path.string());
  for (const TruthRow& t : truth)
    if (!fs::exists(mask_dir / frame_filename(t.frame)))
      throw IoError("missing mask for frame " + std::to_string(t.frame) + ": " +
                    (mask_dir / frame_filename(t.frame)).string());
  LocalizationSession session = make_session(c);
  OfflineResult out;
  out.records.reserve(truth.size());
  for (const TruthRow& t : truth) {
    const SegMask mask = read_mask_pgm((mask_dir / frame_filename(t.frame)).string());
    const LocalizationResult r = session.process(mask, t.bits);
    FrameRecord rec;
    rec.truth = t.pose;
    if (r.detected()) {
      rec.estimate = r.detection->pose();
      rec.flip_corrected = r.detection->flip_corrected;
    }
    out.records.push_back(rec);
  }
  out.metrics = compute_metrics(out.records, c.tolerance(), false);
  return out;
}

/// Metrics for an existing trace file.
inline MetricsReport eval_trace_file(const fs::path& trace_csv, double tolerance_mm) {
  std::ifstream in(trace_csv, std::ios::binary);
  if (!in) throw IoError("cannot open trace " + trace_csv.string());
  const auto records = read_trace_csv(in);
  return compute_metrics(records, tolerance_mm);
}

}  // namespace magsuture
