#pragma once

/// @file config.hpp
/// @brief Flat `section.key = value` configuration text and the experiment schema.
///
/// Lines are `key = value`; `#` starts a comment; blank lines are ignored.
/// Keys are unique. Unknown keys are rejected so typos surface immediately.
/// The full key list lives in docs/config_schema.md.

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "magsuture/control.hpp"
#include "magsuture/dynamics.hpp"
#include "magsuture/localization.hpp"
#include "magsuture/synth_vision.hpp"
#include "magsuture/trace_io.hpp"

namespace magsuture {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace detail

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>") {
    KeyValueConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
      std::string key = detail::trim(line.substr(0, eq));
      std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
      if (c.values_.count(key)) throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      c.values_[key] = value;
    }
    return c;
  }

  static KeyValueConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Experiment schema

enum class PathKind { RunningSuture, Waypoints };
enum class VisionKind { Perfect, Synthetic };
enum class PoseSampling { Random, Path };

struct PathConfig {
  PathKind kind = PathKind::RunningSuture;
  RunningSutureParams suture;
  std::vector<Vec2> waypoints;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  SimConfig sim;
  double controller_gain = 0.5;
  PathConfig path;
  VisionKind vision = VisionKind::Synthetic;
  SceneConfig scene;
  PipelineParams pipeline;
  /// 0 selects 1.1 x half the needle length.
  double incorrect_tolerance_mm = 0.0;
  std::string output_dir = "out";
  std::size_t gen_frames = 200;
  PoseSampling gen_poses = PoseSampling::Random;

  double tolerance() const {
    return incorrect_tolerance_mm > 0.0 ? incorrect_tolerance_mm : default_incorrect_tolerance(sim.spec);
  }

  void validate() const {
    sim.validate();
    scene.validate();
    pipeline.validate();
    if (!(controller_gain > 0.0)) throw ConfigError("control.gain must be positive");
    if (gen_frames == 0) throw ConfigError("gen.frames must be positive");
    if (path.kind == PathKind::Waypoints && path.waypoints.size() < 2)
      throw ConfigError("path.waypoints needs at least two points");
  }
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline std::vector<double> numbers(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    try {
      out.push_back(parse_double(tok));
    } catch (const IoError&) {
      throw ConfigError(key + ": '" + tok + "' is not a number");
    }
  }
  return out;
}

inline std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

inline std::vector<Vec2> parse_points(const std::string& s, const std::string& key) {
  std::vector<Vec2> out;
  for (const auto& item : split(s, ';')) {
    const auto v = numbers(item, key);
    if (v.size() != 2) throw ConfigError(key + ": each point needs 'x y'");
    out.emplace_back(v[0], v[1]);
  }
  return out;
}

inline std::string format_points(const std::vector<Vec2>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? "; " : "") + join_numbers({pts[i].x(), pts[i].y()});
  return s;
}

inline std::vector<Occluder> parse_occluders(const std::string& s, const std::string& key) {
  std::vector<Occluder> out;
  if (s == "none") return out;
  for (const auto& item : split(s, ';')) {
    std::istringstream in(item);
    std::string kind;
    in >> kind;
    std::string rest;
    std::getline(in, rest);
    const auto v = numbers(rest, key);
    if (kind == "disc" && v.size() == 3) {
      out.push_back(DiscOccluder{Vec2(v[0], v[1]), v[2]});
    } else if (kind == "ellipse" && v.size() == 5) {
      out.push_back(EllipseOccluder{Vec2(v[0], v[1]), Vec2(v[2], v[3]), v[4]});
    } else if (kind == "polygon" && v.size() >= 6 && v.size() % 2 == 0) {
      PolygonOccluder p;
      for (std::size_t i = 0; i < v.size(); i += 2) p.vertices_mm.emplace_back(v[i], v[i + 1]);
      out.push_back(p);
    } else {
      throw ConfigError(key + ": cannot parse occluder '" + item + "'");
    }
  }
  return out;
}

inline std::string format_occluders(const std::vector<Occluder>& occ) {
  if (occ.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (i) s += "; ";
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, DiscOccluder>) {
            s += "disc " + join_numbers({o.center_mm.x(), o.center_mm.y(), o.radius_mm});
          } else if constexpr (std::is_same_v<T, EllipseOccluder>) {
            s += "ellipse " + join_numbers({o.center_mm.x(), o.center_mm.y(), o.semi_axes_mm.x(), o.semi_axes_mm.y(),
                                            o.angle_rad});
          } else {
            std::vector<double> v;
            for (const auto& p : o.vertices_mm) { v.push_back(p.x()); v.push_back(p.y()); }
            s += "polygon " + join_numbers(v);
          }
        },
        occ[i]);
  }
  return s;
}

inline std::vector<ArtifactBar> parse_artifacts(const std::string& s, const std::string& key) {
  std::vector<ArtifactBar> out;
  if (s == "none") return out;
  for (const auto& item : split(s, ';')) {
    const auto v = numbers(item, key);
    if (v.size() != 5) throw ConfigError(key + ": each artifact needs 'x_mm y_mm angle_rad length_px width_px'");
    out.push_back(ArtifactBar{Vec2(v[0], v[1]), v[2], v[3], v[4]});
  }
  return out;
}

inline std::string format_artifacts(const std::vector<ArtifactBar>& a) {
  if (a.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += (i ? "; " : "") + join_numbers({a[i].center_mm.x(), a[i].center_mm.y(), a[i].angle_rad, a[i].length_px,
                                         a[i].width_px});
  return s;
}

/// One schema entry: parse from text into the config, and print it back.
struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
T parse_scalar(const std::string& key, const std::string& v) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw ConfigError(key + ": expected true/false, got '" + v + "'");
    } else if constexpr (std::is_integral_v<T>) {
      std::size_t pos = 0;
      const unsigned long long x = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return static_cast<T>(x);
    } else {
      return parse_double(v);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse '" + v + "'");
  }
}

template <typename T>
std::string print_scalar(const T& v) {
  if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
  else if constexpr (std::is_integral_v<T>) return std::to_string(v);
  else return format_double(v);
}

/// Binds a key to a scalar member reached through `access`.
template <typename T, typename Access>
Field scalar_field(std::string key, Access access) {
  return Field{key,
               [key, access](ExperimentConfig& c, const std::string& v) { access(c) = parse_scalar<T>(key, v); },
               [access](const ExperimentConfig& c) {
                 return print_scalar<T>(access(const_cast<ExperimentConfig&>(c)));
               }};
}

#define MAGSUTURE_FIELD(T, key, member) \
  scalar_field<T>(key, [](ExperimentConfig& c) -> T& { return c.member; })

inline const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(MAGSUTURE_FIELD(std::uint64_t, "seed", seed));
    f.push_back({"output_dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
                 [](const ExperimentConfig& c) { return c.output_dir; }});
    // sim
    f.push_back(MAGSUTURE_FIELD(double, "sim.dt_s", sim.dt_s));
    f.push_back(MAGSUTURE_FIELD(double, "sim.duration_s", sim.duration_s));
    f.push_back({"sim.friction",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "none") c.sim.friction.kind = FrictionKind::None;
                   else if (v == "coulomb") c.sim.friction.kind = FrictionKind::Coulomb;
                   else throw ConfigError("sim.friction: expected none|coulomb, got '" + v + "'");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.sim.friction.kind == FrictionKind::None ? "none" : "coulomb");
                 }});
    f.push_back(MAGSUTURE_FIELD(double, "sim.friction.v_static_threshold_mm_s", sim.friction.v_static_threshold_mm_s));
    f.push_back(MAGSUTURE_FIELD(double, "sim.friction.drag_scale", sim.friction.drag_scale));
    f.push_back(MAGSUTURE_FIELD(double, "sim.i_max_a", sim.allocation.i_max));
    f.push_back(MAGSUTURE_FIELD(double, "sim.lambda", sim.allocation.lambda));
    f.push_back(MAGSUTURE_FIELD(double, "sim.max_condition", sim.allocation.max_condition));
    f.push_back({"sim.no_detection",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "hold") c.sim.no_detection = NoDetectionPolicy::HoldCurrents;
                   else if (v == "zero") c.sim.no_detection = NoDetectionPolicy::ZeroCurrents;
                   else throw ConfigError("sim.no_detection: expected hold|zero, got '" + v + "'");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.sim.no_detection == NoDetectionPolicy::HoldCurrents ? "hold" : "zero");
                 }});
    f.push_back({"sim.vision",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "perfect") c.vision = VisionKind::Perfect;
                   else if (v == "synthetic") c.vision = VisionKind::Synthetic;
                   else throw ConfigError("sim.vision: expected perfect|synthetic, got '" + v + "'");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.vision == VisionKind::Perfect ? "perfect" : "synthetic");
                 }});
    // dish (working 512 x 512 image)
    f.push_back(MAGSUTURE_FIELD(double, "dish.center_x_px", sim.dish.center_px.x()));
    f.push_back(MAGSUTURE_FIELD(double, "dish.center_y_px", sim.dish.center_px.y()));
    f.push_back(MAGSUTURE_FIELD(double, "dish.radius_px", sim.dish.radius_px));
    f.push_back(MAGSUTURE_FIELD(double, "dish.radius_mm", sim.dish.radius_mm));
    // needle
    f.push_back(MAGSUTURE_FIELD(double, "needle.length_mm", sim.spec.length_mm));
    f.push_back(MAGSUTURE_FIELD(double, "needle.width_mm", sim.spec.width_mm));
    f.push_back(MAGSUTURE_FIELD(double, "needle.magnetic_moment", sim.spec.magnetic_moment));
    f.push_back(MAGSUTURE_FIELD(double, "needle.mask_width_px", pipeline.needle_width_px));
    // coils
    for (int k = 0; k < 4; ++k) {
      const std::string p = "coils." + std::to_string(k + 1);
      f.push_back(scalar_field<double>(p + ".x_mm", [k](ExperimentConfig& c) -> double& {
        return c.sim.coils.coils[static_cast<std::size_t>(k)].center_mm.x();
      }));
      f.push_back(scalar_field<double>(p + ".y_mm", [k](ExperimentConfig& c) -> double& {
        return c.sim.coils.coils[static_cast<std::size_t>(k)].center_mm.y();
      }));
      f.push_back(scalar_field<double>(p + ".magnet_constant", [k](ExperimentConfig& c) -> double& {
        return c.sim.coils.coils[static_cast<std::size_t>(k)].magnet_constant;
      }));
    }
    f.push_back(MAGSUTURE_FIELD(double, "drag.c_t", sim.drag.c_t));
    f.push_back(MAGSUTURE_FIELD(double, "drag.c_r", sim.drag.c_r));
    // control and path
    f.push_back(MAGSUTURE_FIELD(double, "control.gain", controller_gain));
    f.push_back({"path.type",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "running_suture") c.path.kind = PathKind::RunningSuture;
                   else if (v == "waypoints") c.path.kind = PathKind::Waypoints;
                   else throw ConfigError("path.type: expected running_suture|waypoints, got '" + v + "'");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.path.kind == PathKind::RunningSuture ? "running_suture" : "waypoints");
                 }});
    f.push_back(MAGSUTURE_FIELD(double, "path.v_des_mm_s", path.suture.v_des));
    f.push_back(MAGSUTURE_FIELD(double, "path.tissue_center_x_mm", path.suture.tissue_center.x()));
    f.push_back(MAGSUTURE_FIELD(double, "path.tissue_center_y_mm", path.suture.tissue_center.y()));
    f.push_back(MAGSUTURE_FIELD(double, "path.tissue_thickness_mm", path.suture.tissue_thickness_mm));
    f.push_back(MAGSUTURE_FIELD(int, "path.passes", path.suture.passes));
    f.push_back(MAGSUTURE_FIELD(double, "path.pitch_mm", path.suture.pitch_mm));
    f.push_back(MAGSUTURE_FIELD(double, "path.margin_mm", path.suture.margin_mm));
    f.push_back({"path.waypoints",
                 [](ExperimentConfig& c, const std::string& v) { c.path.waypoints = parse_points(v, "path.waypoints"); },
                 [](const ExperimentConfig& c) { return format_points(c.path.waypoints); }});
    // scene (scene.category is applied first, see load_experiment_config)
    f.push_back({"scene.category", [](ExperimentConfig&, const std::string&) {},
                 [](const ExperimentConfig& c) { return std::string(1, to_char(c.scene.category)); }});
    f.push_back({"scene.occluders",
                 [](ExperimentConfig& c, const std::string& v) { c.scene.occluders = parse_occluders(v, "scene.occluders"); },
                 [](const ExperimentConfig& c) { return format_occluders(c.scene.occluders); }});
    f.push_back({"scene.artifacts",
                 [](ExperimentConfig& c, const std::string& v) { c.scene.artifacts = parse_artifacts(v, "scene.artifacts"); },
                 [](const ExperimentConfig& c) { return format_artifacts(c.scene.artifacts); }});
    f.push_back(MAGSUTURE_FIELD(double, "scene.fp_rate", scene.noise.fp_rate));
    f.push_back(MAGSUTURE_FIELD(double, "scene.fn_rate", scene.noise.fn_rate));
    f.push_back(MAGSUTURE_FIELD(double, "scene.blood.mean_count", scene.blood.mean_count));
    f.push_back(MAGSUTURE_FIELD(double, "scene.blood.radius_min_mm", scene.blood.radius_min_mm));
    f.push_back(MAGSUTURE_FIELD(double, "scene.blood.radius_max_mm", scene.blood.radius_max_mm));
    f.push_back(MAGSUTURE_FIELD(double, "scene.bit_error.angle_up", scene.bit_errors.angle_up));
    f.push_back(MAGSUTURE_FIELD(double, "scene.bit_error.angle_left", scene.bit_errors.angle_left));
    f.push_back(MAGSUTURE_FIELD(double, "scene.bit_error.tip_visible", scene.bit_errors.tip_visible));
    f.push_back(MAGSUTURE_FIELD(double, "scene.bit_error.tail_visible", scene.bit_errors.tail_visible));
    // pipeline
    f.push_back(MAGSUTURE_FIELD(int, "pipeline.n_min", pipeline.n_min));
    f.push_back(MAGSUTURE_FIELD(double, "pipeline.bias_threshold", pipeline.bias_threshold));
    f.push_back(MAGSUTURE_FIELD(double, "pipeline.bias_alpha", pipeline.bias_alpha));
    f.push_back(MAGSUTURE_FIELD(double, "pipeline.dbscan_eps_px", pipeline.dbscan_eps_px));
    f.push_back(MAGSUTURE_FIELD(int, "pipeline.dbscan_min_pts", pipeline.dbscan_min_pts));
    f.push_back(MAGSUTURE_FIELD(int, "pipeline.ransac_iters", pipeline.ransac_iters));
    f.push_back(MAGSUTURE_FIELD(double, "pipeline.ransac_inlier_px", pipeline.ransac_inlier_px));
    f.push_back(MAGSUTURE_FIELD(double, "pipeline.merge_factor", pipeline.merge_factor));
    f.push_back(MAGSUTURE_FIELD(bool, "pipeline.flip_correction", pipeline.flip_correction));
    // metrics and corpus generation
    f.push_back(MAGSUTURE_FIELD(double, "metrics.incorrect_tolerance_mm", incorrect_tolerance_mm));
    f.push_back(MAGSUTURE_FIELD(std::size_t, "gen.frames", gen_frames));
    f.push_back({"gen.poses",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "random") c.gen_poses = PoseSampling::Random;
                   else if (v == "path") c.gen_poses = PoseSampling::Path;
                   else throw ConfigError("gen.poses: expected random|path, got '" + v + "'");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.gen_poses == PoseSampling::Random ? "random" : "path");
                 }});
    return f;
  }();
  return fields;
}

#undef MAGSUTURE_FIELD

}  // namespace detail

/// Defaults: category A scene, perfect bits, 3-pass running suture.
inline ExperimentConfig default_experiment_config(SceneCategory category = SceneCategory::A) {
  ExperimentConfig c;
  c.scene = SceneConfig::preset(category, needle_length_px(c.sim.spec, c.sim.dish), c.pipeline.needle_width_px);
  return c;
}

/// Applies the category preset first, then every other key in schema order.
inline ExperimentConfig load_experiment_config(const KeyValueConfig& kv) {
  std::set<std::string> known;
  for (const auto& f : detail::schema()) known.insert(f.key);
  for (const auto& [k, v] : kv.values())
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");

  ExperimentConfig c;
  // Geometry keys first so the scene preset can scale artifact bars to the needle.
  for (const auto& f : detail::schema())
    if (kv.has(f.key) && (f.key.rfind("dish.", 0) == 0 || f.key.rfind("needle.", 0) == 0))
      f.set(c, kv.values().at(f.key));
  const SceneCategory cat =
      kv.has("scene.category") ? parse_category(kv.values().at("scene.category")) : SceneCategory::A;
  c.scene = SceneConfig::preset(cat, needle_length_px(c.sim.spec, c.sim.dish), c.pipeline.needle_width_px);
  for (const auto& f : detail::schema())
    if (kv.has(f.key)) f.set(c, kv.values().at(f.key));
  c.validate();
  return c;
}

inline std::string format_experiment_config(const ExperimentConfig& c) {
  std::string out = "# resolved configuration\n";
  for (const auto& f : detail::schema()) out += f.key + " = " + f.get(c) + "\n";
  return out;
}

}  // namespace magsuture
