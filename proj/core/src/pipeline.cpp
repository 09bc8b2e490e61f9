#include "ocular/pipeline.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "json_util.h"
#include "ocular/control_io.h"
#include "ocular/error.h"
#include "ocular/keypoint_io.h"

namespace ocular {

using detail::json;

namespace {

double positive(const json& j, const std::string& path) {
  const double v = detail::require_number(j, path);
  if (!(v > 0.0) || !std::isfinite(v)) throw ParseError(path + ": must be positive");
  return v;
}

int non_negative_int(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ParseError(path + ": expected a non-negative integer");
  }
  return j.get<int>();
}

void read_weights(const json& j, ChannelVector& w) {
  if (!j.is_object()) throw ParseError("$.weights: expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = "$.weights." + key;
    const double v = detail::require_number(value, path);
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParseError(path + ": must be non-negative");
    if (key == "au" || key == "gaze" || key == "head") {
      const ChannelKind kind = key == "au" ? ChannelKind::Au
                               : key == "gaze" ? ChannelKind::Gaze
                                               : ChannelKind::Head;
      for (std::size_t k = 0; k < kChannelCount; ++k) {
        if (channel_kind(k) == kind) w[k] = v;
      }
    } else if (const auto ch = channel_from_name(key)) {
      w[index_of(*ch)] = v;
    } else {
      throw ParseError(path + ": unknown channel");
    }
  }
}

void read_guidance(const json& j, GuidanceParams& g) {
  if (!j.is_object()) throw ParseError("$.guidance: expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = "$.guidance." + key;
    if (key == "steps") {
      g.steps = static_cast<std::size_t>(non_negative_int(value, path));
      continue;
    }
    const double v = detail::require_number(value, path);
    if (key == "omega_hi") g.omega_hi = v;
    else if (key == "omega_lo") g.omega_lo = v;
    else if (key == "omega_bg") g.omega_bg = v;
    else if (key == "alpha") g.alpha = v;
    else if (key == "gamma") g.gamma = v;
    else if (key == "kappa") g.kappa = v;
    else throw ParseError(path + ": unknown parameter");
  }
  try {
    g.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("$.guidance: ") + e.what());
  }
}

}  // namespace

PipelineConfig pipeline_config_from_json(std::string_view text, const std::filesystem::path& base_dir) {
  const json j = detail::parse_json(text, "config");
  if (!j.is_object()) throw ParseError("$: expected an object");
  PipelineConfig cfg;
  static const std::set<std::string> known = {"fps",      "seed",  "blend_frames", "top_k",
                                              "weights",  "rules", "templates",    "head_limits",
                                              "refine",   "guidance", "metrics"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ParseError("$." + key + ": unknown section");
  }
  if (j.contains("fps")) cfg.fps = positive(j["fps"], "$.fps");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ParseError("$.seed: expected a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("blend_frames")) cfg.compose.blend_frames = non_negative_int(j["blend_frames"], "$.blend_frames");
  if (j.contains("top_k")) {
    cfg.compose.top_k = static_cast<std::size_t>(non_negative_int(j["top_k"], "$.top_k"));
    if (cfg.compose.top_k == 0) throw ParseError("$.top_k: must be at least 1");
  }
  if (j.contains("weights")) read_weights(j["weights"], cfg.compose.weights);
  if (j.contains("head_limits")) {
    const json& h = j["head_limits"];
    if (!h.is_object()) throw ParseError("$.head_limits: expected an object");
    for (const auto& [key, value] : h.items()) {
      const double v = positive(value, "$.head_limits." + key);
      if (key == "yaw") cfg.limits.yaw = v;
      else if (key == "pitch") cfg.limits.pitch = v;
      else if (key == "roll") cfg.limits.roll = v;
      else throw ParseError("$.head_limits." + key + ": unknown axis");
    }
  }
  cfg.compose.limits = cfg.limits;
  if (j.contains("rules")) cfg.rules = rules_from_json(json{{"rules", j["rules"]}}.dump());
  if (j.contains("templates")) {
    const json& t = j["templates"];
    if (t.is_string()) {
      const auto path = base_dir / t.get<std::string>();
      if (!std::filesystem::exists(path)) throw ParseError("$.templates: file not found: " + path.string());
      cfg.templates = templates_from_json(read_text_file(path));
    } else {
      cfg.templates = templates_from_json(t.dump());
    }
  }
  if (j.contains("refine")) {
    const json& r = j["refine"];
    if (!r.is_object()) throw ParseError("$.refine: expected an object");
    for (const auto& [key, value] : r.items()) {
      const int v = non_negative_int(value, "$.refine." + key);
      if (key == "max_comp_revisions") cfg.max_comp_revisions = v;
      else if (key == "max_replans") cfg.max_replans = v;
      else throw ParseError("$.refine." + key + ": unknown parameter");
    }
  }
  if (j.contains("guidance")) read_guidance(j["guidance"], cfg.guidance);
  cfg.metrics = default_metric_config(cfg.templates);
  if (j.contains("metrics")) cfg.metrics = metric_config_from_json(j["metrics"].dump(), cfg.metrics);
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return pipeline_config_from_json(read_text_file(path), path.parent_path());
}

CompileResult compile(const CompileRequest& request, const PrototypeLibrary& lib,
                      const PipelineConfig& config) {
  if (request.total_frames < 1) throw Error("frame count must be at least 1");
  CompileResult out;
  const std::optional<std::string_view> instr =
      request.instructions ? std::optional<std::string_view>(*request.instructions) : std::nullopt;
  out.plan = plan(request.label, request.total_frames, config.fps, instr, request.initial_pose,
                  config.templates, config.limits);

  ComposeOptions copts = config.compose;
  copts.seed = config.seed;
  copts.limits = config.limits;
  out.initial_controls = compose(out.plan, lib, request.initial_pose, copts);

  RefineOptions ropts;
  ropts.max_comp_revisions = config.max_comp_revisions;
  ropts.max_replans = config.max_replans;
  ropts.initial_pose = request.initial_pose;
  ropts.compose = copts;
  ropts.templates = &config.templates;
  out.refined = refine(out.initial_controls, out.plan, request.instructions.value_or(""), lib,
                       config.rules, ropts);
  out.keypoints = map_sequence(out.refined.controls, default_deformation_model()).keypoints;
  return out;
}

void write_compile_outputs(const CompileResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "plan.json", plan_to_json(result.refined.plan));
  write_text_file(dir / "controls_initial.csv", controls_to_csv(result.initial_controls));
  save_controls(result.refined.controls, dir / "controls.csv");
  save_keypoints(result.keypoints, dir / "keypoints.json");
  write_text_file(dir / "critic.json", refine_to_json(result.refined));
}

int frames_for_duration(double seconds, double fps) {
  if (!(seconds > 0.0) || !std::isfinite(seconds)) throw Error("duration must be positive");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw Error("fps must be positive");
  return std::max(1, static_cast<int>(std::lround(seconds * fps)));
}

}  // namespace ocular
