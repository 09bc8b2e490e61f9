#pragma once

// End-to-end compile: plan, compose, refine, map; plus the shared config.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ocular/composer.h"
#include "ocular/critic.h"
#include "ocular/guidance.h"
#include "ocular/metrics.h"
#include "ocular/planner.h"
#include "ocular/prototype_library.h"

namespace ocular {

struct PipelineConfig {
  double fps = 25.0;
  std::optional<std::uint64_t> seed;
  ComposeOptions compose;
  RuleSet rules;
  GuidanceParams guidance;
  TemplateTable templates = default_templates();
  HeadLimits limits;
  int max_comp_revisions = 3;
  int max_replans = 1;
  MetricConfig metrics = default_metric_config();
};

/// Sections: fps, seed, blend_frames, top_k, weights {au, gaze, head} or
/// {channel: w}, rules, templates (inline object or path relative to
/// `base_dir`), head_limits {yaw, pitch, roll}, refine {max_comp_revisions,
/// max_replans}, guidance {...}, metrics {...}. Throws ParseError.
PipelineConfig pipeline_config_from_json(std::string_view text,
                                         const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct CompileRequest {
  std::string label;
  int total_frames = 0;
  std::optional<std::string> instructions;
  InitialPose initial_pose;
};

struct CompileResult {
  Plan plan;
  ControlSequence initial_controls;
  RefineResult refined;
  KeypointSequence keypoints;

  bool passed() const { return refined.verdict == Verdict::Pass; }
};

/// Throws ocular::Error for an unknown label or an empty library.
CompileResult compile(const CompileRequest& request, const PrototypeLibrary& lib,
                      const PipelineConfig& config = {});

/// Writes plan.json, controls_initial.csv, controls.csv (+ sidecar),
/// keypoints.json and critic.json into `dir`.
void write_compile_outputs(const CompileResult& result, const std::filesystem::path& dir);

/// Frames for a duration in seconds at `fps`, at least 1.
int frames_for_duration(double seconds, double fps);

}  // namespace ocular
