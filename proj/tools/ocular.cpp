// ocular: command-line front end.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ocular/control_io.h"
#include "ocular/critic.h"
#include "ocular/demo_corpus.h"
#include "ocular/error.h"
#include "ocular/guidance.h"
#include "ocular/keypoint_io.h"
#include "ocular/metrics.h"
#include "ocular/pipeline.h"
#include "ocular/preview.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCriticFail = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> fps;
};

ocular::PipelineConfig load_config(const Globals& g) {
  ocular::PipelineConfig cfg;
  if (!g.config.empty()) {
    if (!fs::exists(g.config)) throw ocular::Error("config not found: " + g.config);
    cfg = ocular::load_pipeline_config(g.config);
  }
  if (g.seed) cfg.seed = g.seed;
  if (g.fps) {
    if (!(*g.fps > 0.0)) throw ocular::Error("--fps must be positive");
    cfg.fps = *g.fps;
  }
  return cfg;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// --- build-lib ---------------------------------------------------------------

struct BuildLibArgs {
  std::string trace_dir;
  std::string out;
  bool demo = false;
  std::string write_traces;
};

int cmd_build_lib(const BuildLibArgs& a, const Globals& g) {
  const auto cfg = load_config(g);
  std::vector<ocular::PrototypeRecord> records;
  if (a.demo) {
    records = ocular::demo_records(cfg.templates, ocular::default_deformation_model(), cfg.fps);
    if (!a.write_traces.empty()) ocular::write_trace_dir(records, a.write_traces);
  } else {
    if (a.trace_dir.empty()) throw ocular::Error("build-lib needs a trace directory or --demo");
    records = ocular::read_trace_dir(a.trace_dir);
  }
  const auto lib = ocular::build_library(std::move(records));
  if (!a.out.empty()) {
    if (const auto parent = fs::path(a.out).parent_path(); !parent.empty()) fs::create_directories(parent);
    ocular::save_library(lib, a.out);
  }
  std::cout << "prototypes: " << lib.size() << ", labels: " << lib.index().size() << "\n";
  return kExitOk;
}

// --- compile -----------------------------------------------------------------

struct CompileArgs {
  std::string label;
  std::optional<int> frames;
  std::optional<double> duration;
  std::optional<double> audio_duration;
  std::string instructions;
  std::vector<double> pose;
  std::string library;
  std::string out = "out";
};

int cmd_compile(const CompileArgs& a, const Globals& g) {
  const auto cfg = load_config(g);
  if (!cfg.templates.contains(a.label)) {
    std::string msg = "unknown label '" + a.label + "'; supported:";
    for (const auto& [name, t] : cfg.templates) msg += " " + name;
    throw ocular::Error(msg);
  }
  ocular::CompileRequest req;
  req.label = a.label;
  if (a.frames) {
    req.total_frames = *a.frames;
  } else if (a.duration || a.audio_duration) {
    req.total_frames = ocular::frames_for_duration(a.duration ? *a.duration : *a.audio_duration, cfg.fps);
  } else {
    throw ocular::Error("give --frames, --duration or --audio-duration");
  }
  if (!a.instructions.empty()) req.instructions = a.instructions;
  if (!a.pose.empty()) {
    if (a.pose.size() != 3) throw ocular::Error("--pose takes yaw,pitch,roll");
    req.initial_pose = {a.pose[0], a.pose[1], a.pose[2]};
  }
  ocular::PrototypeLibrary lib;
  if (a.library.empty()) {
    lib = ocular::demo_library(cfg.templates);
  } else {
    if (!fs::exists(a.library)) throw ocular::Error("library not found: " + a.library);
    lib = ocular::load_library(a.library);
  }
  const auto result = ocular::compile(req, lib, cfg);
  ocular::write_compile_outputs(result, a.out);
  std::cout << "verdict: " << ocular::verdict_name(result.refined.verdict)
            << ", frames: " << result.refined.controls.size()
            << ", composition revisions: " << result.refined.composition_revisions
            << ", replans: " << result.refined.replans << "\n";
  if (!result.passed()) {
    for (const auto& id : result.refined.report.failed_ids()) std::cout << "  failed: " << id << "\n";
    return kExitCriticFail;
  }
  return kExitOk;
}

// --- validate ----------------------------------------------------------------

struct ValidateArgs {
  std::string controls;
  std::string plan;
  std::string instructions;
};

int cmd_validate(const ValidateArgs& a, const Globals& g) {
  const auto cfg = load_config(g);
  const auto seq = ocular::load_controls(a.controls, cfg.fps);
  ocular::CriticReport report;
  if (a.plan.empty()) {
    ocular::Plan p;
    p.total_frames = static_cast<int>(seq.size());
    p.fps = seq.fps;
    p.events.push_back({1, std::max(1, p.total_frames), "whole clip", {}, {}});
    report = ocular::check_physiology(seq, p, cfg.rules, cfg.limits);
  } else {
    const auto p = ocular::decode_agent_plan(ocular::read_text_file(a.plan), cfg.limits);
    report = ocular::critique(seq, p, a.instructions, cfg.rules, cfg.templates, cfg.limits);
  }
  std::cout << ocular::report_to_json(report);
  return report.passed() ? kExitOk : kExitCriticFail;
}

// --- map ---------------------------------------------------------------------

struct MapArgs {
  std::string controls;
  std::string out = "keypoints.json";
  bool points3d = false;
};

int cmd_map(const MapArgs& a, const Globals& g) {
  const auto cfg = load_config(g);
  const auto seq = ocular::load_controls(a.controls, cfg.fps);
  const auto mapped = ocular::map_sequence(seq, ocular::default_deformation_model());
  if (a.points3d) {
    ocular::save_keypoints3d(mapped.points, a.out);
  } else {
    ocular::save_keypoints(mapped.keypoints, a.out);
  }
  std::cout << "frames: " << seq.size() << "\n";
  return kExitOk;
}

// --- guidance ----------------------------------------------------------------

struct GuidanceArgs {
  std::string keypoints;
  std::string out = "guidance.ogf1";
  std::size_t frame = 1;
  std::size_t height = 64;
  std::size_t width = 64;
};

int cmd_guidance(const GuidanceArgs& a, const Globals& g) {
  const auto cfg = load_config(g);
  const auto kp = ocular::load_keypoints(a.keypoints);
  if (a.frame < 1 || a.frame > kp.size()) {
    throw ocular::Error("--frame out of range (1.." + std::to_string(kp.size()) + ")");
  }
  const ocular::GridDims dims{a.height, a.width};
  const auto geom = ocular::eye_geometry(kp.frames[a.frame - 1], dims);
  const auto fields = ocular::guidance_schedule(dims, geom, cfg.guidance);
  ocular::save_ogf1(fields, a.out);

  json summary;
  summary["file"] = a.out;
  summary["height"] = dims.height;
  summary["width"] = dims.width;
  summary["steps"] = fields.size();
  summary["eye_center"] = {geom.center.x, geom.center.y};
  summary["eye_distance"] = geom.distance;
  json steps = json::array();
  for (const auto& f : fields) {
    double mx = f.values.front(), mn = mx;
    for (double v : f.values) {
      mx = std::max(mx, v);
      mn = std::min(mn, v);
    }
    steps.push_back({{"rho", f.rho}, {"omega_t", ocular::temporal_weight(f.rho, cfg.guidance)},
                     {"max", mx}, {"min", mn}});
  }
  summary["fields"] = std::move(steps);
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string metrics;
  std::string label;
};

int cmd_eval(const EvalArgs& a, const Globals& g) {
  const auto cfg = load_config(g);
  ocular::MetricConfig mc = cfg.metrics;
  if (!a.metrics.empty()) mc = ocular::metric_config_from_json(ocular::read_text_file(a.metrics), mc);
  const bool csv = has_suffix(a.pred, ".csv");
  if (csv != has_suffix(a.gt, ".csv")) throw ocular::Error("pred and gt must both be CSV or both keypoint JSON");

  json report;
  ocular::KeypointSequence pk, gk;
  if (csv) {
    const auto ps = ocular::load_controls(a.pred, cfg.fps);
    const auto gs = ocular::load_controls(a.gt, cfg.fps);
    const auto pt = ocular::au_trace(ps), gtt = ocular::au_trace(gs);
    const auto f1 = ocular::au_f1(pt, gtt, mc);
    report["au_f1"] = {{"P", f1.precision}, {"R", f1.recall}, {"F1", f1.f1}};
    report["au_temp"] = a.label.empty() ? json(nullptr) : json(ocular::au_temp(pt, gtt, a.label, mc));
    const auto& model = ocular::default_deformation_model();
    pk = ocular::map_sequence(ps, model).keypoints;
    gk = ocular::map_sequence(gs, model).keypoints;
  } else {
    report["au_f1"] = nullptr;
    report["au_temp"] = nullptr;
    pk = ocular::load_keypoints(a.pred);
    gk = ocular::load_keypoints(a.gt);
  }
  report["eye_lmd"] = ocular::eye_lmd(pk, gk);
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

// --- preview -----------------------------------------------------------------

struct PreviewArgs {
  std::string keypoints;
  std::string out = "preview";
  ocular::PreviewOptions options;
};

int cmd_preview(const PreviewArgs& a, const Globals& g) {
  load_config(g);
  const auto kp = ocular::load_keypoints(a.keypoints);
  const auto n = ocular::write_preview(kp, a.out, a.options);
  std::cout << "wrote " << n << " files to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ocular: eye-behaviour planning, composition and checking"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Pipeline config JSON");
  app.add_option("--seed", g.seed, "Retrieval seed (picks among top-k hits)");
  app.add_option("--fps", g.fps, "Frame rate");

  BuildLibArgs bl;
  auto* build = app.add_subcommand("build-lib", "Build a prototype library from a trace directory");
  build->add_option("trace_dir", bl.trace_dir, "Directory of <stem>.kp.json / .meta.json [/ .csv]");
  build->add_option("-o,--out", bl.out, "Library JSON to write");
  build->add_flag("--demo", bl.demo, "Use the procedural demo corpus");
  build->add_option("--write-traces", bl.write_traces, "With --demo, also write the traces here");

  CompileArgs ca;
  auto* comp = app.add_subcommand("compile", "Plan, compose and refine a clip");
  comp->add_option("--label", ca.label, "Behaviour category")->required();
  auto* fr = comp->add_option("--frames", ca.frames, "Clip length in frames");
  auto* du = comp->add_option("--duration", ca.duration, "Clip length in seconds");
  auto* ad = comp->add_option("--audio-duration", ca.audio_duration, "Driving audio length in seconds");
  fr->excludes(du)->excludes(ad);
  du->excludes(ad);
  comp->add_option("--instructions", ca.instructions, "Free-text instructions");
  comp->add_option("--pose", ca.pose, "Initial yaw,pitch,roll in degrees")->delimiter(',')->expected(3);
  comp->add_option("--library", ca.library, "Library JSON (default: built-in demo library)");
  comp->add_option("-o,--out", ca.out, "Output directory");

  ValidateArgs va;
  auto* val = app.add_subcommand("validate", "Run the critic on a control CSV");
  val->add_option("controls", va.controls, "Control CSV")->required();
  val->add_option("--plan", va.plan, "Plan JSON for semantic checks");
  val->add_option("--instructions", va.instructions, "Instructions the plan was built from");

  MapArgs ma;
  auto* map = app.add_subcommand("map", "Map a control CSV to keypoints");
  map->add_option("controls", ma.controls, "Control CSV")->required();
  map->add_option("-o,--out", ma.out, "Keypoint JSON to write");
  map->add_flag("--3d", ma.points3d, "Write rotated 3-D points instead of projections");

  GuidanceArgs ga;
  auto* guid = app.add_subcommand("guidance", "Export the guidance schedule as OGF1");
  guid->add_option("keypoints", ga.keypoints, "Keypoint JSON")->required();
  guid->add_option("-o,--out", ga.out, "OGF1 file to write");
  guid->add_option("--frame", ga.frame, "1-based frame giving the eye geometry");
  guid->add_option("--height", ga.height, "Latent grid height");
  guid->add_option("--width", ga.width, "Latent grid width");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Compare a prediction with ground truth");
  ev->add_option("pred", ea.pred, "Predicted CSV or keypoint JSON")->required();
  ev->add_option("gt", ea.gt, "Ground-truth CSV or keypoint JSON")->required();
  ev->add_option("--metrics", ea.metrics, "Metric config JSON");
  ev->add_option("--label", ea.label, "Category for AU-Temp");

  PreviewArgs pa;
  auto* prev = app.add_subcommand("preview", "Render keypoint frames as SVG");
  prev->add_option("keypoints", pa.keypoints, "Keypoint JSON")->required();
  prev->add_option("-o,--out", pa.out, "Output directory");
  prev->add_option("--size", pa.options.size, "Frame size in pixels");
  prev->add_option("--columns", pa.options.sheet_columns, "Contact sheet columns");
  prev->add_option("--stride", pa.options.sheet_stride, "Contact sheet frame stride");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    if (*build) return cmd_build_lib(bl, g);
    if (*comp) return cmd_compile(ca, g);
    if (*val) return cmd_validate(va, g);
    if (*map) return cmd_map(ma, g);
    if (*guid) return cmd_guidance(ga, g);
    if (*ev) return cmd_eval(ea, g);
    if (*prev) return cmd_preview(pa, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
