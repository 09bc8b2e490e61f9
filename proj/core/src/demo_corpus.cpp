#include "ocular/demo_corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json_util.h"
#include "ocular/control_io.h"
#include "ocular/error.h"
#include "ocular/keypoint_io.h"

namespace ocular {

using detail::json;

namespace {

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

/// Normalised activation profile in [0, 1] at progress u.
double profile(double u, int variant, bool closure) {
  if (closure) {
    // Lid closure: open, a held closed phase, open again.
    const double in = variant == 0 ? 0.20 : 0.25;
    const double out = variant == 0 ? 0.65 : 0.60;
    return smoothstep((u - in) / 0.15) * (1.0 - smoothstep((u - out) / 0.15));
  }
  if (variant == 0) return smoothstep(u / 0.35);  // rise and hold
  // Rise, peak, partial release.
  return smoothstep(u / 0.45) * (1.0 - 0.35 * smoothstep((u - 0.7) / 0.3));
}

ControlSequence stage_controls(const StageTemplate& st, int variant, double fps) {
  const std::size_t len = variant == 0 ? 20 : 30;
  ControlSequence seq;
  seq.fps = fps;
  seq.frames.resize(len);
  const bool prolonged = st.exemptions.contains(exemption::kProlongedBlink);
  for (const auto& [ch, iv] : st.targets) {
    const bool closure = prolonged && (ch == Channel::AU43_L || ch == Channel::AU43_R);
    for (std::size_t t = 0; t < len; ++t) {
      const double u = static_cast<double>(t) / static_cast<double>(len - 1);
      double v;
      if (channel_kind(ch) == ChannelKind::Head && iv.lo < 0.0 && iv.hi > 0.0) {
        // Stable pose: gentle sway inside the band.
        v = iv.mid() + 0.25 * (iv.hi - iv.lo) * std::sin(2.0 * kPi * u + variant);
      } else if (iv.hi <= 0.0 && iv.lo < 0.0) {
        v = iv.hi + (iv.lo - iv.hi) * profile(u, variant, false);
      } else {
        v = iv.lo + (iv.hi - iv.lo) * profile(u, variant, closure);
      }
      seq[t][ch] = v;
    }
  }
  sanitize_sequence(seq);
  return seq;
}

std::string stem_for(std::size_t i, const std::string& label) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return std::string(buf) + "_" + label;
}

}  // namespace

std::vector<PrototypeRecord> demo_records(const TemplateTable& templates,
                                          const DeformationModel& model, double fps) {
  std::vector<PrototypeRecord> out;
  for (const auto& [label, ct] : templates) {
    for (const auto& st : ct.stages) {
      for (int v = 0; v < kDemoVariants; ++v) {
        PrototypeRecord r;
        r.label = label;
        r.controls = stage_controls(st, v, fps);
        r.keypoints = map_sequence(r.controls, model).points;
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

PrototypeLibrary demo_library(const TemplateTable& templates, const DeformationModel& model) {
  return build_library(demo_records(templates, model));
}

void write_trace_dir(const std::vector<PrototypeRecord>& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string stem = stem_for(i, r.label);
    write_text_file(dir / (stem + ".csv"), controls_to_csv(r.controls));
    json meta;
    meta["fps"] = r.controls.fps;
    meta["version"] = 1;
    meta["label"] = r.label;
    write_text_file(dir / (stem + ".meta.json"), meta.dump() + "\n");
    save_keypoints3d(r.keypoints, dir / (stem + ".kp.json"));
  }
}

std::vector<PrototypeRecord> read_trace_dir(const std::filesystem::path& dir,
                                            const DeformationModel& model) {
  if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<std::string> stems;
  const std::string suffix = ".kp.json";
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      stems.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(stems.begin(), stems.end());
  const NeutralBaseline baseline = neutral_baseline(model);

  std::vector<PrototypeRecord> out;
  for (const auto& stem : stems) {
    const auto meta_path = dir / (stem + ".meta.json");
    if (!std::filesystem::exists(meta_path)) throw Error(stem + ": missing " + meta_path.filename().string());
    const json meta = detail::parse_json(read_text_file(meta_path), meta_path.string());
    const json& label = detail::require(meta, "label", meta_path.filename().string());
    if (!label.is_string()) throw ParseError(meta_path.string() + ": label must be a string");

    PrototypeRecord r;
    r.label = label.get<std::string>();
    r.keypoints = load_keypoints3d(dir / (stem + ".kp.json"));
    const auto csv = dir / (stem + ".csv");
    if (std::filesystem::exists(csv)) {
      r.controls = load_controls(csv, r.keypoints.fps);
    } else {
      try {
        r.controls = invert_controls(r.keypoints, baseline, model);
      } catch (const Error& e) {
        throw Error(stem + ": " + e.what());
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ocular
