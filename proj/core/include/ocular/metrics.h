#pragma once

// AU activation F1, DTW-based AU temporal fidelity and eye-landmark distance.

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocular/control.h"
#include "ocular/mapper.h"
#include "ocular/planner.h"

namespace ocular {

/// Per-AU trajectories over a named roster.
struct AuTrace {
  std::vector<std::string> names;
  std::vector<std::vector<double>> tracks;

  std::size_t length() const { return tracks.empty() ? 0 : tracks.front().size(); }
  const std::vector<double>* find(std::string_view name) const;
};

/// The ten AU channels of a control sequence.
AuTrace au_trace(const ControlSequence& seq);

struct MetricConfig {
  double default_tau = 0.1;
  std::map<std::string, double, std::less<>> tau;
  std::map<std::string, std::vector<std::string>, std::less<>> target_sets;
  /// Per-AU Z_u; missing entries use the sequence length times 1.0.
  std::map<std::string, double, std::less<>> z;

  double tau_for(std::string_view au) const;
  double z_for(std::string_view au, std::size_t length) const;
};

/// Target sets are the AU channels each template drives above zero.
MetricConfig default_metric_config(const TemplateTable& templates = default_templates());
/// {"tau": num | {AU: num}, "target_sets": {category: [AU..]}, "z": {AU: num}}
/// over the defaults.
MetricConfig metric_config_from_json(std::string_view text,
                                     const MetricConfig& base = default_metric_config());

/// Classic DTW with |a_i - b_j| cost and steps (1,0), (0,1), (1,1). Throws on
/// empty input.
double dtw(std::span<const double> a, std::span<const double> b);

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Activation = max_t > tau_u, compared over the AUs of the ground-truth
/// roster (matched by name). Throws when pred lacks a roster AU.
F1Score au_f1(const AuTrace& pred, const AuTrace& gt, const MetricConfig& cfg = default_metric_config());

/// 1 - mean_u DTW(pred_u, gt_u) / Z_u over the category's target set,
/// unclamped. Throws on an unknown category or an empty set.
double au_temp_raw(const AuTrace& pred, const AuTrace& gt, std::string_view category,
                   const MetricConfig& cfg = default_metric_config());
/// au_temp_raw clamped below at 0.
double au_temp(const AuTrace& pred, const AuTrace& gt, std::string_view category,
               const MetricConfig& cfg = default_metric_config());

/// Mean 2-D point distance normalised per frame by the ground-truth
/// inter-pupil distance. Throws on a length mismatch or zero distance.
double eye_lmd(const KeypointSequence& pred, const KeypointSequence& gt);

}  // namespace ocular
