#pragma once

// Critic: physiological and semantic checks over a composed control
// sequence, and the bounded revision loop.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ocular/composer.h"
#include "ocular/control.h"
#include "ocular/planner.h"
#include "ocular/prototype_library.h"

namespace ocular {

namespace check_id {
inline constexpr std::string_view kBlinkDuration = "blink_duration";
inline constexpr std::string_view kInterBlink = "inter_blink_interval";
inline constexpr std::string_view kBlinkAsymmetry = "blink_asymmetry";
inline constexpr std::string_view kCoactivation = "au_coactivation";
inline constexpr std::string_view kMainSequence = "gaze_main_sequence";
inline constexpr std::string_view kGazeHead = "gaze_head_coordination";
inline constexpr std::string_view kControlBounds = "control_bounds";
inline constexpr std::string_view kTarget = "semantic_target";
inline constexpr std::string_view kOrder = "semantic_order";
inline constexpr std::string_view kInstruction = "semantic_instruction";
inline constexpr std::string_view kLabel = "semantic_label";
}  // namespace check_id

/// Every check id, physiological first.
const std::vector<std::string>& all_check_ids();

struct RuleSet {
  std::set<std::string, std::less<>> enabled = {all_check_ids().begin(), all_check_ids().end()};

  // blinks
  double blink_threshold = 0.5;
  double blink_min_ms = 100.0;
  double blink_max_ms = 500.0;
  double prolonged_blink_max_ms = 1500.0;
  double inter_blink_min_ms = 400.0;
  double asymmetry_max = 0.5;
  // co-activation
  double coactivation_threshold = 0.5;
  // gaze main sequence; the per-frame cap is stated at reference_fps
  double gaze_max_delta = 0.25;
  double gaze_reference_fps = 25.0;
  double gaze_peak_ratio = 0.3;
  double gaze_onset = 0.1;
  // gaze-head coordination
  double gaze_head_threshold = 0.5;
  double gaze_head_sustain_ms = 300.0;
  double gaze_head_min_deg = 2.0;
  double gaze_head_window_ms = 400.0;
  // semantics; slack is in unit scale (multiplied by channel_scale)
  double target_slack = 0.05;
  /// Frames after a seam still carry the previous event's cross-fade; target
  /// reach ignores this much of every event but the first.
  double transition_ms = 120.0;
  double active_threshold = 0.1;
  double head_active_deg = 2.0;

  bool is_enabled(std::string_view id) const { return enabled.contains(id); }
};

/// Reads {"rules": {rule_id: {"enabled": bool, param: value, ...}}} over the
/// defaults. Unknown rules or parameters and invalid values throw ParseError.
RuleSet rules_from_json(std::string_view text);
std::string rules_to_json(const RuleSet& rules);

enum class Verdict { Pass, ReviseComposition, RevisePlan, Fail };
std::string_view verdict_name(Verdict v);

struct ChannelEdit {
  std::string channel;
  std::string action;  // clamp_max, clamp_min, stretch, slew_limit, rescale, shrink_difference
  double value = 0.0;
};

struct CheckResult {
  std::string id;
  bool passed = true;
  int start_frame = 1;  // 1-based, inclusive
  int end_frame = 1;
  std::string message;
  std::vector<std::string> channels;
  /// Plan event the check refers to, when any.
  std::optional<std::size_t> event_index;
  std::vector<ChannelEdit> edits;
};

struct CriticReport {
  Verdict verdict = Verdict::Pass;
  std::vector<CheckResult> checks;

  bool passed() const;
  std::vector<const CheckResult*> failures() const;
  /// Ids of failing checks, in report order, without repeats.
  std::vector<std::string> failed_ids() const;
};

/// Six rule families plus control bounds. Throws when the sequence length
/// differs from plan.total_frames.
CriticReport check_physiology(const ControlSequence& seq, const Plan& plan,
                              const RuleSet& rules = {}, const HeadLimits& limits = {});

/// Target reach, event order, instruction satisfaction and label coverage.
CriticReport check_semantic(const ControlSequence& seq, const Plan& plan,
                            std::string_view instructions, const RuleSet& rules = {},
                            const TemplateTable& templates = default_templates(),
                            const HeadLimits& limits = {});

/// Both checks merged, with the verdict recomputed: failures of order,
/// instruction or label ask for a new plan, anything else for recomposition.
CriticReport critique(const ControlSequence& seq, const Plan& plan, std::string_view instructions,
                      const RuleSet& rules = {}, const TemplateTable& templates = default_templates(),
                      const HeadLimits& limits = {});

/// Applies the minimal edits suggested by a report's failing checks.
ControlSequence apply_repairs(const ControlSequence& seq, const Plan& plan,
                              const CriticReport& report, const RuleSet& rules = {},
                              const HeadLimits& limits = {});

/// Widens every target interval by level * slack * channel_scale, clipped
/// to the channel range.
Plan relax_plan(const Plan& plan, int level, const RuleSet& rules = {}, const HeadLimits& limits = {});

struct AuditEntry {
  int round = 0;
  std::string action;  // accept, revise_composition, revise_plan, fail
  std::vector<std::string> failed_checks;
};

struct RefineOptions {
  int max_comp_revisions = 3;
  int max_replans = 1;
  InitialPose initial_pose;
  ComposeOptions compose;
  const TemplateTable* templates = nullptr;  // defaults when null
};

struct RefineResult {
  ControlSequence controls;
  Plan plan;
  CriticReport report;  // last report
  Verdict verdict = Verdict::Pass;
  int composition_revisions = 0;
  int replans = 0;
  std::vector<AuditEntry> audit;
};

/// Check, repair, recompose. Runs at most max_comp_revisions + max_replans + 1
/// check rounds; composition revisions are spent before re-planning.
RefineResult refine(const ControlSequence& seq, const Plan& plan, std::string_view instructions,
                    const PrototypeLibrary& lib, const RuleSet& rules = {},
                    const RefineOptions& options = {});

std::string report_to_json(const CriticReport& report);
std::string refine_to_json(const RefineResult& result);

}  // namespace ocular
