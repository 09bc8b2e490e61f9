#pragma once

// Staged-event planning. A plan splits [1, T] into contiguous events, each
// carrying per-channel target intervals and the rule exemptions it may use.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ocular/control.h"

namespace ocular {

struct TargetInterval {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
  friend bool operator==(const TargetInterval&, const TargetInterval&) = default;
};

using ChannelTargets = std::map<Channel, TargetInterval>;

namespace exemption {
/// Raises the blink-duration cap for intended long closures.
inline constexpr std::string_view kProlongedBlink = "prolonged_blink";
/// Permits one-sided closure (a wink).
inline constexpr std::string_view kWink = "wink";
inline constexpr std::string_view kInterBlinkInterval = "inter_blink_interval";
}  // namespace exemption

struct StagedEvent {
  int start_frame = 1;  // inclusive, 1-based
  int end_frame = 1;    // inclusive
  std::string semantics;
  ChannelTargets channel_targets;
  std::set<std::string, std::less<>> exemptions;

  int duration() const { return end_frame - start_frame + 1; }
  bool exempt(std::string_view rule) const { return exemptions.contains(rule); }
  friend bool operator==(const StagedEvent&, const StagedEvent&) = default;
};

struct Plan {
  std::string label;
  std::vector<StagedEvent> events;
  int total_frames = 0;
  double fps = 25.0;

  /// Index of the event covering 1-based `frame`, or -1.
  int event_at(int frame) const;
  friend bool operator==(const Plan&, const Plan&) = default;
};

struct InitialPose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  friend bool operator==(const InitialPose&, const InitialPose&) = default;
};

struct StageTemplate {
  std::string semantics;
  double ratio = 1.0;  // share of T
  ChannelTargets targets;
  std::set<std::string, std::less<>> exemptions;
};

struct CategoryTemplate {
  std::string label;
  std::vector<StageTemplate> stages;
  /// Channels a clip of this category is expected to activate.
  std::vector<Channel> required;
};

using TemplateTable = std::map<std::string, CategoryTemplate, std::less<>>;

/// The twelve built-in categories.
const TemplateTable& default_templates();

/// Template overrides: {"<label>": {"stages": [{"semantics", "ratio",
/// "targets": {channel: [lo, hi]}, "exemptions": [..]}], "required": [..]}}.
/// Entries replace or extend the defaults.
TemplateTable templates_from_json(std::string_view text, const TemplateTable& base = default_templates());
std::string templates_to_json(const TemplateTable& table);

/// One channel requirement implied by an instruction clause. Activate cues
/// need the channel to become active (head channels: move by `sign`);
/// Forbid cues need it to stay inactive.
struct InstructionCue {
  enum class Kind { Activate, Forbid };
  Kind kind = Kind::Activate;
  Channel channel = Channel::AU1;
  int sign = 1;
  std::size_t clause = 0;
};

/// Keyword cues over the closed vocabulary: left/right/up/down, head,
/// eyebrow, blink, squint, widen.
std::vector<InstructionCue> instruction_cues(std::string_view instructions);

/// Deterministic rule-based planner. Throws ocular::Error listing the
/// supported labels when `label` is unknown. When T is smaller than the
/// template's stage count the stages merge into one event.
Plan plan(std::string_view label, int total_frames, double fps,
          std::optional<std::string_view> instructions, const InitialPose& initial_pose,
          const TemplateTable& templates = default_templates(), const HeadLimits& limits = {});

/// Checks the partition and target-range invariants. Never throws.
ValidationReport validate_plan(const Plan& p, const HeadLimits& limits = {});

std::string plan_to_json(const Plan& p);
/// Request envelope for an external planner: the plan schema plus the
/// instructions and initial pose.
std::string plan_request_json(std::string_view label, int total_frames, double fps,
                              std::optional<std::string_view> instructions,
                              const InitialPose& initial_pose);
/// Parses and validates an agent plan. Throws ParseError with a field path.
Plan decode_agent_plan(std::string_view payload, const HeadLimits& limits = {});

}  // namespace ocular
