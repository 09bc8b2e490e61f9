#pragma once

// Twelve hand-built sequences, each carrying one injected violation. The
// first eight are physiological and fixable by local edits; the last four
// are semantic and ask for a new plan.

#include <string>
#include <vector>

#include "ocular/critic.h"
#include "ocular/planner.h"

namespace corpus {

using namespace ocular;

inline constexpr int kFrames = 50;

struct Case {
  std::string name;
  std::string expected_id;
  bool repairable = false;
  ControlSequence seq;
  Plan plan;
  std::string instructions;
};

/// Defaults plus "neutral", a one-stage category with no targets and no
/// required channels.
inline const TemplateTable& templates() {
  static const TemplateTable t = [] {
    TemplateTable out = default_templates();
    CategoryTemplate n;
    n.label = "neutral";
    StageTemplate s;
    s.semantics = "rest";
    n.stages = {s};
    out.emplace("neutral", n);
    return out;
  }();
  return t;
}

inline ControlSequence rest() {
  ControlSequence s;
  s.frames.resize(kFrames);
  return s;
}

inline Plan one_event(const std::string& label, ChannelTargets targets = {}) {
  Plan p;
  p.label = label;
  p.total_frames = kFrames;
  p.events = {{1, kFrames, "rest", std::move(targets), {}}};
  return p;
}

/// Sets `ch` to `v` on 1-based frames [a, b].
inline void fill(ControlSequence& s, Channel ch, int a, int b, double v) {
  for (int t = a; t <= b; ++t) s[static_cast<std::size_t>(t - 1)][ch] = v;
}

inline void blink(ControlSequence& s, int a, int b, double v = 1.0) {
  fill(s, Channel::AU43_L, a, b, v);
  fill(s, Channel::AU43_R, a, b, v);
}

/// Ramp 0 -> peak -> 0 with per-frame steps at most `step`.
inline void excursion(ControlSequence& s, Channel ch, int a, int b, double peak, double step) {
  for (int t = a; t <= b; ++t) {
    const double up = step * (t - a + 1), down = step * (b - t + 1);
    s[static_cast<std::size_t>(t - 1)][ch] = std::min({peak, up, down});
  }
}

inline std::vector<Case> build() {
  std::vector<Case> out;
  auto add = [&](std::string name, std::string_view id, bool repairable, ControlSequence seq, Plan plan,
                 std::string instr = {}) {
    out.push_back({std::move(name), std::string(id), repairable, std::move(seq), std::move(plan), std::move(instr)});
  };

  {  // 2 frames at 25 fps = 80 ms
    auto s = rest();
    blink(s, 20, 21);
    add("short blink", check_id::kBlinkDuration, true, s, one_event("neutral"));
  }
  {  // 15 frames = 600 ms
    auto s = rest();
    blink(s, 10, 24);
    add("long blink", check_id::kBlinkDuration, true, s, one_event("neutral"));
  }
  {  // gap of 3 frames = 120 ms
    auto s = rest();
    blink(s, 10, 13);
    blink(s, 17, 20);
    add("rapid double blink", check_id::kInterBlink, true, s, one_event("neutral"));
  }
  {
    auto s = rest();
    fill(s, Channel::AU43_L, 20, 30, 0.9);
    fill(s, Channel::AU43_R, 20, 30, 0.1);
    add("one-sided closure", check_id::kBlinkAsymmetry, true, s, one_event("neutral"));
  }
  {
    auto s = rest();
    fill(s, Channel::AU4_L, 10, 30, 0.8);
    fill(s, Channel::AU2_L, 10, 30, 0.7);
    add("brow lower and raise together", check_id::kCoactivation, true, s, one_event("neutral"));
  }
  {
    auto s = rest();
    fill(s, Channel::GazeLeft, 20, 30, 0.4);
    add("gaze jump", check_id::kMainSequence, true, s, one_event("neutral"));
  }
  {
    auto s = rest();
    excursion(s, Channel::GazeLeft, 10, 40, 0.7, 0.2);
    add("gaze held without head", check_id::kGazeHead, true, s, one_event("neutral"));
  }
  {  // closure and lid raise together, symmetric so only the pairing is wrong
    auto s = rest();
    blink(s, 20, 25, 0.8);
    fill(s, Channel::AU5_L, 20, 25, 0.8);
    fill(s, Channel::AU5_R, 20, 25, 0.8);
    add("lid raise during closure", check_id::kCoactivation, true, s, one_event("neutral"));
  }
  {
    auto s = rest();
    excursion(s, Channel::GazeLeft, 10, 40, 0.05, 0.01);
    add("target not reached", check_id::kTarget, false, s,
        one_event("neutral", {{Channel::GazeLeft, {0.15, 0.30}}}));
  }
  {
    auto s = rest();
    excursion(s, Channel::GazeLeft, 1, 25, 0.35, 0.1);
    excursion(s, Channel::AU4_L, 26, 50, 0.4, 0.1);
    Plan p = one_event("neutral");
    p.events = {{1, 25, "brow first", {{Channel::AU4_L, {0.3, 0.5}}}, {}},
                {26, 50, "then look left", {{Channel::GazeLeft, {0.25, 0.5}}}, {}}};
    add("events swapped", check_id::kOrder, false, s, p);
  }
  {
    auto s = rest();
    excursion(s, Channel::GazeRight, 10, 40, 0.3, 0.1);
    add("looks the wrong way", check_id::kInstruction, false, s, one_event("neutral"), "look left");
  }
  {
    add("label never expressed", check_id::kLabel, false, rest(), one_event("drowsiness"));
  }
  return out;
}

}  // namespace corpus
