#include "ocular/planner.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "json_util.h"
#include "ocular/error.h"

namespace ocular {

using detail::json;

int Plan::event_at(int frame) const {
  for (std::size_t k = 0; k < events.size(); ++k) {
    if (frame >= events[k].start_frame && frame <= events[k].end_frame) return static_cast<int>(k);
  }
  return -1;
}

namespace {

constexpr double kPoseBand = 2.0;

struct Target {
  Channel c;
  double lo, hi;
};

/// Bilateral shorthand: AU2 expands to AU2_L and AU2_R.
std::vector<Target> both(Channel left, Channel right, double lo, double hi) {
  return {{left, lo, hi}, {right, lo, hi}};
}

StageTemplate stage(std::string semantics, double ratio, std::vector<std::vector<Target>> groups,
                    std::set<std::string, std::less<>> exemptions = {}) {
  StageTemplate s;
  s.semantics = std::move(semantics);
  s.ratio = ratio;
  for (const auto& g : groups)
    for (const auto& t : g) s.targets[t.c] = {t.lo, t.hi};
  s.exemptions = std::move(exemptions);
  return s;
}

std::vector<Target> one(Channel c, double lo, double hi) { return {{c, lo, hi}}; }
std::vector<Target> au1(double lo, double hi) { return one(Channel::AU1, lo, hi); }
std::vector<Target> au2(double lo, double hi) { return both(Channel::AU2_L, Channel::AU2_R, lo, hi); }
std::vector<Target> au4(double lo, double hi) { return both(Channel::AU4_L, Channel::AU4_R, lo, hi); }
std::vector<Target> au5(double lo, double hi) { return both(Channel::AU5_L, Channel::AU5_R, lo, hi); }
std::vector<Target> au7(double lo, double hi) { return one(Channel::AU7, lo, hi); }
std::vector<Target> au43(double lo, double hi) { return both(Channel::AU43_L, Channel::AU43_R, lo, hi); }
std::vector<Target> direct_gaze() {
  return {{Channel::GazeLeft, 0, 0.05}, {Channel::GazeRight, 0, 0.05},
          {Channel::GazeUp, 0, 0.05}, {Channel::GazeDown, 0, 0.05}};
}

TemplateTable build_defaults() {
  using C = Channel;
  TemplateTable t;
  auto add = [&](std::string label, std::vector<StageTemplate> stages, std::vector<Channel> req) {
    CategoryTemplate ct{label, std::move(stages), std::move(req)};
    t.emplace(std::move(label), std::move(ct));
  };

  add("sadness",
      {stage("inner brows begin to rise", 0.25, {au1(0.15, 0.35)}),
       stage("inner brow raise with downcast gaze", 0.45,
             {au1(0.40, 0.70), au4(0.10, 0.30), one(C::GazeDown, 0.15, 0.35)}),
       stage("sustained droop with lowered head", 0.30,
             {au1(0.30, 0.55), au43(0.10, 0.30), one(C::GazeDown, 0.15, 0.35),
              one(C::Pitch, -8, -2)})},
      {C::AU1, C::GazeDown});
  add("fear",
      {stage("brows lift", 0.20, {au1(0.20, 0.40), au2(0.20, 0.40)}),
       stage("raised brows with widened eyes", 0.40,
             {au1(0.50, 0.80), au2(0.50, 0.80), au4(0.10, 0.30), au5(0.35, 0.50)}),
       stage("held alarm with slight head pull-back", 0.40,
             {au1(0.35, 0.60), au2(0.35, 0.60), au5(0.20, 0.40), one(C::Pitch, 1, 6)})},
      {C::AU1, C::AU2_L, C::AU5_L});
  add("disgust",
      {stage("brow lowering onset", 0.25, {au4(0.10, 0.30)}),
       stage("lowered brows with narrowed lids", 0.45, {au4(0.40, 0.70), au7(0.30, 0.60)}),
       stage("aversion with head turn", 0.30,
             {au4(0.25, 0.50), au7(0.20, 0.40), one(C::Yaw, -10, -4)})},
      {C::AU4_L, C::AU7});
  add("contempt",
      {stage("neutral onset", 0.30, {au7(0.0, 0.10)}),
       stage("one-sided brow lift with narrowed lids", 0.40,
             {one(C::AU2_L, 0.20, 0.45), au7(0.15, 0.30)}),
       stage("head tilts away", 0.30,
             {au7(0.10, 0.25), one(C::Roll, 3, 9), one(C::Pitch, 1, 5)})},
      {C::AU2_L, C::AU7});
  add("anger",
      {stage("brow draw-in onset", 0.20, {au4(0.20, 0.40)}),
       stage("hard brow lowering with tightened lids", 0.50,
             {au4(0.60, 0.90), au7(0.40, 0.70), au5(0.20, 0.45), au2(0.0, 0.10)}),
       stage("sustained glare with slight head drop", 0.30,
             {au4(0.45, 0.75), au7(0.30, 0.55), one(C::Pitch, -6, -1)})},
      {C::AU4_L, C::AU7});
  add("surprise",
      {stage("brows start to rise", 0.15, {au1(0.20, 0.40), au2(0.20, 0.40)}),
       stage("brows and upper lids fully raised", 0.45,
             {au1(0.60, 0.90), au2(0.60, 0.90), au5(0.50, 0.80), au4(0.0, 0.10)}),
       stage("relaxing raise with head lift", 0.40,
             {au1(0.30, 0.60), au2(0.30, 0.60), au5(0.20, 0.45), one(C::Pitch, 2, 8)})},
      {C::AU1, C::AU2_L, C::AU5_L});
  add("laughter",
      {stage("smile onset with cheek raise", 0.20, {au7(0.15, 0.30)}),
       stage("laughing squint with head tilted back", 0.50,
             {au7(0.45, 0.75), au43(0.20, 0.45), one(C::Pitch, 3, 10)}),
       stage("settling squint", 0.30, {au7(0.25, 0.45), au43(0.05, 0.25), one(C::Pitch, 0, 5)})},
      {C::AU7});
  add("cognitive_effort",
      {stage("attentive onset", 0.12, {au5(0.15, 0.35), direct_gaze()}),
       stage("gaze shifts left with a mild squint", 0.24,
             {au4(0.10, 0.20), au7(0.12, 0.25), one(C::GazeLeft, 0.15, 0.30),
              one(C::GazeUp, 0.10, 0.25)}),
       stage("head lowers slightly while maintaining the squint", 0.64,
             {au4(0.05, 0.12), au7(0.08, 0.18), one(C::GazeLeft, 0.25, 0.50),
              one(C::Pitch, -12, -5)})},
      {C::AU4_L, C::AU7});
  add("low_arousal_negative",
      {stage("heavy lids settle", 0.30, {au43(0.15, 0.35), au1(0.10, 0.25)}),
       stage("downcast gaze with drooping lids", 0.40,
             {au43(0.25, 0.45), au1(0.15, 0.35), one(C::GazeDown, 0.20, 0.40)}),
       stage("slow head sink", 0.30,
             {au43(0.25, 0.45), one(C::GazeDown, 0.15, 0.35), one(C::Pitch, -10, -4)})},
      {C::AU43_L, C::GazeDown});
  add("social_engagement",
      {stage("attentive eye contact", 0.25, {au5(0.10, 0.25), direct_gaze()}),
       stage("friendly brow flash", 0.45,
             {au1(0.25, 0.50), au2(0.30, 0.55), au4(0.0, 0.10), au7(0.10, 0.25)}),
       stage("affirming nod", 0.30, {au7(0.15, 0.30), one(C::Pitch, -7, -2)})},
      {C::AU2_L, C::AU7});
  add("evasive_response",
      {stage("brief eye contact", 0.20, {direct_gaze()}),
       stage("gaze averts sideways", 0.40,
             {one(C::GazeRight, 0.30, 0.50), au7(0.10, 0.25), one(C::Yaw, -8, -2)}),
       stage("head turns away with downcast gaze", 0.40,
             {one(C::GazeRight, 0.20, 0.40), one(C::GazeDown, 0.15, 0.35), au4(0.10, 0.25),
              one(C::Yaw, -15, -6)})},
      {C::Yaw});
  add("drowsiness",
      {stage("droopy eyelids", 0.12, {au43(0.25, 0.45), au5(0.0, 0.10)}),
       stage("prolonged blink", 0.28, {au43(0.30, 1.00), au5(0.0, 0.10)},
             {std::string(exemption::kProlongedBlink)}),
       stage("drowsy head nod", 0.60, {au43(0.20, 0.45), one(C::Pitch, -14, -6)})},
      {C::AU43_L});
  return t;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

bool has_word(const std::string& text, std::string_view word) {
  std::size_t pos = 0;
  while ((pos = text.find(word, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !std::isalpha(static_cast<unsigned char>(text[pos - 1]));
    const std::size_t end = pos + word.size();
    // Allow simple suffixes ("blinks", "lowered", "leftward").
    const bool right_ok = end == text.size() || !std::isalpha(static_cast<unsigned char>(text[end])) ||
                          text.compare(end, 1, "s") == 0 || text.compare(end, 2, "ed") == 0 ||
                          text.compare(end, 4, "ward") == 0 || text.compare(end, 3, "ing") == 0;
    if (left_ok && right_ok) return true;
    pos = end;
  }
  return false;
}

/// Splits on commas, semicolons and the word "then".
std::vector<std::string> split_clauses(const std::string& text) {
  std::vector<std::string> raw;
  std::string cur;
  for (char ch : text) {
    if (ch == ',' || ch == ';' || ch == '.') {
      raw.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  raw.push_back(cur);
  std::vector<std::string> out;
  for (const auto& r : raw) {
    std::size_t start = 0;
    while (true) {
      std::size_t pos = r.find("then", start);
      while (pos != std::string::npos &&
             !((pos == 0 || !std::isalpha(static_cast<unsigned char>(r[pos - 1]))) &&
               (pos + 4 == r.size() || !std::isalpha(static_cast<unsigned char>(r[pos + 4]))))) {
        pos = r.find("then", pos + 4);
      }
      const std::string piece = r.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
      if (piece.find_first_not_of(" \t\n") != std::string::npos) out.push_back(piece);
      if (pos == std::string::npos) break;
      start = pos + 4;
    }
  }
  return out;
}

bool mentions_head(const std::string& cl) { return has_word(cl, "head") || has_word(cl, "nod"); }
bool mentions_brow(const std::string& cl) {
  return has_word(cl, "eyebrow") || has_word(cl, "brow") || has_word(cl, "eyebrows") ||
         has_word(cl, "brows");
}
bool brow_lowering(const std::string& cl) {
  return has_word(cl, "frown") || has_word(cl, "furrow") || has_word(cl, "lower") ||
         has_word(cl, "knit");
}
/// -1 for lowering, +1 for raising, 0 when the clause names neither.
int head_pitch_sign(const std::string& cl) {
  if (has_word(cl, "lower") || has_word(cl, "down") || has_word(cl, "nod") || has_word(cl, "bow"))
    return -1;
  if (has_word(cl, "raise") || has_word(cl, "up") || has_word(cl, "lift")) return 1;
  return 0;
}

struct GazeDir {
  std::string_view word;
  Channel gaze;
  Channel opposite;
};

constexpr std::array<GazeDir, 4> kDirections = {{{"left", Channel::GazeLeft, Channel::GazeRight},
                                                  {"right", Channel::GazeRight, Channel::GazeLeft},
                                                  {"up", Channel::GazeUp, Channel::GazeDown},
                                                  {"down", Channel::GazeDown, Channel::GazeUp}}};

void set_both(ChannelTargets& t, Channel l, Channel r, TargetInterval iv) {
  t[l] = iv;
  t[r] = iv;
}

void apply_instructions(std::vector<StagedEvent>& events, std::string_view instructions) {
  const auto clauses = split_clauses(lower(instructions));
  const std::size_t n = events.size();
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    const std::string& cl = clauses[i];
    const std::size_t k = std::min(n - 1, n == 1 ? 0 : i + 1);
    auto& ev = events[k].channel_targets;
    const bool slight = has_word(cl, "slight") || has_word(cl, "slightly") || has_word(cl, "a bit");
    const bool head = mentions_head(cl);

    for (const auto& d : kDirections) {
      if (!has_word(cl, d.word)) continue;
      const TargetInterval iv = slight ? TargetInterval{0.15, 0.30} : TargetInterval{0.25, 0.50};
      ev[d.gaze] = iv;
      for (std::size_t m = k + 1; m < n; ++m) {
        auto& later = events[m].channel_targets;
        const auto it = later.find(d.gaze);
        if (it == later.end() || it->second.lo <= 0.0) later[d.gaze] = iv;
      }
      for (auto& e : events) e.channel_targets[d.opposite] = {0.0, 0.0};
    }

    if (head) {
      const double mag_lo = slight ? 3.0 : 5.0, mag_hi = slight ? 8.0 : 12.0;
      const int pitch = head_pitch_sign(cl);
      if (pitch < 0) ev[Channel::Pitch] = {-mag_hi, -mag_lo};
      if (pitch > 0) ev[Channel::Pitch] = {mag_lo, mag_hi};
      if (has_word(cl, "left")) ev[Channel::Yaw] = {mag_lo, mag_hi};
      if (has_word(cl, "right")) ev[Channel::Yaw] = {-mag_hi, -mag_lo};
      if (has_word(cl, "tilt")) ev[Channel::Roll] = {mag_lo, mag_hi};
    }
    if (mentions_brow(cl)) {
      if (brow_lowering(cl)) {
        set_both(ev, Channel::AU4_L, Channel::AU4_R, slight ? TargetInterval{0.15, 0.3} : TargetInterval{0.3, 0.6});
      } else {
        const TargetInterval iv = slight ? TargetInterval{0.15, 0.3} : TargetInterval{0.3, 0.6};
        set_both(ev, Channel::AU2_L, Channel::AU2_R, iv);
        ev[Channel::AU1] = iv;
        set_both(ev, Channel::AU4_L, Channel::AU4_R, {0.0, 0.1});
      }
    }
    if (has_word(cl, "blink")) {
      set_both(ev, Channel::AU43_L, Channel::AU43_R, {0.6, 1.0});
      set_both(ev, Channel::AU5_L, Channel::AU5_R, {0.0, 0.1});
    }
    if (has_word(cl, "squint") || has_word(cl, "narrow")) {
      ev[Channel::AU7] = slight ? TargetInterval{0.1, 0.25} : TargetInterval{0.25, 0.5};
    }
    if (has_word(cl, "widen") || has_word(cl, "wide")) {
      set_both(ev, Channel::AU5_L, Channel::AU5_R, slight ? TargetInterval{0.15, 0.3} : TargetInterval{0.3, 0.5});
    }
  }
}

TargetInterval hull(const TargetInterval& a, const TargetInterval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

void apply_head_defaults(std::vector<StagedEvent>& events, const InitialPose& pose,
                         const HeadLimits& limits) {
  const std::array<std::pair<Channel, double>, 3> head = {
      {{Channel::Yaw, pose.yaw}, {Channel::Pitch, pose.pitch}, {Channel::Roll, pose.roll}}};
  for (const auto& [ch, v] : head) {
    const ChannelRange r = channel_range(ch, limits);
    const TargetInterval band{std::max(r.lo, v - kPoseBand), std::min(r.hi, v + kPoseBand)};
    auto& first = events.front().channel_targets;
    const auto it = first.find(ch);
    first[ch] = it == first.end() ? band : hull(it->second, {v, v});
    for (std::size_t k = 1; k < events.size(); ++k) {
      auto& t = events[k].channel_targets;
      if (!t.contains(ch)) t[ch] = events[k - 1].channel_targets.at(ch);
    }
  }
}

std::string join_labels(const TemplateTable& table) {
  std::string out;
  for (const auto& [label, _] : table) {
    if (!out.empty()) out += ", ";
    out += label;
  }
  return out;
}

}  // namespace

std::vector<InstructionCue> instruction_cues(std::string_view instructions) {
  using K = InstructionCue::Kind;
  std::vector<InstructionCue> cues;
  const auto clauses = split_clauses(lower(instructions));
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    const std::string& cl = clauses[i];
    for (const auto& d : kDirections) {
      if (!has_word(cl, d.word)) continue;
      cues.push_back({K::Activate, d.gaze, 1, i});
      cues.push_back({K::Forbid, d.opposite, 1, i});
    }
    if (mentions_head(cl)) {
      const int pitch = head_pitch_sign(cl);
      if (pitch != 0) cues.push_back({K::Activate, Channel::Pitch, pitch, i});
      if (has_word(cl, "left")) cues.push_back({K::Activate, Channel::Yaw, 1, i});
      if (has_word(cl, "right")) cues.push_back({K::Activate, Channel::Yaw, -1, i});
      if (has_word(cl, "tilt")) cues.push_back({K::Activate, Channel::Roll, 1, i});
    }
    if (mentions_brow(cl)) {
      cues.push_back({K::Activate, brow_lowering(cl) ? Channel::AU4_L : Channel::AU2_L, 1, i});
    }
    if (has_word(cl, "blink")) cues.push_back({K::Activate, Channel::AU43_L, 1, i});
    if (has_word(cl, "squint") || has_word(cl, "narrow")) cues.push_back({K::Activate, Channel::AU7, 1, i});
    if (has_word(cl, "widen") || has_word(cl, "wide")) cues.push_back({K::Activate, Channel::AU5_L, 1, i});
  }
  return cues;
}

const TemplateTable& default_templates() {
  static const TemplateTable table = build_defaults();
  return table;
}

Plan plan(std::string_view label, int total_frames, double fps,
          std::optional<std::string_view> instructions, const InitialPose& initial_pose,
          const TemplateTable& templates, const HeadLimits& limits) {
  const auto it = templates.find(label);
  if (it == templates.end()) {
    throw Error("unknown label '" + std::string(label) + "'; supported: " + join_labels(templates));
  }
  if (total_frames < 1) throw Error("total_frames must be at least 1");
  if (!(fps > 0.0)) throw Error("fps must be positive");
  const std::array<std::pair<Channel, double>, 3> pose = {
      {{Channel::Yaw, initial_pose.yaw}, {Channel::Pitch, initial_pose.pitch},
       {Channel::Roll, initial_pose.roll}}};
  for (const auto& [ch, v] : pose) {
    const ChannelRange r = channel_range(ch, limits);
    if (!(v >= r.lo && v <= r.hi)) throw Error("initial pose " + std::string(channel_name(ch)) + " out of range");
  }
  const auto& stages = it->second.stages;

  Plan p;
  p.label = std::string(label);
  p.total_frames = total_frames;
  p.fps = fps;

  const int n = static_cast<int>(stages.size());
  if (total_frames < n) {
    StagedEvent e;
    e.start_frame = 1;
    e.end_frame = total_frames;
    for (const auto& s : stages) {
      e.semantics += (e.semantics.empty() ? "" : " + ") + s.semantics;
      for (const auto& [ch, iv] : s.targets) {
        const auto found = e.channel_targets.find(ch);
        e.channel_targets[ch] = found == e.channel_targets.end() ? iv : hull(found->second, iv);
      }
      e.exemptions.insert(s.exemptions.begin(), s.exemptions.end());
    }
    p.events.push_back(std::move(e));
  } else {
    double cum = 0.0;
    int prev_end = 0;
    for (int k = 0; k < n; ++k) {
      cum += stages[static_cast<std::size_t>(k)].ratio;
      int end = k == n - 1 ? total_frames : static_cast<int>(std::lround(cum * total_frames));
      end = std::clamp(end, prev_end + 1, total_frames - (n - 1 - k));
      StagedEvent e;
      e.start_frame = prev_end + 1;
      e.end_frame = end;
      e.semantics = stages[static_cast<std::size_t>(k)].semantics;
      e.channel_targets = stages[static_cast<std::size_t>(k)].targets;
      e.exemptions = stages[static_cast<std::size_t>(k)].exemptions;
      p.events.push_back(std::move(e));
      prev_end = end;
    }
  }

  if (instructions && !instructions->empty()) apply_instructions(p.events, *instructions);
  apply_head_defaults(p.events, initial_pose, limits);
  return p;
}

ValidationReport validate_plan(const Plan& p, const HeadLimits& limits) {
  ValidationReport rep;
  auto add = [&](int frame, std::string channel, std::string rule, std::string msg) {
    rep.violations.push_back({static_cast<std::size_t>(std::max(frame - 1, 0)), std::move(channel),
                              std::move(rule), std::move(msg)});
  };
  if (p.events.empty()) {
    add(1, "", "plan_partition", "no events");
    return rep;
  }
  if (p.total_frames < 1) add(1, "", "plan_partition", "total_frames must be at least 1");
  int expected = 1;
  for (const auto& e : p.events) {
    if (e.start_frame > e.end_frame) {
      add(e.start_frame, "", "plan_partition",
          "event starts after it ends (" + std::to_string(e.start_frame) + " > " +
              std::to_string(e.end_frame) + ")");
    }
    if (e.start_frame > expected) {
      add(expected, "", "plan_partition", "gap at frame " + std::to_string(expected));
    } else if (e.start_frame < expected) {
      add(e.start_frame, "", "plan_partition", "overlap at frame " + std::to_string(e.start_frame));
    }
    expected = std::max(expected, e.end_frame + 1);
    for (const auto& [ch, iv] : e.channel_targets) {
      const std::string name(channel_name(ch));
      const ChannelRange r = channel_range(ch, limits);
      if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
        add(e.start_frame, name, "plan_target", "invalid target interval");
      } else if (iv.lo < r.lo || iv.hi > r.hi) {
        add(e.start_frame, name, "plan_target", "target exceeds channel range");
      }
    }
  }
  if (expected - 1 < p.total_frames) {
    add(expected, "", "plan_partition", "gap at frame " + std::to_string(expected));
  } else if (expected - 1 > p.total_frames) {
    add(p.total_frames + 1, "", "plan_partition",
        "events extend past frame " + std::to_string(p.total_frames));
  }
  return rep;
}

namespace {

json plan_body(std::string_view label, int total_frames, double fps) {
  json j;
  j["label"] = label;
  j["fps"] = fps;
  j["total_frames"] = total_frames;
  return j;
}

}  // namespace

std::string plan_to_json(const Plan& p) {
  json j = plan_body(p.label, p.total_frames, p.fps);
  json events = json::array();
  for (const auto& e : p.events) {
    json je;
    je["start_frame"] = e.start_frame;
    je["end_frame"] = e.end_frame;
    je["semantics"] = e.semantics;
    json targets = json::object();
    for (const auto& [ch, iv] : e.channel_targets) targets[std::string(channel_name(ch))] = {iv.lo, iv.hi};
    je["channel_targets"] = std::move(targets);
    je["exemptions"] = json(std::vector<std::string>(e.exemptions.begin(), e.exemptions.end()));
    events.push_back(std::move(je));
  }
  j["events"] = std::move(events);
  return j.dump(2) + "\n";
}

std::string plan_request_json(std::string_view label, int total_frames, double fps,
                              std::optional<std::string_view> instructions,
                              const InitialPose& initial_pose) {
  json j = plan_body(label, total_frames, fps);
  j["events"] = json::array();
  j["instructions"] = instructions ? json(std::string(*instructions)) : json(nullptr);
  j["initial_pose"] = {{"yaw", initial_pose.yaw}, {"pitch", initial_pose.pitch},
                       {"roll", initial_pose.roll}};
  return j.dump(2) + "\n";
}

namespace {

int require_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
  return j.get<int>();
}

TargetInterval interval_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ParseError(path + ": expected [lo, hi]");
  return {detail::require_number(j[0], path + "[0]"), detail::require_number(j[1], path + "[1]")};
}

ChannelTargets targets_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
  ChannelTargets t;
  for (const auto& [name, iv] : j.items()) {
    const auto ch = channel_from_name(name);
    if (!ch) throw ParseError(path + "." + name + ": unknown channel");
    t[*ch] = interval_from_json(iv, path + "." + name);
  }
  return t;
}

std::set<std::string, std::less<>> strings_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path + ": expected an array");
  std::set<std::string, std::less<>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw ParseError(path + "[" + std::to_string(i) + "]: expected a string");
    out.insert(j[i].get<std::string>());
  }
  return out;
}

}  // namespace

Plan decode_agent_plan(std::string_view payload, const HeadLimits& limits) {
  const json j = detail::parse_json(payload, "agent plan");
  if (!j.is_object()) throw ParseError("$: expected an object");
  Plan p;
  const json& label = detail::require(j, "label", "$");
  if (!label.is_string()) throw ParseError("$.label: expected a string");
  p.label = label.get<std::string>();
  p.fps = detail::require_number(detail::require(j, "fps", "$"), "$.fps");
  if (!(p.fps > 0.0)) throw ParseError("$.fps: must be positive");
  p.total_frames = require_int(detail::require(j, "total_frames", "$"), "$.total_frames");
  if (p.total_frames < 1) throw ParseError("$.total_frames: must be at least 1");
  const json& events = detail::require(j, "events", "$");
  if (!events.is_array()) throw ParseError("$.events: expected an array");
  if (events.empty()) throw ParseError("$.events: no events");

  long long sum = 0;
  for (std::size_t k = 0; k < events.size(); ++k) {
    const std::string path = "$.events[" + std::to_string(k) + "]";
    const json& je = events[k];
    StagedEvent e;
    e.start_frame = require_int(detail::require(je, "start_frame", path), path + ".start_frame");
    e.end_frame = require_int(detail::require(je, "end_frame", path), path + ".end_frame");
    if (e.start_frame < 1) throw ParseError(path + ".start_frame: must be at least 1");
    if (e.end_frame < e.start_frame) throw ParseError(path + ".end_frame: precedes start_frame");
    const json& sem = detail::require(je, "semantics", path);
    if (!sem.is_string()) throw ParseError(path + ".semantics: expected a string");
    e.semantics = sem.get<std::string>();
    if (je.contains("channel_targets")) {
      e.channel_targets = targets_from_json(je.at("channel_targets"), path + ".channel_targets");
    }
    if (je.contains("exemptions")) {
      e.exemptions = strings_from_json(je.at("exemptions"), path + ".exemptions");
    }
    sum += e.duration();
    p.events.push_back(std::move(e));
  }
  if (sum != p.total_frames) {
    throw ParseError("$.events: events do not partition duration (sum " + std::to_string(sum) +
                     " != total_frames " + std::to_string(p.total_frames) + ")");
  }
  const ValidationReport rep = validate_plan(p, limits);
  if (!rep.ok()) {
    const auto& v = rep.violations.front();
    const int k = p.event_at(static_cast<int>(v.frame) + 1);
    std::string path = "$.events";
    if (k >= 0) path += "[" + std::to_string(k) + "]";
    if (!v.channel.empty()) path += ".channel_targets." + v.channel;
    throw ParseError(path + ": " + v.message);
  }
  return p;
}

// --- template overrides ----------------------------------------------------

TemplateTable templates_from_json(std::string_view text, const TemplateTable& base) {
  const json j = detail::parse_json(text, "templates");
  if (!j.is_object()) throw ParseError("templates: expected an object");
  TemplateTable table = base;
  for (const auto& [label, jt] : j.items()) {
    const std::string path = "$." + label;
    CategoryTemplate ct;
    ct.label = label;
    const json& stages = detail::require(jt, "stages", path);
    if (!stages.is_array() || stages.empty()) throw ParseError(path + ".stages: expected a non-empty array");
    double total = 0.0;
    for (std::size_t k = 0; k < stages.size(); ++k) {
      const std::string sp = path + ".stages[" + std::to_string(k) + "]";
      const json& js = stages[k];
      StageTemplate s;
      const json& sem = detail::require(js, "semantics", sp);
      if (!sem.is_string()) throw ParseError(sp + ".semantics: expected a string");
      s.semantics = sem.get<std::string>();
      s.ratio = detail::require_number(detail::require(js, "ratio", sp), sp + ".ratio");
      if (!(s.ratio > 0.0)) throw ParseError(sp + ".ratio: must be positive");
      total += s.ratio;
      if (js.contains("targets")) s.targets = targets_from_json(js.at("targets"), sp + ".targets");
      for (const auto& [ch, iv] : s.targets) {
        const ChannelRange r = channel_range(ch, HeadLimits{});
        if (iv.lo < r.lo || iv.hi > r.hi) {
          throw ParseError(sp + ".targets." + std::string(channel_name(ch)) + ": outside the channel range");
        }
      }
      if (js.contains("exemptions")) s.exemptions = strings_from_json(js.at("exemptions"), sp + ".exemptions");
      ct.stages.push_back(std::move(s));
    }
    if (std::abs(total - 1.0) > 1e-9) throw ParseError(path + ".stages: ratios must sum to 1");
    if (jt.contains("required")) {
      for (const auto& name : strings_from_json(jt.at("required"), path + ".required")) {
        const auto ch = channel_from_name(name);
        if (!ch) throw ParseError(path + ".required: unknown channel " + name);
        ct.required.push_back(*ch);
      }
    }
    table[label] = std::move(ct);
  }
  return table;
}

std::string templates_to_json(const TemplateTable& table) {
  json j = json::object();
  for (const auto& [label, ct] : table) {
    json stages = json::array();
    for (const auto& s : ct.stages) {
      json targets = json::object();
      for (const auto& [ch, iv] : s.targets) targets[std::string(channel_name(ch))] = {iv.lo, iv.hi};
      stages.push_back({{"semantics", s.semantics},
                        {"ratio", s.ratio},
                        {"targets", targets},
                        {"exemptions", std::vector<std::string>(s.exemptions.begin(), s.exemptions.end())}});
    }
    std::vector<std::string> req;
    for (Channel c : ct.required) req.emplace_back(channel_name(c));
    j[label] = {{"stages", stages}, {"required", req}};
  }
  return j.dump(2) + "\n";
}

}  // namespace ocular
