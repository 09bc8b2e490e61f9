#include "ocular/critic.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "json_util.h"
#include "ocular/error.h"
#include "text_util.h"

namespace ocular {

using detail::json;

const std::vector<std::string>& all_check_ids() {
  static const std::vector<std::string> ids = {
      std::string(check_id::kBlinkDuration), std::string(check_id::kInterBlink),
      std::string(check_id::kBlinkAsymmetry), std::string(check_id::kCoactivation),
      std::string(check_id::kMainSequence),  std::string(check_id::kGazeHead),
      std::string(check_id::kControlBounds), std::string(check_id::kTarget),
      std::string(check_id::kOrder),         std::string(check_id::kInstruction),
      std::string(check_id::kLabel)};
  return ids;
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::ReviseComposition: return "revise_composition";
    case Verdict::RevisePlan: return "revise_plan";
    case Verdict::Fail: return "fail";
  }
  return "fail";
}

bool CriticReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::vector<const CheckResult*> CriticReport::failures() const {
  std::vector<const CheckResult*> out;
  for (const auto& c : checks)
    if (!c.passed) out.push_back(&c);
  return out;
}

std::vector<std::string> CriticReport::failed_ids() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.passed && std::find(out.begin(), out.end(), c.id) == out.end()) out.push_back(c.id);
  }
  return out;
}

namespace {

struct Run {
  std::size_t s = 0;  // 0-based, inclusive
  std::size_t e = 0;
  std::size_t len() const { return e - s + 1; }
};

std::vector<Run> runs(std::size_t n, const std::function<bool(std::size_t)>& pred) {
  std::vector<Run> out;
  for (std::size_t t = 0; t < n; ++t) {
    if (!pred(t)) continue;
    if (!out.empty() && out.back().e + 1 == t) {
      out.back().e = t;
    } else {
      out.push_back({t, t});
    }
  }
  return out;
}

bool exempt(const Plan& plan, const Run& r, std::string_view rule) {
  for (const auto& ev : plan.events) {
    const int s = static_cast<int>(r.s) + 1, e = static_cast<int>(r.e) + 1;
    if (ev.end_frame >= s && ev.start_frame <= e && ev.exempt(rule)) return true;
  }
  return false;
}

std::string fmt(double v) { return detail::format_double(std::round(v * 1000.0) / 1000.0); }

CheckResult failure(std::string_view id, const Run& r, std::string message,
                    std::vector<std::string> channels) {
  CheckResult c;
  c.id = std::string(id);
  c.passed = false;
  c.start_frame = static_cast<int>(r.s) + 1;
  c.end_frame = static_cast<int>(r.e) + 1;
  c.message = std::move(message);
  c.channels = std::move(channels);
  return c;
}

std::string name(Channel c) { return std::string(channel_name(c)); }

Verdict verdict_for(const std::vector<CheckResult>& checks) {
  bool any = false, plan_level = false;
  for (const auto& c : checks) {
    if (c.passed) continue;
    any = true;
    if (c.id == check_id::kOrder || c.id == check_id::kInstruction || c.id == check_id::kLabel) {
      plan_level = true;
    }
  }
  if (!any) return Verdict::Pass;
  return plan_level ? Verdict::RevisePlan : Verdict::ReviseComposition;
}

/// Adds a passing entry for every enabled family in `ids` that has no failure.
void add_passes(std::vector<CheckResult>& checks, const std::vector<std::string_view>& ids,
                const RuleSet& rules, std::size_t n) {
  for (auto id : ids) {
    if (!rules.is_enabled(id)) continue;
    const bool failed = std::any_of(checks.begin(), checks.end(),
                                    [&](const auto& c) { return c.id == id && !c.passed; });
    if (failed) continue;
    CheckResult c;
    c.id = std::string(id);
    c.start_frame = 1;
    c.end_frame = static_cast<int>(std::max<std::size_t>(n, 1));
    c.message = "ok";
    checks.push_back(std::move(c));
  }
}

std::vector<Run> blink_episodes(const ControlSequence& seq, double thr) {
  return runs(seq.size(), [&](std::size_t t) {
    return std::min(seq[t][Channel::AU43_L], seq[t][Channel::AU43_R]) > thr;
  });
}

struct GazeHeadPair {
  Channel gaze;
  Channel head;
  int sign;
};
constexpr std::array<GazeHeadPair, 4> kGazeHead = {{{Channel::GazeLeft, Channel::Yaw, 1},
                                                     {Channel::GazeRight, Channel::Yaw, -1},
                                                     {Channel::GazeUp, Channel::Pitch, 1},
                                                     {Channel::GazeDown, Channel::Pitch, -1}}};

constexpr std::array<Channel, 4> kGazeChannels = {Channel::GazeLeft, Channel::GazeRight,
                                                  Channel::GazeUp, Channel::GazeDown};

double gaze_cap(const RuleSet& rules, double fps) {
  return rules.gaze_max_delta * rules.gaze_reference_fps / fps;
}

std::size_t frames_for_ms(double ms, double fps) {
  return static_cast<std::size_t>(std::ceil(ms * fps / 1000.0 - 1e-9));
}

}  // namespace

CriticReport check_physiology(const ControlSequence& seq, const Plan& plan, const RuleSet& rules,
                              const HeadLimits& limits) {
  if (static_cast<int>(seq.size()) != plan.total_frames) {
    throw Error("sequence has " + std::to_string(seq.size()) + " frames but the plan has " +
                std::to_string(plan.total_frames));
  }
  const std::size_t n = seq.size();
  const double fm = 1000.0 / seq.fps;
  std::vector<CheckResult> checks;
  const auto blinks = blink_episodes(seq, rules.blink_threshold);

  if (rules.is_enabled(check_id::kBlinkDuration)) {
    for (const auto& b : blinks) {
      const double dur = static_cast<double>(b.len()) * fm;
      const double cap =
          exempt(plan, b, exemption::kProlongedBlink) ? rules.prolonged_blink_max_ms : rules.blink_max_ms;
      const bool truncated = b.s == 0 || b.e + 1 == n;
      if (dur < rules.blink_min_ms - 1e-9 && !truncated) {
        auto c = failure(check_id::kBlinkDuration, b,
                         "blink too short (" + fmt(dur) + " ms < " + fmt(rules.blink_min_ms) + " ms)",
                         {name(Channel::AU43_L), name(Channel::AU43_R)});
        c.edits = {{name(Channel::AU43_L), "stretch", rules.blink_min_ms},
                   {name(Channel::AU43_R), "stretch", rules.blink_min_ms}};
        checks.push_back(std::move(c));
      } else if (dur > cap + 1e-9) {
        auto c = failure(check_id::kBlinkDuration, b,
                         "blink too long (" + fmt(dur) + " ms > " + fmt(cap) + " ms)",
                         {name(Channel::AU43_L), name(Channel::AU43_R)});
        c.edits = {{name(Channel::AU43_L), "clamp_max", rules.blink_threshold - 0.05},
                   {name(Channel::AU43_R), "clamp_max", rules.blink_threshold - 0.05}};
        checks.push_back(std::move(c));
      }
    }
  }

  if (rules.is_enabled(check_id::kInterBlink)) {
    for (std::size_t k = 1; k < blinks.size(); ++k) {
      const Run& next = blinks[k];
      const double gap = static_cast<double>(next.s - blinks[k - 1].e - 1) * fm;
      if (gap < rules.inter_blink_min_ms - 1e-9 && !exempt(plan, next, exemption::kInterBlinkInterval)) {
        auto c = failure(check_id::kInterBlink, {blinks[k - 1].s, next.e},
                         "inter-blink interval " + fmt(gap) + " ms < " + fmt(rules.inter_blink_min_ms) + " ms",
                         {name(Channel::AU43_L), name(Channel::AU43_R)});
        c.edits = {{name(Channel::AU43_L), "clamp_max", rules.blink_threshold - 0.05},
                   {name(Channel::AU43_R), "clamp_max", rules.blink_threshold - 0.05}};
        checks.push_back(std::move(c));
      }
    }
  }

  if (rules.is_enabled(check_id::kBlinkAsymmetry)) {
    const auto asym = runs(n, [&](std::size_t t) {
      return std::abs(seq[t][Channel::AU43_L] - seq[t][Channel::AU43_R]) > rules.asymmetry_max + 1e-12;
    });
    for (const auto& r : asym) {
      if (exempt(plan, r, exemption::kWink)) continue;
      auto c = failure(check_id::kBlinkAsymmetry, r,
                       "blink asymmetry: |AU43_L - AU43_R| exceeds " + fmt(rules.asymmetry_max),
                       {name(Channel::AU43_L), name(Channel::AU43_R)});
      c.edits = {{name(Channel::AU43_L), "shrink_difference", rules.asymmetry_max - 0.01}};
      checks.push_back(std::move(c));
    }
  }

  if (rules.is_enabled(check_id::kCoactivation)) {
    const double thr = rules.coactivation_threshold;
    const std::array<std::pair<Channel, Channel>, 4> pairs = {{{Channel::AU4_L, Channel::AU2_L},
                                                               {Channel::AU4_R, Channel::AU2_R},
                                                               {Channel::AU5_L, Channel::AU43_L},
                                                               {Channel::AU5_R, Channel::AU43_R}}};
    for (const auto& [a, b] : pairs) {
      for (const auto& r : runs(n, [&](std::size_t t) { return seq[t][a] > thr && seq[t][b] > thr; })) {
        auto c = failure(check_id::kCoactivation, r,
                         name(a) + " and " + name(b) + " co-active above " + fmt(thr),
                         {name(a), name(b)});
        c.edits = {{name(a), "clamp_max", thr}};
        checks.push_back(std::move(c));
      }
    }
  }

  if (rules.is_enabled(check_id::kMainSequence)) {
    const double cap = gaze_cap(rules, seq.fps);
    for (Channel g : kGazeChannels) {
      const auto fast = runs(n, [&](std::size_t t) {
        return t > 0 && std::abs(seq[t][g] - seq[t - 1][g]) > cap + 1e-12;
      });
      for (const auto& r : fast) {
        auto c = failure(check_id::kMainSequence, r,
                         name(g) + " velocity exceeds " + fmt(cap) + " per frame", {name(g)});
        c.edits = {{name(g), "slew_limit", cap}};
        checks.push_back(std::move(c));
      }
      // Peak velocity must scale with excursion amplitude.
      for (const auto& r : runs(n, [&](std::size_t t) { return seq[t][g] > rules.gaze_onset; })) {
        if (r.s == 0) continue;
        double amp = 0.0, peak = 0.0;
        for (std::size_t t = r.s; t <= r.e; ++t) {
          amp = std::max(amp, seq[t][g]);
          peak = std::max(peak, std::abs(seq[t][g] - seq[t - 1][g]));
        }
        const double need = rules.gaze_peak_ratio * amp / static_cast<double>(r.len());
        if (peak < need - 1e-12) {
          auto c = failure(check_id::kMainSequence, r,
                           name(g) + " excursion peak velocity " + fmt(peak) + " below " + fmt(need),
                           {name(g)});
          c.edits = {{name(g), "clamp_max", rules.gaze_onset}};
          checks.push_back(std::move(c));
        }
      }
    }
  }

  if (rules.is_enabled(check_id::kGazeHead)) {
    const auto w = static_cast<std::size_t>(std::lround(rules.gaze_head_window_ms / fm));
    for (const auto& p : kGazeHead) {
      const auto sustained = runs(n, [&](std::size_t t) { return seq[t][p.gaze] > rules.gaze_head_threshold; });
      for (const auto& r : sustained) {
        if (static_cast<double>(r.len()) * fm <= rules.gaze_head_sustain_ms) continue;
        const std::size_t lo = r.s > w ? r.s - w : 0;
        const std::size_t hi = std::min(n - 1, r.s + w);
        const double ref = seq[lo][p.head];
        bool moved = false;
        for (std::size_t t = lo; t <= hi && !moved; ++t) {
          moved = p.sign * (seq[t][p.head] - ref) >= rules.gaze_head_min_deg - 1e-9;
        }
        if (moved) continue;
        auto c = failure(check_id::kGazeHead, r,
                         name(p.gaze) + " held above " + fmt(rules.gaze_head_threshold) +
                             " without a matching " + name(p.head) + " shift of " +
                             fmt(rules.gaze_head_min_deg) + " deg",
                         {name(p.gaze), name(p.head)});
        c.edits = {{name(p.gaze), "clamp_max", rules.gaze_head_threshold}};
        checks.push_back(std::move(c));
      }
    }
  }

  if (rules.is_enabled(check_id::kControlBounds)) {
    const auto rep = validate_sequence(seq, limits);
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> grouped;
    for (const auto& v : rep.violations) grouped[{v.rule, v.channel}].push_back(v.frame);
    for (const auto& [key, frames] : grouped) {
      const std::set<std::size_t> fs(frames.begin(), frames.end());
      for (const auto& r : runs(n, [&](std::size_t t) { return fs.contains(t); })) {
        auto c = failure(check_id::kControlBounds, r, key.first + " violated", {key.second});
        c.edits = {{key.second, "sanitize", 0.0}};
        checks.push_back(std::move(c));
      }
    }
  }

  add_passes(checks,
             {check_id::kBlinkDuration, check_id::kInterBlink, check_id::kBlinkAsymmetry,
              check_id::kCoactivation, check_id::kMainSequence, check_id::kGazeHead,
              check_id::kControlBounds},
             rules, n);
  CriticReport rep;
  rep.checks = std::move(checks);
  rep.verdict = verdict_for(rep.checks);
  return rep;
}

namespace {

enum class Reach { Max, Min, Both };

Reach reach_mode(const TargetInterval& iv) {
  if (iv.lo >= 0.0) return Reach::Max;
  if (iv.hi <= 0.0) return Reach::Min;
  return Reach::Both;
}

struct ReachResult {
  bool ok = true;
  double value = 0.0;
};

ReachResult reach(const ControlSequence& seq, std::size_t s, std::size_t e, Channel ch,
                  const TargetInterval& iv, double slack) {
  double mn = seq[s][ch], mx = mn;
  for (std::size_t t = s; t <= e; ++t) {
    mn = std::min(mn, seq[t][ch]);
    mx = std::max(mx, seq[t][ch]);
  }
  auto in = [&](double v) { return v >= iv.lo - slack - 1e-12 && v <= iv.hi + slack + 1e-12; };
  switch (reach_mode(iv)) {
    case Reach::Max: return {in(mx), mx};
    case Reach::Min: return {in(mn), mn};
    case Reach::Both: return {in(mn) && in(mx), in(mn) ? mx : mn};
  }
  return {};
}

Run event_run(const StagedEvent& ev, std::size_t n) {
  const auto s = static_cast<std::size_t>(std::max(ev.start_frame, 1) - 1);
  const auto e = std::min(static_cast<std::size_t>(std::max(ev.end_frame, 1) - 1), n - 1);
  return {std::min(s, e), e};
}

/// Event span less the seam transition, when anything is left of it.
Run settled_run(const Plan& plan, std::size_t k, std::size_t n, const RuleSet& rules) {
  Run r = event_run(plan.events[k], n);
  if (k == 0) return r;
  const std::size_t skip = frames_for_ms(rules.transition_ms, plan.fps);
  if (r.s + skip <= r.e) r.s += skip;
  return r;
}

bool channel_active(const ControlSequence& seq, Channel ch, int sign, const RuleSet& rules) {
  if (channel_kind(ch) == ChannelKind::Head) {
    for (const auto& f : seq.frames)
      if (sign * (f[ch] - seq[0][ch]) >= rules.head_active_deg - 1e-9) return true;
    return false;
  }
  for (const auto& f : seq.frames)
    if (f[ch] > rules.active_threshold) return true;
  return false;
}

}  // namespace

CriticReport check_semantic(const ControlSequence& seq, const Plan& plan,
                            std::string_view instructions, const RuleSet& rules,
                            const TemplateTable& templates, const HeadLimits& limits) {
  if (static_cast<int>(seq.size()) != plan.total_frames) {
    throw Error("sequence has " + std::to_string(seq.size()) + " frames but the plan has " +
                std::to_string(plan.total_frames));
  }
  const std::size_t n = seq.size();
  std::vector<CheckResult> checks;
  const Run whole{0, n == 0 ? 0 : n - 1};

  if (n > 0 && (rules.is_enabled(check_id::kTarget) || rules.is_enabled(check_id::kOrder))) {
    for (std::size_t k = 0; k < plan.events.size(); ++k) {
      const StagedEvent& ev = plan.events[k];
      const Run span = settled_run(plan, k, n, rules);
      std::vector<std::pair<Channel, ReachResult>> misses;
      for (const auto& [ch, iv] : ev.channel_targets) {
        const auto r = reach(seq, span.s, span.e, ch, iv, rules.target_slack * channel_scale(index_of(ch), limits));
        if (!r.ok) misses.emplace_back(ch, r);
      }
      if (misses.empty()) continue;

      std::optional<std::size_t> elsewhere;
      for (std::size_t m = 0; m < plan.events.size() && !elsewhere; ++m) {
        if (m == k) continue;
        const Run other = settled_run(plan, m, n, rules);
        bool all = true;
        for (const auto& [ch, iv] : ev.channel_targets) {
          all = all && reach(seq, other.s, other.e, ch, iv,
                             rules.target_slack * channel_scale(index_of(ch), limits)).ok;
        }
        if (all) elsewhere = m;
      }
      if (elsewhere && rules.is_enabled(check_id::kOrder)) {
        std::vector<std::string> chans;
        for (const auto& [ch, _] : misses) chans.push_back(name(ch));
        auto c = failure(check_id::kOrder, span,
                         "event " + std::to_string(k + 1) + " (" + ev.semantics +
                             ") is realised in the span of event " + std::to_string(*elsewhere + 1),
                         chans);
        c.event_index = k;
        checks.push_back(std::move(c));
        continue;
      }
      if (!rules.is_enabled(check_id::kTarget)) continue;
      for (const auto& [ch, r] : misses) {
        const TargetInterval& iv = ev.channel_targets.at(ch);
        auto c = failure(check_id::kTarget, span,
                         name(ch) + " reaches " + fmt(r.value) + ", outside [" + fmt(iv.lo) + ", " +
                             fmt(iv.hi) + "] in event " + std::to_string(k + 1),
                         {name(ch)});
        c.event_index = k;
        c.edits = {{name(ch), "rescale", iv.mid()}};
        checks.push_back(std::move(c));
      }
    }
  }

  if (n > 0 && rules.is_enabled(check_id::kInstruction)) {
    for (const auto& cue : instruction_cues(instructions)) {
      const bool active = channel_active(seq, cue.channel, cue.sign, rules);
      if (cue.kind == InstructionCue::Kind::Activate && !active) {
        checks.push_back(failure(check_id::kInstruction, whole,
                                 "instruction clause " + std::to_string(cue.clause + 1) + " needs " +
                                     name(cue.channel) + " active",
                                 {name(cue.channel)}));
      } else if (cue.kind == InstructionCue::Kind::Forbid && active) {
        checks.push_back(failure(check_id::kInstruction, whole,
                                 "instruction clause " + std::to_string(cue.clause + 1) + " forbids " +
                                     name(cue.channel),
                                 {name(cue.channel)}));
      }
    }
  }

  if (n > 0 && rules.is_enabled(check_id::kLabel)) {
    const auto it = templates.find(plan.label);
    if (it == templates.end()) {
      checks.push_back(failure(check_id::kLabel, whole, "unknown label '" + plan.label + "'", {}));
    } else {
      for (Channel ch : it->second.required) {
        bool active = false;
        if (channel_kind(ch) == ChannelKind::Head) {
          double mn = seq[0][ch], mx = mn;
          for (const auto& f : seq.frames) {
            mn = std::min(mn, f[ch]);
            mx = std::max(mx, f[ch]);
          }
          active = mx - mn > rules.head_active_deg;
        } else {
          active = channel_active(seq, ch, 1, rules);
        }
        if (!active) {
          checks.push_back(failure(check_id::kLabel, whole,
                                   "label '" + plan.label + "' requires " + name(ch) + " to activate",
                                   {name(ch)}));
        }
      }
    }
  }

  add_passes(checks, {check_id::kTarget, check_id::kOrder, check_id::kInstruction, check_id::kLabel},
             rules, n);
  CriticReport rep;
  rep.checks = std::move(checks);
  rep.verdict = verdict_for(rep.checks);
  return rep;
}

CriticReport critique(const ControlSequence& seq, const Plan& plan, std::string_view instructions,
                      const RuleSet& rules, const TemplateTable& templates,
                      const HeadLimits& limits) {
  CriticReport rep = check_physiology(seq, plan, rules, limits);
  CriticReport sem = check_semantic(seq, plan, instructions, rules, templates, limits);
  rep.checks.insert(rep.checks.end(), sem.checks.begin(), sem.checks.end());
  rep.verdict = verdict_for(rep.checks);
  return rep;
}

// --- repairs ---------------------------------------------------------------

namespace {

void stretch_blink(ControlSequence& seq, Run r, const RuleSet& rules) {
  const std::size_t n = seq.size();
  const std::size_t need = std::min(n, frames_for_ms(rules.blink_min_ms, seq.fps));
  double level = 0.0;
  for (std::size_t t = r.s; t <= r.e; ++t) {
    level = std::max(level, std::min(seq[t][Channel::AU43_L], seq[t][Channel::AU43_R]));
  }
  while (r.len() < need) {
    // Grow alternately to the right and the left.
    if ((r.len() % 2 == 1 || r.s == 0) && r.e + 1 < n) {
      ++r.e;
    } else if (r.s > 0) {
      --r.s;
    } else {
      break;
    }
  }
  for (std::size_t t = r.s; t <= r.e; ++t) {
    for (Channel c : {Channel::AU43_L, Channel::AU43_R}) seq[t][c] = std::max(seq[t][c], level);
  }
}

void clamp_range(ControlSequence& seq, Run r, Channel c, double cap) {
  for (std::size_t t = r.s; t <= r.e; ++t) seq[t][c] = std::min(seq[t][c], cap);
}

void repair_target(ControlSequence& seq, const Plan& plan, std::size_t k, Channel ch,
                   const RuleSet& rules) {
  const TargetInterval& iv = plan.events[k].channel_targets.at(ch);
  const Run span = settled_run(plan, k, seq.size(), rules);
  double mn = seq[span.s][ch], mx = mn;
  for (std::size_t t = span.s; t <= span.e; ++t) {
    mn = std::min(mn, seq[t][ch]);
    mx = std::max(mx, seq[t][ch]);
  }
  const Reach mode = reach_mode(iv);
  const double len = static_cast<double>(span.len());
  auto bump = [&](double delta, std::size_t peak_at) {
    // Smooth raised-cosine offset that is exactly `delta` at the extreme frame.
    for (std::size_t t = span.s; t <= span.e; ++t) {
      const double d = std::abs(static_cast<double>(t) - static_cast<double>(peak_at)) / len;
      const double w = 0.5 * (1.0 + std::cos(kPi * std::min(1.0, d)));
      seq[t][ch] += delta * w;
    }
  };
  auto argext = [&](bool want_max) {
    std::size_t best = span.s;
    for (std::size_t t = span.s; t <= span.e; ++t) {
      if (want_max ? seq[t][ch] > seq[best][ch] : seq[t][ch] < seq[best][ch]) best = t;
    }
    return best;
  };
  if (mode == Reach::Max || mode == Reach::Both) {
    if (mx > iv.hi) clamp_range(seq, span, ch, iv.hi);
    else if (mx < iv.lo) bump(iv.mid() - mx, argext(true));
  }
  if (mode == Reach::Min || mode == Reach::Both) {
    if (mn < iv.lo) {
      for (std::size_t t = span.s; t <= span.e; ++t) seq[t][ch] = std::max(seq[t][ch], iv.lo);
    } else if (mn > iv.hi) {
      bump(iv.mid() - mn, argext(false));
    }
  }
}

}  // namespace

ControlSequence apply_repairs(const ControlSequence& seq, const Plan& plan,
                              const CriticReport& report, const RuleSet& rules,
                              const HeadLimits& limits) {
  ControlSequence out = seq;
  const std::size_t n = out.size();
  for (const CheckResult* c : report.failures()) {
    const Run r{static_cast<std::size_t>(c->start_frame - 1),
                std::min(static_cast<std::size_t>(c->end_frame - 1), n - 1)};
    if (c->id == check_id::kBlinkDuration) {
      if (c->edits.front().action == "stretch") {
        stretch_blink(out, r, rules);
      } else {
        const double cap = exempt(plan, r, exemption::kProlongedBlink) ? rules.prolonged_blink_max_ms
                                                                       : rules.blink_max_ms;
        const auto keep = static_cast<std::size_t>(std::floor(cap * out.fps / 1000.0 + 1e-9));
        const Run tail{r.s + std::min(keep, r.len()), r.e};
        if (tail.s <= tail.e) {
          for (Channel ch : {Channel::AU43_L, Channel::AU43_R})
            clamp_range(out, tail, ch, rules.blink_threshold - 0.05);
        }
      }
    } else if (c->id == check_id::kInterBlink) {
      // Suppress the later blink of the pair.
      const auto eps = blink_episodes(out, rules.blink_threshold);
      for (const auto& b : eps) {
        if (b.e == r.e && b.s > r.s) {
          for (Channel ch : {Channel::AU43_L, Channel::AU43_R})
            clamp_range(out, b, ch, rules.blink_threshold - 0.05);
        }
      }
    } else if (c->id == check_id::kBlinkAsymmetry) {
      const double half = 0.5 * (rules.asymmetry_max - 0.01);
      for (std::size_t t = r.s; t <= r.e; ++t) {
        double& l = out[t][Channel::AU43_L];
        double& rr = out[t][Channel::AU43_R];
        if (std::abs(l - rr) <= 2.0 * half) continue;
        const double m = 0.5 * (l + rr);
        const double sgn = l > rr ? 1.0 : -1.0;
        l = m + sgn * half;
        rr = m - sgn * half;
      }
    } else if (c->id == check_id::kCoactivation) {
      const Channel a = *channel_from_name(c->channels[0]);
      const Channel b = *channel_from_name(c->channels[1]);
      const bool lid = b == Channel::AU43_L || b == Channel::AU43_R;
      for (std::size_t t = r.s; t <= r.e; ++t) {
        const Channel smaller = lid ? a : (out[t][a] <= out[t][b] ? a : b);
        out[t][smaller] = std::min(out[t][smaller], rules.coactivation_threshold);
      }
    } else if (c->id == check_id::kMainSequence) {
      const Channel g = *channel_from_name(c->channels[0]);
      if (c->edits.front().action == "slew_limit") {
        const double cap = gaze_cap(rules, out.fps);
        for (std::size_t t = 1; t < n; ++t) {
          const double d = out[t][g] - out[t - 1][g];
          out[t][g] = out[t - 1][g] + std::clamp(d, -cap, cap);
        }
      } else {
        clamp_range(out, r, g, rules.gaze_onset);
      }
    } else if (c->id == check_id::kGazeHead) {
      clamp_range(out, r, *channel_from_name(c->channels[0]), rules.gaze_head_threshold);
    } else if (c->id == check_id::kTarget && c->event_index) {
      repair_target(out, plan, *c->event_index, *channel_from_name(c->channels[0]), rules);
    }
  }
  sanitize_sequence(out, limits);
  return out;
}

Plan relax_plan(const Plan& plan, int level, const RuleSet& rules, const HeadLimits& limits) {
  Plan p = plan;
  for (auto& ev : p.events) {
    for (auto& [ch, iv] : ev.channel_targets) {
      const double d = level * rules.target_slack * channel_scale(index_of(ch), limits);
      const ChannelRange r = channel_range(ch, limits);
      iv.lo = std::max(r.lo, iv.lo - d);
      iv.hi = std::min(r.hi, iv.hi + d);
    }
  }
  return p;
}

RefineResult refine(const ControlSequence& seq, const Plan& plan, std::string_view instructions,
                    const PrototypeLibrary& lib, const RuleSet& rules, const RefineOptions& options) {
  const TemplateTable& templates = options.templates ? *options.templates : default_templates();
  const HeadLimits& limits = options.compose.limits;
  RefineResult res;
  res.controls = seq;
  res.plan = plan;
  const int max_rounds = options.max_comp_revisions + options.max_replans + 1;
  for (int round = 1; round <= max_rounds; ++round) {
    res.report = critique(res.controls, res.plan, instructions, rules, templates, limits);
    AuditEntry entry;
    entry.round = round;
    entry.failed_checks = res.report.failed_ids();
    if (res.report.verdict == Verdict::Pass) {
      entry.action = "accept";
      res.audit.push_back(std::move(entry));
      res.verdict = Verdict::Pass;
      return res;
    }
    const bool last = round == max_rounds;
    if (!last && res.report.verdict == Verdict::ReviseComposition &&
        res.composition_revisions < options.max_comp_revisions) {
      entry.action = "revise_composition";
      res.controls = apply_repairs(res.controls, res.plan, res.report, rules, limits);
      ++res.composition_revisions;
    } else if (!last && res.replans < options.max_replans) {
      entry.action = "revise_plan";
      ++res.replans;
      res.plan = relax_plan(plan, res.replans, rules, limits);
      res.controls = compose(res.plan, lib, options.initial_pose, options.compose);
    } else {
      entry.action = "fail";
      res.audit.push_back(std::move(entry));
      res.verdict = Verdict::Fail;
      res.report.verdict = Verdict::Fail;
      return res;
    }
    res.audit.push_back(std::move(entry));
  }
  res.verdict = Verdict::Fail;
  return res;
}

// --- serialization ---------------------------------------------------------

namespace {

json check_to_json(const CheckResult& c) {
  json j;
  j["id"] = c.id;
  j["passed"] = c.passed;
  j["start_frame"] = c.start_frame;
  j["end_frame"] = c.end_frame;
  j["message"] = c.message;
  j["channels"] = c.channels;
  j["event"] = c.event_index ? json(*c.event_index + 1) : json(nullptr);
  json edits = json::array();
  for (const auto& e : c.edits) edits.push_back({{"channel", e.channel}, {"action", e.action}, {"value", e.value}});
  j["edits"] = std::move(edits);
  return j;
}

json report_json(const CriticReport& r) {
  json j;
  j["verdict"] = verdict_name(r.verdict);
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back(check_to_json(c));
  j["checks"] = std::move(checks);
  return j;
}

struct Param {
  const char* rule;
  const char* key;
  double RuleSet::*field;
  bool unit;  // must lie in [0, 1]
};

constexpr std::array<Param, 21> kParams = {{
    {"blink_duration", "threshold", &RuleSet::blink_threshold, true},
    {"blink_duration", "min_ms", &RuleSet::blink_min_ms, false},
    {"blink_duration", "max_ms", &RuleSet::blink_max_ms, false},
    {"blink_duration", "prolonged_max_ms", &RuleSet::prolonged_blink_max_ms, false},
    {"inter_blink_interval", "min_ms", &RuleSet::inter_blink_min_ms, false},
    {"blink_asymmetry", "max_difference", &RuleSet::asymmetry_max, true},
    {"au_coactivation", "threshold", &RuleSet::coactivation_threshold, true},
    {"gaze_main_sequence", "max_delta_per_frame", &RuleSet::gaze_max_delta, true},
    {"gaze_main_sequence", "reference_fps", &RuleSet::gaze_reference_fps, false},
    {"gaze_main_sequence", "peak_ratio", &RuleSet::gaze_peak_ratio, false},
    {"gaze_main_sequence", "onset", &RuleSet::gaze_onset, true},
    {"gaze_head_coordination", "gaze_threshold", &RuleSet::gaze_head_threshold, true},
    {"gaze_head_coordination", "sustain_ms", &RuleSet::gaze_head_sustain_ms, false},
    {"gaze_head_coordination", "head_min_deg", &RuleSet::gaze_head_min_deg, false},
    {"gaze_head_coordination", "window_ms", &RuleSet::gaze_head_window_ms, false},
    {"semantic_target", "slack", &RuleSet::target_slack, true},
    {"semantic_target", "transition_ms", &RuleSet::transition_ms, false},
    {"semantic_instruction", "active", &RuleSet::active_threshold, true},
    {"semantic_label", "active", &RuleSet::active_threshold, true},
    {"semantic_label", "head_active_deg", &RuleSet::head_active_deg, false},
    {"control_bounds", "", nullptr, false},
}};

}  // namespace

RuleSet rules_from_json(std::string_view text) {
  const json j = detail::parse_json(text, "rules");
  const json* rules_j = &j;
  if (j.is_object() && j.contains("rules")) rules_j = &j.at("rules");
  if (!rules_j->is_object()) throw ParseError("$.rules: expected an object");
  RuleSet rs;
  const auto& ids = all_check_ids();
  for (const auto& [id, body] : rules_j->items()) {
    const std::string path = "$.rules." + id;
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) throw ParseError(path + ": unknown rule");
    if (!body.is_object()) throw ParseError(path + ": expected an object");
    for (const auto& [key, value] : body.items()) {
      if (key == "enabled") {
        if (!value.is_boolean()) throw ParseError(path + ".enabled: expected a boolean");
        if (value.get<bool>()) {
          rs.enabled.insert(id);
        } else {
          rs.enabled.erase(id);
        }
        continue;
      }
      const auto it = std::find_if(kParams.begin(), kParams.end(), [&](const Param& p) {
        return p.field && id == p.rule && key == p.key;
      });
      if (it == kParams.end()) throw ParseError(path + "." + key + ": unknown parameter");
      const double v = detail::require_number(value, path + "." + key);
      if (it->unit ? !(v >= 0.0 && v <= 1.0) : !(v > 0.0 && std::isfinite(v))) {
        throw ParseError(path + "." + key + (it->unit ? ": must lie in [0, 1]" : ": must be positive"));
      }
      rs.*(it->field) = v;
    }
  }
  return rs;
}

std::string rules_to_json(const RuleSet& rules) {
  json r = json::object();
  for (const auto& id : all_check_ids()) r[id] = {{"enabled", rules.is_enabled(id)}};
  for (const auto& p : kParams) {
    if (p.field) r[p.rule][p.key] = rules.*(p.field);
  }
  json j;
  j["rules"] = std::move(r);
  return j.dump(2) + "\n";
}

std::string report_to_json(const CriticReport& report) { return report_json(report).dump(2) + "\n"; }

std::string refine_to_json(const RefineResult& result) {
  json j;
  j["verdict"] = verdict_name(result.verdict);
  j["composition_revisions"] = result.composition_revisions;
  j["replans"] = result.replans;
  json audit = json::array();
  for (const auto& a : result.audit) {
    audit.push_back({{"round", a.round}, {"action", a.action}, {"failed_checks", a.failed_checks}});
  }
  j["audit"] = std::move(audit);
  j["report"] = report_json(result.report);
  return j.dump(2) + "\n";
}

}  // namespace ocular
