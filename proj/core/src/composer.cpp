#include "ocular/composer.h"

#include <algorithm>
#include <random>

#include "ocular/error.h"

namespace ocular {

Segment rescale_amplitude(Segment segment, const ChannelTargets& targets) {
  auto& frames = segment.controls.frames;
  if (frames.empty()) return segment;
  for (const auto& [ch, iv] : targets) {
    const std::size_t j = index_of(ch);
    double lo = frames.front()[j], hi = lo;
    for (const auto& f : frames) {
      lo = std::min(lo, f[j]);
      hi = std::max(hi, f[j]);
    }
    if (lo == iv.lo && hi == iv.hi) continue;
    if (hi == lo) {
      for (auto& f : frames) f[j] = iv.mid();
      continue;
    }
    const double gain = (iv.hi - iv.lo) / (hi - lo);
    for (auto& f : frames) f[j] = std::clamp(iv.lo + (f[j] - lo) * gain, iv.lo, iv.hi);
  }
  return segment;
}

ControlSequence stitch(const std::vector<Segment>& segments, int blend_frames, double fps) {
  ControlSequence out;
  out.fps = fps;
  std::vector<std::size_t> starts;
  for (const auto& s : segments) {
    starts.push_back(out.size());
    out.frames.insert(out.frames.end(), s.controls.frames.begin(), s.controls.frames.end());
  }
  if (blend_frames <= 0) return out;
  const auto n = static_cast<std::size_t>(blend_frames);

  for (std::size_t k = 1; k < segments.size(); ++k) {
    const auto& a = segments[k - 1].controls.frames;
    const auto& b = segments[k].controls.frames;
    if (a.empty() || b.empty()) continue;
    const std::size_t a0 = starts[k - 1];
    const std::size_t seam = starts[k];
    const std::size_t s = seam - std::min(n / 2, a.size());
    const std::size_t e = std::min(seam + b.size(), s + n);
    const double len = static_cast<double>(e - s);
    for (std::size_t t = s; t < e; ++t) {
      const double w = static_cast<double>(t - s + 1) / (len + 1.0);
      const ControlState& av = t < seam ? a[t - a0] : a.back();
      const ControlState& bv = t >= seam ? b[t - seam] : b.front();
      for (std::size_t j = 0; j < kChannelCount; ++j) {
        out[t][j] = (1.0 - w) * av[j] + w * bv[j];
      }
    }
  }
  return out;
}

std::pair<ChannelVector, ChannelVector> event_query(const StagedEvent& event,
                                                    const ChannelVector& weights) {
  ChannelVector q{}, w{};
  for (const auto& [ch, iv] : event.channel_targets) {
    q[index_of(ch)] = iv.mid();
    w[index_of(ch)] = weights[index_of(ch)];
  }
  return {q, w};
}

void pin_initial_pose(ControlSequence& seq, const InitialPose& pose, int blend_frames) {
  if (seq.empty()) return;
  const std::array<double, kHeadCount> target = {pose.yaw, pose.pitch, pose.roll};
  const std::size_t n = static_cast<std::size_t>(std::max(blend_frames, 0));
  const std::size_t head0 = kAuCount + kGazeCount;
  for (std::size_t t = 0; t <= n && t < seq.size(); ++t) {
    const double w = static_cast<double>(t) / static_cast<double>(n + 1);
    for (std::size_t h = 0; h < kHeadCount; ++h) {
      double& v = seq[t][head0 + h];
      v = t == 0 ? target[h] : (1.0 - w) * target[h] + w * v;
    }
  }
}

Composition compose_detailed(const Plan& plan, const PrototypeLibrary& lib,
                             const InitialPose& initial_pose, const ComposeOptions& options) {
  if (lib.empty()) throw Error("no prototypes available");
  const bool bucket = !lib.ids_for(plan.label).empty();
  std::mt19937_64 rng(options.seed.value_or(0));

  Composition comp;
  for (std::size_t k = 0; k < plan.events.size(); ++k) {
    const StagedEvent& ev = plan.events[k];
    const auto [q, w] = event_query(ev, options.weights);
    const std::size_t want = options.seed ? std::max<std::size_t>(options.top_k, 1) : 1;
    const auto hits = query(lib, q, w,
                            bucket ? std::optional<std::string_view>(plan.label) : std::nullopt,
                            want, options.limits);
    const QueryHit& pick = options.seed ? hits[rng() % hits.size()] : hits.front();

    Segment seg;
    seg.source_prototype = pick.id;
    seg.event_index = k;
    seg.controls = resample_sequence(lib.at(pick.id).controls,
                                     static_cast<std::size_t>(ev.duration()));
    comp.segments.push_back(rescale_amplitude(std::move(seg), ev.channel_targets));
  }
  comp.controls = stitch(comp.segments, options.blend_frames, plan.fps);
  pin_initial_pose(comp.controls, initial_pose, options.blend_frames);
  sanitize_sequence(comp.controls, options.limits);
  return comp;
}

ControlSequence compose(const Plan& plan, const PrototypeLibrary& lib,
                        const InitialPose& initial_pose, const ComposeOptions& options) {
  return compose_detailed(plan, lib, initial_pose, options).controls;
}

}  // namespace ocular
