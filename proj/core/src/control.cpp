#include "ocular/control.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "ocular/error.h"

namespace ocular {

std::string_view channel_name(Channel c) { return kChannelNames[index_of(c)]; }

std::optional<Channel> channel_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (kChannelNames[i] == name) return channel_at(i);
  }
  return std::nullopt;
}

ChannelRange channel_range(std::size_t channel, const HeadLimits& limits) {
  switch (channel_at(channel)) {
    case Channel::Yaw:
      return {-limits.yaw, limits.yaw};
    case Channel::Pitch:
      return {-limits.pitch, limits.pitch};
    case Channel::Roll:
      return {-limits.roll, limits.roll};
    default:
      return {0.0, 1.0};
  }
}

double channel_scale(std::size_t channel, const HeadLimits& limits) {
  const ChannelRange r = channel_range(channel, limits);
  return channel_kind(channel) == ChannelKind::Head ? 0.5 * (r.hi - r.lo) : 1.0;
}

std::vector<double> ControlSequence::channel(Channel c) const {
  std::vector<double> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f[c]);
  return out;
}

void ControlSequence::set_channel(Channel c, std::span<const double> values) {
  if (values.size() != frames.size()) {
    throw Error("set_channel: length mismatch");
  }
  for (std::size_t t = 0; t < frames.size(); ++t) frames[t][c] = values[t];
}

void ValidationReport::merge(const ValidationReport& other) {
  violations.insert(violations.end(), other.violations.begin(), other.violations.end());
}

ValidationReport validate_control_state(const ControlState& c, const HeadLimits& limits,
                                        std::size_t frame) {
  ValidationReport report;
  auto add = [&](std::string_view channel, std::string_view rule, std::string message) {
    report.violations.push_back(
        Violation{frame, std::string(channel), std::string(rule), std::move(message)});
  };

  for (std::size_t i = 0; i < kChannelCount; ++i) {
    const double v = c[i];
    if (!std::isfinite(v)) {
      add(kChannelNames[i], rule_id::kNonFinite, "value is not finite");
      continue;
    }
    const ChannelRange r = channel_range(i, limits);
    if (v < r.lo || v > r.hi) {
      add(kChannelNames[i], rule_id::kChannelRange,
          "value " + std::to_string(v) + " outside [" + std::to_string(r.lo) + ", " +
              std::to_string(r.hi) + "]");
    }
  }

  if (c[Channel::GazeLeft] * c[Channel::GazeRight] != 0.0) {
    add("gaze_left", rule_id::kOpposingGaze, "opposing gaze co-active (left/right)");
  }
  if (c[Channel::GazeUp] * c[Channel::GazeDown] != 0.0) {
    add("gaze_up", rule_id::kOpposingGaze, "opposing gaze co-active (up/down)");
  }
  if (c[Channel::AU5_L] > 0.5 && c[Channel::AU43_L] > 0.5) {
    add("AU5_L", rule_id::kLidConflict, "lid raise/closure conflict (left)");
  }
  if (c[Channel::AU5_R] > 0.5 && c[Channel::AU43_R] > 0.5) {
    add("AU5_R", rule_id::kLidConflict, "lid raise/closure conflict (right)");
  }
  return report;
}

ValidationReport validate_sequence(const ControlSequence& seq, const HeadLimits& limits) {
  ValidationReport report;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    report.merge(validate_control_state(seq[t], limits, t));
  }
  return report;
}

namespace {

void resolve_opposing(double& a, double& b) {
  if (a * b == 0.0) return;
  if (a >= b) {
    a -= b;
    b = 0.0;
  } else {
    b -= a;
    a = 0.0;
  }
}

}  // namespace

ControlState sanitize_state(ControlState c, const HeadLimits& limits) {
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (!std::isfinite(c[i])) c[i] = 0.0;
    const ChannelRange r = channel_range(i, limits);
    c[i] = std::clamp(c[i], r.lo, r.hi);
  }
  // Net direction wins; an opposing pair collapses to its signed difference.
  resolve_opposing(c[Channel::GazeLeft], c[Channel::GazeRight]);
  resolve_opposing(c[Channel::GazeUp], c[Channel::GazeDown]);
  if (c[Channel::AU43_L] > 0.5) c[Channel::AU5_L] = std::min(c[Channel::AU5_L], 0.5);
  if (c[Channel::AU43_R] > 0.5) c[Channel::AU5_R] = std::min(c[Channel::AU5_R], 0.5);
  return c;
}

void sanitize_sequence(ControlSequence& seq, const HeadLimits& limits) {
  for (auto& f : seq.frames) f = sanitize_state(f, limits);
}

ChannelSummary channel_summary(const ControlSequence& seq) {
  if (seq.empty()) throw Error("empty sequence");
  ChannelSummary s;
  s.min = seq[0].values;
  s.max = seq[0].values;
  std::array<double, kChannelCount> sum{};
  for (const auto& f : seq.frames) {
    for (std::size_t j = 0; j < kChannelCount; ++j) {
      sum[j] += f[j];
      s.min[j] = std::min(s.min[j], f[j]);
      s.max[j] = std::max(s.max[j], f[j]);
    }
  }
  const double n = static_cast<double>(seq.size());
  for (std::size_t j = 0; j < kChannelCount; ++j) {
    // Guard min <= mean <= max against accumulated rounding.
    s.mean[j] = std::clamp(sum[j] / n, s.min[j], s.max[j]);
  }
  return s;
}

ControlSequence resample_sequence(const ControlSequence& seq, std::size_t target_len) {
  if (target_len == 0) throw Error("resample_sequence: target length must be >= 1");
  if (seq.empty()) throw Error("empty sequence");

  const std::size_t n = seq.size();
  if (target_len == n) return seq;

  ControlSequence out;
  out.fps = seq.fps;
  out.frames.resize(target_len);
  for (std::size_t i = 0; i < target_len; ++i) {
    if (n == 1 || target_len == 1) {
      out.frames[i] = seq[0];
      continue;
    }
    const double pos =
        static_cast<double>(i * (n - 1)) / static_cast<double>(target_len - 1);
    const auto i0 = std::min(static_cast<std::size_t>(pos), n - 1);
    const double frac = pos - static_cast<double>(i0);
    if (frac == 0.0 || i0 + 1 >= n) {
      out.frames[i] = seq[i0];
      continue;
    }
    const ControlState& a = seq[i0];
    const ControlState& b = seq[i0 + 1];
    ControlState& o = out.frames[i];
    for (std::size_t j = 0; j < kChannelCount; ++j) {
      o[j] = a[j] + (b[j] - a[j]) * frac;
      if (channel_kind(j) != ChannelKind::Head) o[j] = std::clamp(o[j], 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace ocular
