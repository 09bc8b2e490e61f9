#pragma once

// 17-channel facial control space: 10 eye-region action units, 4 gaze
// magnitudes and 3 head angles. Everything downstream (retrieval,
// composition, the critic, the mapper, metrics) indexes channels through the
// constants defined here.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ocular {

inline constexpr std::size_t kAuCount = 10;
inline constexpr std::size_t kGazeCount = 4;
inline constexpr std::size_t kHeadCount = 3;
inline constexpr std::size_t kChannelCount = kAuCount + kGazeCount + kHeadCount;

enum class Channel : std::uint8_t {
  AU1 = 0,  // inner brow raiser, bilateral
  AU2_L,    // outer brow raiser
  AU2_R,
  AU4_L,  // brow lowerer
  AU4_R,
  AU5_L,  // upper lid raiser
  AU5_R,
  AU7,     // lid tightener, bilateral
  AU43_L,  // eye closure
  AU43_R,
  GazeLeft,
  GazeRight,
  GazeUp,
  GazeDown,
  Yaw,
  Pitch,
  Roll,
};

enum class ChannelKind : std::uint8_t { Au, Gaze, Head };

inline constexpr std::array<std::string_view, kChannelCount> kChannelNames = {
    "AU1",       "AU2_L",      "AU2_R",   "AU4_L",     "AU4_R", "AU5_L",
    "AU5_R",     "AU7",        "AU43_L",  "AU43_R",    "gaze_left",
    "gaze_right", "gaze_up",   "gaze_down", "yaw",     "pitch", "roll"};

constexpr std::size_t index_of(Channel c) { return static_cast<std::size_t>(c); }
constexpr Channel channel_at(std::size_t i) { return static_cast<Channel>(i); }

constexpr ChannelKind channel_kind(std::size_t i) {
  if (i < kAuCount) return ChannelKind::Au;
  if (i < kAuCount + kGazeCount) return ChannelKind::Gaze;
  return ChannelKind::Head;
}
constexpr ChannelKind channel_kind(Channel c) { return channel_kind(index_of(c)); }

std::string_view channel_name(Channel c);
std::optional<Channel> channel_from_name(std::string_view name);

/// Symmetric head-angle limits in degrees. Defaults are anatomical ranges
/// and may be overridden from a pipeline config.
struct HeadLimits {
  double yaw = 90.0;
  double pitch = 60.0;
  double roll = 45.0;
};

struct ChannelRange {
  double lo = 0.0;
  double hi = 1.0;
};

ChannelRange channel_range(std::size_t channel, const HeadLimits& limits = {});
inline ChannelRange channel_range(Channel c, const HeadLimits& limits = {}) {
  return channel_range(index_of(c), limits);
}

/// Unit used to bring a channel to the unit scale of AU intensities: 1 for
/// AU and gaze channels, the range half-width for head angles.
double channel_scale(std::size_t channel, const HeadLimits& limits = {});

struct ControlState {
  std::array<double, kChannelCount> values{};

  double& operator[](Channel c) { return values[index_of(c)]; }
  double operator[](Channel c) const { return values[index_of(c)]; }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  std::span<double, kAuCount> au() { return std::span(values).first<kAuCount>(); }
  std::span<const double, kAuCount> au() const {
    return std::span(values).first<kAuCount>();
  }
  std::span<double, kGazeCount> gaze() {
    return std::span(values).subspan<kAuCount, kGazeCount>();
  }
  std::span<const double, kGazeCount> gaze() const {
    return std::span(values).subspan<kAuCount, kGazeCount>();
  }
  std::span<double, kHeadCount> head() { return std::span(values).last<kHeadCount>(); }
  std::span<const double, kHeadCount> head() const {
    return std::span(values).last<kHeadCount>();
  }

  friend bool operator==(const ControlState&, const ControlState&) = default;
};

struct ControlSequence {
  std::vector<ControlState> frames;
  double fps = 25.0;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  ControlState& operator[](std::size_t t) { return frames[t]; }
  const ControlState& operator[](std::size_t t) const { return frames[t]; }

  /// Values of one channel across all frames.
  std::vector<double> channel(Channel c) const;
  void set_channel(Channel c, std::span<const double> values);

  friend bool operator==(const ControlSequence&, const ControlSequence&) = default;
};

struct ChannelSummary {
  std::array<double, kChannelCount> mean{};
  std::array<double, kChannelCount> max{};
  std::array<double, kChannelCount> min{};

  friend bool operator==(const ChannelSummary&, const ChannelSummary&) = default;
};

struct Violation {
  std::size_t frame = 0;  // 0-based
  std::string channel;
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  void merge(const ValidationReport& other);
};

namespace rule_id {
inline constexpr std::string_view kChannelRange = "channel_range";
inline constexpr std::string_view kNonFinite = "non_finite";
inline constexpr std::string_view kOpposingGaze = "opposing_gaze";
inline constexpr std::string_view kLidConflict = "lid_conflict";
}  // namespace rule_id

/// Checks the range, opposing-gaze and lid-conflict invariants of one frame.
/// Never throws; `frame` is only copied into the reported violations.
ValidationReport validate_control_state(const ControlState& c,
                                        const HeadLimits& limits = {},
                                        std::size_t frame = 0);

ValidationReport validate_sequence(const ControlSequence& seq,
                                   const HeadLimits& limits = {});

/// Projects a state onto the valid set: clamps ranges, collapses co-active
/// opposing gaze channels to their net direction and caps the lid raiser at
/// 0.5 while the same-side closure exceeds 0.5.
ControlState sanitize_state(ControlState c, const HeadLimits& limits = {});
void sanitize_sequence(ControlSequence& seq, const HeadLimits& limits = {});

/// Throws ocular::Error("empty sequence") for an empty input.
ChannelSummary channel_summary(const ControlSequence& seq);

/// Linear resampling to `target_len` frames. Endpoints are preserved
/// exactly; AU and gaze channels are clamped to [0, 1] afterwards.
ControlSequence resample_sequence(const ControlSequence& seq, std::size_t target_len);

}  // namespace ocular
