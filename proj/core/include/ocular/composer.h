#pragma once

// Builds the initial control sequence from a plan: per event, retrieve a
// prototype, trim it to the event length, rescale targeted channels and
// stitch the segments with a linear cross-fade.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ocular/control.h"
#include "ocular/planner.h"
#include "ocular/prototype_library.h"

namespace ocular {

struct Segment {
  ControlSequence controls;
  PrototypeId source_prototype = 0;
  std::size_t event_index = 0;
};

struct ComposeOptions {
  ChannelVector weights = default_channel_weights();
  int blend_frames = 3;
  /// When set, each event picks uniformly among its top_k hits.
  std::optional<std::uint64_t> seed;
  std::size_t top_k = 3;
  HeadLimits limits;
};

struct Composition {
  ControlSequence controls;
  std::vector<Segment> segments;
};

/// Affinely maps each targeted channel's [min, max] onto [lo, hi]; constant
/// channels go to the interval midpoint. Untargeted channels are untouched.
Segment rescale_amplitude(Segment segment, const ChannelTargets& targets);

/// Concatenates segments, cross-fading `blend_frames` frames centred on
/// each seam. Frames in the window blend the outgoing segment (held at its
/// last value past the seam) with the incoming one (held at its first value
/// before the seam), using weights (i + 1) / (n + 1).
ControlSequence stitch(const std::vector<Segment>& segments, int blend_frames, double fps);

/// Retrieval query for one event: interval midpoints on targeted channels.
/// Untargeted channels get zero weight.
std::pair<ChannelVector, ChannelVector> event_query(const StagedEvent& event,
                                                    const ChannelVector& weights);

/// Throws ocular::Error("no prototypes available") for an empty library.
Composition compose_detailed(const Plan& plan, const PrototypeLibrary& lib,
                             const InitialPose& initial_pose, const ComposeOptions& options = {});

ControlSequence compose(const Plan& plan, const PrototypeLibrary& lib,
                        const InitialPose& initial_pose, const ComposeOptions& options = {});

/// Overwrites frame 1's head channels with the pose and fades back to the
/// original values over `blend_frames` frames.
void pin_initial_pose(ControlSequence& seq, const InitialPose& pose, int blend_frames);

}  // namespace ocular
