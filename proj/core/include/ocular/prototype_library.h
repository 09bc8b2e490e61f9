#pragma once

// Prototype library: labelled real-behaviour trajectories pairing a control
// sequence with its keypoint sequence, plus AU inversion from keypoints and
// weighted channel-mean retrieval.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocular/control.h"
#include "ocular/mapper.h"

namespace ocular {

inline constexpr int kLibraryFormatVersion = 1;

using PrototypeId = std::size_t;
using ChannelVector = std::array<double, kChannelCount>;

struct Prototype {
  std::string label;
  ControlSequence controls;
  /// Rotated, unprojected points; head pose is relative to the rest pose.
  KeypointSequence3D keypoints;
  ChannelSummary summary;
};

struct PrototypeRecord {
  std::string label;
  ControlSequence controls;
  KeypointSequence3D keypoints;
};

class PrototypeLibrary {
 public:
  PrototypeLibrary() = default;

  const std::vector<Prototype>& prototypes() const { return prototypes_; }
  const std::map<std::string, std::vector<PrototypeId>, std::less<>>& index() const {
    return index_;
  }
  int version() const { return version_; }
  std::size_t size() const { return prototypes_.size(); }
  bool empty() const { return prototypes_.empty(); }
  const Prototype& at(PrototypeId id) const { return prototypes_.at(id); }

  /// Ids carrying `label`, or an empty span.
  std::span<const PrototypeId> ids_for(std::string_view label) const;

  friend PrototypeLibrary build_library(std::vector<PrototypeRecord> records);

 private:
  std::vector<Prototype> prototypes_;
  std::map<std::string, std::vector<PrototypeId>, std::less<>> index_;
  int version_ = kLibraryFormatVersion;
};

/// Caches summaries and builds the label index. No deduplication. Throws
/// ocular::Error naming the record when control and keypoint lengths differ.
PrototypeLibrary build_library(std::vector<PrototypeRecord> records);

// --- retrieval -------------------------------------------------------------

/// AU channels 2.0, gaze 1.0, head 1.0.
ChannelVector default_channel_weights();

/// sum_j w_j |q_j - p_j| with head channels divided by their range
/// half-width so angles and unit intensities share a scale.
double match_distance(const ChannelVector& target, const ChannelVector& prototype_mean,
                      const ChannelVector& weights, const HeadLimits& limits = {});

struct QueryHit {
  PrototypeId id = 0;
  double distance = 0.0;
  friend bool operator==(const QueryHit&, const QueryHit&) = default;
};

/// Up to k hits sorted by ascending distance, ties by ascending id. An empty
/// candidate set yields an empty result. Throws when k == 0 or a weight is
/// negative or non-finite.
std::vector<QueryHit> query(const PrototypeLibrary& lib, const ChannelVector& target,
                            const ChannelVector& weights,
                            std::optional<std::string_view> label_filter, std::size_t k,
                            const HeadLimits& limits = {});

// --- AU inversion ----------------------------------------------------------

struct NeutralBaseline {
  PointFrame3D points{};
};

/// Rest-pose template of a deformation model.
NeutralBaseline neutral_baseline(const DeformationModel& model);
/// Mean of rest-expression frames. Throws on an empty span.
NeutralBaseline estimate_baseline(std::span<const PointFrame3D> rest_frames);
bool is_bilaterally_symmetric(const NeutralBaseline& b, double tol = 1e-6);

/// Recovers one control state from rotated 3-D keypoints: rigid alignment to
/// the baseline gives the head angles, non-negative least squares over the AU
/// bases on lid and brow points gives the AUs, and the iris/pupil residual
/// gives gaze. Throws "degenerate frame" for collapsed input and reports
/// non-convergent alignment.
ControlState invert_frame(const PointFrame3D& points, const NeutralBaseline& baseline,
                          const DeformationModel& model);

/// Frame-wise invert_frame; errors carry the 0-based frame index.
ControlSequence invert_controls(const KeypointSequence3D& keypoints,
                                const NeutralBaseline& baseline, const DeformationModel& model);

// --- persistence -----------------------------------------------------------

std::string library_to_json(const PrototypeLibrary& lib);
/// Throws ParseError("malformed library file: ...") or a version error.
PrototypeLibrary library_from_json(std::string_view text);
void save_library(const PrototypeLibrary& lib, const std::filesystem::path& path);
PrototypeLibrary load_library(const std::filesystem::path& path);

}  // namespace ocular
