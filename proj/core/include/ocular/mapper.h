#pragma once

// Mapping layer: controls -> 62 eye-region keypoints.
//
// Conventions (canonical face units, roughly centimetres):
//   * y is up, the camera looks down -z, the face looks toward +z.
//   * The subject's left side is +x.
//   * yaw rotates about +y; positive yaw turns the face toward the subject's
//     left (+x). pitch rotates about -x; positive pitch raises the chin.
//     roll rotates about the view axis +z; positive roll maps +x onto +y.
//   * R = R_roll * R_pitch * R_yaw, applied about the template centroid.
//
// Point layout ("cogportrait-62-v1"):
//   [0, 21)   left eye:  8 upper lid (inner->outer, corners at 0 and 7),
//                        8 lower lid, 4 iris (top, lateral, bottom, medial),
//                        1 pupil
//   [21, 42)  right eye, same order
//   [42, 52)  left eyebrow, inner->outer
//   [52, 62)  right eyebrow

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "ocular/control.h"
#include "ocular/geometry.h"

namespace ocular {

inline constexpr std::size_t kKeypointCount = 62;
inline constexpr const char* kKeypointLayout = "cogportrait-62-v1";

namespace layout {
inline constexpr std::size_t kEyeBlock = 21;
inline constexpr std::size_t kUpperLid = 0;  // offsets within an eye block
inline constexpr std::size_t kLowerLid = 8;
inline constexpr std::size_t kIris = 16;
inline constexpr std::size_t kPupil = 20;
inline constexpr std::size_t kLidPoints = 8;
inline constexpr std::size_t kIrisPoints = 4;
inline constexpr std::size_t kLeftEye = 0;
inline constexpr std::size_t kRightEye = 21;
inline constexpr std::size_t kLeftBrow = 42;
inline constexpr std::size_t kRightBrow = 52;
inline constexpr std::size_t kBrowPoints = 10;

inline constexpr std::size_t kLeftPupil = kLeftEye + kPupil;
inline constexpr std::size_t kRightPupil = kRightEye + kPupil;

/// True for iris and pupil points of either eye.
constexpr bool is_iris_or_pupil(std::size_t i) {
  const std::size_t k = i < kLeftBrow ? i % kEyeBlock : 0;
  return i < kLeftBrow && k >= kIris;
}

/// Index of the bilaterally mirrored point.
constexpr std::size_t mirror_index(std::size_t i) {
  if (i < kRightEye) return i + kEyeBlock;
  if (i < kLeftBrow) return i - kEyeBlock;
  if (i < kRightBrow) return i + kBrowPoints;
  return i - kBrowPoints;
}
}  // namespace layout

using PointFrame3D = std::array<Vec3, kKeypointCount>;

struct KeypointFrame {
  std::array<Vec2, kKeypointCount> points{};
  friend bool operator==(const KeypointFrame&, const KeypointFrame&) = default;
};

struct KeypointSequence {
  std::vector<KeypointFrame> frames;
  double fps = 25.0;
  std::size_t size() const { return frames.size(); }
};

struct KeypointSequence3D {
  std::vector<PointFrame3D> frames;
  double fps = 25.0;
  std::size_t size() const { return frames.size(); }
};

/// Weak-perspective camera: the rotation centre lands on `principal` and
/// canonical units are scaled by `scale`; image y grows downward.
struct WeakPerspective {
  double scale = 0.075;
  Vec2 principal{0.5, 0.5};
};

struct DeformationModel {
  PointFrame3D template_points{};
  /// Per-unit-intensity displacement of every point, one basis per AU channel.
  std::array<PointFrame3D, kAuCount> au_bases{};
  /// Per-unit-magnitude displacement for gaze_left, gaze_right, gaze_up,
  /// gaze_down; nonzero on iris and pupil points only.
  std::array<PointFrame3D, kGazeCount> gaze_offsets{};
  WeakPerspective projection;

  Vec3 rotation_center() const;
};

/// Shipped canonical template with hand-authored linear AU bases.
const DeformationModel& default_deformation_model();

/// R = R_roll * R_pitch * R_yaw for angles in degrees.
Mat3 rotation_matrix(double yaw_deg, double pitch_deg, double roll_deg);

struct EulerAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};
/// Inverse of rotation_matrix for |pitch| < 90 degrees.
EulerAngles euler_from_rotation(const Mat3& r);

/// Deformed, rotated points before projection.
PointFrame3D deform_and_rotate(const ControlState& c, const DeformationModel& model);
KeypointFrame project(const PointFrame3D& points, const DeformationModel& model);

struct MappedFrame {
  KeypointFrame keypoints;
  PointFrame3D points;
};

/// Throws ocular::Error naming the first violated invariant when `c` is not a
/// valid control state.
MappedFrame map_frame(const ControlState& c, const DeformationModel& model);

struct MappedSequence {
  KeypointSequence keypoints;
  KeypointSequence3D points;
};

/// Errors from map_frame are rethrown with the 0-based frame index.
MappedSequence map_sequence(const ControlSequence& seq, const DeformationModel& model);

/// Midpoint of the two iris centres and their distance in normalised image
/// coordinates.
std::pair<Vec2, double> iris_midpoint_and_distance(const KeypointFrame& frame);

}  // namespace ocular
