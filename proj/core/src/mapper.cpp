#include "ocular/mapper.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "ocular/error.h"

namespace ocular {

namespace {

// Left-eye geometry; the right side is the x-mirror.
constexpr double kInnerCorner = 1.55;
constexpr double kEyeWidth = 3.0;
constexpr double kEyeCenterX = 3.05;
constexpr double kEyeCenterY = 0.08;
constexpr double kEyeballCenterZ = -0.8;
constexpr double kEyeballRadius = 1.2;
constexpr double kIrisRadius = 0.58;

constexpr double kGazeYawMax = 30.0;    // degrees at unit horizontal gaze
constexpr double kGazePitchMax = 25.0;  // degrees at unit vertical gaze

Vec3 mirror(Vec3 v) { return {-v.x, v.y, v.z}; }

double upper_u(std::size_t k) { return static_cast<double>(k) / 7.0; }
double lower_u(std::size_t k) { return static_cast<double>(k + 1) / 9.0; }
double brow_u(std::size_t k) { return static_cast<double>(k) / 9.0; }

PointFrame3D build_template() {
  PointFrame3D p{};
  using namespace layout;
  for (std::size_t k = 0; k < kLidPoints; ++k) {
    const double u = upper_u(k);
    const double s = std::sin(kPi * u);
    p[kLeftEye + kUpperLid + k] = {kInnerCorner + kEyeWidth * u, 0.62 * s,
                                   0.35 * s - 0.45 * u};
  }
  for (std::size_t k = 0; k < kLidPoints; ++k) {
    const double u = lower_u(k);
    const double s = std::sin(kPi * u);
    p[kLeftEye + kLowerLid + k] = {kInnerCorner + kEyeWidth * u, -0.42 * s,
                                   0.30 * s - 0.45 * u};
  }
  const double ring_z =
      kEyeballCenterZ + std::sqrt(kEyeballRadius * kEyeballRadius - kIrisRadius * kIrisRadius);
  p[kLeftEye + kIris + 0] = {kEyeCenterX, kEyeCenterY + kIrisRadius, ring_z};
  p[kLeftEye + kIris + 1] = {kEyeCenterX + kIrisRadius, kEyeCenterY, ring_z};
  p[kLeftEye + kIris + 2] = {kEyeCenterX, kEyeCenterY - kIrisRadius, ring_z};
  p[kLeftEye + kIris + 3] = {kEyeCenterX - kIrisRadius, kEyeCenterY, ring_z};
  p[kLeftEye + kPupil] = {kEyeCenterX, kEyeCenterY, kEyeballCenterZ + kEyeballRadius};
  for (std::size_t k = 0; k < kBrowPoints; ++k) {
    const double u = brow_u(k);
    p[kLeftBrow + k] = {1.2 + 4.0 * u, 1.45 + 0.35 * std::sin(kPi * (0.15 + 0.7 * u)),
                        0.55 - 0.7 * u * u};
  }
  for (std::size_t i = 0; i < kKeypointCount; ++i) {
    const std::size_t m = mirror_index(i);
    if (m > i) p[m] = mirror(p[i]);
  }
  return p;
}

void mirror_into(PointFrame3D& basis, std::size_t from_block, std::size_t count,
                 std::size_t to_block) {
  for (std::size_t k = 0; k < count; ++k) basis[to_block + k] = mirror(basis[from_block + k]);
}

std::array<PointFrame3D, kAuCount> build_au_bases() {
  using namespace layout;
  std::array<PointFrame3D, kAuCount> b{};
  auto& au1 = b[index_of(Channel::AU1)];
  auto& au2l = b[index_of(Channel::AU2_L)];
  auto& au4l = b[index_of(Channel::AU4_L)];
  auto& au5l = b[index_of(Channel::AU5_L)];
  auto& au7 = b[index_of(Channel::AU7)];
  auto& au43l = b[index_of(Channel::AU43_L)];

  for (std::size_t k = 0; k < kBrowPoints; ++k) {
    const double u = brow_u(k);
    const double inner = std::max(0.0, 1.0 - u / 0.6);
    const double outer = std::max(0.0, (u - 0.35) / 0.65);
    const double whole = 1.0 - 0.5 * u;
    au1[kLeftBrow + k] = {0.0, 0.55 * inner, 0.06 * inner};
    au2l[kLeftBrow + k] = {0.05 * outer, 0.50 * outer, -0.02 * outer};
    // Brow lowerer also pulls the brow toward the midline (-x on the left).
    au4l[kLeftBrow + k] = {-0.18 * whole, -0.40 * whole, 0.04 * whole};
  }
  mirror_into(au1, kLeftBrow, kBrowPoints, kRightBrow);

  // Lid corners (upper k = 0 and 7) stay fixed under every AU.
  for (std::size_t k = 1; k + 1 < kLidPoints; ++k) {
    const double s = std::sin(kPi * upper_u(k));
    au5l[kLeftEye + kUpperLid + k] = {0.0, 0.22 * s, 0.04 * s};
    au7[kLeftEye + kUpperLid + k] = {0.0, -0.10 * s, 0.0};
    au43l[kLeftEye + kUpperLid + k] = {0.0, -0.95 * s, -0.03 * s};
  }
  for (std::size_t k = 0; k < kLidPoints; ++k) {
    const double s = std::sin(kPi * lower_u(k));
    au7[kLeftEye + kLowerLid + k] = {0.03 * s, 0.16 * s, 0.02 * s};
    au43l[kLeftEye + kLowerLid + k] = {0.0, 0.08 * s, 0.0};
  }
  mirror_into(au7, kLeftEye, 2 * kLidPoints, kRightEye);

  auto mirror_basis = [](const PointFrame3D& left) {
    PointFrame3D right{};
    for (std::size_t i = 0; i < kKeypointCount; ++i) right[mirror_index(i)] = mirror(left[i]);
    return right;
  };
  b[index_of(Channel::AU2_R)] = mirror_basis(au2l);
  b[index_of(Channel::AU4_R)] = mirror_basis(au4l);
  b[index_of(Channel::AU5_R)] = mirror_basis(au5l);
  b[index_of(Channel::AU43_R)] = mirror_basis(au43l);
  return b;
}

// Gaze displaces iris and pupil by the rigid eyeball rotation at full
// magnitude; intermediate magnitudes scale the displacement linearly.
std::array<PointFrame3D, kGazeCount> build_gaze_offsets(const PointFrame3D& tmpl) {
  using namespace layout;
  auto ry = [](double deg) { return rotation_matrix(deg, 0.0, 0.0); };
  auto rp = [](double deg) { return rotation_matrix(0.0, deg, 0.0); };
  const std::array<Mat3, kGazeCount> rotations = {ry(kGazeYawMax), ry(-kGazeYawMax),
                                                  rp(kGazePitchMax), rp(-kGazePitchMax)};
  std::array<PointFrame3D, kGazeCount> out{};
  for (std::size_t d = 0; d < kGazeCount; ++d) {
    for (std::size_t eye : {kLeftEye, kRightEye}) {
      const double cx = eye == kLeftEye ? kEyeCenterX : -kEyeCenterX;
      const Vec3 center{cx, kEyeCenterY, kEyeballCenterZ};
      for (std::size_t k = kIris; k <= kPupil; ++k) {
        const Vec3 rel = tmpl[eye + k] - center;
        out[d][eye + k] = rotations[d] * rel - rel;
      }
    }
  }
  return out;
}

DeformationModel build_default_model() {
  DeformationModel m;
  m.template_points = build_template();
  m.au_bases = build_au_bases();
  m.gaze_offsets = build_gaze_offsets(m.template_points);
  return m;
}

}  // namespace

Vec3 DeformationModel::rotation_center() const {
  Vec3 c;
  for (const auto& p : template_points) c += p;
  return (1.0 / static_cast<double>(kKeypointCount)) * c;
}

const DeformationModel& default_deformation_model() {
  static const DeformationModel model = build_default_model();
  return model;
}

Mat3 rotation_matrix(double yaw_deg, double pitch_deg, double roll_deg) {
  const double y = deg_to_rad(yaw_deg);
  const double p = -deg_to_rad(pitch_deg);  // about -x
  const double r = deg_to_rad(roll_deg);
  const Mat3 ry{{std::cos(y), 0, std::sin(y), 0, 1, 0, -std::sin(y), 0, std::cos(y)}};
  const Mat3 rx{{1, 0, 0, 0, std::cos(p), -std::sin(p), 0, std::sin(p), std::cos(p)}};
  const Mat3 rz{{std::cos(r), -std::sin(r), 0, std::sin(r), std::cos(r), 0, 0, 0, 1}};
  return rz * rx * ry;
}

EulerAngles euler_from_rotation(const Mat3& r) {
  const double s = std::clamp(r(2, 1), -1.0, 1.0);
  EulerAngles e;
  e.pitch = -rad_to_deg(std::asin(s));
  e.yaw = rad_to_deg(std::atan2(-r(2, 0), r(2, 2)));
  e.roll = rad_to_deg(std::atan2(-r(0, 1), r(1, 1)));
  return e;
}

PointFrame3D deform_and_rotate(const ControlState& c, const DeformationModel& model) {
  PointFrame3D p = model.template_points;
  for (std::size_t j = 0; j < kAuCount; ++j) {
    const double a = c[j];
    if (a == 0.0) continue;
    for (std::size_t i = 0; i < kKeypointCount; ++i) p[i] += a * model.au_bases[j][i];
  }
  for (std::size_t d = 0; d < kGazeCount; ++d) {
    const double g = c[kAuCount + d];
    if (g == 0.0) continue;
    for (std::size_t i = 0; i < kKeypointCount; ++i) p[i] += g * model.gaze_offsets[d][i];
  }
  const double yaw = c[Channel::Yaw];
  const double pitch = c[Channel::Pitch];
  const double roll = c[Channel::Roll];
  if (yaw == 0.0 && pitch == 0.0 && roll == 0.0) return p;

  const Mat3 rot = rotation_matrix(yaw, pitch, roll);
  const Vec3 center = model.rotation_center();
  for (auto& q : p) q = rot * (q - center) + center;
  return p;
}

KeypointFrame project(const PointFrame3D& points, const DeformationModel& model) {
  const Vec3 center = model.rotation_center();
  const auto& cam = model.projection;
  KeypointFrame f;
  for (std::size_t i = 0; i < kKeypointCount; ++i) {
    f.points[i] = {cam.principal.x + cam.scale * (points[i].x - center.x),
                   cam.principal.y - cam.scale * (points[i].y - center.y)};
  }
  return f;
}

MappedFrame map_frame(const ControlState& c, const DeformationModel& model) {
  const ValidationReport report = validate_control_state(c);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw Error("invalid control state: " + v.channel + ": " + v.message + " [" + v.rule + "]");
  }
  MappedFrame out;
  out.points = deform_and_rotate(c, model);
  out.keypoints = project(out.points, model);
  return out;
}

MappedSequence map_sequence(const ControlSequence& seq, const DeformationModel& model) {
  MappedSequence out;
  out.keypoints.fps = seq.fps;
  out.points.fps = seq.fps;
  out.keypoints.frames.reserve(seq.size());
  out.points.frames.reserve(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    MappedFrame f;
    try {
      f = map_frame(seq[t], model);
    } catch (const Error& e) {
      throw Error("frame " + std::to_string(t) + ": " + e.what());
    }
    out.keypoints.frames.push_back(f.keypoints);
    out.points.frames.push_back(f.points);
  }
  return out;
}

std::pair<Vec2, double> iris_midpoint_and_distance(const KeypointFrame& frame) {
  using namespace layout;
  auto iris_center = [&](std::size_t eye) {
    Vec2 c;
    for (std::size_t k = 0; k < kIrisPoints; ++k) c = c + frame.points[eye + kIris + k];
    return 0.25 * c;
  };
  const Vec2 l = iris_center(kLeftEye);
  const Vec2 r = iris_center(kRightEye);
  return {0.5 * (l + r), norm(l - r)};
}

}  // namespace ocular
