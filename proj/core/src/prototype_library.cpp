#include "ocular/prototype_library.h"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "json_util.h"
#include "linalg.h"
#include "ocular/control_io.h"
#include "ocular/error.h"

namespace ocular {

using detail::json;

std::span<const PrototypeId> PrototypeLibrary::ids_for(std::string_view label) const {
  const auto it = index_.find(label);
  if (it == index_.end()) return {};
  return it->second;
}

PrototypeLibrary build_library(std::vector<PrototypeRecord> records) {
  PrototypeLibrary lib;
  lib.prototypes_.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    if (r.controls.size() != r.keypoints.size()) {
      throw Error("record " + std::to_string(i) + " (label '" + r.label + "'): controls have " +
                  std::to_string(r.controls.size()) + " frames but keypoints have " +
                  std::to_string(r.keypoints.size()));
    }
    if (r.controls.empty()) {
      throw Error("record " + std::to_string(i) + " (label '" + r.label + "'): empty sequence");
    }
    Prototype p;
    p.label = std::move(r.label);
    p.summary = channel_summary(r.controls);
    p.controls = std::move(r.controls);
    p.keypoints = std::move(r.keypoints);
    lib.index_[p.label].push_back(i);
    lib.prototypes_.push_back(std::move(p));
  }
  return lib;
}

// --- retrieval -------------------------------------------------------------

ChannelVector default_channel_weights() {
  ChannelVector w{};
  for (std::size_t j = 0; j < kChannelCount; ++j) {
    w[j] = channel_kind(j) == ChannelKind::Au ? 2.0 : 1.0;
  }
  return w;
}

double match_distance(const ChannelVector& target, const ChannelVector& prototype_mean,
                      const ChannelVector& weights, const HeadLimits& limits) {
  double d = 0.0;
  for (std::size_t j = 0; j < kChannelCount; ++j) {
    d += weights[j] * std::abs(target[j] - prototype_mean[j]) / channel_scale(j, limits);
  }
  return d;
}

std::vector<QueryHit> query(const PrototypeLibrary& lib, const ChannelVector& target,
                            const ChannelVector& weights,
                            std::optional<std::string_view> label_filter, std::size_t k,
                            const HeadLimits& limits) {
  if (k == 0) throw Error("query: k must be at least 1");
  for (std::size_t j = 0; j < kChannelCount; ++j) {
    if (!std::isfinite(weights[j]) || weights[j] < 0.0) {
      throw Error("query: weight for " + std::string(channel_name(channel_at(j))) +
                  " must be finite and non-negative");
    }
  }

  auto worse = [](const QueryHit& a, const QueryHit& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  };
  // Max-heap on (distance, id) holding the best k seen so far.
  std::priority_queue<QueryHit, std::vector<QueryHit>, decltype(worse)> heap(worse);
  auto consider = [&](PrototypeId id) {
    const QueryHit h{id, match_distance(target, lib.at(id).summary.mean, weights, limits)};
    if (heap.size() < k) {
      heap.push(h);
    } else if (worse(h, heap.top())) {
      heap.pop();
      heap.push(h);
    }
  };
  if (label_filter) {
    for (PrototypeId id : lib.ids_for(*label_filter)) consider(id);
  } else {
    for (PrototypeId id = 0; id < lib.size(); ++id) consider(id);
  }

  std::vector<QueryHit> out(heap.size());
  for (auto it = out.rbegin(); it != out.rend(); ++it) {
    *it = heap.top();
    heap.pop();
  }
  return out;
}

// --- AU inversion ----------------------------------------------------------

NeutralBaseline neutral_baseline(const DeformationModel& model) {
  return NeutralBaseline{model.template_points};
}

NeutralBaseline estimate_baseline(std::span<const PointFrame3D> rest_frames) {
  if (rest_frames.empty()) throw Error("estimate_baseline: no rest frames");
  NeutralBaseline b;
  for (const auto& f : rest_frames)
    for (std::size_t i = 0; i < kKeypointCount; ++i) b.points[i] += f[i];
  const double inv = 1.0 / static_cast<double>(rest_frames.size());
  for (auto& p : b.points) p = inv * p;
  return b;
}

bool is_bilaterally_symmetric(const NeutralBaseline& b, double tol) {
  for (std::size_t i = 0; i < kKeypointCount; ++i) {
    const Vec3& p = b.points[i];
    const Vec3& q = b.points[layout::mirror_index(i)];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) return false;
    if (std::abs(p.x + q.x) > tol || std::abs(p.y - q.y) > tol || std::abs(p.z - q.z) > tol) {
      return false;
    }
  }
  return true;
}

namespace {

constexpr std::array<std::size_t, 4> kAnchors = {
    layout::kLeftEye + layout::kUpperLid, layout::kLeftEye + layout::kUpperLid + 7,
    layout::kRightEye + layout::kUpperLid, layout::kRightEye + layout::kUpperLid + 7};

constexpr int kMaxAlternations = 500;
constexpr double kAlternationTol = 1e-10;

struct PointSplit {
  std::vector<std::size_t> shape;  // lids and brows
  std::vector<std::size_t> eye;    // iris and pupil
};

const PointSplit& point_split() {
  static const PointSplit split = [] {
    PointSplit s;
    for (std::size_t i = 0; i < kKeypointCount; ++i) {
      (layout::is_iris_or_pupil(i) ? s.eye : s.shape).push_back(i);
    }
    return s;
  }();
  return split;
}

template <std::size_t N>
Eigen::MatrixXd basis_matrix(const std::array<PointFrame3D, N>& bases,
                             const std::vector<std::size_t>& pts) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(3 * pts.size()), static_cast<Eigen::Index>(N));
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t r = 0; r < pts.size(); ++r) {
      const Vec3& v = bases[j][pts[r]];
      const auto row = static_cast<Eigen::Index>(3 * r);
      const auto col = static_cast<Eigen::Index>(j);
      a(row, col) = v.x;
      a(row + 1, col) = v.y;
      a(row + 2, col) = v.z;
    }
  }
  return a;
}

Eigen::VectorXd residual_vector(const PointFrame3D& derotated, const NeutralBaseline& b,
                                const std::vector<std::size_t>& pts,
                                const PointFrame3D* subtract = nullptr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(3 * pts.size()));
  for (std::size_t r = 0; r < pts.size(); ++r) {
    Vec3 d = derotated[pts[r]] - b.points[pts[r]];
    if (subtract) d = d - (*subtract)[pts[r]];
    const auto row = static_cast<Eigen::Index>(3 * r);
    v(row) = d.x;
    v(row + 1) = d.y;
    v(row + 2) = d.z;
  }
  return v;
}

}  // namespace

ControlState invert_frame(const PointFrame3D& points, const NeutralBaseline& baseline,
                          const DeformationModel& model) {
  Vec3 centroid;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error("non-finite keypoint");
    }
    centroid += p;
  }
  centroid = (1.0 / static_cast<double>(kKeypointCount)) * centroid;
  double spread = 0.0;
  for (const auto& p : points) spread = std::max(spread, norm(p - centroid));
  if (spread < 1e-12) throw Error("degenerate frame");

  const auto& split = point_split();
  const Eigen::MatrixXd au_a = basis_matrix(model.au_bases, split.shape);
  const Eigen::MatrixXd gaze_a = basis_matrix(model.gaze_offsets, split.eye);

  // Rigid init from the lid corners, which no AU or gaze control moves.
  std::array<Vec3, kAnchors.size()> src{}, dst{};
  for (std::size_t k = 0; k < kAnchors.size(); ++k) {
    src[k] = baseline.points[kAnchors[k]];
    dst[k] = points[kAnchors[k]];
  }
  detail::RigidTransform xf = detail::kabsch(src, dst);

  Eigen::VectorXd au = Eigen::VectorXd::Zero(kAuCount);
  Eigen::VectorXd gz = Eigen::VectorXd::Zero(kGazeCount);
  bool converged = false;
  for (int iter = 0; iter < kMaxAlternations; ++iter) {
    const Mat3 rt = xf.rotation.transposed();
    PointFrame3D derot{};
    for (std::size_t i = 0; i < kKeypointCount; ++i) derot[i] = rt * (points[i] - xf.translation);

    const Eigen::VectorXd au_new = detail::nnls(au_a, residual_vector(derot, baseline, split.shape)).x;
    PointFrame3D au_disp{};
    for (std::size_t j = 0; j < kAuCount; ++j)
      for (std::size_t i = 0; i < kKeypointCount; ++i)
        au_disp[i] += au_new(static_cast<Eigen::Index>(j)) * model.au_bases[j][i];
    const Eigen::VectorXd gz_new =
        detail::nnls(gaze_a, residual_vector(derot, baseline, split.eye, &au_disp)).x;

    PointFrame3D shaped = baseline.points;
    for (std::size_t i = 0; i < kKeypointCount; ++i) {
      shaped[i] += au_disp[i];
      for (std::size_t d = 0; d < kGazeCount; ++d)
        shaped[i] += gz_new(static_cast<Eigen::Index>(d)) * model.gaze_offsets[d][i];
    }
    const detail::RigidTransform xf_new = detail::kabsch(shaped, points);

    double change = std::max((au_new - au).cwiseAbs().maxCoeff(), (gz_new - gz).cwiseAbs().maxCoeff());
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        change = std::max(change, std::abs(xf_new.rotation(r, c) - xf.rotation(r, c)));
    au = au_new;
    gz = gz_new;
    xf = xf_new;
    if (change < kAlternationTol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error("alignment did not converge");

  ControlState c;
  for (std::size_t j = 0; j < kAuCount; ++j) c[j] = au(static_cast<Eigen::Index>(j));
  for (std::size_t d = 0; d < kGazeCount; ++d) c[kAuCount + d] = gz(static_cast<Eigen::Index>(d));
  const EulerAngles e = euler_from_rotation(xf.rotation);
  c[Channel::Yaw] = e.yaw;
  c[Channel::Pitch] = e.pitch;
  c[Channel::Roll] = e.roll;
  return sanitize_state(c);
}

ControlSequence invert_controls(const KeypointSequence3D& keypoints,
                                const NeutralBaseline& baseline, const DeformationModel& model) {
  ControlSequence out;
  out.fps = keypoints.fps;
  out.frames.reserve(keypoints.size());
  for (std::size_t t = 0; t < keypoints.size(); ++t) {
    try {
      out.frames.push_back(invert_frame(keypoints.frames[t], baseline, model));
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " at frame " + std::to_string(t));
    }
  }
  return out;
}

// --- persistence -----------------------------------------------------------

std::string library_to_json(const PrototypeLibrary& lib) {
  json j;
  j["version"] = lib.version();
  json protos = json::array();
  for (const auto& p : lib.prototypes()) {
    json jp;
    jp["label"] = p.label;
    jp["fps"] = p.controls.fps;
    json controls = json::array();
    for (const auto& c : p.controls.frames) controls.push_back(detail::state_to_json(c));
    jp["controls"] = std::move(controls);
    json kps = json::array();
    for (const auto& f : p.keypoints.frames) kps.push_back(detail::frame_to_json(f));
    jp["keypoints"] = std::move(kps);
    protos.push_back(std::move(jp));
  }
  j["prototypes"] = std::move(protos);
  return j.dump() + "\n";
}

PrototypeLibrary library_from_json(std::string_view text) {
  std::vector<PrototypeRecord> records;
  try {
    const json j = detail::parse_json(text, "json");
    if (!j.is_object()) throw ParseError("expected an object");
    const json& ver = detail::require(j, "version", "$");
    if (!ver.is_number_integer()) throw ParseError("$.version: expected an integer");
    if (ver.get<int>() != kLibraryFormatVersion) {
      throw Error("unsupported library version " + std::to_string(ver.get<long long>()) +
                  " (expected " + std::to_string(kLibraryFormatVersion) + ")");
    }
    const json& protos = detail::require(j, "prototypes", "$");
    if (!protos.is_array()) throw ParseError("$.prototypes: expected an array");
    for (std::size_t i = 0; i < protos.size(); ++i) {
      const std::string path = "$.prototypes[" + std::to_string(i) + "]";
      const json& jp = protos[i];
      const json& label = detail::require(jp, "label", path);
      if (!label.is_string()) throw ParseError(path + ".label: expected a string");
      PrototypeRecord r;
      r.label = label.get<std::string>();
      const double fps = detail::require_number(detail::require(jp, "fps", path), path + ".fps");
      if (!(fps > 0.0)) throw ParseError(path + ".fps: must be positive");
      r.controls.fps = fps;
      r.keypoints.fps = fps;
      const json& controls = detail::require(jp, "controls", path);
      const json& kps = detail::require(jp, "keypoints", path);
      if (!controls.is_array() || !kps.is_array()) throw ParseError(path + ": expected arrays");
      for (std::size_t t = 0; t < controls.size(); ++t) {
        r.controls.frames.push_back(
            detail::state_from_json(controls[t], path + ".controls[" + std::to_string(t) + "]"));
      }
      for (std::size_t t = 0; t < kps.size(); ++t) {
        r.keypoints.frames.push_back(detail::frame_from_json<PointFrame3D>(
            kps[t], path + ".keypoints[" + std::to_string(t) + "]"));
      }
      records.push_back(std::move(r));
    }
  } catch (const ParseError& e) {
    throw ParseError(std::string("malformed library file: ") + e.what());
  }
  return build_library(std::move(records));
}

void save_library(const PrototypeLibrary& lib, const std::filesystem::path& path) {
  write_text_file(path, library_to_json(lib));
}

PrototypeLibrary load_library(const std::filesystem::path& path) {
  return library_from_json(read_text_file(path));
}

}  // namespace ocular
