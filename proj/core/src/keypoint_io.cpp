#include "ocular/keypoint_io.h"

#include "json_util.h"
#include "ocular/control_io.h"

namespace ocular {

using detail::json;

namespace {

template <typename Seq>
std::string to_json_text(const Seq& seq) {
  json j;
  j["fps"] = seq.fps;
  j["layout"] = kKeypointLayout;
  json frames = json::array();
  for (const auto& f : seq.frames) frames.push_back(detail::frame_to_json(f));
  j["frames"] = std::move(frames);
  return j.dump() + "\n";
}

template <typename Seq, typename Frame>
Seq from_json_text(std::string_view text) {
  const json j = detail::parse_json(text, "keypoint file");
  if (!j.is_object()) throw ParseError("keypoint file: expected an object");
  const auto& layout = detail::require(j, "layout", "$");
  if (!layout.is_string() || layout.get<std::string>() != kKeypointLayout) {
    throw ParseError(std::string("keypoint file: layout must be \"") + kKeypointLayout + "\"");
  }
  Seq seq;
  seq.fps = detail::require_number(detail::require(j, "fps", "$"), "$.fps");
  if (!(seq.fps > 0.0)) throw ParseError("keypoint file: fps must be positive");
  const auto& frames = detail::require(j, "frames", "$");
  if (!frames.is_array()) throw ParseError("$.frames: expected an array");
  seq.frames.reserve(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    seq.frames.push_back(
        detail::frame_from_json<Frame>(frames[t], "$.frames[" + std::to_string(t) + "]"));
  }
  return seq;
}

}  // namespace

std::string keypoints_to_json(const KeypointSequence& seq) { return to_json_text(seq); }
std::string keypoints3d_to_json(const KeypointSequence3D& seq) { return to_json_text(seq); }

KeypointSequence keypoints_from_json(std::string_view text) {
  return from_json_text<KeypointSequence, KeypointFrame>(text);
}

KeypointSequence3D keypoints3d_from_json(std::string_view text) {
  return from_json_text<KeypointSequence3D, PointFrame3D>(text);
}

void save_keypoints(const KeypointSequence& seq, const std::filesystem::path& path) {
  write_text_file(path, keypoints_to_json(seq));
}

KeypointSequence load_keypoints(const std::filesystem::path& path) {
  return keypoints_from_json(read_text_file(path));
}

void save_keypoints3d(const KeypointSequence3D& seq, const std::filesystem::path& path) {
  write_text_file(path, keypoints3d_to_json(seq));
}

KeypointSequence3D load_keypoints3d(const std::filesystem::path& path) {
  return keypoints3d_from_json(read_text_file(path));
}

}  // namespace ocular
