#pragma once

// Keypoint files:
//   {"fps": 25, "layout": "cogportrait-62-v1", "frames": [[[x, y] x 62], ...]}
// The 3-D variant stores [x, y, z] triples in the same envelope.

#include <filesystem>
#include <string>
#include <string_view>

#include "ocular/mapper.h"

namespace ocular {

std::string keypoints_to_json(const KeypointSequence& seq);
std::string keypoints3d_to_json(const KeypointSequence3D& seq);

/// Throws ParseError on a layout mismatch or wrong point count.
KeypointSequence keypoints_from_json(std::string_view text);
KeypointSequence3D keypoints3d_from_json(std::string_view text);

void save_keypoints(const KeypointSequence& seq, const std::filesystem::path& path);
KeypointSequence load_keypoints(const std::filesystem::path& path);
void save_keypoints3d(const KeypointSequence3D& seq, const std::filesystem::path& path);
KeypointSequence3D load_keypoints3d(const std::filesystem::path& path);

}  // namespace ocular
