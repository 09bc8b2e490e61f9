#pragma once

// Static SVG previews of keypoint frames.

#include <filesystem>
#include <string>

#include "ocular/mapper.h"

namespace ocular {

struct PreviewOptions {
  int size = 256;        // pixels per side of one frame
  int sheet_columns = 8;
  std::size_t sheet_stride = 1;  // every n-th frame on the contact sheet
};

std::string frame_svg(const KeypointFrame& frame, const PreviewOptions& options = {});
std::string contact_sheet_svg(const KeypointSequence& seq, const PreviewOptions& options = {});

/// frame_0001.svg ... plus contact_sheet.svg. Returns the number of files.
std::size_t write_preview(const KeypointSequence& seq, const std::filesystem::path& dir,
                          const PreviewOptions& options = {});

}  // namespace ocular
