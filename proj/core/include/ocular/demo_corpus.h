#pragma once

// Procedural stand-in for harvested prototypes: smooth, noiseless control
// trajectories per category stage, mapped to keypoints. Also the on-disk
// trace directory format consumed by build-lib.

#include <filesystem>
#include <vector>

#include "ocular/mapper.h"
#include "ocular/planner.h"
#include "ocular/prototype_library.h"

namespace ocular {

inline constexpr int kDemoVariants = 2;

/// Two variants per stage of every template, labelled with the category.
std::vector<PrototypeRecord> demo_records(const TemplateTable& templates = default_templates(),
                                          const DeformationModel& model = default_deformation_model(),
                                          double fps = 25.0);

PrototypeLibrary demo_library(const TemplateTable& templates = default_templates(),
                              const DeformationModel& model = default_deformation_model());

/// Writes <stem>.csv, <stem>.meta.json ({"fps", "version", "label"}) and
/// <stem>.kp.json (3-D keypoints) per record.
void write_trace_dir(const std::vector<PrototypeRecord>& records, const std::filesystem::path& dir);

/// Reads every <stem>.kp.json in stem order. Controls come from <stem>.csv
/// when present and are otherwise recovered by inversion against the
/// model's neutral template.
std::vector<PrototypeRecord> read_trace_dir(const std::filesystem::path& dir,
                                            const DeformationModel& model = default_deformation_model());

}  // namespace ocular
