#pragma once

// ControlSequence CSV format with its JSON sidecar.
//
//   frame,AU1,AU2_L,...,yaw,pitch,roll     (1-based frame column)
//   controls.meta.json: {"fps": 25, "version": 1}

#include <filesystem>
#include <string>
#include <string_view>

#include "ocular/control.h"

namespace ocular {

inline constexpr int kControlsFormatVersion = 1;

std::string controls_csv_header();
std::string controls_to_csv(const ControlSequence& seq);
/// Throws ParseError on a bad header, ragged row or non-numeric cell.
ControlSequence controls_from_csv(std::string_view text, double fps);

std::string controls_sidecar_json(double fps);
/// Returns the fps stored in a sidecar document.
double fps_from_sidecar_json(std::string_view text);

/// `controls.csv` -> `controls.meta.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Writes the CSV and its sidecar.
void save_controls(const ControlSequence& seq, const std::filesystem::path& csv_path);
/// Reads the CSV; fps comes from the sidecar when present, else `default_fps`.
ControlSequence load_controls(const std::filesystem::path& csv_path, double default_fps = 25.0);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace ocular
