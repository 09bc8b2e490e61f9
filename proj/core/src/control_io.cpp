#include "ocular/control_io.h"

#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "ocular/error.h"
#include "text_util.h"

namespace ocular {

using nlohmann::json;

std::string controls_csv_header() {
  std::string h = "frame";
  for (auto name : kChannelNames) {
    h += ',';
    h += name;
  }
  return h;
}

std::string controls_to_csv(const ControlSequence& seq) {
  std::string out = controls_csv_header();
  out += '\n';
  for (std::size_t t = 0; t < seq.size(); ++t) {
    out += std::to_string(t + 1);
    for (std::size_t j = 0; j < kChannelCount; ++j) {
      out += ',';
      out += detail::format_double(seq[t][j]);
    }
    out += '\n';
  }
  return out;
}

ControlSequence controls_from_csv(std::string_view text, double fps) {
  ControlSequence seq;
  seq.fps = fps;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (auto line : detail::split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != controls_csv_header()) {
        throw ParseError("controls csv: unexpected header on line " + std::to_string(line_no));
      }
      header_seen = true;
      continue;
    }
    const auto cells = detail::split(line, ',');
    if (cells.size() != kChannelCount + 1) {
      throw ParseError("controls csv: line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(kChannelCount + 1));
    }
    ControlState state;
    for (std::size_t j = 0; j < kChannelCount; ++j) {
      if (!detail::parse_double(cells[j + 1], state[j])) {
        throw ParseError("controls csv: line " + std::to_string(line_no) + ", column " +
                         std::string(kChannelNames[j]) + " is not a number");
      }
    }
    seq.frames.push_back(state);
  }
  if (!header_seen) throw ParseError("controls csv: missing header");
  return seq;
}

std::string controls_sidecar_json(double fps) {
  json j = {{"fps", fps}, {"version", kControlsFormatVersion}};
  return j.dump() + "\n";
}

double fps_from_sidecar_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("controls sidecar: ") + e.what());
  }
  if (!j.is_object() || !j.contains("fps") || !j["fps"].is_number()) {
    throw ParseError("controls sidecar: missing numeric \"fps\"");
  }
  if (j.contains("version") && j["version"] != kControlsFormatVersion) {
    throw ParseError("controls sidecar: unsupported version");
  }
  const double fps = j["fps"].get<double>();
  if (!(fps > 0.0)) throw ParseError("controls sidecar: fps must be positive");
  return fps;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void save_controls(const ControlSequence& seq, const std::filesystem::path& csv_path) {
  write_text_file(csv_path, controls_to_csv(seq));
  write_text_file(sidecar_path(csv_path), controls_sidecar_json(seq.fps));
}

ControlSequence load_controls(const std::filesystem::path& csv_path, double default_fps) {
  double fps = default_fps;
  const auto meta = sidecar_path(csv_path);
  if (std::filesystem::exists(meta)) fps = fps_from_sidecar_json(read_text_file(meta));
  return controls_from_csv(read_text_file(csv_path), fps);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace ocular
