#pragma once

#include <string>
#include <string_view>
#include <type_traits>

#include <json.hpp>

#include "ocular/control.h"
#include "ocular/error.h"
#include "ocular/mapper.h"

namespace ocular::detail {

using nlohmann::json;

inline json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

inline const json& require(const json& j, std::string_view key, std::string_view path) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(std::string(path) + "." + std::string(key) + ": missing");
  }
  return j.at(std::string(key));
}

inline double require_number(const json& j, std::string_view path) {
  if (!j.is_number()) throw ParseError(std::string(path) + ": expected a number");
  return j.get<double>();
}

inline json frame_to_json(const KeypointFrame& f) {
  json pts = json::array();
  for (const auto& p : f.points) pts.push_back({p.x, p.y});
  return pts;
}

inline json frame_to_json(const PointFrame3D& f) {
  json pts = json::array();
  for (const auto& p : f) pts.push_back({p.x, p.y, p.z});
  return pts;
}

template <typename Frame>
Frame frame_from_json(const json& j, const std::string& path) {
  constexpr bool is3d = std::is_same_v<Frame, PointFrame3D>;
  constexpr std::size_t dims = is3d ? 3 : 2;
  if (!j.is_array() || j.size() != kKeypointCount) {
    throw ParseError(path + ": expected " + std::to_string(kKeypointCount) + " points");
  }
  Frame f{};
  for (std::size_t i = 0; i < kKeypointCount; ++i) {
    const auto& p = j[i];
    const std::string pp = path + "[" + std::to_string(i) + "]";
    if (!p.is_array() || p.size() != dims) {
      throw ParseError(pp + ": expected " + std::to_string(dims) + " coordinates");
    }
    if constexpr (is3d) {
      f[i] = {require_number(p[0], pp), require_number(p[1], pp), require_number(p[2], pp)};
    } else {
      f.points[i] = {require_number(p[0], pp), require_number(p[1], pp)};
    }
  }
  return f;
}

inline json state_to_json(const ControlState& c) {
  json row = json::array();
  for (double v : c.values) row.push_back(v);
  return row;
}

inline ControlState state_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != kChannelCount) {
    throw ParseError(path + ": expected " + std::to_string(kChannelCount) + " channel values");
  }
  ControlState c;
  for (std::size_t k = 0; k < kChannelCount; ++k) c[k] = require_number(j[k], path);
  return c;
}

}  // namespace ocular::detail
