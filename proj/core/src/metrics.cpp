#include "ocular/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json_util.h"
#include "ocular/error.h"

namespace ocular {

const std::vector<double>* AuTrace::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return &tracks[i];
  return nullptr;
}

AuTrace au_trace(const ControlSequence& seq) {
  AuTrace tr;
  for (std::size_t j = 0; j < kAuCount; ++j) {
    tr.names.emplace_back(channel_name(channel_at(j)));
    tr.tracks.push_back(seq.channel(channel_at(j)));
  }
  return tr;
}

double MetricConfig::tau_for(std::string_view au) const {
  const auto it = tau.find(au);
  return it == tau.end() ? default_tau : it->second;
}

double MetricConfig::z_for(std::string_view au, std::size_t length) const {
  const auto it = z.find(au);
  return it == z.end() ? static_cast<double>(length) : it->second;
}

MetricConfig default_metric_config(const TemplateTable& templates) {
  MetricConfig cfg;
  for (const auto& [label, ct] : templates) {
    std::vector<std::string> set;
    for (std::size_t j = 0; j < kAuCount; ++j) {
      const Channel c = channel_at(j);
      const bool driven = std::any_of(ct.stages.begin(), ct.stages.end(), [&](const StageTemplate& s) {
        const auto it = s.targets.find(c);
        return it != s.targets.end() && it->second.lo > 0.0;
      });
      if (driven) set.emplace_back(channel_name(c));
    }
    cfg.target_sets[label] = std::move(set);
  }
  return cfg;
}

MetricConfig metric_config_from_json(std::string_view text, const MetricConfig& base) {
  const auto j = detail::parse_json(text, "metric config");
  if (!j.is_object()) throw ParseError("$: expected an object");
  MetricConfig cfg = base;
  auto check_tau = [](double v, const std::string& path) {
    if (!(v > 0.0 && v < 1.0)) throw ParseError(path + ": tau must lie in (0, 1)");
    return v;
  };
  if (j.contains("tau")) {
    const auto& t = j.at("tau");
    if (t.is_number()) {
      cfg.default_tau = check_tau(t.get<double>(), "$.tau");
    } else if (t.is_object()) {
      for (const auto& [k, v] : t.items()) cfg.tau[k] = check_tau(detail::require_number(v, "$.tau." + k), "$.tau." + k);
    } else {
      throw ParseError("$.tau: expected a number or an object");
    }
  }
  if (j.contains("target_sets")) {
    const auto& ts = j.at("target_sets");
    if (!ts.is_object()) throw ParseError("$.target_sets: expected an object");
    for (const auto& [cat, list] : ts.items()) {
      if (!list.is_array()) throw ParseError("$.target_sets." + cat + ": expected an array");
      std::vector<std::string> set;
      for (const auto& s : list) {
        if (!s.is_string()) throw ParseError("$.target_sets." + cat + ": expected strings");
        set.push_back(s.get<std::string>());
      }
      cfg.target_sets[cat] = std::move(set);
    }
  }
  if (j.contains("z")) {
    const auto& z = j.at("z");
    if (!z.is_object()) throw ParseError("$.z: expected an object");
    for (const auto& [k, v] : z.items()) {
      const double val = detail::require_number(v, "$.z." + k);
      if (!(val > 0.0)) throw ParseError("$.z." + k + ": must be positive");
      cfg.z[k] = val;
    }
  }
  return cfg;
}

double dtw(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("dtw: empty sequence");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(b.size() + 1, inf), cur(b.size() + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const double cost = std::abs(a[i - 1] - b[j - 1]);
      cur[j] = cost + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

const std::vector<double>& track(const AuTrace& tr, std::string_view name, const char* which) {
  const auto* t = tr.find(name);
  if (!t) throw Error(std::string(which) + " trace lacks " + std::string(name));
  return *t;
}

bool activated(const std::vector<double>& track, double tau) {
  return !track.empty() && *std::max_element(track.begin(), track.end()) > tau;
}

}  // namespace

F1Score au_f1(const AuTrace& pred, const AuTrace& gt, const MetricConfig& cfg) {
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gt.names.size(); ++i) {
    const double tau = cfg.tau_for(gt.names[i]);
    const bool g = activated(gt.tracks[i], tau);
    const bool p = activated(track(pred, gt.names[i], "prediction"), tau);
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  F1Score s;
  s.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
  s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0
                                       : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

double au_temp_raw(const AuTrace& pred, const AuTrace& gt, std::string_view category,
                   const MetricConfig& cfg) {
  const auto it = cfg.target_sets.find(category);
  if (it == cfg.target_sets.end()) throw Error("au_temp: unknown category '" + std::string(category) + "'");
  const auto& set = it->second;
  if (set.empty()) throw Error("au_temp: empty target set for '" + std::string(category) + "'");
  double deficit = 0.0;
  for (const auto& au : set) {
    const auto& g = track(gt, au, "ground-truth");
    const auto& p = track(pred, au, "prediction");
    deficit += dtw(p, g) / cfg.z_for(au, g.size());
  }
  return 1.0 - deficit / static_cast<double>(set.size());
}

double au_temp(const AuTrace& pred, const AuTrace& gt, std::string_view category,
               const MetricConfig& cfg) {
  return std::max(0.0, au_temp_raw(pred, gt, category, cfg));
}

double eye_lmd(const KeypointSequence& pred, const KeypointSequence& gt) {
  if (pred.size() != gt.size()) throw Error("eye_lmd: sequences differ in length");
  if (gt.size() == 0) throw Error("eye_lmd: empty sequence");
  double acc = 0.0;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    const auto& g = gt.frames[t].points;
    const auto& p = pred.frames[t].points;
    const Vec2 d = g[layout::kLeftPupil] - g[layout::kRightPupil];
    const double ipd = std::hypot(d.x, d.y);
    if (!(ipd > 0.0)) throw Error("eye_lmd: zero inter-pupil distance at frame " + std::to_string(t));
    double frame = 0.0;
    for (std::size_t i = 0; i < kKeypointCount; ++i) {
      frame += std::hypot(p[i].x - g[i].x, p[i].y - g[i].y);
    }
    acc += frame / static_cast<double>(kKeypointCount) / ipd;
  }
  return acc / static_cast<double>(gt.size());
}

}  // namespace ocular
