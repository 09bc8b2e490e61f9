#pragma once

// Independent reference implementations for the tests. Nothing here calls
// the code under test for the quantity being checked.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "ocular/control.h"
#include "ocular/prototype_library.h"

namespace oracle {

/// Exhaustive weighted-L1 ranking: every prototype's per-channel mean is
/// recomputed from its frames, scored, and the whole list sorted.
inline std::vector<std::pair<std::size_t, double>> brute_force_rank(
    const ocular::PrototypeLibrary& lib, const ocular::ChannelVector& q, const ocular::ChannelVector& w,
    const ocular::HeadLimits& limits = {}) {
  const double half[3] = {limits.yaw, limits.pitch, limits.roll};
  std::vector<std::pair<std::size_t, double>> all;
  for (std::size_t id = 0; id < lib.size(); ++id) {
    const auto& frames = lib.at(id).controls.frames;
    double d = 0.0;
    for (std::size_t j = 0; j < ocular::kChannelCount; ++j) {
      double mean = 0.0;
      for (const auto& f : frames) mean += f[j];
      mean /= static_cast<double>(frames.size());
      double diff = std::abs(q[j] - mean);
      if (j >= ocular::kAuCount + ocular::kGazeCount) diff /= half[j - ocular::kAuCount - ocular::kGazeCount];
      d += w[j] * diff;
    }
    all.emplace_back(id, d);
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.second < b.second || (a.second == b.second && a.first < b.first);
  });
  return all;
}

/// DTW by enumerating every monotone warping path from (0,0) to (n-1,m-1)
/// with unit steps right, down and diagonal; returns the cheapest |a-b| sum.
inline double dtw_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = a.size(), m = b.size();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += std::abs(a[i] - b[j]);
    if (acc >= best) return;
    if (i + 1 == n && j + 1 == m) {
      best = acc;
      return;
    }
    if (i + 1 < n) walk(i + 1, j, acc);
    if (j + 1 < m) walk(i, j + 1, acc);
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

/// Central difference of f along coordinate k.
template <typename F, typename X>
double central_difference(F&& f, X x, std::size_t k, double h) {
  X xp = x, xm = x;
  xp[k] += h;
  xm[k] -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

/// A state satisfying every control invariant: at most one of each gaze
/// pair active, no same-side lid raise/closure conflict, head angles
/// spread over head_scale times the default limits.
inline ocular::ControlState random_valid_state(std::mt19937_64& rng, double head_scale = 1.0) {
  using ocular::Channel;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ocular::ControlState c;
  for (std::size_t j = 0; j < ocular::kAuCount; ++j) c[j] = u(rng);
  for (auto [raise, close] : {std::pair{Channel::AU5_L, Channel::AU43_L}, std::pair{Channel::AU5_R, Channel::AU43_R}}) {
    if (c[raise] > 0.5 && c[close] > 0.5) c[close] = 0.5 * u(rng);
  }
  const bool left = u(rng) < 0.5, up = u(rng) < 0.5;
  c[left ? Channel::GazeLeft : Channel::GazeRight] = u(rng);
  c[up ? Channel::GazeUp : Channel::GazeDown] = u(rng);
  c[Channel::Yaw] = head_scale * (2.0 * u(rng) - 1.0) * 90.0;
  c[Channel::Pitch] = head_scale * (2.0 * u(rng) - 1.0) * 60.0;
  c[Channel::Roll] = head_scale * (2.0 * u(rng) - 1.0) * 45.0;
  return c;
}

}  // namespace oracle
