#include <gtest/gtest.h>

#include <random>

#include "ocular/composer.h"
#include "ocular/demo_corpus.h"
#include "ocular/error.h"
#include "ocular/mapper.h"
#include "support/oracles.h"

using namespace ocular;

namespace {

Segment segment_of(const ControlSequence& c) {
  Segment s;
  s.controls = c;
  return s;
}

ControlSequence constant(std::size_t n, Channel ch, double v) {
  ControlSequence s;
  s.frames.resize(n);
  for (auto& f : s.frames) f[ch] = v;
  return s;
}

/// Linear ramps in every channel, so each channel's mean is its midpoint.
ControlSequence symmetric_ramp(std::size_t n) {
  ControlSequence s;
  s.frames.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double u = static_cast<double>(t) / static_cast<double>(n - 1);
    s[t][Channel::AU1] = 0.2 + 0.4 * u;
    s[t][Channel::AU7] = 0.5 - 0.3 * u;
    s[t][Channel::GazeUp] = 0.1 + 0.2 * u;
    s[t][Channel::Yaw] = -4.0 + 8.0 * u;
    s[t][Channel::Pitch] = 2.0;
  }
  return s;
}

PrototypeLibrary single(const ControlSequence& c, const std::string& label = "x") {
  return build_library({{label, c, map_sequence(c, default_deformation_model()).points}});
}

Plan plan_of(std::vector<StagedEvent> events, const std::string& label = "x") {
  Plan p;
  p.label = label;
  p.events = std::move(events);
  p.total_frames = p.events.back().end_frame;
  return p;
}

ChannelTargets full_targets(const ControlSequence& c) {
  const auto s = channel_summary(c);
  ChannelTargets t;
  for (std::size_t j = 0; j < kChannelCount; ++j) t[static_cast<Channel>(j)] = {s.min[j], s.max[j]};
  return t;
}

}  // namespace

TEST(Rescale, Examples) {
  ControlSequence s;
  s.frames.resize(3);
  s[0][Channel::AU5_L] = 0.0;
  s[1][Channel::AU5_L] = 0.5;
  s[2][Channel::AU5_L] = 1.0;
  s[1][Channel::AU7] = 0.9;  // untargeted
  const auto r = rescale_amplitude(segment_of(s), {{Channel::AU5_L, {0.15, 0.35}}});
  EXPECT_DOUBLE_EQ(r.controls[0][Channel::AU5_L], 0.15);
  EXPECT_DOUBLE_EQ(r.controls[1][Channel::AU5_L], 0.25);
  EXPECT_DOUBLE_EQ(r.controls[2][Channel::AU5_L], 0.35);
  EXPECT_EQ(r.controls[1][Channel::AU7], 0.9);

  const auto same = rescale_amplitude(segment_of(s), {{Channel::AU5_L, {0.0, 1.0}}});
  EXPECT_EQ(same.controls, s);

  const auto c = rescale_amplitude(segment_of(constant(4, Channel::AU1, 0.7)), {{Channel::AU1, {0.2, 0.4}}});
  for (const auto& f : c.controls.frames) EXPECT_DOUBLE_EQ(f[Channel::AU1], 0.3);
}

TEST(Rescale, OutputWithinTargets) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    ControlSequence s;
    for (int t = 0; t < 9; ++t) s.frames.push_back(oracle::random_valid_state(rng));
    const double a = u(rng), b = u(rng);
    const TargetInterval iv{std::min(a, b), std::max(a, b)};
    const TargetInterval head{-12.0, -5.0};
    const auto r = rescale_amplitude(segment_of(s), {{Channel::AU4_R, iv}, {Channel::Pitch, head}});
    for (const auto& f : r.controls.frames) {
      EXPECT_TRUE(iv.contains(f[Channel::AU4_R]));
      EXPECT_TRUE(head.contains(f[Channel::Pitch]));
    }
  }
}

TEST(Stitch, CrossFadeArithmetic) {
  const auto out = stitch({segment_of(constant(6, Channel::AU1, 0.0)), segment_of(constant(6, Channel::AU1, 1.0))}, 4, 25.0);
  ASSERT_EQ(out.size(), 12u);
  const double expect[] = {0, 0, 0, 0, 0.2, 0.4, 0.6, 0.8, 1, 1, 1, 1};
  for (std::size_t t = 0; t < 12; ++t) EXPECT_NEAR(out[t][Channel::AU1], expect[t], 1e-12) << t;
}

TEST(Stitch, ZeroBlendIsConcatenation) {
  std::mt19937_64 rng(2);
  std::vector<Segment> segs;
  ControlSequence cat;
  for (int k = 0; k < 4; ++k) {
    ControlSequence s;
    for (int t = 0; t < 3 + k; ++t) s.frames.push_back(oracle::random_valid_state(rng));
    cat.frames.insert(cat.frames.end(), s.frames.begin(), s.frames.end());
    segs.push_back(segment_of(s));
  }
  EXPECT_EQ(stitch(segs, 0, 25.0), cat);
}

TEST(Compose, SingleEventReproducesPrototype) {
  const auto proto = symmetric_ramp(12);
  const auto lib = single(proto);
  const StagedEvent ev{1, 20, "e", full_targets(proto), {}};
  ComposeOptions opts;
  opts.blend_frames = 0;
  const InitialPose pose{proto[0][Channel::Yaw], proto[0][Channel::Pitch], proto[0][Channel::Roll]};
  const auto comp = compose_detailed(plan_of({ev}), lib, pose, opts);
  EXPECT_EQ(comp.segments.at(0).source_prototype, 0u);
  const auto expect = resample_sequence(proto, 20);
  ASSERT_EQ(comp.controls.size(), 20u);
  for (std::size_t t = 0; t < 20; ++t)
    for (std::size_t j = 0; j < kChannelCount; ++j) EXPECT_NEAR(comp.controls[t][j], expect[t][j], 1e-12);
}

TEST(Compose, IdenticalEventsRepeatSegment) {
  const auto proto = symmetric_ramp(8);
  const auto lib = single(proto);
  const auto t = full_targets(proto);
  ComposeOptions opts;
  opts.blend_frames = 0;
  const InitialPose pose{proto[0][Channel::Yaw], proto[0][Channel::Pitch], 0.0};
  const auto out = compose(plan_of({{1, 8, "a", t, {}}, {9, 16, "b", t, {}}}), lib, pose, opts);
  ASSERT_EQ(out.size(), 16u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(out[i], out[i + 8]);
}

TEST(Compose, PinsInitialPoseAndHasLengthT) {
  const auto lib = demo_library();
  const InitialPose pose{12.0, -7.0, 4.0};
  for (const auto& [label, t] : default_templates()) {
    for (int T : {1, 2, 5, 50, 131}) {
      const auto p = plan(label, T, 25.0, std::nullopt, pose);
      const auto out = compose(p, lib, pose);
      ASSERT_EQ(out.size(), static_cast<std::size_t>(T));
      EXPECT_EQ(out[0][Channel::Yaw], pose.yaw);
      EXPECT_EQ(out[0][Channel::Pitch], pose.pitch);
      EXPECT_EQ(out[0][Channel::Roll], pose.roll);
      EXPECT_TRUE(validate_sequence(out).ok()) << label << " T=" << T;
    }
  }
}

TEST(Compose, DeterministicAndSeeded) {
  const auto lib = demo_library();
  const auto p = plan("fear", 64, 25.0, std::nullopt, {});
  EXPECT_EQ(compose(p, lib, {}), compose(p, lib, {}));
  ComposeOptions a;
  a.seed = 42;
  EXPECT_EQ(compose(p, lib, {}, a), compose(p, lib, {}, a));
}

TEST(Compose, FallsBackToWholeLibrary) {
  const auto proto = symmetric_ramp(6);
  const auto lib = single(proto, "other");
  const StagedEvent ev{1, 6, "e", {{Channel::AU1, {0.2, 0.6}}}, {}};
  EXPECT_EQ(compose(plan_of({ev}, "unknown"), lib, {}).size(), 6u);
}

TEST(Compose, EmptyLibrary) {
  try {
    compose(plan_of({{1, 3, "e", {}, {}}}), build_library({}), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "no prototypes available");
  }
}

TEST(EventQuery, MidpointsAndZeroWeights) {
  const StagedEvent ev{1, 5, "e", {{Channel::AU5_L, {0.15, 0.35}}, {Channel::Pitch, {-12, -5}}}, {}};
  const auto [q, w] = event_query(ev, default_channel_weights());
  EXPECT_DOUBLE_EQ(q[index_of(Channel::AU5_L)], 0.25);
  EXPECT_DOUBLE_EQ(q[index_of(Channel::Pitch)], -8.5);
  EXPECT_EQ(w[index_of(Channel::AU5_L)], 2.0);
  EXPECT_EQ(w[index_of(Channel::Pitch)], 1.0);
  EXPECT_EQ(w[index_of(Channel::AU1)], 0.0);
}
