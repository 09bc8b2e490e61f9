#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "ocular/control_io.h"
#include "ocular/error.h"
#include "ocular/mapper.h"
#include "ocular/prototype_library.h"
#include "support/oracles.h"

using namespace ocular;

namespace {

PrototypeRecord record(const std::string& label, const ControlSequence& c) {
  return {label, c, map_sequence(c, default_deformation_model()).points};
}

ControlSequence random_seq(std::mt19937_64& rng, std::size_t n) {
  ControlSequence s;
  for (std::size_t t = 0; t < n; ++t) s.frames.push_back(oracle::random_valid_state(rng));
  return s;
}

/// Library of random prototypes without keypoints work (controls only
/// matter for retrieval, keypoints just need the right length).
PrototypeLibrary random_library(std::mt19937_64& rng, std::size_t n) {
  std::vector<PrototypeRecord> recs;
  const char* labels[] = {"a", "b", "c"};
  for (std::size_t i = 0; i < n; ++i) {
    PrototypeRecord r;
    r.label = labels[rng() % 3];
    r.controls = random_seq(rng, 1 + rng() % 4);
    r.keypoints.frames.resize(r.controls.size());
    recs.push_back(std::move(r));
  }
  return build_library(std::move(recs));
}

double max_abs_diff(const ControlState& a, const ControlState& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < kChannelCount; ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

}  // namespace

TEST(BuildLibrary, EmptyIsValid) {
  const auto lib = build_library({});
  EXPECT_TRUE(lib.empty());
  EXPECT_TRUE(lib.index().empty());
  EXPECT_EQ(lib.version(), kLibraryFormatVersion);
}

TEST(BuildLibrary, IndexesLabels) {
  std::mt19937_64 rng(1);
  const auto lib = build_library({record("x", random_seq(rng, 3)), record("y", random_seq(rng, 2)),
                                  record("x", random_seq(rng, 4))});
  ASSERT_EQ(lib.index().size(), 2u);
  EXPECT_EQ(std::vector<PrototypeId>(lib.ids_for("x").begin(), lib.ids_for("x").end()),
            (std::vector<PrototypeId>{0, 2}));
  EXPECT_EQ(lib.ids_for("y").size(), 1u);
  EXPECT_TRUE(lib.ids_for("z").empty());
  for (const auto& [label, ids] : lib.index())
    for (auto id : ids) EXPECT_EQ(lib.at(id).label, label);
  for (const auto& p : lib.prototypes()) EXPECT_EQ(p.summary, channel_summary(p.controls));
}

TEST(BuildLibrary, KeepsDuplicates) {
  std::mt19937_64 rng(2);
  const auto r = record("x", random_seq(rng, 3));
  EXPECT_EQ(build_library({r, r}).size(), 2u);
}

TEST(BuildLibrary, LengthMismatchNamesRecord) {
  std::mt19937_64 rng(3);
  auto bad = record("blinky", random_seq(rng, 3));
  bad.keypoints.frames.pop_back();
  try {
    build_library({record("ok", random_seq(rng, 2)), bad});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("blinky"), std::string::npos);
  }
}

TEST(Query, ExactMatchRanksFirst) {
  std::mt19937_64 rng(4);
  const auto lib = random_library(rng, 50);
  const auto& p = lib.at(17);
  const auto hits = query(lib, p.summary.mean, default_channel_weights(), std::nullopt, 3);
  ASSERT_FALSE(hits.empty());
  EXPECT_EQ(hits[0].id, 17u);
  EXPECT_EQ(hits[0].distance, 0.0);
}

TEST(Query, ZeroWeightsTieBreakById) {
  std::mt19937_64 rng(5);
  const auto lib = random_library(rng, 20);
  const auto hits = query(lib, {}, ChannelVector{}, std::nullopt, 5);
  ASSERT_EQ(hits.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(hits[i].id, i);
    EXPECT_EQ(hits[i].distance, 0.0);
  }
}

TEST(Query, MatchesBruteForce) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto lib = random_library(rng, 1 + rng() % 300);
    ChannelVector q{}, w{};
    for (std::size_t j = 0; j < kChannelCount; ++j) {
      q[j] = j >= kAuCount + kGazeCount ? 60.0 * (2 * u(rng) - 1) : u(rng);
      w[j] = 3.0 * u(rng);
    }
    const auto ref = oracle::brute_force_rank(lib, q, w);
    const auto hits = query(lib, q, w, std::nullopt, 7);
    ASSERT_EQ(hits.size(), std::min<std::size_t>(7, lib.size()));
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_EQ(hits[i].id, ref[i].first);
      EXPECT_NEAR(hits[i].distance, ref[i].second, 1e-9);
    }
  }
}

TEST(Query, LabelFilterAndEmptyCandidates) {
  std::mt19937_64 rng(7);
  const auto lib = random_library(rng, 60);
  const auto hits = query(lib, {}, default_channel_weights(), "b", 100);
  EXPECT_EQ(hits.size(), lib.ids_for("b").size());
  for (const auto& h : hits) EXPECT_EQ(lib.at(h.id).label, "b");
  EXPECT_TRUE(query(lib, {}, default_channel_weights(), "nope", 3).empty());
  EXPECT_TRUE(query(build_library({}), {}, default_channel_weights(), std::nullopt, 3).empty());
}

TEST(Query, RejectsBadArguments) {
  std::mt19937_64 rng(8);
  const auto lib = random_library(rng, 5);
  EXPECT_THROW(query(lib, {}, default_channel_weights(), std::nullopt, 0), Error);
  auto w = default_channel_weights();
  w[2] = -1.0;
  EXPECT_THROW(query(lib, {}, w, std::nullopt, 1), Error);
  w[2] = std::nan("");
  EXPECT_THROW(query(lib, {}, w, std::nullopt, 1), Error);
}

TEST(Query, WeightScalingKeepsRanking) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto lib = random_library(rng, 200);
  ChannelVector q{}, w = default_channel_weights(), w2{};
  for (std::size_t j = 0; j < kAuCount; ++j) q[j] = u(rng);
  for (std::size_t j = 0; j < kChannelCount; ++j) w2[j] = 4.0 * w[j];
  const auto a = query(lib, q, w, std::nullopt, 10);
  const auto b = query(lib, q, w2, std::nullopt, 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_NEAR(b[i].distance, 4.0 * a[i].distance, 1e-9);
  }
}

TEST(MatchDistance, HeadChannelsScaledByHalfWidth) {
  ChannelVector q{}, p{}, w{};
  w[index_of(Channel::Yaw)] = 1.0;
  w[index_of(Channel::AU1)] = 2.0;
  q[index_of(Channel::Yaw)] = 45.0;
  q[index_of(Channel::AU1)] = 0.25;
  EXPECT_DOUBLE_EQ(match_distance(q, p, w), 0.5 + 0.5);
}

TEST(Baseline, NeutralIsSymmetric) {
  const auto b = neutral_baseline(default_deformation_model());
  EXPECT_TRUE(is_bilaterally_symmetric(b));
  auto skew = b;
  skew.points[3].x += 0.01;
  EXPECT_FALSE(is_bilaterally_symmetric(skew));
  std::vector<PointFrame3D> frames(3, b.points);
  const auto est = estimate_baseline(frames);
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    EXPECT_NEAR(est.points[i].x, b.points[i].x, 1e-12);
    EXPECT_NEAR(est.points[i].y, b.points[i].y, 1e-12);
    EXPECT_NEAR(est.points[i].z, b.points[i].z, 1e-12);
  }
  EXPECT_THROW(estimate_baseline(std::span<const PointFrame3D>{}), Error);
}

TEST(Invert, BaselineGivesZeros) {
  const auto& model = default_deformation_model();
  const auto b = neutral_baseline(model);
  const auto c = invert_frame(b.points, b, model);
  for (std::size_t j = 0; j < kChannelCount; ++j) EXPECT_NEAR(c[j], 0.0, 1e-9) << j;
}

TEST(Invert, PureYaw) {
  const auto& model = default_deformation_model();
  ControlState c;
  c[Channel::Yaw] = 20.0;
  const auto r = invert_frame(map_frame(c, model).points, neutral_baseline(model), model);
  EXPECT_NEAR(r[Channel::Yaw], 20.0, 0.1);
  for (std::size_t j = 0; j < kAuCount + kGazeCount; ++j) EXPECT_NEAR(r[j], 0.0, 1e-6);
}

TEST(Invert, RoundTripRandomStates) {
  const auto& model = default_deformation_model();
  const auto b = neutral_baseline(model);
  std::mt19937_64 rng(10);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto c = oracle::random_valid_state(rng);
    worst = std::max(worst, max_abs_diff(invert_frame(map_frame(c, model).points, b, model), c));
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(Invert, DegenerateFrame) {
  const auto& model = default_deformation_model();
  PointFrame3D collapsed{};
  EXPECT_THROW(invert_frame(collapsed, neutral_baseline(model), model), Error);
  KeypointSequence3D seq;
  seq.frames = {neutral_baseline(model).points, collapsed};
  try {
    invert_controls(seq, neutral_baseline(model), model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate frame"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos);
  }
}

TEST(LibraryFile, RoundTrip) {
  std::mt19937_64 rng(11);
  const auto lib = build_library({record("x", random_seq(rng, 3)), record("y", random_seq(rng, 2)),
                                  record("x", random_seq(rng, 1))});
  const auto back = library_from_json(library_to_json(lib));
  ASSERT_EQ(back.size(), lib.size());
  for (std::size_t i = 0; i < lib.size(); ++i) {
    EXPECT_EQ(back.at(i).label, lib.at(i).label);
    EXPECT_EQ(back.at(i).controls, lib.at(i).controls);
    EXPECT_EQ(back.at(i).keypoints.frames, lib.at(i).keypoints.frames);
    EXPECT_EQ(back.at(i).summary, lib.at(i).summary);
  }
  EXPECT_EQ(back.index(), lib.index());
  EXPECT_TRUE(library_from_json(library_to_json(build_library({}))).empty());

  const auto path = std::filesystem::temp_directory_path() / "ocular_test_lib.json";
  save_library(lib, path);
  EXPECT_EQ(load_library(path).size(), 3u);
  std::filesystem::remove(path);
}

TEST(LibraryFile, Errors) {
  std::mt19937_64 rng(12);
  const auto text = library_to_json(build_library({record("x", random_seq(rng, 2))}));
  try {
    library_from_json(text.substr(0, text.size() / 2));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("malformed library file"), std::string::npos);
  }
  EXPECT_THROW(library_from_json("{\"version\": 2, \"prototypes\": []}"), Error);
}
