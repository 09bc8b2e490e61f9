#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "ocular/error.h"
#include "ocular/guidance.h"
#include "ocular/mapper.h"

using namespace ocular;

namespace {

const GuidanceParams P{};

double distance(std::size_t r, std::size_t c, Vec2 center) {
  return std::hypot(static_cast<double>(c) - center.x, static_cast<double>(r) - center.y);
}

}  // namespace

TEST(TemporalWeight, ScheduleValues) {
  EXPECT_EQ(temporal_weight(0.10, P), 8.0);
  EXPECT_NEAR(temporal_weight(0.40, P), 6.0, 1e-12);
  EXPECT_EQ(temporal_weight(0.70, P), 4.0);
  EXPECT_EQ(temporal_weight(1.0, P), 4.0);
  EXPECT_EQ(temporal_weight(0.0, P), 8.0);
}

TEST(TemporalWeight, NonIncreasingAndContinuous) {
  double prev = temporal_weight(0.0, P);
  for (int i = 1; i <= 10000; ++i) {
    const double w = temporal_weight(i / 10000.0, P);
    EXPECT_LE(w, prev + 1e-15);
    prev = w;
  }
  const double e = 1e-9;
  EXPECT_NEAR(temporal_weight(P.alpha - e, P), temporal_weight(P.alpha, P), 1e-6);
  EXPECT_NEAR(temporal_weight(P.gamma - e, P), temporal_weight(P.gamma, P), 1e-6);
}

TEST(GuidanceParams, Validation) {
  EXPECT_NO_THROW(P.validate());
  auto bad = P;
  bad.alpha = 0.6;
  EXPECT_THROW(bad.validate(), Error);
  bad = P;
  bad.omega_lo = 9.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = P;
  bad.kappa = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = P;
  bad.omega_bg = 0.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(StepRho, StartsAtZero) {
  EXPECT_EQ(step_rho(0, 40), 0.0);
  EXPECT_DOUBLE_EQ(step_rho(39, 40), 39.0 / 40.0);
}

TEST(SpatialField, Examples) {
  const EyeGeometry g{{31.0, 20.0}, 8.0};
  const auto f = spatial_field({64, 64}, g, 1.0);
  EXPECT_EQ(f.at(20, 31), 1.0);
  EXPECT_NEAR(f.at(20, 39), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(f.at(28, 31), 0.6065306597126334, 1e-15);
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t d = 1; d <= 31; ++d) EXPECT_NEAR(f.at(r, 31 - d), f.at(r, 31 + d), 1e-12);
  EXPECT_THROW(spatial_field({64, 64}, {{1, 1}, 0.0}, 1.0), Error);
  EXPECT_THROW(spatial_field({64, 64}, {{1, 1}, 2.0}, -1.0), Error);
}

TEST(SpatialField, MatchesClosedForm) {
  const EyeGeometry g{{20.3, 33.7}, 5.5};
  const double kappa = 1.3;
  const auto f = spatial_field({48, 40}, g, kappa);
  for (std::size_t r = 0; r < 48; ++r) {
    for (std::size_t c = 0; c < 40; ++c) {
      const double d = distance(r, c, g.center);
      EXPECT_NEAR(f.at(r, c), std::exp(-d * d / (2 * kappa * kappa * g.distance * g.distance)), 1e-15);
    }
  }
}

TEST(GuidanceField, CentreFarAndBounds) {
  const EyeGeometry g{{10.0, 12.0}, 2.0};
  for (std::size_t i = 0; i < P.steps; ++i) {
    const double rho = step_rho(i, P.steps);
    const auto f = guidance_field(rho, {64, 64}, g, P);
    const double wt = temporal_weight(rho, P);
    EXPECT_NEAR(f.at(12, 10), wt, 1e-12);
    EXPECT_NEAR(f.at(63, 63), 1.0, 1e-6);
    for (double v : f.values) {
      EXPECT_GE(v, std::min(wt, P.omega_bg) - 1e-12);
      EXPECT_LE(v, std::max(wt, P.omega_bg) + 1e-12);
    }
  }
}

TEST(GuidanceField, UniformWhenWeightsEqual) {
  GuidanceParams p;
  p.omega_hi = p.omega_lo = p.omega_bg = 2.5;
  const auto f = guidance_field(0.3, {16, 16}, {{4, 4}, 3}, p);
  for (double v : f.values) EXPECT_NEAR(v, 2.5, 1e-12);
}

TEST(GuidanceField, RadiallyNonIncreasing) {
  const EyeGeometry g{{31.5, 30.2}, 6.0};
  for (const auto& f : guidance_schedule({64, 64}, g, P)) {
    std::vector<std::pair<double, double>> byd;
    for (std::size_t r = 0; r < 64; ++r)
      for (std::size_t c = 0; c < 64; ++c) byd.emplace_back(distance(r, c, g.center), f.at(r, c));
    std::sort(byd.begin(), byd.end());
    for (std::size_t k = 1; k < byd.size(); ++k) EXPECT_LE(byd[k].second, byd[k - 1].second + 1e-12);
  }
}

TEST(Schedule, FortySteps) {
  const auto fs = guidance_schedule({64, 64}, {{32, 32}, 4}, P);
  ASSERT_EQ(fs.size(), 40u);
  EXPECT_EQ(fs.front().rho, 0.0);
  EXPECT_EQ(fs.front().at(32, 32), 8.0);
  EXPECT_EQ(fs.back().at(32, 32), 4.0);
}

TEST(ApplyGuidance, Examples) {
  const GridDims d{2, 3};
  GuidanceField f{d, std::vector<double>(6, 6.0), 0.0};
  Tensor cond{2, d, std::vector<double>(12, 1.0)}, uncond{2, d, std::vector<double>(12, 0.0)};
  for (double v : apply_guidance(cond, uncond, f).data) EXPECT_EQ(v, 6.0);
  EXPECT_EQ(apply_guidance(cond, cond, f).data, cond.data);
  GuidanceField one{d, std::vector<double>(6, 1.0), 0.0};
  for (std::size_t i = 0; i < 12; ++i) uncond.data[i] = 0.1 * static_cast<double>(i);
  const auto fused = apply_guidance(cond, uncond, one);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(fused.data[i], cond.data[i], 1e-15);
  Tensor wrong{2, {3, 2}, std::vector<double>(12, 0.0)};
  EXPECT_THROW(apply_guidance(cond, wrong, f), Error);
  Tensor short_data{2, d, std::vector<double>(11, 0.0)};
  EXPECT_THROW(apply_guidance(short_data, uncond, f), Error);
}

TEST(ApplyGuidance, LinearInDifference) {
  const GridDims d{4, 4};
  const auto f = guidance_field(0.3, d, {{1.5, 2.0}, 1.0}, P);
  Tensor u{1, d, std::vector<double>(16, 0.25)}, c1 = u, c2 = u, c12 = u;
  for (std::size_t i = 0; i < 16; ++i) {
    c1.data[i] += 0.01 * static_cast<double>(i);
    c2.data[i] -= 0.02 * static_cast<double>(i % 5);
    c12.data[i] = c1.data[i] + c2.data[i] - u.data[i];
  }
  const auto a = apply_guidance(c1, u, f), b = apply_guidance(c2, u, f), ab = apply_guidance(c12, u, f);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(ab.data[i], a.data[i] + b.data[i] - u.data[i], 1e-12);
}

TEST(EyeGeometry, FromKeypoints) {
  const auto kp = map_frame({}, default_deformation_model()).keypoints;
  const auto [mid, dist] = iris_midpoint_and_distance(kp);
  const auto g = eye_geometry(kp, {64, 64});
  EXPECT_NEAR(g.center.x, mid.x * 64 - 0.5, 1e-12);
  EXPECT_NEAR(g.center.y, mid.y * 64 - 0.5, 1e-12);
  EXPECT_NEAR(g.distance, dist * 64, 1e-12);
  EXPECT_GT(g.distance, 0.0);
  EXPECT_EQ(latent_dims(512, 512, 8).height, 64u);
}

TEST(Ogf1, LayoutAndRoundTrip) {
  const auto fs = guidance_schedule({5, 7}, {{3, 2}, 2}, P);
  const auto bytes = fields_to_ogf1(fs);
  ASSERT_EQ(bytes.size(), 4 + 12 + 4 * fs.size() + 4 * 35 * fs.size());
  EXPECT_EQ(bytes.substr(0, 4), "OGF1");
  std::uint32_t h = 0, w = 0, n = 0;
  const auto u32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 3])) << 24;
  };
  h = u32(4);
  w = u32(8);
  n = u32(12);
  EXPECT_EQ(h, 5u);
  EXPECT_EQ(w, 7u);
  EXPECT_EQ(n, 40u);
  const auto back = fields_from_ogf1(bytes);
  ASSERT_EQ(back.size(), fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    EXPECT_FLOAT_EQ(static_cast<float>(back[i].rho), static_cast<float>(fs[i].rho));
    for (std::size_t k = 0; k < 35; ++k) EXPECT_FLOAT_EQ(static_cast<float>(back[i].values[k]), static_cast<float>(fs[i].values[k]));
  }
  EXPECT_THROW(fields_from_ogf1(bytes.substr(0, 20)), Error);
  EXPECT_THROW(fields_from_ogf1("XXXX" + bytes.substr(4)), Error);
}
