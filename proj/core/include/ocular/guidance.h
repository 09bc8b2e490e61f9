#pragma once

// Dynamic classifier-free guidance weights: a trapezoidal schedule over
// denoising progress, a Gaussian eye-region map, and their combination.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ocular/geometry.h"
#include "ocular/mapper.h"

namespace ocular {

struct GuidanceParams {
  double omega_hi = 8.0;
  double omega_lo = 4.0;
  double omega_bg = 1.0;
  double alpha = 0.25;
  double gamma = 0.55;
  double kappa = 1.0;
  std::size_t steps = 40;

  /// Throws ocular::Error naming the first broken invariant.
  void validate() const;
};

/// Eye centre and inter-eye distance in latent-grid cells.
struct EyeGeometry {
  Vec2 center;
  double distance = 1.0;
};

struct GridDims {
  std::size_t height = 64;
  std::size_t width = 64;
};

/// Row-major H x W grid; cell (r, c) sits at latent coordinate (x = c, y = r).
struct GuidanceField {
  GridDims dims;
  std::vector<double> values;
  double rho = 0.0;

  double at(std::size_t row, std::size_t col) const { return values[row * dims.width + col]; }
};

/// omega_hi before alpha, linear down to omega_lo on [alpha, gamma), omega_lo after.
double temporal_weight(double rho, const GuidanceParams& p);

/// i / N for step index i in [0, N).
double step_rho(std::size_t i, std::size_t steps);

/// exp(-|cell - c|^2 / (2 (kappa d)^2)). Throws when d <= 0 or kappa <= 0.
GuidanceField spatial_field(GridDims dims, const EyeGeometry& geom, double kappa);

/// omega_t(rho) G + omega_bg (1 - G) per cell.
GuidanceField guidance_field(double rho, GridDims dims, const EyeGeometry& geom,
                             const GuidanceParams& p);

/// One field per step i = 0..N-1.
std::vector<GuidanceField> guidance_schedule(GridDims dims, const EyeGeometry& geom,
                                             const GuidanceParams& p);

/// Channel-major C x H x W tensor.
struct Tensor {
  std::size_t channels = 1;
  GridDims dims;
  std::vector<double> data;
};

/// uncond + Omega * (cond - uncond), with the field broadcast over channels.
/// Throws on any shape mismatch.
Tensor apply_guidance(const Tensor& cond, const Tensor& uncond, const GuidanceField& field);

/// Iris midpoint and distance from a keypoint frame, moved into latent cells:
/// latent = normalised * size - 0.5.
EyeGeometry eye_geometry(const KeypointFrame& frame, GridDims dims);

/// Latent grid for an image side length and VAE compression factor.
GridDims latent_dims(std::size_t image_height, std::size_t image_width, std::size_t compression);

/// "OGF1" little-endian export: magic, u32 H, u32 W, u32 steps, f32 rho per
/// step, then row-major f32 payload per step.
std::string fields_to_ogf1(const std::vector<GuidanceField>& fields);
std::vector<GuidanceField> fields_from_ogf1(const std::string& bytes);
void save_ogf1(const std::vector<GuidanceField>& fields, const std::filesystem::path& path);

}  // namespace ocular
