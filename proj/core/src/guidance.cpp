#include "ocular/guidance.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "ocular/control_io.h"
#include "ocular/error.h"

namespace ocular {

void GuidanceParams::validate() const {
  if (!(omega_lo > 0.0)) throw Error("guidance: omega_lo must be positive");
  if (!(omega_hi >= omega_lo)) throw Error("guidance: omega_hi must be at least omega_lo");
  if (!(omega_bg > 0.0)) throw Error("guidance: omega_bg must be positive");
  if (!(alpha >= 0.0 && alpha < gamma && gamma <= 1.0)) {
    throw Error("guidance: need 0 <= alpha < gamma <= 1");
  }
  if (!(kappa > 0.0)) throw Error("guidance: kappa must be positive");
  if (steps == 0) throw Error("guidance: steps must be positive");
}

double temporal_weight(double rho, const GuidanceParams& p) {
  if (rho < p.alpha) return p.omega_hi;
  if (rho >= p.gamma) return p.omega_lo;
  const double u = (rho - p.alpha) / (p.gamma - p.alpha);
  return p.omega_hi - u * (p.omega_hi - p.omega_lo);
}

double step_rho(std::size_t i, std::size_t steps) {
  return static_cast<double>(i) / static_cast<double>(steps);
}

GuidanceField spatial_field(GridDims dims, const EyeGeometry& geom, double kappa) {
  if (!(geom.distance > 0.0)) throw Error("guidance: eye distance must be positive");
  if (!(kappa > 0.0)) throw Error("guidance: kappa must be positive");
  const double s = kappa * geom.distance;
  const double denom = 2.0 * s * s;
  GuidanceField f;
  f.dims = dims;
  f.values.resize(dims.height * dims.width);
  for (std::size_t r = 0; r < dims.height; ++r) {
    const double dy = static_cast<double>(r) - geom.center.y;
    for (std::size_t c = 0; c < dims.width; ++c) {
      const double dx = static_cast<double>(c) - geom.center.x;
      f.values[r * dims.width + c] = std::exp(-(dx * dx + dy * dy) / denom);
    }
  }
  return f;
}

GuidanceField guidance_field(double rho, GridDims dims, const EyeGeometry& geom,
                             const GuidanceParams& p) {
  GuidanceField f = spatial_field(dims, geom, p.kappa);
  const double wt = temporal_weight(rho, p);
  for (double& g : f.values) g = wt * g + p.omega_bg * (1.0 - g);
  f.rho = rho;
  return f;
}

std::vector<GuidanceField> guidance_schedule(GridDims dims, const EyeGeometry& geom,
                                             const GuidanceParams& p) {
  p.validate();
  const GuidanceField g = spatial_field(dims, geom, p.kappa);
  std::vector<GuidanceField> out;
  out.reserve(p.steps);
  for (std::size_t i = 0; i < p.steps; ++i) {
    GuidanceField f = g;
    f.rho = step_rho(i, p.steps);
    const double wt = temporal_weight(f.rho, p);
    for (double& v : f.values) v = wt * v + p.omega_bg * (1.0 - v);
    out.push_back(std::move(f));
  }
  return out;
}

Tensor apply_guidance(const Tensor& cond, const Tensor& uncond, const GuidanceField& field) {
  auto same = [](GridDims a, GridDims b) { return a.height == b.height && a.width == b.width; };
  if (!same(cond.dims, uncond.dims) || cond.channels != uncond.channels) {
    throw Error("apply_guidance: cond and uncond shapes differ");
  }
  if (!same(cond.dims, field.dims)) throw Error("apply_guidance: field shape differs from predictions");
  const std::size_t plane = cond.dims.height * cond.dims.width;
  if (cond.data.size() != cond.channels * plane || uncond.data.size() != cond.data.size()) {
    throw Error("apply_guidance: tensor data size does not match its shape");
  }
  Tensor out = uncond;
  for (std::size_t ch = 0; ch < cond.channels; ++ch) {
    for (std::size_t i = 0; i < plane; ++i) {
      const std::size_t k = ch * plane + i;
      out.data[k] = uncond.data[k] + field.values[i] * (cond.data[k] - uncond.data[k]);
    }
  }
  return out;
}

EyeGeometry eye_geometry(const KeypointFrame& frame, GridDims dims) {
  const auto [mid, _] = iris_midpoint_and_distance(frame);
  (void)_;
  const auto w = static_cast<double>(dims.width), h = static_cast<double>(dims.height);
  // Iris centres in latent cells; distance measured after scaling each axis.
  auto iris = [&](std::size_t base) {
    Vec2 c;
    for (std::size_t k = 0; k < layout::kIrisPoints; ++k) c = c + frame.points[base + layout::kIris + k];
    return (1.0 / static_cast<double>(layout::kIrisPoints)) * c;
  };
  const Vec2 l = iris(layout::kLeftEye), r = iris(layout::kRightEye);
  EyeGeometry g;
  g.center = {mid.x * w - 0.5, mid.y * h - 0.5};
  g.distance = std::hypot((l.x - r.x) * w, (l.y - r.y) * h);
  return g;
}

GridDims latent_dims(std::size_t image_height, std::size_t image_width, std::size_t compression) {
  if (compression == 0) throw Error("compression factor must be positive");
  return {image_height / compression, image_width / compression};
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

void put_f32(std::string& out, double v) {
  const float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw ParseError("OGF1: truncated payload");
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  pos += 4;
  return v;
}

double get_f32(const std::string& in, std::size_t& pos) {
  const std::uint32_t bits = get_u32(in, pos);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

}  // namespace

std::string fields_to_ogf1(const std::vector<GuidanceField>& fields) {
  std::string out = "OGF1";
  const GridDims d = fields.empty() ? GridDims{0, 0} : fields.front().dims;
  for (const auto& f : fields) {
    if (f.dims.height != d.height || f.dims.width != d.width) throw Error("OGF1: fields differ in shape");
  }
  put_u32(out, static_cast<std::uint32_t>(d.height));
  put_u32(out, static_cast<std::uint32_t>(d.width));
  put_u32(out, static_cast<std::uint32_t>(fields.size()));
  for (const auto& f : fields) put_f32(out, f.rho);
  for (const auto& f : fields)
    for (double v : f.values) put_f32(out, v);
  return out;
}

std::vector<GuidanceField> fields_from_ogf1(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "OGF1") != 0) throw ParseError("OGF1: bad magic");
  std::size_t pos = 4;
  GridDims d;
  d.height = get_u32(bytes, pos);
  d.width = get_u32(bytes, pos);
  const std::uint32_t steps = get_u32(bytes, pos);
  std::vector<GuidanceField> out(steps);
  for (auto& f : out) {
    f.dims = d;
    f.rho = get_f32(bytes, pos);
  }
  for (auto& f : out) {
    f.values.resize(d.height * d.width);
    for (double& v : f.values) v = get_f32(bytes, pos);
  }
  if (pos != bytes.size()) throw ParseError("OGF1: trailing bytes");
  return out;
}

void save_ogf1(const std::vector<GuidanceField>& fields, const std::filesystem::path& path) {
  write_text_file(path, fields_to_ogf1(fields));
}

}  // namespace ocular
