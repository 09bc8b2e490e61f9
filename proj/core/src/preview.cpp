#include "ocular/preview.h"

#include <algorithm>
#include <array>
#include <cstdio>

#include "ocular/control_io.h"
#include "text_util.h"

namespace ocular {

namespace {

using detail::format_double;

struct Polyline {
  std::size_t first;
  std::size_t count;
};

constexpr std::array<Polyline, 6> kLines = {{
    {layout::kLeftEye + layout::kUpperLid, layout::kLidPoints},
    {layout::kLeftEye + layout::kLowerLid, layout::kLidPoints},
    {layout::kRightEye + layout::kUpperLid, layout::kLidPoints},
    {layout::kRightEye + layout::kLowerLid, layout::kLidPoints},
    {layout::kLeftBrow, layout::kBrowPoints},
    {layout::kRightBrow, layout::kBrowPoints},
}};

void draw_frame(std::string& out, const KeypointFrame& f, double x0, double y0, double size) {
  auto px = [&](const Vec2& p) {
    return format_double(x0 + p.x * size) + "," + format_double(y0 + p.y * size);
  };
  for (const auto& line : kLines) {
    out += "<polyline fill=\"none\" stroke=\"#333\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < line.count; ++i) {
      if (i) out += ' ';
      out += px(f.points[line.first + i]);
    }
    out += "\"/>\n";
  }
  for (std::size_t i = 0; i < kKeypointCount; ++i) {
    const bool iris = layout::is_iris_or_pupil(i);
    const Vec2 p = f.points[i];
    out += "<circle cx=\"" + format_double(x0 + p.x * size) + "\" cy=\"" +
           format_double(y0 + p.y * size) + "\" r=\"" + (iris ? "1.5" : "1") + "\" fill=\"" +
           (iris ? "#1f5fbf" : "#333") + "\"/>\n";
  }
}

std::string svg_open(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(w) + "\" height=\"" +
         format_double(h) + "\" viewBox=\"0 0 " + format_double(w) + " " + format_double(h) +
         "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string frame_svg(const KeypointFrame& frame, const PreviewOptions& options) {
  const double s = options.size;
  std::string out = svg_open(s, s);
  draw_frame(out, frame, 0.0, 0.0, s);
  out += "</svg>\n";
  return out;
}

std::string contact_sheet_svg(const KeypointSequence& seq, const PreviewOptions& options) {
  const std::size_t stride = std::max<std::size_t>(options.sheet_stride, 1);
  const std::size_t cols = static_cast<std::size_t>(std::max(options.sheet_columns, 1));
  const std::size_t n = (seq.size() + stride - 1) / stride;
  const std::size_t rows = std::max<std::size_t>((n + cols - 1) / cols, 1);
  const double s = options.size;
  std::string out = svg_open(s * static_cast<double>(cols), s * static_cast<double>(rows));
  for (std::size_t k = 0; k < n; ++k) {
    const double x0 = s * static_cast<double>(k % cols);
    const double y0 = s * static_cast<double>(k / cols);
    out += "<g>\n";
    draw_frame(out, seq.frames[k * stride], x0, y0, s);
    out += "<text x=\"" + format_double(x0 + 4) + "\" y=\"" + format_double(y0 + 14) +
           "\" font-size=\"12\" fill=\"#888\">" + std::to_string(k * stride + 1) + "</text>\n</g>\n";
  }
  out += "</svg>\n";
  return out;
}

std::size_t write_preview(const KeypointSequence& seq, const std::filesystem::path& dir,
                          const PreviewOptions& options) {
  std::filesystem::create_directories(dir);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.svg", t + 1);
    write_text_file(dir / name, frame_svg(seq.frames[t], options));
  }
  write_text_file(dir / "contact_sheet.svg", contact_sheet_svg(seq, options));
  return seq.size() + 1;
}

}  // namespace ocular
