#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "lowrank/bench.hpp"
#include "lowrank/error.hpp"

namespace lowrank {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 64;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 52;

const char* const kSvdColors[] = {"#ff7f0e", "#d95f02", "#fdae6b"};
const char* const kCodecColors[] = {"#1f77b4", "#6baed6", "#08519c", "#17becf", "#3182bd"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Tick step of 1, 2 or 5 times a power of ten giving roughly six ticks.
double nice_step(double span) {
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

}  // namespace

std::string render_svg_plot(const std::vector<ToleranceCurve>& curves, const std::string& title) {
  if (curves.empty()) throw Error(ErrorKind::Plot, "nothing to plot");
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& c : curves) {
    if (c.points.size() < 2) throw Error(ErrorKind::Plot, "curve " + c.method + " has fewer than 2 points");
    for (const auto& p : c.points) {
      lo = std::min(lo, p.mean_ratio);
      hi = std::max(hi, p.mean_ratio);
    }
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;
  const double step = nice_step(hi - lo);
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + x * plot_w; };
  auto py = [&](double y) { return kTop + (hi - y) / (hi - lo) * plot_h; };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    s += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         xml_escape(title) + "</text>\n";
  }

  // Axes and grid.
  s += "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (int i = 0; i <= 10; i += 2) {
    const double x = px(i / 10.0);
    s += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(x) + "\" y2=\"" + num(kTop + plot_h) +
         "\"/>\n";
  }
  const int ticks = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= ticks; ++i) {
    const double y = py(lo + i * step);
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft + plot_w) + "\" y2=\"" + num(y) +
         "\"/>\n";
  }
  s += "</g>\n";
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(plot_w) + "\" height=\"" +
       num(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; i += 2) {
    s += "<text x=\"" + num(px(i / 10.0)) + "\" y=\"" + num(kTop + plot_h + 16) + "\" text-anchor=\"middle\">" +
         num(i / 10.0).substr(0, 3) + "</text>\n";
  }
  for (int i = 0; i <= ticks; ++i) {
    const double v = lo + i * step;
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(v) + 4) + "\" text-anchor=\"end\">" + num(v) +
         "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 12) +
       "\" text-anchor=\"middle\">Relative Frobenius error (tolerance)</text>\n";
  s += "<text transform=\"translate(16 " + num(kTop + plot_h / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">Compression ratio</text>\n";
  if (lo < 0.0) {
    s += "<line class=\"zero\" x1=\"" + num(kLeft) + "\" y1=\"" + num(py(0.0)) + "\" x2=\"" + num(kLeft + plot_w) +
         "\" y2=\"" + num(py(0.0)) + "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
  }

  std::size_t svd_i = 0;
  std::size_t codec_i = 0;
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    const bool svd = c.method.starts_with("svd");
    const char* color = svd ? kSvdColors[svd_i++ % std::size(kSvdColors)]
                            : kCodecColors[codec_i++ % std::size(kCodecColors)];
    std::string pts;
    for (const auto& p : c.points) {
      if (!pts.empty()) pts += ' ';
      pts += num(px(p.tolerance)) + "," + num(py(p.mean_ratio));
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts +
         "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(ci);
    const double lx = kLeft + plot_w + 14;
    s += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 22) + "\" y2=\"" + num(ly) +
         "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(lx + 28) + "\" y=\"" + num(ly + 4) + "\">" + xml_escape(c.method) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

void emit_svg_plot(const std::vector<ToleranceCurve>& curves, const std::filesystem::path& path,
                   const std::string& title) {
  const std::string svg = render_svg_plot(curves, title);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << svg;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace lowrank
