#include "coevae/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

namespace coevae {

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 180, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_loss_svg(const std::string& title, const std::vector<PlotSeries>& series) {
  double x0 = std::numeric_limits<double>::max(), x1 = std::numeric_limits<double>::lowest();
  double y0 = std::numeric_limits<double>::max(), y1 = std::numeric_limits<double>::lowest();
  for (const auto& s : series) {
    for (const auto& e : s.stats) {
      x0 = std::min(x0, static_cast<double>(e.epoch));
      x1 = std::max(x1, static_cast<double>(e.epoch));
      y0 = std::min(y0, e.q1);
      y1 = std::max(y1, e.q3);
    }
  }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1e-3;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                kWidth, kHeight);
  svg << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"15\">" << escape(title) << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                kLeft, kTop, pw, ph);
  svg << buf;
  for (int i = 0; i <= 4; ++i) {
    const double yv = y0 + (y1 - y0) * i / 4.0;
    const double xv = x0 + (x1 - x0) * i / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4f</text>\n"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.0f</text>\n",
                  kLeft - 6, py(yv) + 4, yv, px(xv), kTop + ph + 18, xv);
    svg << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">epoch</text>\n",
                kLeft + pw / 2, kHeight - 10);
  svg << buf;

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % (sizeof kColors / sizeof kColors[0])];
    if (s.stats.empty()) continue;
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (const auto& e : s.stats) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(static_cast<double>(e.epoch)), py(e.q3));
      svg << buf;
    }
    for (auto it = s.stats.rbegin(); it != s.stats.rend(); ++it) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(static_cast<double>(it->epoch)), py(it->q1));
      svg << buf;
    }
    svg << "\"/>\n<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << color << "\" points=\"";
    for (const auto& e : s.stats) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(static_cast<double>(e.epoch)), py(e.median));
      svg << buf;
    }
    svg << "\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"12\" height=\"3\" fill=\"%s\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\">",
                  kLeft + pw + 12, kTop + 10 + 18.0 * static_cast<double>(si), color,
                  kLeft + pw + 30, kTop + 15 + 18.0 * static_cast<double>(si));
    svg << buf << escape(s.name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace coevae
