#include <algorithm>
#include <cstdio>
#include <sstream>

#include "ssed/evaluation.hpp"

namespace ssed::eval {

namespace {

std::string num(double v, const char* fmt = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* colour(const std::string& group) {
  if (group == "scene") return "#c0392b";
  if (group == "clip") return "#2e86c1";
  return "#7f8c8d";
}

}  // namespace

std::string plot_csv(const std::vector<PlotPoint>& points) {
  std::string out = "label,group,pc1,pc2\n";
  for (const auto& p : points) {
    out += csv_field(p.label) + "," + csv_field(p.group) + "," + num(p.x, "%.17g") + "," + num(p.y, "%.17g") + "\n";
  }
  return out;
}

std::string plot_svg(const std::vector<PlotPoint>& points, const std::string& title) {
  constexpr double W = 640, H = 480, M = 50;
  double x0 = -1, x1 = 1, y0 = -1, y1 = 1;
  if (!points.empty()) {
    x0 = x1 = points[0].x;
    y0 = y1 = points[0].y;
    for (const auto& p : points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  }
  if (x1 - x0 < 1e-12) { x0 -= 1; x1 += 1; }
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  auto sx = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto sy = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";
  s << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"12\">PC1</text>\n";
  s << "<text x=\"15\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
    << "transform=\"rotate(-90 15 " << H / 2 << ")\">PC2</text>\n";
  // Clips first so scene markers stay on top.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& p : points) {
      const bool scene = p.group == "scene";
      if (scene != (pass == 1)) continue;
      s << "<circle cx=\"" << num(sx(p.x), "%.3f") << "\" cy=\"" << num(sy(p.y), "%.3f") << "\" r=\""
        << (scene ? 6 : 3) << "\" fill=\"" << colour(p.group) << "\" fill-opacity=\"" << (scene ? "1" : "0.6")
        << "\"><title>" << xml_escape(p.label) << "</title></circle>\n";
      if (scene) {
        s << "<text x=\"" << num(sx(p.x) + 8, "%.3f") << "\" y=\"" << num(sy(p.y) - 8, "%.3f")
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(p.label) << "</text>\n";
      }
    }
  }
  s << "</svg>\n";
  return s.str();
}

std::string distance_tsv(const std::vector<std::string>& labels, const std::vector<std::vector<double>>& d) {
  std::string out = "label";
  for (const auto& l : labels) out += "\t" + l;
  out += "\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += labels[i];
    for (std::size_t j = 0; j < labels.size(); ++j) out += "\t" + num(d.at(i).at(j), "%.17g");
    out += "\n";
  }
  return out;
}

}  // namespace ssed::eval
