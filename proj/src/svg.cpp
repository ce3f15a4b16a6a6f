#include "asp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "asp/errors.hpp"

namespace asp {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string Tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::ostringstream& Text(std::ostringstream& os, double x, double y,
                         const std::string& text, const char* anchor = "middle",
                         int size = 12, const std::string& extra = "") {
  os << "<text x=\"" << Num(x) << "\" y=\"" << Num(y) << "\" font-size=\"" << size
     << "\" text-anchor=\"" << anchor << "\"" << extra << ">" << XmlEscape(text)
     << "</text>\n";
  return os;
}

std::string Header(int width, int height) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
     << "\" font-family=\"sans-serif\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os.str();
}

}  // namespace

std::string XmlEscape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string LineChartSvg(const std::vector<Series>& series,
                         const LineChartOptions& o) {
  if (!(o.y_max > o.y_min)) throw ConfigError("y_max must exceed y_min");
  const double left = 60, right = 150, top = 40, bottom = 50;
  const double pw = o.width - left - right, ph = o.height - top - bottom;

  double x_min = 0, x_max = 1;
  bool any = false;
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!any) x_min = x_max = x;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      any = true;
    }
  }
  if (x_max == x_min) {
    x_min -= 1;
    x_max += 1;
  }
  const auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * pw; };
  const auto sy = [&](double y) {
    const double c = std::clamp(y, o.y_min, o.y_max);
    return top + (1.0 - (c - o.y_min) / (o.y_max - o.y_min)) * ph;
  };

  std::ostringstream os;
  os << Header(o.width, o.height);
  Text(os, o.width / 2.0, 22, o.title, "middle", 15);
  os << "<rect x=\"" << Num(left) << "\" y=\"" << Num(top) << "\" width=\"" << Num(pw)
     << "\" height=\"" << Num(ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double y = o.y_min + (o.y_max - o.y_min) * k / 5.0;
    os << "<line x1=\"" << Num(left) << "\" x2=\"" << Num(left + pw) << "\" y1=\""
       << Num(sy(y)) << "\" y2=\"" << Num(sy(y)) << "\" stroke=\"#ddd\"/>\n";
    Text(os, left - 6, sy(y) + 4, Tick(y), "end", 11);
    const double x = x_min + (x_max - x_min) * k / 5.0;
    Text(os, sx(x), top + ph + 16, Tick(std::round(x * 100) / 100), "middle", 11);
  }
  Text(os, left + pw / 2, o.height - 10, o.x_label);
  Text(os, 16, top + ph / 2, o.y_label, "middle", 12,
       " transform=\"rotate(-90 16 " + Num(top + ph / 2) + ")\"");

  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    if (s.points.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (const auto& [x, y] : s.points) os << Num(sx(x)) << "," << Num(sy(y)) << " ";
      os << "\"/>\n";
    }
    for (const auto& [x, y] : s.points) {
      os << "<circle cx=\"" << Num(sx(x)) << "\" cy=\"" << Num(sy(y))
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(i);
    os << "<rect x=\"" << Num(left + pw + 12) << "\" y=\"" << Num(ly - 8)
       << "\" width=\"12\" height=\"4\" fill=\"" << color << "\"/>\n";
    Text(os, left + pw + 30, ly, s.label, "start", 11);
  }
  if (!any) Text(os, left + pw / 2, top + ph / 2, "no data", "middle", 14);
  os << "</svg>\n";
  return os.str();
}

std::string HeatmapSvg(const std::string& title,
                       const std::vector<std::string>& rows,
                       const std::vector<std::string>& cols,
                       const std::vector<std::vector<std::optional<double>>>& values,
                       const std::string& row_axis, const std::string& col_axis) {
  if (values.size() != rows.size()) throw ValidationError("heatmap row count mismatch");
  for (const auto& row : values) {
    if (row.size() != cols.size()) throw ValidationError("heatmap column count mismatch");
  }
  const double cell = 56, left = 110, top = 70;
  const int width = static_cast<int>(left + cell * static_cast<double>(cols.size()) + 30);
  const int height = static_cast<int>(top + cell * static_cast<double>(rows.size()) + 30);

  std::ostringstream os;
  os << Header(width, height);
  os << "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
        "<rect width=\"6\" height=\"6\" fill=\"#eee\"/>"
        "<path d=\"M0,6 L6,0\" stroke=\"#aaa\"/></pattern></defs>\n";
  Text(os, width / 2.0, 20, title, "middle", 15);
  Text(os, left + cell * static_cast<double>(cols.size()) / 2, 40, col_axis, "middle", 12);
  Text(os, 14, top + cell * static_cast<double>(rows.size()) / 2, row_axis, "middle", 12,
       " transform=\"rotate(-90 14 " +
           Num(top + cell * static_cast<double>(rows.size()) / 2) + ")\"");
  for (std::size_t j = 0; j < cols.size(); ++j) {
    Text(os, left + cell * (static_cast<double>(j) + 0.5), top - 8, cols[j], "middle", 11);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double y = top + cell * static_cast<double>(i);
    Text(os, left - 6, y + cell / 2 + 4, rows[i], "end", 11);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double x = left + cell * static_cast<double>(j);
      const auto& v = values[i][j];
      std::string fill = "url(#hatch)";
      std::string label = "n/a";
      std::string ink = "#333";
      if (v) {
        const double t = std::clamp(*v, 0.0, 1.0);
        const int r = static_cast<int>(std::lround(255 - t * (255 - 8)));
        const int g = static_cast<int>(std::lround(255 - t * (255 - 48)));
        const int b = static_cast<int>(std::lround(255 - t * (255 - 107)));
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
        fill = buf;
        label = Num(*v);
        ink = t > 0.55 ? "white" : "#111";
      }
      os << "<rect x=\"" << Num(x) << "\" y=\"" << Num(y) << "\" width=\"" << Num(cell)
         << "\" height=\"" << Num(cell) << "\" fill=\"" << fill
         << "\" stroke=\"white\"/>\n";
      Text(os, x + cell / 2, y + cell / 2 + 4, label, "middle", 11,
           " fill=\"" + ink + "\"");
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace asp
