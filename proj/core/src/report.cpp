#include "modfus/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace modfus {

namespace {

void check_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") != std::string::npos) {
    throw std::invalid_argument("csv field contains a delimiter: " + s);
  }
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::invalid_argument("write failed: " + path);
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = 0.0, hi = 1.0;
};

Range find_range(const std::vector<double>& vals) {
  Range r{0.0, 0.0};
  bool any = false;
  for (double v : vals) {
    if (!std::isfinite(v)) continue;
    if (!any) {
      r.lo = r.hi = v;
      any = true;
    } else {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  }
  if (!any) return {0.0, 1.0};
  if (r.hi == r.lo) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  return r;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string rgb_hex(double t) {
  // Two-stop ramp, cool to warm.
  const double lo[3] = {43, 108, 176}, hi[3] = {229, 62, 62};
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(lo[0] + t * (hi[0] - lo[0]))),
                static_cast<int>(std::lround(lo[1] + t * (hi[1] - lo[1]))),
                static_cast<int>(std::lround(lo[2] + t * (hi[2] - lo[2]))));
  return buf;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_string(const std::vector<MetricRow>& rows) {
  std::string out = "condition,trial,metric,value\n";
  for (const auto& r : rows) {
    check_field(r.condition);
    check_field(r.metric);
    out += r.condition;
    out += ',';
    out += std::to_string(r.trial);
    out += ',';
    out += r.metric;
    out += ',';
    out += format_double(r.value);
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  write_file(path, csv_string(rows));
}

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<Series>& series) {
  const double width = 640, height = 420;
  const double ml = 62, mr = 150, mt = 34, mb = 48;
  const double pw = width - ml - mr, ph = height - mt - mb;

  std::vector<double> all_x, all_y;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("series x/y length mismatch: " + s.name);
    }
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (std::isfinite(s.x[k]) && std::isfinite(s.y[k])) {
        all_x.push_back(s.x[k]);
        all_y.push_back(s.y[k]);
      }
    }
  }
  const Range rx = find_range(all_x);
  Range ry = find_range(all_y);
  const double pad = 0.05 * (ry.hi - ry.lo);
  ry.lo -= pad;
  ry.hi += pad;

  auto px = [&](double x) { return ml + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double y) { return mt + ph - (y - ry.lo) / (ry.hi - ry.lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << (ml + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << xml_escape(title) << "</text>\n";

  for (int k = 0; k <= 4; ++k) {
    const double fx = rx.lo + (rx.hi - rx.lo) * k / 4.0;
    const double fy = ry.lo + (ry.hi - ry.lo) * k / 4.0;
    const double gx = px(fx), gy = py(fy);
    svg << "<line x1=\"" << gx << "\" y1=\"" << mt << "\" x2=\"" << gx << "\" y2=\"" << (mt + ph)
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << gy << "\" x2=\"" << (ml + pw) << "\" y2=\"" << gy
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << gx << "\" y=\"" << (mt + ph + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << tick_label(fx) << "</text>\n";
    svg << "<text x=\"" << (ml - 6) << "\" y=\"" << (gy + 3)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << tick_label(fy)
        << "</text>\n";
  }
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (ml + pw / 2) << "\" y=\"" << (height - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + ph / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << (mt + ph / 2) << ")\">" << xml_escape(y_label)
      << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    std::ostringstream pts;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      pts << px(s.x[k]) << "," << py(s.y[k]) << " ";
    }
    svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      svg << "<circle cx=\"" << px(s.x[k]) << "\" cy=\"" << py(s.y[k]) << "\" r=\"2.5\" fill=\""
          << color << "\"/>\n";
    }
    const double ly = mt + 14 + 16 * static_cast<double>(si);
    svg << "<line x1=\"" << (ml + pw + 10) << "\" y1=\"" << ly << "\" x2=\"" << (ml + pw + 28)
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << (ml + pw + 32) << "\" y=\"" << (ly + 3)
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(s.name) << "</text>\n";
  }
  svg << "</svg>\n";
  write_file(path, svg.str());
}

void write_heatmap_svg(const std::string& path, const std::string& title,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels,
                       const std::vector<std::vector<double>>& values) {
  const std::size_t nr = row_labels.size(), nc = col_labels.size();
  if (values.size() != nr) throw std::invalid_argument("heatmap row count mismatch");
  for (const auto& row : values) {
    if (row.size() != nc) throw std::invalid_argument("heatmap column count mismatch");
  }
  std::vector<double> flat;
  for (const auto& row : values) flat.insert(flat.end(), row.begin(), row.end());
  const Range r = find_range(flat);

  const double cw = 56, ch = 30, ml = 96, mt = 40;
  const double width = ml + cw * static_cast<double>(nc) + 20;
  const double height = mt + ch * static_cast<double>(nr) + 40;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << (width / 2) << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  for (std::size_t c = 0; c < nc; ++c) {
    svg << "<text x=\"" << (ml + cw * (static_cast<double>(c) + 0.5)) << "\" y=\"" << (mt - 6)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << xml_escape(col_labels[c]) << "</text>\n";
  }
  for (std::size_t row = 0; row < nr; ++row) {
    svg << "<text x=\"" << (ml - 6) << "\" y=\"" << (mt + ch * (static_cast<double>(row) + 0.5) + 3)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << xml_escape(row_labels[row]) << "</text>\n";
    for (std::size_t c = 0; c < nc; ++c) {
      const double v = values[row][c];
      const double t = std::isfinite(v) ? (v - r.lo) / (r.hi - r.lo) : 0.5;
      const double x = ml + cw * static_cast<double>(c);
      const double y = mt + ch * static_cast<double>(row);
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch
          << "\" fill=\"" << rgb_hex(t) << "\" stroke=\"white\"/>\n";
      svg << "<text x=\"" << (x + cw / 2) << "\" y=\"" << (y + ch / 2 + 3)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\" "
          << "fill=\"white\">" << tick_label(v) << "</text>\n";
    }
  }
  svg << "</svg>\n";
  write_file(path, svg.str());
}

std::uint64_t hash_bytes(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace modfus
