#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace modfus {

// One emitted measurement. trial = -1 marks an aggregate over trials.
struct MetricRow {
  std::string condition;
  int trial = -1;
  std::string metric;
  double value = 0.0;
};

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Schema: "condition,trial,metric,value". Text fields must stay free of
// commas, quotes, and newlines; rows are emitted in the given order so equal
// inputs produce byte-equal files.
std::string csv_string(const std::vector<MetricRow>& rows);
void write_csv(const std::string& path, const std::vector<MetricRow>& rows);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Self-contained SVG line plot, one polyline per series. Non-finite points
// are dropped.
void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<Series>& series);

// Color-mapped grid with one numeric label per cell. values is [row][col]
// and must be rectangular, matching the label counts.
void write_heatmap_svg(const std::string& path, const std::string& title,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels,
                       const std::vector<std::vector<double>>& values);

// FNV-1a over the byte string.
std::uint64_t hash_bytes(const std::string& bytes);
std::string hash_hex(std::uint64_t h);  // 16 lowercase hex digits

}  // namespace modfus
