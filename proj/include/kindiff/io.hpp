#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace kindiff {

std::string format_double(double x);  // round-trippable %.17g

// Minimal CSV emitter: header row first, RFC-4180 quoting for text fields.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();

  void row(const std::vector<std::string>& fields);
  static std::string quote(const std::string& field);

 private:
  std::ofstream out_;
};

// Flat key-value sidecar recording how an artifact was produced.
void write_metadata(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& kv);

std::uint64_t fnv1a64(const std::string& bytes);

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

struct SvgPlotOptions {
  std::string title, xlabel, ylabel;
  bool logx = true, logy = true;
  int width = 720, height = 480;
};

// Self-contained SVG 1.1 line plot (axes, ticks, legend, one polyline per
// series). Points with nonpositive coordinates are dropped on log axes.
void write_svg_plot(const std::string& path, const std::vector<SvgSeries>& series,
                    const SvgPlotOptions& opt);

}  // namespace kindiff
