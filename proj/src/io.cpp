#include "kindiff/io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "kindiff/errors.hpp"

namespace kindiff {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path) {
  require(out_.good(), "CsvWriter: cannot open '" + path + "'");
  row(header);
}

CsvWriter::~CsvWriter() = default;

std::string CsvWriter::quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << quote(fields[i]);
  }
  out_ << '\n';
}

void write_metadata(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path);
  require(out.good(), "write_metadata: cannot open '" + path + "'");
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

void write_svg_plot(const std::string& path, const std::vector<SvgSeries>& series,
                    const SvgPlotOptions& opt) {
  std::ofstream out(path);
  require(out.good(), "write_svg_plot: cannot open '" + path + "'");

  auto tx = [&](double v) { return opt.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return opt.logy ? std::log10(v) : v; };

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if ((opt.logx && s.x[i] <= 0) || (opt.logy && s.y[i] <= 0)) continue;
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (xmin > xmax) { xmin = 0; xmax = 1; }
  if (ymin > ymax) { ymin = 0; ymax = 1; }
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
  const double padx = 0.05 * (xmax - xmin), pady = 0.05 * (ymax - ymin);
  xmin -= padx; xmax += padx; ymin -= pady; ymax += pady;

  const int ml = 72, mr = 24, mt = 36, mb = 52;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;
  auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return mt + ph - (ty(v) - ymin) / (ymax - ymin) * ph; };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
      << opt.width << "\" height=\"" << opt.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << coord(pw)
      << "\" height=\"" << coord(ph)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << opt.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << opt.title << "</text>\n";
  out << "<text x=\"" << opt.width / 2 << "\" y=\"" << opt.height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << opt.xlabel << "</text>\n";
  out << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">" << opt.ylabel
      << "</text>\n";

  // Ticks: powers of ten on log axes, five uniform ticks otherwise.
  auto emit_xtick = [&](double xv, const std::string& label) {
    const double gx = ml + (xv - xmin) / (xmax - xmin) * pw;
    out << "<line x1=\"" << coord(gx) << "\" y1=\"" << mt + ph << "\" x2=\"" << coord(gx)
        << "\" y2=\"" << coord(mt + ph + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << coord(gx) << "\" y=\"" << coord(mt + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << label << "</text>\n";
  };
  auto emit_ytick = [&](double yv, const std::string& label) {
    const double gy = mt + ph - (yv - ymin) / (ymax - ymin) * ph;
    out << "<line x1=\"" << coord(ml - 5.0) << "\" y1=\"" << coord(gy) << "\" x2=\"" << ml
        << "\" y2=\"" << coord(gy) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << coord(ml - 8.0) << "\" y=\"" << coord(gy + 3)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << label
        << "</text>\n";
  };
  if (opt.logx) {
    for (int p = static_cast<int>(std::ceil(xmin)); p <= static_cast<int>(std::floor(xmax)); ++p)
      emit_xtick(p, "1e" + std::to_string(p));
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double v = xmin + i * (xmax - xmin) / 4;
      emit_xtick(v, format_double(std::round(v * 1e4) / 1e4));
    }
  }
  if (opt.logy) {
    for (int p = static_cast<int>(std::ceil(ymin)); p <= static_cast<int>(std::floor(ymax)); ++p)
      emit_ytick(p, "1e" + std::to_string(p));
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double v = ymin + i * (ymax - ymin) / 4;
      emit_ytick(v, format_double(std::round(v * 1e4) / 1e4));
    }
  }

  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::ostringstream pts;
    for (size_t i = 0; i < series[s].x.size(); ++i) {
      if ((opt.logx && series[s].x[i] <= 0) || (opt.logy && series[s].y[i] <= 0)) continue;
      pts << coord(px(series[s].x[i])) << ',' << coord(py(series[s].y[i])) << ' ';
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << pts.str() << "\"/>\n";
    for (size_t i = 0; i < series[s].x.size(); ++i) {
      if ((opt.logx && series[s].x[i] <= 0) || (opt.logy && series[s].y[i] <= 0)) continue;
      out << "<circle cx=\"" << coord(px(series[s].x[i])) << "\" cy=\""
          << coord(py(series[s].y[i])) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    out << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 16 + 14 * static_cast<int>(s)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">"
        << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace kindiff
