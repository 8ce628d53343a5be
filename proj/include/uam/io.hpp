#pragma once

// CSV and SVG output helpers.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "uam/error.hpp"
#include "uam/risk_model.hpp"

namespace uam::io {

inline std::string fmt(double v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Table with a fixed column set; every row is checked against it before writing.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != columns_.size())
      throw Error("csv row has " + std::to_string(row.size()) + " fields, schema has " + std::to_string(columns_.size()));
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string str() const {
    std::ostringstream out;
    write_row(out, columns_);
    for (const auto& r : rows_) write_row(out, r);
    return out.str();
  }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << str();
  }

 private:
  static void write_row(std::ostream& out, const std::vector<std::string>& r) {
    for (std::size_t n = 0; n < r.size(); ++n) out << (n ? "," : "") << quote(r[n]);
    out << '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// Splits a CSV produced by CsvTable (quoted fields allowed, no embedded newlines).
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields{""};
    bool quoted = false;
    for (std::size_t n = 0; n < line.size(); ++n) {
      const char c = line[n];
      if (quoted) {
        if (c == '"' && n + 1 < line.size() && line[n + 1] == '"') {
          fields.back() += '"';
          ++n;
        } else if (c == '"') {
          quoted = false;
        } else {
          fields.back() += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.emplace_back();
      } else {
        fields.back() += c;
      }
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline void save_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Cool-to-warm colour ramp, t in [0,1].
inline std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  struct Stop {
    double t;
    int r, g, b;
  };
  static const Stop stops[] = {{0.0, 59, 76, 192}, {0.5, 221, 221, 221}, {1.0, 180, 4, 38}};
  int s = t <= 0.5 ? 0 : 1;
  const double u = (t - stops[s].t) / (stops[s + 1].t - stops[s].t);
  auto lerp = [&](int a, int b) { return static_cast<int>(std::lround(a + u * (b - a))); };
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", lerp(stops[s].r, stops[s + 1].r), lerp(stops[s].g, stops[s + 1].g),
                lerp(stops[s].b, stops[s + 1].b));
  return buf;
}

// Layer-k heatmap of log10 risk; unsafe cells are drawn black. x runs right, y runs up.
inline std::string heatmap_svg(const RiskMap& m, int k, int px = 6) {
  const GridSpec& g = m.grid;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 1; i <= g.a(); ++i)
    for (int j = 1; j <= g.b(); ++j) {
      const double r = m.at({i, j, k});
      if (r > 0) {
        lo = std::min(lo, std::log10(r));
        hi = std::max(hi, std::log10(r));
      }
    }
  const int w = g.a() * px, h = g.b() * px;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h + 20 << "\">\n";
  out << "<text x=\"2\" y=\"14\" font-size=\"12\" font-family=\"sans-serif\">layer k=" << k
      << " z=" << fmt((k - 0.5) * g.dz()) << " m</text>\n";
  for (int i = 1; i <= g.a(); ++i)
    for (int j = 1; j <= g.b(); ++j) {
      const CellIndex c{i, j, k};
      std::string colour = "#000000";
      if (!m.is_unsafe(c)) {
        const double r = m.at(c);
        const double t = (r > 0 && hi > lo) ? (std::log10(r) - lo) / (hi - lo) : 0.0;
        colour = ramp(t);
      }
      out << "<rect x=\"" << (i - 1) * px << "\" y=\"" << 20 + (g.b() - j) * px << "\" width=\"" << px
          << "\" height=\"" << px << "\" fill=\"" << colour << "\"/>\n";
    }
  out << "</svg>\n";
  return out.str();
}

struct Series {
  std::string name;
  std::vector<double> x, y;
  std::string colour;
};

// Minimal line chart with labelled axes.
inline std::string line_chart_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                  const std::vector<Series>& series) {
  const int W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t n = 0; n < s.x.size(); ++n) {
      x0 = std::min(x0, s.x[n]);
      x1 = std::max(x1, s.x[n]);
      y0 = std::min(y0, s.y[n]);
      y1 = std::max(y1, s.y[n]);
    }
  if (!(x1 > x0)) {
    x0 -= 1;
    x1 += 1;
  }
  if (!(y1 > y0)) {
    y0 -= 1;
    y1 += 1;
  }
  auto X = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto Y = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double vx = x0 + (x1 - x0) * t / 4.0, vy = y0 + (y1 - y0) * t / 4.0;
    out << "<text x=\"" << fmt(X(vx), 5) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << fmt(vx, 4)
        << "</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << fmt(Y(vy) + 4, 5) << "\" text-anchor=\"end\">" << fmt(vy, 4)
        << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  out << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";
  int legend = 0;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t n = 0; n < s.x.size(); ++n) out << (n ? " " : "") << fmt(X(s.x[n]), 6) << ',' << fmt(Y(s.y[n]), 6);
    out << "\"/>\n";
    if (s.x.size() == 1)
      out << "<circle cx=\"" << fmt(X(s.x[0]), 6) << "\" cy=\"" << fmt(Y(s.y[0]), 6) << "\" r=\"3\" fill=\"" << s.colour
          << "\"/>\n";
    out << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * legend++ << "\" text-anchor=\"end\" fill=\"" << s.colour
        << "\">" << s.name << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace uam::io
