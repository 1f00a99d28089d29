#pragma once

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tvbd/image.hpp"

namespace tvbd {

// Kernel text format: first line "h w", then h rows of w reals.
inline Kernel read_kernel(std::istream& in) {
  int h = 0, w = 0;
  if (!(in >> h >> w)) throw FormatError("kernel: missing 'h w' header");
  if (h <= 0 || w <= 0) throw FormatError("kernel: non-positive dimensions");
  std::vector<double> data(static_cast<std::size_t>(h) * w);
  for (double& v : data) {
    if (!(in >> v)) throw FormatError("kernel: expected " + std::to_string(h * w) + " values");
  }
  return Kernel(w, h, std::move(data));
}

inline Kernel read_kernel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_kernel(in);
}

inline void write_kernel(std::ostream& out, const Kernel& k) {
  out << k.height() << ' ' << k.width() << '\n' << std::setprecision(17);
  for (int y = 0; y < k.height(); ++y) {
    for (int x = 0; x < k.width(); ++x) out << (x ? " " : "") << k(x, y);
    out << '\n';
  }
}

inline void write_kernel(const std::string& path, const Kernel& k) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot create '" + path + "'");
  write_kernel(out, k);
}

// 1D signals: single-column CSV, one value per line. A non-numeric first line
// is taken as a header and skipped; blank lines are ignored.
inline std::vector<double> read_signal_csv(std::istream& in) {
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r,");
    const std::string cell = line.substr(b, e - b + 1);
    double v = 0.0;
    std::istringstream ss(cell);
    if (!(ss >> v) || !(ss >> std::ws).eof()) {
      if (first) {
        first = false;
        continue;
      }
      throw FormatError("signal csv: not a number: '" + cell + "'");
    }
    first = false;
    values.push_back(v);
  }
  return values;
}

inline std::vector<double> read_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_signal_csv(in);
}

inline void write_signal_csv(std::ostream& out, const std::vector<double>& values) {
  out << std::setprecision(17);
  for (double v : values) out << v << '\n';
}

inline void write_signal_csv(const std::string& path, const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot create '" + path + "'");
  write_signal_csv(out, values);
}

}  // namespace tvbd
