#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "tvbd/image.hpp"

namespace tvbd {

// Netpbm grayscale (PGM, P2/P5) and colour (PPM, P3/P6) images.
// Samples are scaled to [0, 1] on read; on write they are clamped to [0, 1]
// and scaled to maxval. Binary files with maxval > 255 use 16-bit big-endian
// samples as the format requires.

namespace detail {

inline void skip_pnm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
      in.get();
    } else {
      return;
    }
  }
}

inline long read_pnm_int(std::istream& in) {
  skip_pnm_space(in);
  long v = -1;
  if (!(in >> v) || v < 0) throw FormatError("pnm: malformed header field");
  return v;
}

}  // namespace detail

inline Image read_pnm(std::istream& in) {
  char magic[2] = {0, 0};
  if (!in.read(magic, 2) || magic[0] != 'P') throw FormatError("pnm: missing magic number");
  const char kind = magic[1];
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    throw FormatError(std::string("pnm: unsupported format P") + kind);
  }
  const bool color = kind == '3' || kind == '6';
  const bool binary = kind == '5' || kind == '6';
  const long w = detail::read_pnm_int(in);
  const long h = detail::read_pnm_int(in);
  const long maxval = detail::read_pnm_int(in);
  if (w <= 0 || h <= 0) throw FormatError("pnm: non-positive dimensions");
  if (maxval <= 0 || maxval > 65535) throw FormatError("pnm: maxval out of range");
  const int channels = color ? 3 : 1;
  Image img(static_cast<int>(w), static_cast<int>(h), channels);
  const double scale = 1.0 / static_cast<double>(maxval);

  if (binary) {
    in.get();  // single whitespace after maxval
    const bool wide = maxval > 255;
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x)
        for (int c = 0; c < channels; ++c) {
          unsigned v = 0;
          unsigned char b[2];
          if (wide) {
            if (!in.read(reinterpret_cast<char*>(b), 2)) throw FormatError("pnm: truncated data");
            v = (static_cast<unsigned>(b[0]) << 8) | b[1];
          } else {
            if (!in.read(reinterpret_cast<char*>(b), 1)) throw FormatError("pnm: truncated data");
            v = b[0];
          }
          img(static_cast<int>(x), static_cast<int>(y), c) = v * scale;
        }
  } else {
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x)
        for (int c = 0; c < channels; ++c) {
          const long v = detail::read_pnm_int(in);
          if (v > maxval) throw FormatError("pnm: sample exceeds maxval");
          img(static_cast<int>(x), static_cast<int>(y), c) = v * scale;
        }
  }
  return img;
}

inline Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_pnm(in);
}

struct PnmWriteOptions {
  int maxval = 255;
  bool binary = true;
};

/// Writes PGM for one channel, PPM for three.
inline void write_pnm(std::ostream& out, const Image& img, PnmWriteOptions opt = {}) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw DimensionError("write_pnm: only 1- or 3-channel images are supported");
  }
  if (opt.maxval <= 0 || opt.maxval > 65535) throw DomainError("write_pnm: maxval out of range");
  const bool color = img.channels() == 3;
  const char kind = color ? (opt.binary ? '6' : '3') : (opt.binary ? '5' : '2');
  out << 'P' << kind << '\n' << img.width() << ' ' << img.height() << '\n' << opt.maxval << '\n';
  auto quantize = [&](double v) {
    if (!std::isfinite(v)) v = 0.0;
    return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * opt.maxval));
  };
  const bool wide = opt.maxval > 255;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        const unsigned q = quantize(img(x, y, c));
        if (opt.binary) {
          if (wide) out.put(static_cast<char>((q >> 8) & 0xff));
          out.put(static_cast<char>(q & 0xff));
        } else {
          out << q << ((x + 1 == img.width() && c + 1 == img.channels()) ? '\n' : ' ');
        }
      }
  }
  if (!out) throw FormatError("write_pnm: stream error");
}

inline void write_pnm(const std::string& path, const Image& img, PnmWriteOptions opt = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot create '" + path + "'");
  write_pnm(out, img, opt);
}

/// Min-max normalised copy, for heat maps of energies and kernels.
inline Image normalize_minmax(const Image& src) {
  Image out = src;
  if (src.empty()) return out;
  const auto [lo, hi] = std::minmax_element(src.data().begin(), src.data().end());
  const double range = *hi - *lo;
  for (double& v : out.data()) v = range > 0.0 ? (v - *lo) / range : 0.0;
  return out;
}

}  // namespace tvbd
