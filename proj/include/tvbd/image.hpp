#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tvbd/errors.hpp"

namespace tvbd {

/// Real-valued raster with planar channel storage.
///
/// Pixel (x, y) of channel c lives at data[c * width * height + y * width + x].
/// The nominal intensity range is [0, 1] but nothing here enforces it; sharp
/// estimates routinely overshoot while the solver runs.
class Image {
 public:
  Image() = default;

  Image(int width, int height, int channels = 1, double fill = 0.0)
      : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0 || channels <= 0) {
      throw DimensionError("Image: width, height and channels must be positive");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  Image(int width, int height, int channels, std::vector<double> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width <= 0 || height <= 0 || channels <= 0) {
      throw DimensionError("Image: width, height and channels must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
      throw DimensionError("Image: data length does not match width*height*channels");
    }
  }

  /// 1 x n image holding a 1D signal.
  static Image row(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Image(n, 1, 1, std::move(values));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(int x, int y, int c = 0) noexcept {
    return data_[static_cast<std::size_t>(c) * plane_size() +
                 static_cast<std::size_t>(y) * width_ + x];
  }
  double operator()(int x, int y, int c = 0) const noexcept {
    return data_[static_cast<std::size_t>(c) * plane_size() +
                 static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  /// Pointer to pixel (x, y) of channel c; rows are contiguous.
  double* ptr(int x, int y, int c = 0) noexcept { return &(*this)(x, y, c); }
  const double* ptr(int x, int y, int c = 0) const noexcept {
    return data_.data() + static_cast<std::size_t>(c) * width_ * height_ +
           static_cast<std::size_t>(y) * width_ + x;
  }

  std::span<double> plane(int c) noexcept {
    return std::span<double>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const double> plane(int c) const noexcept {
    return std::span<const double>(data_).subspan(c * plane_size(), plane_size());
  }

  /// Copy of one channel as a single-channel image.
  Image channel(int c) const {
    auto p = plane(c);
    return Image(width_, height_, 1, std::vector<double>(p.begin(), p.end()));
  }

  void set_channel(int c, const Image& src) {
    if (src.width() != width_ || src.height() != height_ || src.channels() != 1) {
      throw DimensionError("Image::set_channel: size mismatch");
    }
    std::copy(src.data().begin(), src.data().end(), plane(c).begin());
  }

  static Image merge(const std::vector<Image>& planes) {
    if (planes.empty()) throw DimensionError("Image::merge: no planes");
    Image out(planes.front().width(), planes.front().height(),
              static_cast<int>(planes.size()));
    for (int c = 0; c < out.channels(); ++c) out.set_channel(c, planes[c]);
    return out;
  }

  bool same_shape(const Image& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Image& operator+=(const Image& o) {
    require_same(o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Image& operator-=(const Image& o) {
    require_same(o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Image& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }
  Image& operator+=(double s) noexcept {
    for (double& v : data_) v += s;
    return *this;
  }

  friend Image operator+(Image a, const Image& b) { return a += b; }
  friend Image operator-(Image a, const Image& b) { return a -= b; }
  friend Image operator*(Image a, double s) { return a *= s; }
  friend Image operator*(double s, Image a) { return a *= s; }

  /// this += s * o
  void axpy(double s, const Image& o) {
    require_same(o, "axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  }

  double sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }
  double mean() const noexcept { return data_.empty() ? 0.0 : sum() / data_.size(); }
  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  void require_same(const Image& o, const char* what) const {
    if (!same_shape(o)) throw DimensionError(std::string("Image::") + what + ": shape mismatch");
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

inline double dot(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("dot: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

inline double sum_squares(const Image& a) { return dot(a, a); }

/// Sub-rectangle [x0, x0+w) x [y0, y0+h) of every channel.
inline Image crop(const Image& src, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > src.width() || y0 + h > src.height()) {
    throw DimensionError("crop: rectangle outside the image");
  }
  Image out(w, h, src.channels());
  for (int c = 0; c < src.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out(x, y, c) = src(x0 + x, y0 + y, c);
  return out;
}

/// Central crop to (w, h); the margins must be even so the crop is centred.
inline Image crop_center(const Image& src, int w, int h) {
  const int dx = src.width() - w;
  const int dy = src.height() - h;
  if (dx < 0 || dy < 0 || dx % 2 != 0 || dy % 2 != 0) {
    throw DimensionError("crop_center: margins must be non-negative and even");
  }
  return crop(src, dx / 2, dy / 2, w, h);
}

/// Convolution kernel with odd width and height.
///
/// Stored row-major; the centre tap is (width/2, height/2). Blind
/// deconvolution keeps kernels feasible: non-negative with unit sum.
class Kernel {
 public:
  Kernel() = default;

  Kernel(int width, int height, double fill = 0.0) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  Kernel(int width, int height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height) {
      throw DimensionError("Kernel: data length does not match width*height");
    }
  }

  /// Horizontal 1 x n kernel.
  static Kernel row(std::vector<double> taps) {
    const int n = static_cast<int>(taps.size());
    return Kernel(n, 1, std::move(taps));
  }

  static Kernel delta(int width, int height) {
    Kernel k(width, height);
    k(width / 2, height / 2) = 1.0;
    return k;
  }

  static Kernel uniform(int width, int height) {
    return Kernel(width, height, 1.0 / (static_cast<double>(width) * height));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  double operator()(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }
  double l1_norm() const noexcept {
    double s = 0.0;
    for (double v : data_) s += std::abs(v);
    return s;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Non-negative and summing to one within tol.
  bool is_feasible(double tol = 1e-12) const noexcept {
    if (data_.empty()) return false;
    for (double v : data_)
      if (!(v >= 0.0)) return false;
    return std::abs(sum() - 1.0) <= tol;
  }

  /// k_-[r, c] = k[h-1-r, w-1-c].
  Kernel flipped() const {
    Kernel out(width_, height_);
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x) out(width_ - 1 - x, height_ - 1 - y) = (*this)(x, y);
    return out;
  }

  Image as_image() const { return Image(width_, height_, 1, data_); }

  static Kernel from_image(const Image& img) {
    if (img.channels() != 1) throw DimensionError("Kernel::from_image: expected one channel");
    return Kernel(img.width(), img.height(), img.values());
  }

  double max_abs_diff(const Kernel& o) const {
    if (o.width_ != width_ || o.height_ != height_) {
      throw DimensionError("Kernel::max_abs_diff: size mismatch");
    }
    double m = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - o.data_[i]));
    return m;
  }

 private:
  static void check_dims(int w, int h) {
    if (w <= 0 || h <= 0 || w % 2 == 0 || h % 2 == 0) {
      throw DimensionError("Kernel: width and height must be positive odd integers");
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// How convolution resolves reads outside the image support.
enum class BoundaryMode {
  valid_free,  ///< no assumption: output shrinks to the valid support
  symmetric,   ///< mirror with the edge sample repeated (… b a | a b …)
  periodic,    ///< wrap around
  replicate,   ///< clamp to the nearest edge sample
};

inline std::string_view to_string(BoundaryMode m) noexcept {
  switch (m) {
    case BoundaryMode::valid_free: return "free";
    case BoundaryMode::symmetric: return "symmetric";
    case BoundaryMode::periodic: return "periodic";
    case BoundaryMode::replicate: return "replicate";
  }
  return "?";
}

inline BoundaryMode parse_boundary_mode(std::string_view s) {
  if (s == "free" || s == "valid" || s == "valid_free") return BoundaryMode::valid_free;
  if (s == "symmetric") return BoundaryMode::symmetric;
  if (s == "periodic") return BoundaryMode::periodic;
  if (s == "replicate") return BoundaryMode::replicate;
  throw DomainError("unknown boundary mode '" + std::string(s) + "'");
}

/// Map an out-of-range index into [0, n) according to the boundary mode.
inline int resolve_index(int i, int n, BoundaryMode mode) noexcept {
  if (i >= 0 && i < n) return i;
  switch (mode) {
    case BoundaryMode::periodic: {
      int r = i % n;
      return r < 0 ? r + n : r;
    }
    case BoundaryMode::symmetric: {
      // Half-sample symmetric extension has period 2n.
      const int period = 2 * n;
      int r = i % period;
      if (r < 0) r += period;
      return r < n ? r : period - 1 - r;
    }
    case BoundaryMode::replicate:
    case BoundaryMode::valid_free:
    default:
      return std::clamp(i, 0, n - 1);
  }
}

}  // namespace tvbd
