#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "tvbd/image.hpp"

namespace tvbd {

enum class TvVariant { isotropic, anisotropic };

/// Forward differences; the last column of u_x and the last row of u_y are 0.
/// Works channel-wise.
inline std::pair<Image, Image> gradient(const Image& u) {
  Image gx(u.width(), u.height(), u.channels());
  Image gy(u.width(), u.height(), u.channels());
  for (int c = 0; c < u.channels(); ++c)
    for (int y = 0; y < u.height(); ++y)
      for (int x = 0; x < u.width(); ++x) {
        if (x + 1 < u.width()) gx(x, y, c) = u(x + 1, y, c) - u(x, y, c);
        if (y + 1 < u.height()) gy(x, y, c) = u(x, y + 1, c) - u(x, y, c);
      }
  return {std::move(gx), std::move(gy)};
}

/// Discrete divergence, the negative adjoint of gradient():
/// <gradient(u), p> = -<u, divergence(p)>.
inline Image divergence(const Image& px, const Image& py) {
  if (!px.same_shape(py)) throw DimensionError("divergence: component shapes differ");
  const int w = px.width(), h = px.height();
  Image d(w, h, px.channels());
  for (int c = 0; c < px.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = 0.0;
        if (x + 1 < w) v += px(x, y, c);
        if (x > 0) v -= px(x - 1, y, c);
        if (y + 1 < h) v += py(x, y, c);
        if (y > 0) v -= py(x, y - 1, c);
        d(x, y, c) = v;
      }
  return d;
}

/// Total variation of a single-channel image.
inline double tv_norm(const Image& u, TvVariant variant = TvVariant::isotropic) {
  if (u.channels() != 1) throw DimensionError("tv_norm: expects a single channel");
  const auto [gx, gy] = gradient(u);
  double s = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double a = gx.data()[i], b = gy.data()[i];
    s += variant == TvVariant::isotropic ? std::hypot(a, b) : std::abs(a) + std::abs(b);
  }
  return s;
}

/// ( sum_x ||grad u(x)||_p^p )^(1/p); p = infinity gives the largest component.
inline double grad_lp_norm(const Image& u, double p) {
  if (!(p >= 1.0)) throw DomainError("grad_lp_norm: p must be >= 1");
  if (u.channels() != 1) throw DimensionError("grad_lp_norm: expects a single channel");
  const auto [gx, gy] = gradient(u);
  if (std::isinf(p)) return std::max(gx.max_abs(), gy.max_abs());
  double s = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    s += std::pow(std::abs(gx.data()[i]), p) + std::pow(std::abs(gy.data()[i]), p);
  }
  return std::pow(s, 1.0 / p);
}

/// How colour channels share the TV regulariser.
enum class ColorMode {
  grayscale,       ///< channels regularised independently
  coupled_color,   ///< one gradient magnitude shared across channels
};

/// Smoothed isotropic TV:  sum_x sqrt(|grad u|^2 + eps^2).
/// In coupled mode the squared gradients of all channels are pooled per pixel.
inline double smoothed_tv(const Image& u, double eps, ColorMode mode = ColorMode::grayscale) {
  const auto [gx, gy] = gradient(u);
  const std::size_t n = u.plane_size();
  double s = 0.0;
  if (mode == ColorMode::coupled_color) {
    for (std::size_t i = 0; i < n; ++i) {
      double m = eps * eps;
      for (int c = 0; c < u.channels(); ++c) {
        const double a = gx.data()[c * n + i], b = gy.data()[c * n + i];
        m += a * a + b * b;
      }
      s += std::sqrt(m);
    }
  } else {
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double a = gx.data()[i], b = gy.data()[i];
      s += std::sqrt(a * a + b * b + eps * eps);
    }
  }
  return s;
}

/// div( grad u / |grad u|_eps ), the negative gradient of smoothed_tv.
inline Image tv_curvature(const Image& u, double eps, ColorMode mode = ColorMode::grayscale) {
  auto [gx, gy] = gradient(u);
  const std::size_t n = u.plane_size();
  if (mode == ColorMode::coupled_color) {
    for (std::size_t i = 0; i < n; ++i) {
      double m = eps * eps;
      for (int c = 0; c < u.channels(); ++c) {
        const double a = gx.data()[c * n + i], b = gy.data()[c * n + i];
        m += a * a + b * b;
      }
      const double inv = 1.0 / std::sqrt(m);
      for (int c = 0; c < u.channels(); ++c) {
        gx.data()[c * n + i] *= inv;
        gy.data()[c * n + i] *= inv;
      }
    }
  } else {
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double a = gx.data()[i], b = gy.data()[i];
      const double inv = 1.0 / std::sqrt(a * a + b * b + eps * eps);
      gx.data()[i] *= inv;
      gy.data()[i] *= inv;
    }
  }
  return divergence(gx, gy);
}

}  // namespace tvbd
