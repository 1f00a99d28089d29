#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "tvbd/differential.hpp"
#include "tvbd/image.hpp"
#include "tvbd/tv1d.hpp"

namespace tvbd {

/// Total variation of every channel, summed. Rows of height one reduce to
/// the 1D TV.
inline double tv_total(const Image& u) {
  const auto [gx, gy] = gradient(u);
  double s = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) s += std::hypot(gx.data()[i], gy.data()[i]);
  return s;
}

/// Dual state of the 2D TV prox, kept between calls for warm starts.
struct TvDual {
  Image px, py;
};

struct TvProxOptions {
  int max_iters = 200;
  double tol = 1e-9;  ///< stop when the primal update is below tol (sup norm)
};

/// prox of w * TV: argmin_x 1/2 ||x - b||^2 + w TV(x), channel by channel.
///
/// Single-row images are solved exactly with tv_denoise(). Other images use
/// the fast gradient projection on the dual (isotropic TV), warm-started from
/// `dual` when it has the right shape.
inline Image tv_prox(const Image& b, double w, TvDual* dual = nullptr, TvProxOptions opt = {}) {
  if (!(w >= 0.0)) throw DomainError("tv_prox: weight must be >= 0");
  if (w == 0.0) return b;
  if (b.height() == 1) {
    Image x(b.width(), 1, b.channels());
    for (int c = 0; c < b.channels(); ++c) {
      const auto u = tv_denoise(b.plane(c), w);
      std::copy(u.begin(), u.end(), x.plane(c).begin());
    }
    return x;
  }

  TvDual local;
  TvDual& d = dual ? *dual : local;
  if (!d.px.same_shape(b)) {
    d.px = Image(b.width(), b.height(), b.channels());
    d.py = d.px;
  }
  // Dual ascent on p with x = b + w div p; ||grad||^2 <= 8.
  const double tau = 1.0 / (8.0 * w);
  Image rx = d.px, ry = d.py;
  Image x = b;
  x.axpy(w, divergence(d.px, d.py));
  double t = 1.0;
  for (int it = 0; it < opt.max_iters; ++it) {
    Image xr = b;
    xr.axpy(w, divergence(rx, ry));
    auto [gx, gy] = gradient(xr);
    Image nx = rx, ny = ry;
    nx.axpy(tau, gx);
    ny.axpy(tau, gy);
    for (std::size_t i = 0; i < nx.size(); ++i) {
      const double m = std::max(1.0, std::hypot(nx.data()[i], ny.data()[i]));
      nx.data()[i] /= m;
      ny.data()[i] /= m;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / tn;
    rx = nx;
    ry = ny;
    rx.axpy(beta, nx - d.px);
    ry.axpy(beta, ny - d.py);
    d.px = std::move(nx);
    d.py = std::move(ny);
    t = tn;

    Image xn = b;
    xn.axpy(w, divergence(d.px, d.py));
    double change = 0.0;
    for (std::size_t i = 0; i < xn.size(); ++i) {
      change = std::max(change, std::abs(xn.data()[i] - x.data()[i]));
    }
    x = std::move(xn);
    if (change < opt.tol) break;
  }
  return x;
}

}  // namespace tvbd
