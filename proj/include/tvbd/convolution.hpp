#pragma once

#include "tvbd/image.hpp"

namespace tvbd {

namespace detail {

inline void require_kernel_fits(const Image& u, const Kernel& k, const char* what) {
  if (u.width() < k.width() || u.height() < k.height()) {
    throw DimensionError(std::string(what) + ": kernel larger than image");
  }
}

}  // namespace detail

/// Boundary-free convolution k ∘ u.
///
/// Output is (W-w+1) x (H-h+1); pixel (x, y) is
///   sum_{r,c} u(x+c, y+r) * k(w-1-c, h-1-r),
/// i.e. a true convolution restricted to the positions where the kernel
/// footprint lies entirely inside u. Applied channel-wise.
inline Image convolve_valid(const Image& u, const Kernel& k) {
  detail::require_kernel_fits(u, k, "convolve_valid");
  const int kw = k.width(), kh = k.height();
  const int ow = u.width() - kw + 1, oh = u.height() - kh + 1;
  Image out(ow, oh, u.channels());
  const Kernel kf = k.flipped();
  for (int ch = 0; ch < u.channels(); ++ch) {
    for (int r = 0; r < kh; ++r) {
      for (int c = 0; c < kw; ++c) {
        const double w = kf(c, r);
        if (w == 0.0) continue;
        for (int y = 0; y < oh; ++y) {
          const double* src = u.ptr(c, y + r, ch);
          double* dst = out.ptr(0, y, ch);
          for (int x = 0; x < ow; ++x) dst[x] += w * src[x];
        }
      }
    }
  }
  return out;
}

/// Full convolution with zero padding: output (W+w-1) x (H+h-1),
/// out(x, y) = sum_{c,r} u(x-c, y-r) k(c, r).
///
/// convolve_full(v, k.flipped()) is the adjoint of convolve_valid(·, k).
inline Image convolve_full(const Image& u, const Kernel& k) {
  const int kw = k.width(), kh = k.height();
  const int ow = u.width() + kw - 1, oh = u.height() + kh - 1;
  Image out(ow, oh, u.channels());
  for (int ch = 0; ch < u.channels(); ++ch) {
    for (int r = 0; r < kh; ++r) {
      for (int c = 0; c < kw; ++c) {
        const double w = k(c, r);
        if (w == 0.0) continue;
        for (int y = 0; y < u.height(); ++y) {
          const double* src = u.ptr(0, y, ch);
          double* dst = out.ptr(c, y + r, ch);
          for (int x = 0; x < u.width(); ++x) dst[x] += w * src[x];
        }
      }
    }
  }
  return out;
}

/// Extend u by (px, py) samples on each side using the boundary rule.
inline Image pad(const Image& u, int px, int py, BoundaryMode mode) {
  if (px < 0 || py < 0) throw DimensionError("pad: negative padding");
  Image out(u.width() + 2 * px, u.height() + 2 * py, u.channels());
  for (int ch = 0; ch < u.channels(); ++ch)
    for (int y = 0; y < out.height(); ++y) {
      const int sy = resolve_index(y - py, u.height(), mode);
      for (int x = 0; x < out.width(); ++x) {
        out(x, y, ch) = u(resolve_index(x - px, u.width(), mode), sy, ch);
      }
    }
  return out;
}

/// Adjoint of pad(): folds every padded sample back onto the pixel it copied.
inline Image pad_adjoint(const Image& v, int px, int py, BoundaryMode mode) {
  const int w = v.width() - 2 * px, h = v.height() - 2 * py;
  if (w <= 0 || h <= 0) throw DimensionError("pad_adjoint: padding exceeds image");
  Image out(w, h, v.channels());
  for (int ch = 0; ch < v.channels(); ++ch)
    for (int y = 0; y < v.height(); ++y) {
      const int sy = resolve_index(y - py, h, mode);
      for (int x = 0; x < v.width(); ++x) {
        out(resolve_index(x - px, w, mode), sy, ch) += v(x, y, ch);
      }
    }
  return out;
}

/// Same-size convolution with an explicit boundary assumption.
inline Image convolve_boundary(const Image& u, const Kernel& k, BoundaryMode mode) {
  if (mode == BoundaryMode::valid_free) {
    throw DomainError("convolve_boundary: valid_free has no same-size form; use convolve_valid");
  }
  detail::require_kernel_fits(u, k, "convolve_boundary");
  return convolve_valid(pad(u, k.width() / 2, k.height() / 2, mode), k);
}

/// Gradient of 1/2 ||k ∘ u - f||^2 with respect to k, given the residual
/// r = k ∘ u - f (r has the valid size of u under a kernel of kw x kh).
///
/// g(n, m) = sum_{x,y} r(x, y) u(x + kw-1-n, y + kh-1-m), summed over channels.
/// This is the correlation written u_- ∘ r in the update for k.
inline Kernel kernel_gradient(const Image& u, const Image& r, int kw, int kh) {
  if (r.width() != u.width() - kw + 1 || r.height() != u.height() - kh + 1 ||
      r.channels() != u.channels()) {
    throw DimensionError("kernel_gradient: residual does not match the valid support");
  }
  Kernel g(kw, kh);
  for (int ch = 0; ch < u.channels(); ++ch)
    for (int m = 0; m < kh; ++m)
      for (int n = 0; n < kw; ++n) {
        double s = 0.0;
        const int ox = kw - 1 - n, oy = kh - 1 - m;
        for (int y = 0; y < r.height(); ++y) {
          const double* rr = r.ptr(0, y, ch);
          const double* uu = u.ptr(ox, y + oy, ch);
          for (int x = 0; x < r.width(); ++x) s += rr[x] * uu[x];
        }
        g(n, m) += s;
      }
  return g;
}

/// Convolution operator under a boundary model, together with its adjoint
/// and kernel gradient. For valid_free the sharp image is larger than the
/// data; for the other modes both have the same size.
struct BlurOperator {
  BoundaryMode mode = BoundaryMode::valid_free;

  Image apply(const Image& u, const Kernel& k) const {
    if (mode == BoundaryMode::valid_free) return convolve_valid(u, k);
    return convolve_valid(pad(u, k.width() / 2, k.height() / 2, mode), k);
  }

  /// K^T r: data-term gradient contribution with respect to u.
  Image adjoint(const Image& r, const Kernel& k) const {
    Image full = convolve_full(r, k.flipped());
    if (mode == BoundaryMode::valid_free) return full;
    return pad_adjoint(full, k.width() / 2, k.height() / 2, mode);
  }

  Kernel kernel_grad(const Image& u, const Image& r, const Kernel& k) const {
    if (mode == BoundaryMode::valid_free) return kernel_gradient(u, r, k.width(), k.height());
    return kernel_gradient(pad(u, k.width() / 2, k.height() / 2, mode), r, k.width(),
                           k.height());
  }

  /// Size of the sharp image that explains data of size (w, h).
  std::pair<int, int> sharp_size(int w, int h, const Kernel& k) const {
    if (mode == BoundaryMode::valid_free) return {w + k.width() - 1, h + k.height() - 1};
    return {w, h};
  }
};

}  // namespace tvbd
