#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "tvbd/alternating.hpp"
#include "tvbd/convolution.hpp"
#include "tvbd/differential.hpp"
#include "tvbd/errors.hpp"
#include "tvbd/image.hpp"
#include "tvbd/simplex.hpp"

namespace tvbd {

struct DeblurConfig {
  int kernel_width = 9;
  int kernel_height = 9;
  double lambda_init = 3e-2;
  double lambda_min = 6e-4;
  double anneal_factor = 0.99;
  double eps_u = 5e-3;
  double eps_k = 2e-2;
  /// Scale each step by max|x| / max|grad| so eps is a relative change.
  bool normalized_steps = true;
  /// Reject an update that raises the energy and halve both steps.
  bool backtracking = false;
  int max_iters_per_level = 1000;
  double pyramid_factor = 0.7071067811865476;
  int max_levels = 0;  ///< 0: as many as needed to reach a 3x3 kernel
  double tv_epsilon = 1e-4;
  ColorMode color_mode = ColorMode::grayscale;
  BoundaryMode boundary = BoundaryMode::valid_free;
  bool filtered_kernel_estimation = false;
  bool restart_lambda_per_level = true;

  void validate() const {
    if (kernel_width < 3 || kernel_height < 3 || kernel_width % 2 == 0 ||
        kernel_height % 2 == 0) {
      throw DomainError("DeblurConfig: kernel dimensions must be odd and >= 3");
    }
    if (!(lambda_min > 0.0) || !(lambda_init >= lambda_min)) {
      throw DomainError("DeblurConfig: need 0 < lambda_min <= lambda_init");
    }
    if (!(anneal_factor > 0.0 && anneal_factor < 1.0)) {
      throw DomainError("DeblurConfig: anneal_factor must lie in (0, 1)");
    }
    if (!(pyramid_factor > 0.0 && pyramid_factor < 1.0)) {
      throw DomainError("DeblurConfig: pyramid_factor must lie in (0, 1)");
    }
    if (!(eps_u > 0.0) || !(eps_k > 0.0) || !(tv_epsilon > 0.0)) {
      throw DomainError("DeblurConfig: step sizes and tv_epsilon must be positive");
    }
    if (max_iters_per_level < 1) throw DomainError("DeblurConfig: max_iters_per_level < 1");
  }
};

// ---------------------------------------------------------------------------
// single steps

/// Smoothed energy 1/2 ||k o u - f||^2 + lambda sum |grad u|_eps.
inline double smoothed_energy(const Image& u, const Kernel& k, const Image& f, double lambda,
                              double tv_eps, ColorMode mode = ColorMode::grayscale,
                              const BlurOperator& op = {}) {
  return 0.5 * sum_squares(op.apply(u, k) - f) + lambda * smoothed_tv(u, tv_eps, mode);
}

/// Gradient of smoothed_energy() in u:  k_- . (k o u - f) - lambda div(grad u / |grad u|_eps).
inline Image u_gradient(const Image& u, const Image& f, const Kernel& k, double lambda,
                        double tv_eps, ColorMode mode = ColorMode::grayscale,
                        const BlurOperator& op = {}) {
  Image g = op.adjoint(op.apply(u, k) - f, k);
  if (lambda != 0.0) g.axpy(-lambda, tv_curvature(u, tv_eps, mode));
  return g;
}

inline Image u_gradient_step(const Image& u, const Image& f, const Kernel& k, double lambda,
                             double eps_u, ColorMode mode = ColorMode::grayscale,
                             double tv_eps = 1e-4, const BlurOperator& op = {}) {
  Image out = u;
  out.axpy(-eps_u, u_gradient(u, f, k, lambda, tv_eps, mode, op));
  return out;
}

/// Gradient of 1/2 ||k o u - f||^2 in k:  u_- o (k o u - f).
inline Kernel k_gradient(const Kernel& k, const Image& f, const Image& u,
                         const BlurOperator& op = {}) {
  return op.kernel_grad(u, op.apply(u, k) - f, k);
}

/// k - eps_k * gradient; the result is not projected.
inline Kernel k_gradient_step(const Kernel& k, const Image& f, const Image& u, double eps_k,
                              const BlurOperator& op = {}) {
  Kernel out = k;
  const Kernel g = k_gradient(k, f, u, op);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= eps_k * g.data()[i];
  return out;
}

/// Forward differences restricted to pixels whose neighbour exists, so that
/// convolution commutes with them: dx_valid(k o u) = k o dx_valid(u).
inline Image dx_valid(const Image& u) {
  Image d(u.width() - 1, u.height(), u.channels());
  for (int c = 0; c < u.channels(); ++c)
    for (int y = 0; y < u.height(); ++y)
      for (int x = 0; x + 1 < u.width(); ++x) d(x, y, c) = u(x + 1, y, c) - u(x, y, c);
  return d;
}

inline Image dy_valid(const Image& u) {
  Image d(u.width(), u.height() - 1, u.channels());
  for (int c = 0; c < u.channels(); ++c)
    for (int y = 0; y + 1 < u.height(); ++y)
      for (int x = 0; x < u.width(); ++x) d(x, y, c) = u(x, y + 1, c) - u(x, y, c);
  return d;
}

/// Kernel gradient of the data term written on image derivatives,
/// 1/2 ||k o u_x - f_x||^2 + 1/2 ||k o u_y - f_y||^2.
inline Kernel k_gradient_filtered(const Kernel& k, const Image& f, const Image& u,
                                  const BlurOperator& op = {}) {
  Kernel g = k_gradient(k, dx_valid(f), dx_valid(u), op);
  const Kernel gy = k_gradient(k, dy_valid(f), dy_valid(u), op);
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += gy.data()[i];
  return g;
}

// ---------------------------------------------------------------------------
// resampling and pyramid

/// Bilinear resampling on pixel centres. When shrinking, the source is first
/// box-averaged so that every output pixel integrates its footprint.
inline Image resize_bilinear(const Image& src, int w, int h) {
  if (w <= 0 || h <= 0) throw DimensionError("resize_bilinear: non-positive size");
  if (w == src.width() && h == src.height()) return src;
  const double sx = static_cast<double>(src.width()) / w;
  const double sy = static_cast<double>(src.height()) / h;
  Image out(w, h, src.channels());
  auto sample = [&](int c, double fx, double fy) {
    fx = std::clamp(fx, 0.0, src.width() - 1.0);
    fy = std::clamp(fy, 0.0, src.height() - 1.0);
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, src.width() - 1), y1 = std::min(y0 + 1, src.height() - 1);
    const double ax = fx - x0, ay = fy - y0;
    return (1 - ay) * ((1 - ax) * src(x0, y0, c) + ax * src(x1, y0, c)) +
           ay * ((1 - ax) * src(x0, y1, c) + ax * src(x1, y1, c));
  };
  // sub-samples per output pixel along each axis (1 when enlarging)
  const int nx = std::max(1, static_cast<int>(std::ceil(sx)));
  const int ny = std::max(1, static_cast<int>(std::ceil(sy)));
  for (int c = 0; c < src.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int j = 0; j < ny; ++j)
          for (int i = 0; i < nx; ++i) {
            const double fx = x * sx + (i + 0.5) * sx / nx - 0.5;
            const double fy = y * sy + (j + 0.5) * sy / ny - 0.5;
            s += sample(c, fx, fy);
          }
        out(x, y, c) = s / (nx * ny);
      }
  return out;
}

/// Nearest odd integer, at least 3.
inline int round_to_odd(double v) {
  const int n = 2 * static_cast<int>(std::lround((v - 1.0) / 2.0)) + 1;
  return std::max(3, n);
}

struct PyramidLevel {
  int index = 0;        ///< 0 = coarsest
  double scale = 1.0;   ///< relative to the input
  Image f;
  int kernel_width = 3;
  int kernel_height = 3;
};

/// Coarse-to-fine levels: the blur size shrinks by the pyramid factor per
/// level until it is 3x3; consecutive levels have strictly smaller kernels.
inline std::vector<PyramidLevel> build_pyramid(const Image& f, const DeblurConfig& cfg) {
  cfg.validate();
  std::vector<PyramidLevel> fine_to_coarse;
  double scale = 1.0;
  int kw = cfg.kernel_width, kh = cfg.kernel_height;
  fine_to_coarse.push_back({0, 1.0, f, kw, kh});
  while (std::max(kw, kh) > 3) {
    if (cfg.max_levels > 0 && static_cast<int>(fine_to_coarse.size()) >= cfg.max_levels) break;
    scale *= cfg.pyramid_factor;
    const int nkw = round_to_odd(cfg.kernel_width * scale);
    const int nkh = round_to_odd(cfg.kernel_height * scale);
    if (nkw == kw && nkh == kh) continue;  // keep kernel sizes strictly decreasing
    kw = nkw;
    kh = nkh;
    const int w = std::max(kw, static_cast<int>(std::lround(f.width() * scale)));
    const int h = std::max(kh, static_cast<int>(std::lround(f.height() * scale)));
    fine_to_coarse.push_back({0, scale, resize_bilinear(f, w, h), kw, kh});
  }
  std::vector<PyramidLevel> levels(fine_to_coarse.rbegin(), fine_to_coarse.rend());
  for (std::size_t i = 0; i < levels.size(); ++i) levels[i].index = static_cast<int>(i);
  return levels;
}

/// Kernel resampled to new dimensions and projected back to feasibility.
inline Kernel resize_kernel(const Kernel& k, int w, int h) {
  return project_kernel(Kernel::from_image(resize_bilinear(k.as_image(), w, h)));
}

// ---------------------------------------------------------------------------
// blind deblurring driver

struct IterationLog {
  int level = 0;
  int iteration = 0;
  double lambda = 0.0;
  double energy = 0.0;  ///< smoothed energy after the update
  double data = 0.0;    ///< 1/2 ||k o u - f||^2
};

struct DeblurResult {
  Image u;
  Kernel k;
  std::vector<IterationLog> log;
};

using IterationCallback = std::function<void(const IterationLog&, const Image&, const Kernel&)>;

namespace detail {

inline double step_scale(double max_x, double max_g) {
  return max_g > 1e-31 ? max_x / max_g : 0.0;
}

}  // namespace detail

/// Blind deconvolution by projected alternating minimization: one gradient
/// step in u, one unconstrained gradient step in k, clamp, normalize and
/// anneal lambda; repeated over a coarse-to-fine pyramid.
inline DeblurResult deblur_blind(const Image& f, const DeblurConfig& cfg,
                                 const IterationCallback& on_iter = {}) {
  cfg.validate();
  if (f.width() < cfg.kernel_width || f.height() < cfg.kernel_height) {
    throw DimensionError("deblur_blind: image smaller than the kernel");
  }
  if (!f.all_finite()) throw DomainError("deblur_blind: input contains non-finite values");
  const BlurOperator op{cfg.boundary};
  const auto levels = build_pyramid(f, cfg);

  DeblurResult res;
  Image u;
  Kernel k;
  double lambda = cfg.lambda_init;
  for (const auto& lv : levels) {
    const Image& fl = lv.f;
    const Kernel k_new_shape(lv.kernel_width, lv.kernel_height);
    const auto [uw, uh] = op.sharp_size(fl.width(), fl.height(), k_new_shape);
    if (u.empty()) {
      k = Kernel::uniform(lv.kernel_width, lv.kernel_height);
      u = no_blur_init(fl, k, op);
    } else {
      k = resize_kernel(k, lv.kernel_width, lv.kernel_height);
      u = resize_bilinear(u, uw, uh);
    }
    if (cfg.restart_lambda_per_level) lambda = cfg.lambda_init;
    double su = cfg.eps_u, sk = cfg.eps_k;
    double E = smoothed_energy(u, k, fl, lambda, cfg.tv_epsilon, cfg.color_mode, op);

    for (int it = 0; it < cfg.max_iters_per_level; ++it) {
      Image u_next;
      Kernel k_next;
      double E_next = 0.0;
      for (int attempt = 0;; ++attempt) {
        const Image gu = u_gradient(u, fl, k, lambda, cfg.tv_epsilon, cfg.color_mode, op);
        const double tu =
            cfg.normalized_steps ? su * detail::step_scale(u.max_abs(), gu.max_abs()) : su;
        u_next = u;
        u_next.axpy(-tu, gu);

        const Kernel gk = cfg.filtered_kernel_estimation ? k_gradient_filtered(k, fl, u_next, op)
                                                         : k_gradient(k, fl, u_next, op);
        double gk_max = 0.0, k_max = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) {
          gk_max = std::max(gk_max, std::abs(gk.data()[i]));
          k_max = std::max(k_max, std::abs(k.data()[i]));
        }
        const double tk = cfg.normalized_steps ? sk * detail::step_scale(k_max, gk_max) : sk;
        k_next = k;
        for (std::size_t i = 0; i < k.size(); ++i) k_next.data()[i] -= tk * gk.data()[i];
        try {
          k_next = project_kernel(k_next);
        } catch (const DegenerateKernelError&) {
          k_next = k;  // the step wiped out all mass; keep the previous kernel
        }
        E_next = smoothed_energy(u_next, k_next, fl, lambda, cfg.tv_epsilon, cfg.color_mode, op);
        if (!std::isfinite(E_next)) {
          throw DivergenceError("deblur_blind: energy became non-finite at level " +
                                std::to_string(lv.index) + ", iteration " + std::to_string(it));
        }
        if (!cfg.backtracking || E_next <= E || attempt >= 20) break;
        su *= 0.5;
        sk *= 0.5;
      }
      u = std::move(u_next);
      k = std::move(k_next);
      lambda = std::max(cfg.anneal_factor * lambda, cfg.lambda_min);
      E = smoothed_energy(u, k, fl, lambda, cfg.tv_epsilon, cfg.color_mode, op);
      IterationLog entry{lv.index, it, lambda, E, 0.5 * sum_squares(op.apply(u, k) - fl)};
      res.log.push_back(entry);
      if (on_iter) on_iter(entry, u, k);
    }
  }
  res.u = std::move(u);
  res.k = std::move(k);
  return res;
}

inline void write_energy_csv(std::ostream& os, const std::vector<IterationLog>& log) {
  os << "level,iteration,lambda,energy,data\n" << std::setprecision(12);
  for (const auto& e : log) {
    os << e.level << ',' << e.iteration << ',' << e.lambda << ',' << e.energy << ',' << e.data
       << '\n';
  }
}

// ---------------------------------------------------------------------------
// non-blind

struct NonblindOptions {
  int max_iters = 2000;
  double rel_tol = 1e-9;
  BoundaryMode boundary = BoundaryMode::valid_free;
  TvProxOptions prox{100, 1e-7};
};

/// argmin_u 1/2 ||k o u - f||^2 + lambda TV(u) for a known kernel.
inline Image deblur_nonblind(const Image& f, const Kernel& k, double lambda = 0.0068,
                             const NonblindOptions& opt = {}) {
  if (!k.is_feasible(1e-9)) throw DomainError("deblur_nonblind: kernel must be feasible");
  SolverOptions so;
  so.max_iters = opt.max_iters;
  so.rel_tol = opt.rel_tol;
  so.residual_tol = 1e-6;
  so.stall_iters = 10;
  so.prox = opt.prox;
  return am_u_step(f, k, lambda, so, std::nullopt, BlurOperator{opt.boundary}).u;
}

}  // namespace tvbd
