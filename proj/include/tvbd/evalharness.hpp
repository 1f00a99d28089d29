#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "tvbd/convolution.hpp"
#include "tvbd/deblur.hpp"
#include "tvbd/image.hpp"

namespace tvbd {

struct TestCase {
  Image u0;
  Kernel k0;
  Image f;  ///< convolve_valid(u0, k0) plus optional noise
  unsigned seed = 0;
  double noise_sigma = 0.0;
};

struct CaseOptions {
  int image_size = 64;   ///< u0 is image_size x image_size
  int kernel_size = 5;
  int min_shapes = 6;
  int max_shapes = 12;
  int walk_steps = 12;   ///< steps of the random-walk blur trajectory
};

/// Piecewise-constant cartoon: a flat background with random rectangles and
/// disks painted on top.
inline Image random_cartoon(int size, std::mt19937_64& rng, int min_shapes, int max_shapes) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Image u(size, size, 1, 0.2 + 0.6 * U(rng));
  const int n = min_shapes + static_cast<int>(U(rng) * (max_shapes - min_shapes + 1));
  for (int s = 0; s < n; ++s) {
    const double value = U(rng);
    const double cx = U(rng) * size, cy = U(rng) * size;
    if (U(rng) < 0.5) {
      const double hw = (0.08 + 0.25 * U(rng)) * size, hh = (0.08 + 0.25 * U(rng)) * size;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          if (std::abs(x + 0.5 - cx) <= hw && std::abs(y + 0.5 - cy) <= hh) u(x, y) = value;
    } else {
      const double r = (0.06 + 0.2 * U(rng)) * size;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) u(x, y) = value;
    }
  }
  return u;
}

/// Camera-shake-like blur: a smooth random walk, centred on the support,
/// splatted bilinearly on the grid and normalized.
inline Kernel random_walk_kernel(int size, int steps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  const double half = size / 2;
  std::vector<std::pair<double, double>> path{{0.0, 0.0}};
  double x = 0.0, y = 0.0;
  double angle = 2.0 * M_PI * U(rng);
  const double speed = static_cast<double>(size) / steps;
  for (int s = 0; s < steps; ++s) {
    angle += 0.6 * N(rng);
    x += speed * std::cos(angle);
    y += speed * std::sin(angle);
    path.emplace_back(x, y);
  }
  // centre the bounding box, then squeeze into the support if needed
  double x0 = x, x1 = x, y0 = y, y1 = y;
  for (const auto& [px, py] : path) {
    x0 = std::min(x0, px), x1 = std::max(x1, px), y0 = std::min(y0, py), y1 = std::max(y1, py);
  }
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  const double extent = std::max({x1 - x0, y1 - y0, 1e-12});
  const double fit = std::min(1.0, (2.0 * half - 1e-9) / extent);
  Kernel k(size, size);
  for (const auto& [px, py] : path) {
    const double gx = (px - cx) * fit + half, gy = (py - cy) * fit + half;
    const int ix = std::min(static_cast<int>(std::floor(gx)), size - 1);
    const int iy = std::min(static_cast<int>(std::floor(gy)), size - 1);
    const double ax = gx - ix, ay = gy - iy;
    const int jx = std::min(ix + 1, size - 1), jy = std::min(iy + 1, size - 1);
    k(ix, iy) += (1 - ax) * (1 - ay);
    k(jx, iy) += ax * (1 - ay);
    k(ix, jy) += (1 - ax) * ay;
    k(jx, jy) += ax * ay;
  }
  const double total = k.sum();
  for (double& v : k.data()) v /= total;
  return k;
}

/// Deterministic synthetic suite; case i depends only on (seed, i).
inline std::vector<TestCase> make_cases(int count, unsigned seed, double noise_sigma,
                                        const CaseOptions& opt = {}) {
  if (count < 1) throw DomainError("make_cases: count must be >= 1");
  std::vector<TestCase> cases;
  cases.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const unsigned s = seed * 1000003u + static_cast<unsigned>(i);
    std::mt19937_64 rng(s);
    TestCase tc;
    tc.seed = s;
    tc.noise_sigma = noise_sigma;
    tc.u0 = random_cartoon(opt.image_size, rng, opt.min_shapes, opt.max_shapes);
    tc.k0 = random_walk_kernel(opt.kernel_size, opt.walk_steps, rng);
    tc.f = convolve_valid(tc.u0, tc.k0);
    if (noise_sigma > 0.0) {
      std::normal_distribution<double> N(0.0, noise_sigma);
      for (double& v : tc.f.data()) v += N(rng);
    }
    cases.push_back(std::move(tc));
  }
  return cases;
}

/// Kernel shifted by (dx, dy) with zero fill.
inline Kernel shift_kernel(const Kernel& k, int dx, int dy) {
  Kernel out(k.width(), k.height());
  for (int y = 0; y < k.height(); ++y)
    for (int x = 0; x < k.width(); ++x) {
      const int sx = x - dx, sy = y - dy;
      if (sx >= 0 && sy >= 0 && sx < k.width() && sy < k.height()) out(x, y) = k(sx, sy);
    }
  return out;
}

/// Smallest max-abs difference between `k` and `reference` over shifts of up
/// to `radius` pixels.
inline double aligned_kernel_error(const Kernel& k, const Kernel& reference, int radius = 2) {
  if (k.width() != reference.width() || k.height() != reference.height()) {
    throw DimensionError("aligned_kernel_error: kernels differ in size");
  }
  double best = std::numeric_limits<double>::infinity();
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      best = std::min(best, shift_kernel(k, dx, dy).max_abs_diff(reference));
    }
  return best;
}

/// Smallest SSD between u and u0 over shifts of up to `radius` pixels, taken
/// on the interior that stays inside both images for every shift.
inline double aligned_ssd(const Image& u, const Image& u0, int margin, int radius = 2) {
  if (!u.same_shape(u0)) throw DimensionError("aligned_ssd: images differ in shape");
  const int m = margin + radius;
  if (2 * m >= u.width() || 2 * m >= u.height()) throw DimensionError("aligned_ssd: margin too large");
  double best = std::numeric_limits<double>::infinity();
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      double s = 0.0;
      for (int c = 0; c < u.channels(); ++c)
        for (int y = m; y < u.height() - m; ++y)
          for (int x = m; x < u.width() - m; ++x) {
            const double d = u(x + dx, y + dy, c) - u0(x, y, c);
            s += d * d;
          }
      best = std::min(best, s);
    }
  return best;
}

struct ErrorRatioOptions {
  double lambda_nb = 0.0068;
  int shift_radius = 2;
  NonblindOptions nonblind;
};

/// Interior margin of the error ratio: the kernel support minus one, where
/// the free-boundary solution is determined by fewer than all taps.
inline int error_margin(const Kernel& k) { return std::max(k.width(), k.height()) - 1; }

/// SSD of the non-blind result with k_est divided by the SSD with the true
/// kernel. `reference_ssd` may carry a cached denominator.
inline double error_ratio(const TestCase& tc, const Kernel& k_est,
                          const ErrorRatioOptions& opt = {}, double reference_ssd = -1.0) {
  if (k_est.width() != tc.k0.width() || k_est.height() != tc.k0.height()) {
    throw DimensionError("error_ratio: estimated kernel must match the true kernel size");
  }
  const int margin = error_margin(tc.k0);
  if (reference_ssd < 0.0) {
    reference_ssd = aligned_ssd(deblur_nonblind(tc.f, tc.k0, opt.lambda_nb, opt.nonblind), tc.u0,
                                margin, opt.shift_radius);
  }
  const double num = aligned_ssd(deblur_nonblind(tc.f, k_est, opt.lambda_nb, opt.nonblind), tc.u0,
                                 margin, opt.shift_radius);
  return num / std::max(reference_ssd, 1e-12);
}

/// Fraction of ratios below i for i = 1..max_bin; a final entry counts all.
inline std::vector<double> cumulative_histogram(const std::vector<double>& ratios, int max_bin) {
  std::vector<double> h(static_cast<std::size_t>(max_bin) + 1, 0.0);
  if (ratios.empty()) return h;
  for (int i = 1; i <= max_bin; ++i) {
    const auto n = std::count_if(ratios.begin(), ratios.end(), [i](double r) { return r < i; });
    h[static_cast<std::size_t>(i) - 1] = static_cast<double>(n) / ratios.size();
  }
  h.back() = 1.0;
  return h;
}

struct ErrorRatioReport {
  BoundaryMode mode = BoundaryMode::valid_free;
  bool filtered = false;
  std::vector<double> ratios;         ///< NaN marks a failed case
  std::vector<double> kernel_errors;  ///< aligned max-abs error per case
  std::vector<std::string> failures;

  std::vector<double> histogram(int max_bin = 10) const {
    std::vector<double> ok;
    for (double r : ratios) ok.push_back(std::isnan(r) ? std::numeric_limits<double>::infinity() : r);
    return cumulative_histogram(ok, max_bin);
  }
  /// Fraction of cases with ratio below `bin`.
  double fraction_below(double bin) const {
    if (ratios.empty()) return 0.0;
    const auto n = std::count_if(ratios.begin(), ratios.end(), [bin](double r) { return r < bin; });
    return static_cast<double>(n) / ratios.size();
  }
};

struct AblationOptions {
  DeblurConfig deblur;
  ErrorRatioOptions ratio;
};

/// Reference SSDs (true kernel) of each case, shared by every configuration.
inline std::vector<double> reference_ssds(const std::vector<TestCase>& cases,
                                          const ErrorRatioOptions& opt = {}) {
  std::vector<double> out;
  for (const auto& tc : cases) {
    out.push_back(aligned_ssd(deblur_nonblind(tc.f, tc.k0, opt.lambda_nb, opt.nonblind), tc.u0,
                              error_margin(tc.k0), opt.shift_radius));
  }
  return out;
}

/// Blind deblurring of every case under one boundary mode.
inline ErrorRatioReport run_configuration(const std::vector<TestCase>& cases, BoundaryMode mode,
                                          bool filtered, const AblationOptions& opt,
                                          const std::vector<double>& refs) {
  ErrorRatioReport rep;
  rep.mode = mode;
  rep.filtered = filtered;
  DeblurConfig cfg = opt.deblur;
  cfg.boundary = mode;
  cfg.filtered_kernel_estimation = filtered;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& tc = cases[i];
    cfg.kernel_width = tc.k0.width();
    cfg.kernel_height = tc.k0.height();
    try {
      const auto res = deblur_blind(tc.f, cfg);
      rep.kernel_errors.push_back(aligned_kernel_error(res.k, tc.k0, opt.ratio.shift_radius));
      rep.ratios.push_back(error_ratio(tc, res.k, opt.ratio, refs.at(i)));
    } catch (const Error& e) {
      rep.ratios.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.kernel_errors.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.failures.push_back("case " + std::to_string(i) + ": " + e.what());
    }
  }
  return rep;
}

/// One report per boundary mode, with kernels estimated from intensities or
/// (filtered) from image derivatives.
inline std::vector<ErrorRatioReport> run_ablation(const std::vector<TestCase>& cases,
                                                  const std::vector<BoundaryMode>& modes,
                                                  bool filtered, const AblationOptions& opt = {}) {
  if (cases.empty()) throw DomainError("run_ablation: no cases");
  const auto refs = reference_ssds(cases, opt.ratio);
  std::vector<ErrorRatioReport> out;
  for (auto m : modes) out.push_back(run_configuration(cases, m, filtered, opt, refs));
  return out;
}

inline void write_ratio_csv(std::ostream& os, const std::vector<ErrorRatioReport>& reports) {
  os << "case,mode,filtered,ratio\n" << std::setprecision(12);
  for (const auto& r : reports)
    for (std::size_t i = 0; i < r.ratios.size(); ++i) {
      os << i << ',' << to_string(r.mode) << ',' << (r.filtered ? 1 : 0) << ',' << r.ratios[i]
         << '\n';
    }
}

inline void write_histogram_csv(std::ostream& os, const std::vector<ErrorRatioReport>& reports,
                                int max_bin = 10) {
  os << "mode,filtered,bin,fraction\n" << std::setprecision(12);
  for (const auto& r : reports) {
    const auto h = r.histogram(max_bin);
    for (std::size_t i = 0; i < h.size(); ++i) {
      os << to_string(r.mode) << ',' << (r.filtered ? 1 : 0) << ',';
      if (i + 1 == h.size()) {
        os << "inf";
      } else {
        os << i + 1;
      }
      os << ',' << h[i] << '\n';
    }
  }
}

}  // namespace tvbd
