#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tvbd/convolution.hpp"
#include "tvbd/errors.hpp"
#include "tvbd/image.hpp"
#include "tvbd/simplex.hpp"
#include "tvbd/tv1d.hpp"
#include "tvbd/tv_prox.hpp"

namespace tvbd {

/// Current pair of the alternating schemes.
struct PamState {
  Image u;
  Kernel k;
  double lambda = 0.0;
  int iteration = 0;
};

struct SolverOptions {
  int max_iters = 10000;
  double rel_tol = 1e-10;       ///< relative energy change
  double residual_tol = 1e-10;  ///< fixed-point residual, relative to max |f|
  /// Consecutive iterations with energy change below rel_tol that also count
  /// as converged; momentum keeps the residual at rounding level otherwise.
  int stall_iters = 20;
  TvProxOptions prox{500, 1e-12};  ///< inner 2D prox; tol is relative to max |f|
};

/// 1/2 ||k o u - f||^2 + lambda TV(u).
inline double blind_energy(const Image& u, const Kernel& k, const Image& f, double lambda,
                           const BlurOperator& op = {}) {
  const Image r = op.apply(u, k) - f;
  return 0.5 * sum_squares(r) + lambda * tv_total(u);
}

/// Sum of squared differences ||k o u - f||^2 (no 1/2).
inline double data_cost(const Image& u, const Kernel& k, const Image& f,
                        const BlurOperator& op = {}) {
  return sum_squares(op.apply(u, k) - f);
}

namespace detail {

// Largest eigenvalue of A^T A by power iteration, padded by a safety margin.
template <class Fn>
double lipschitz_estimate(Fn&& normal_op, Image x) {
  double nrm = std::sqrt(sum_squares(x));
  if (nrm == 0.0) return 1.0;
  x *= 1.0 / nrm;
  double est = 0.0;
  for (int i = 0; i < 50; ++i) {
    Image y = normal_op(x);
    const double n = std::sqrt(sum_squares(y));
    if (n == 0.0) return 1.0;
    if (std::abs(n - est) <= 1e-6 * n) {
      est = n;
      break;
    }
    est = n;
    x = y * (1.0 / n);
  }
  return 1.05 * est;
}

inline Image seed_image(int w, int h, int ch, unsigned s) {
  Image x(w, h, ch);
  for (auto& v : x.data()) {
    s = s * 1664525u + 1013904223u;
    v = 0.5 + static_cast<double>(s >> 8) / static_cast<double>(1u << 24);
  }
  return x;
}

}  // namespace detail

/// Sharp estimate that trivially explains f under the blur model: f itself,
/// replicate-padded to the size the free boundary expects.
inline Image no_blur_init(const Image& f, const Kernel& k, const BlurOperator& op = {}) {
  if (op.mode != BoundaryMode::valid_free) return f;
  return pad(f, k.width() / 2, k.height() / 2, BoundaryMode::replicate);
}

struct UStepResult {
  Image u;
  int iterations = 0;
  bool converged = false;
  std::vector<double> energy;  ///< energy of the iterate after each iteration
};

/// argmin_u 1/2 ||k o u - f||^2 + lambda TV(u) with k fixed.
///
/// Monotone accelerated proximal gradient: a gradient step on the data term
/// followed by the exact TV prox (taut string on rows, dual projection in
/// 2D). The accepted iterate never increases the energy.
inline UStepResult am_u_step(const Image& f, const Kernel& k, double lambda,
                             const SolverOptions& opt = {},
                             std::optional<Image> init = std::nullopt,
                             const BlurOperator& op = {}) {
  if (!(lambda >= 0.0)) throw DomainError("am_u_step: lambda must be >= 0");
  Image x = init ? std::move(*init) : no_blur_init(f, k, op);
  if (op.apply(x, k).width() != f.width() || op.apply(x, k).height() != f.height() ||
      x.channels() != f.channels()) {
    throw DimensionError("am_u_step: initial estimate does not match the data under k");
  }
  const double L = detail::lipschitz_estimate(
      [&](const Image& v) { return op.adjoint(op.apply(v, k), k); },
      detail::seed_image(x.width(), x.height(), x.channels(), 7u));
  const double step = 1.0 / L;
  const double scale = std::max(1.0, f.max_abs());

  UStepResult res;
  double E = blind_energy(x, k, f, lambda, op);
  Image y = x;
  double t = 1.0;
  TvDual dual;
  int flat = 0;
  for (int it = 1; it <= opt.max_iters; ++it) {
    Image g = op.adjoint(op.apply(y, k) - f, k);
    Image z = y;
    z.axpy(-step, g);
    z = tv_prox(z, lambda * step, &dual, {opt.prox.max_iters, opt.prox.tol * scale});
    const double Ez = blind_energy(z, k, f, lambda, op);
    double residual = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      residual = std::max(residual, std::abs(z.data()[i] - y.data()[i]));
    }
    const Image x_prev = x;
    const double E_prev = E;
    if (Ez <= E) {
      x = z;
      E = Ez;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x;
    y.axpy(t / tn, z - x);
    y.axpy((t - 1.0) / tn, x - x_prev);
    t = tn;
    res.energy.push_back(E);
    res.iterations = it;
    if (!std::isfinite(E)) throw DivergenceError("am_u_step: energy is not finite");
    const double rel = (E_prev - E) / std::max(std::abs(E), std::numeric_limits<double>::min());
    flat = rel < opt.rel_tol ? flat + 1 : 0;
    if (flat > 0 && (residual < opt.residual_tol * scale || flat >= opt.stall_iters)) {
      res.converged = true;
      break;
    }
    // A rejected step means the momentum overshot: restart from x.
    if (Ez > E_prev) {
      y = x;
      t = 1.0;
    }
  }
  res.u = std::move(x);
  return res;
}

struct KStepResult {
  Kernel k;
  int iterations = 0;
  bool converged = false;
};

using KernelObserver = std::function<void(const Kernel&)>;

/// argmin_k 1/2 ||k o u - f||^2 over the probability simplex.
///
/// Accelerated projected gradient: each iterate is projected onto
/// {k >= 0, sum k = 1} before it is accepted, so the constraints hold during
/// the descent and not only at its end. `observe` sees every iterate.
inline KStepResult am_k_step(const Image& f, const Image& u, int kw, int kh,
                             const SolverOptions& opt = {}, const KernelObserver& observe = {},
                             const BlurOperator& op = {}) {
  Kernel x = Kernel::delta(kw, kh);
  const Image probe = op.apply(u, x);
  if (probe.width() != f.width() || probe.height() != f.height()) {
    throw DimensionError("am_k_step: u does not match the data for this kernel size");
  }
  const double L = detail::lipschitz_estimate(
      [&](const Image& v) {
        return op.kernel_grad(u, op.apply(u, Kernel::from_image(v)), x).as_image();
      },
      detail::seed_image(kw, kh, 1, 11u));
  const double step = 1.0 / std::max(L, 1e-300);
  auto energy = [&](const Kernel& k) { return 0.5 * data_cost(u, k, f, op); };

  KStepResult res;
  double E = energy(x);
  Kernel y = x;
  double t = 1.0;
  if (observe) observe(x);
  int flat = 0;
  for (int it = 1; it <= opt.max_iters; ++it) {
    const Kernel g = op.kernel_grad(u, op.apply(u, y) - f, y);
    Kernel z = y;
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] -= step * g.data()[i];
    z = project_simplex(z);
    const double Ez = energy(z);
    double move = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      move = std::max(move, std::abs(z.data()[i] - y.data()[i]));
    }
    const Kernel x_prev = x;
    const double E_prev = E;
    if (Ez <= E) {
      x = z;
      E = Ez;
    }
    if (observe) observe(x);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < y.size(); ++i) {
      y.data()[i] = x.data()[i] + t / tn * (z.data()[i] - x.data()[i]) +
                    (t - 1.0) / tn * (x.data()[i] - x_prev.data()[i]);
    }
    t = tn;
    res.iterations = it;
    const double rel = (E_prev - E) / std::max(std::abs(E), std::numeric_limits<double>::min());
    flat = rel < opt.rel_tol ? flat + 1 : 0;
    if (flat > 0 && (move < opt.residual_tol || flat >= opt.stall_iters)) {
      res.converged = true;
      break;
    }
    if (Ez > E_prev) {
      y = x;
      t = 1.0;
    }
  }
  res.k = std::move(x);
  return res;
}

struct PamKStepResult {
  Kernel unconstrained;  ///< least-squares minimizer before projection
  Kernel k;              ///< after clamping and normalizing
  int iterations = 0;
  bool converged = false;
};

/// Unconstrained least squares in k (conjugate gradients on the normal
/// equations), then clamp negatives, then normalize.
inline PamKStepResult pam_k_step(const Image& f, const Image& u, int kw, int kh,
                                 const SolverOptions& opt = {}, const BlurOperator& op = {}) {
  const Kernel zero(kw, kh);
  const Image probe = op.apply(u, zero);
  if (probe.width() != f.width() || probe.height() != f.height()) {
    throw DimensionError("pam_k_step: u does not match the data for this kernel size");
  }
  auto A = [&](const Kernel& k) { return op.apply(u, k); };
  auto At = [&](const Image& r) { return op.kernel_grad(u, r, zero); };
  auto kdot = [](const Kernel& a, const Kernel& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
  };

  PamKStepResult res;
  Kernel x = zero;
  Image r = f;  // f - A x
  Kernel s = At(r);
  Kernel p = s;
  double gamma = kdot(s, s);
  const double g0 = gamma;
  const int cap = std::min<int>(opt.max_iters, 4 * static_cast<int>(x.size()) + 50);
  for (int it = 1; it <= cap && gamma > 0.0; ++it) {
    const Image q = A(p);
    const double qq = sum_squares(q);
    if (qq <= 0.0) break;
    const double alpha = gamma / qq;
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += alpha * p.data()[i];
    r.axpy(-alpha, q);
    s = At(r);
    const double gn = kdot(s, s);
    res.iterations = it;
    if (gn <= opt.rel_tol * opt.rel_tol * g0) {
      gamma = gn;
      break;
    }
    const double beta = gn / gamma;
    for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = s.data()[i] + beta * p.data()[i];
    gamma = gn;
  }
  res.converged = gamma <= std::max(opt.rel_tol * opt.rel_tol * g0, 1e-28);
  res.unconstrained = x;
  res.k = project_kernel(x);
  return res;
}

// ---------------------------------------------------------------------------
// 1D theorem harness

inline Image as_row(const Signal& s) { return Image::row(s.values); }

/// Extend a 1D signal by `n` replicated samples on both sides.
inline Signal replicate_extend(const Signal& s, int n) {
  Signal out{s.first - n, {}};
  out.values.assign(static_cast<std::size_t>(n), s.values.front());
  out.values.insert(out.values.end(), s.values.begin(), s.values.end());
  out.values.insert(out.values.end(), static_cast<std::size_t>(n), s.values.back());
  return out;
}

/// 1 x w kernel holding a 3-tap blur shifted by `shift` taps.
inline Kernel embed_kernel(const Kernel& k3, int width, int shift) {
  Kernel out(width, 1);
  const int off = width / 2 - 1 + shift;
  for (int i = 0; i < 3; ++i) {
    const int j = off + i;
    if (j < 0 || j >= width) {
      if (k3(i, 0) != 0.0) throw DimensionError("embed_kernel: shifted taps fall outside");
      continue;
    }
    out(j, 0) = k3(i, 0);
  }
  return out;
}

/// Best of the shifts {-1, 0, +1} of `reference` against `k`.
struct ShiftMatch {
  int shift = 0;
  double error = std::numeric_limits<double>::infinity();
};

inline ShiftMatch align_kernel(const Kernel& k, const Kernel& reference3) {
  ShiftMatch best;
  for (int s : {0, -1, 1}) {
    Kernel ref(k.width(), 1);
    try {
      ref = embed_kernel(reference3, k.width(), s);
    } catch (const DimensionError&) {
      continue;
    }
    const double e = k.max_abs_diff(ref);
    if (e < best.error) best = {s, e};
  }
  return best;
}

/// Mean subtracted before blurring in the PAM recovery experiment.
enum class ZeroMean {
  full_support,  ///< mean of u0 over [-L1, L2]
  interior,      ///< mean of u0 over the data support [-L1+1, L2-1]
  none,
};

struct TheoremReport {
  std::string name;
  JumpCase which = JumpCase::none;
  double lambda = 0.0;
  StepSignal step;
  Blur3 blur;
  Kernel kernel;          ///< recovered kernel after the two steps
  Kernel fixed_point;     ///< AM iterated until the kernel stops moving (theorem 3)
  Kernel unconstrained;   ///< least-squares kernel before projection (theorem 4)
  int shift = 0;
  double kernel_error = 0.0;
  double cost_delta = 0.0;  ///< ||delta o u - f||^2 after the u-step
  double cost_true = 0.0;   ///< ||k0 o u - f||^2 after the u-step
  bool pass = false;
};

inline std::string kernel_taps(const Kernel& k) {
  std::ostringstream os;
  os << std::setprecision(10) << '[';
  for (std::size_t i = 0; i < k.size(); ++i) os << (i ? ", " : "") << k.data()[i];
  os << ']';
  return os.str();
}

inline void write_report_text(std::ostream& os, const TheoremReport& r) {
  os << r.name << ": case=" << to_string(r.which) << " lambda=" << r.lambda
     << " U=(" << r.step.U1 << ", " << r.step.U2 << ") L=(" << r.step.L1 << ", " << r.step.L2
     << ") delta=(" << r.blur.delta1 << ", " << r.blur.delta2 << ")\n"
     << "  kernel        " << kernel_taps(r.kernel) << "\n";
  if (!r.unconstrained.empty()) os << "  unconstrained " << kernel_taps(r.unconstrained) << "\n";
  if (!r.fixed_point.empty()) os << "  fixed point   " << kernel_taps(r.fixed_point) << "\n";
  os << "  cost(delta)=" << r.cost_delta << " cost(k0)=" << r.cost_true << "\n"
     << "  shift=" << r.shift << " error=" << r.kernel_error << " -> "
     << (r.pass ? "PASS" : "FAIL") << "\n";
}

inline const char* report_csv_header() {
  return "case,lambda,delta1,delta2,L1,L2,shift,kernel_error,pass";
}

inline void write_report_csv_row(std::ostream& os, const TheoremReport& r) {
  os << std::setprecision(17) << to_string(r.which) << ',' << r.lambda << ',' << r.blur.delta1
     << ',' << r.blur.delta2 << ',' << r.step.L1 << ',' << r.step.L2 << ',' << r.shift << ','
     << r.kernel_error << ',' << (r.pass ? 1 : 0) << '\n';
}

struct TheoremOptions {
  SolverOptions solver;
  double tolerance = 1e-6;
  int fixed_point_iters = 0;  ///< extra AM iterations after the two steps (0 = skip)
  ZeroMean zero_mean = ZeroMean::full_support;
  int pam_taps = 5;           ///< PAM kernel width; >3 lets a shifted blur be represented
};

namespace detail {

inline JumpCase require_interval(const StepSignal& s, const Blur3& b, double lambda) {
  const JumpCase c = lambda_intervals(s, b).classify(lambda);
  if (c == JumpCase::none) {
    throw DomainError("lambda lies outside every sharp-solution interval for this step and blur");
  }
  return c;
}

}  // namespace detail

/// AM from the no-blur pair: one u-step with k = delta, then one constrained
/// k-step. Passes when the kernel is a (possibly shifted) delta.
inline TheoremReport verify_theorem3(const StepSignal& s, const Blur3& b, double lambda,
                                     const TheoremOptions& opt = {}) {
  TheoremReport rep;
  rep.name = "theorem3";
  rep.which = detail::require_interval(s, b, lambda);
  rep.lambda = lambda;
  rep.step = s;
  rep.blur = b;
  const Image f = as_row(blur_step(s, b));
  const Kernel delta = Kernel::delta(3, 1);
  const auto us = am_u_step(f, delta, lambda, opt.solver);
  if (!us.converged) throw ConvergenceError("verify_theorem3: u-step did not converge");
  const auto ks = am_k_step(f, us.u, 3, 1, opt.solver);
  if (!ks.converged) throw ConvergenceError("verify_theorem3: k-step did not converge");
  rep.kernel = ks.k;
  rep.cost_delta = data_cost(us.u, delta, f);
  rep.cost_true = data_cost(us.u, b.kernel(), f);
  const auto m = align_kernel(rep.kernel, delta);
  rep.shift = m.shift;
  rep.kernel_error = m.error;
  rep.pass = m.error < opt.tolerance;

  if (opt.fixed_point_iters > 0) {
    Image u = us.u;
    Kernel k = ks.k;
    for (int i = 0; i < opt.fixed_point_iters; ++i) {
      u = am_u_step(f, k, lambda, opt.solver, u).u;
      Kernel kn = am_k_step(f, u, 3, 1, opt.solver).k;
      const double move = kn.max_abs_diff(k);
      k = std::move(kn);
      if (move < 1e-10) break;
    }
    rep.fixed_point = k;
  }
  return rep;
}

/// PAM from the no-blur pair on a zero-mean step: exact TV denoising of f,
/// then the unconstrained kernel fit followed by clamp and normalize.
/// Passes when the kernel equals k0 up to a one-tap shift.
inline TheoremReport verify_theorem4(const StepSignal& s_in, const Blur3& b, double lambda,
                                     const TheoremOptions& opt = {}) {
  StepSignal s = s_in;
  if (opt.zero_mean == ZeroMean::full_support) {
    s = s_in.zero_mean();
  } else if (opt.zero_mean == ZeroMean::interior) {
    const double m = (s.U1 * (s.L1 - 1) + s.U2 * s.L2) / (s.L1 + s.L2 - 1);
    s = {s.U1 - m, s.U2 - m, s.L1, s.L2};
  }
  if (opt.pam_taps < 3 || opt.pam_taps % 2 == 0) {
    throw DomainError("verify_theorem4: pam_taps must be odd and >= 3");
  }
  TheoremReport rep;
  rep.name = "theorem4";
  rep.which = detail::require_interval(s, b, lambda);
  rep.lambda = lambda;
  rep.step = s;
  rep.blur = b;
  const Image f = as_row(blur_step(s, b));
  const Signal u_hat = taut_string_denoise(blur_step(s, b), lambda);
  const Image u = as_row(replicate_extend(u_hat, (opt.pam_taps - 3) / 2));
  const auto ks = pam_k_step(f, u, opt.pam_taps, 1, opt.solver);
  rep.kernel = ks.k;
  rep.unconstrained = ks.unconstrained;
  rep.cost_delta = data_cost(u, Kernel::delta(opt.pam_taps, 1), f);
  rep.cost_true = data_cost(u, embed_kernel(b.kernel(), opt.pam_taps, 0), f);
  const auto m = align_kernel(rep.kernel, b.kernel());
  rep.shift = m.shift;
  rep.kernel_error = m.error;
  rep.pass = m.error < opt.tolerance;
  return rep;
}

/// A step, a blur and a lambda inside one of the sharp-solution intervals.
struct TheoremInstance {
  StepSignal step;
  Blur3 blur;
  double lambda = 0.0;
};

/// Random instances for the theorem harness: levels in [-1, 1] with height
/// in [0.2, 2], lengths in [3, 15], blur uniform on the simplex away from
/// both degenerate sets, lambda uniform in a randomly chosen non-empty
/// interval. Deterministic for a given seed.
inline std::vector<TheoremInstance> sample_theorem_instances(int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> len(3, 15);
  std::vector<TheoremInstance> out;
  while (static_cast<int>(out.size()) < count) {
    StepSignal s;
    s.U1 = 2.0 * U(rng) - 1.0;
    s.U2 = s.U1 + 0.2 + 1.8 * U(rng);
    s.L1 = len(rng);
    s.L2 = len(rng);
    double a = U(rng), b = U(rng);
    if (a + b > 1.0) a = 1.0 - a, b = 1.0 - b;
    const Blur3 blur{a, b};
    if (degenerate_region(blur, s, false, 1e-6) || degenerate_region(blur, s, true, 1e-6)) continue;
    const auto iv = lambda_intervals(s, blur);
    std::vector<LambdaInterval> live;
    for (const auto& i : {iv.left, iv.center, iv.right})
      if (i.width() > 1e-6) live.push_back(i);
    if (live.empty()) continue;
    const auto& pick = live[static_cast<std::size_t>(U(rng) * live.size()) % live.size()];
    // keep clear of the endpoints, where the two-level solution degenerates
    const double lambda = pick.min + (0.05 + 0.9 * U(rng)) * pick.width();
    out.push_back({s, blur, lambda});
  }
  return out;
}

}  // namespace tvbd
