#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tvbd/errors.hpp"
#include "tvbd/image.hpp"

namespace tvbd {

/// Samples of a 1D signal on the integer range [first, first + size).
struct Signal {
  std::ptrdiff_t first = 0;
  std::vector<double> values;

  std::ptrdiff_t last() const noexcept {
    return first + static_cast<std::ptrdiff_t>(values.size()) - 1;
  }
  std::size_t size() const noexcept { return values.size(); }
  double at(std::ptrdiff_t x) const { return values.at(static_cast<std::size_t>(x - first)); }
  double& at(std::ptrdiff_t x) { return values.at(static_cast<std::size_t>(x - first)); }
  double mean() const noexcept {
    return values.empty() ? 0.0
                          : std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  }
};

/// Two-level step: U1 on [-L1, -1] and U2 on [0, L2].
struct StepSignal {
  double U1 = 0.0;
  double U2 = 1.0;
  int L1 = 5;
  int L2 = 5;

  void validate() const {
    if (!(U1 < U2)) throw DomainError("StepSignal: requires U1 < U2");
    if (L1 <= 2 || L2 <= 2) throw DomainError("StepSignal: requires L1, L2 > 2");
  }

  double height() const noexcept { return U2 - U1; }

  /// u0 on [-L1, L2].
  Signal samples() const {
    Signal s{-L1, std::vector<double>(static_cast<std::size_t>(L1 + L2 + 1))};
    for (int x = -L1; x <= L2; ++x) s.at(x) = x < 0 ? U1 : U2;
    return s;
  }

  /// Same step shifted so that its samples on [-L1, L2] average to zero.
  StepSignal zero_mean() const {
    const double m = (U1 * L1 + U2 * (L2 + 1)) / (L1 + L2 + 1);
    return {U1 - m, U2 - m, L1, L2};
  }
};

/// Three-tap blur. delta1 is the weight that pulls the first sample left of
/// the jump towards U2, delta2 the weight that pulls the first sample right of
/// it towards U1; the centre tap carries the rest.
struct Blur3 {
  double delta1 = 0.0;
  double delta2 = 0.0;

  double center() const noexcept { return 1.0 - delta1 - delta2; }

  void validate() const {
    constexpr double tol = 1e-12;
    if (delta1 < -tol || delta2 < -tol || delta1 + delta2 > 1.0 + tol) {
      throw DomainError("Blur3: requires delta1, delta2 >= 0 and delta1 + delta2 <= 1");
    }
  }

  /// The 1 x 3 kernel whose valid convolution with a step reproduces blur_step().
  /// Storage order is [delta1, centre, delta2].
  Kernel kernel() const { return Kernel::row({delta1, center(), delta2}); }
};

/// f = k0 * u0 on [-L1+1, L2-1]:
///   U1 on [-L1+1, -2], U1 + delta1 (U2-U1) at -1, U2 - delta2 (U2-U1) at 0, U2 on [1, L2-1].
inline Signal blur_step(const StepSignal& s, const Blur3& b) {
  s.validate();
  b.validate();
  const double d = s.height();
  Signal f{-s.L1 + 1, std::vector<double>(static_cast<std::size_t>(s.L1 + s.L2 - 1))};
  for (int x = -s.L1 + 1; x <= s.L2 - 1; ++x) {
    double v = x < 0 ? s.U1 : s.U2;
    if (x == -1) v = s.U1 + b.delta1 * d;
    if (x == 0) v = s.U2 - b.delta2 * d;
    f.at(x) = v;
  }
  return f;
}

/// Exact solution of min_u 1/2 sum (u_i - f_i)^2 + lambda sum |u_{i+1} - u_i|.
///
/// Taut-string method: with r the running sum of f (r_0 = 0), the solution is
/// the slope of the shortest path s from (0, 0) to (n, r_n) that stays in the
/// tube |s_i - r_i| <= lambda. The path is pulled tight with a funnel: a convex
/// chain of ceiling points and a concave chain of floor points hang off the
/// current apex, and the apex advances along whichever chain the other one
/// crosses. Linear time.
inline std::vector<double> tv_denoise(std::span<const double> f, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("tv_denoise: lambda must be >= 0");
  const std::size_t n = f.size();
  std::vector<double> u(f.begin(), f.end());
  if (n < 2 || lambda == 0.0) return u;

  struct Point {
    double x, y;
  };
  auto slope = [](const Point& a, const Point& b) { return (b.y - a.y) / (b.x - a.x); };
  auto emit = [&u, &slope](const Point& a, const Point& b) {
    const double v = slope(a, b);
    for (auto i = static_cast<std::size_t>(a.x); i < static_cast<std::size_t>(b.x); ++i) u[i] = v;
  };

  std::vector<double> r(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) r[i + 1] = r[i] + f[i];

  std::deque<Point> ceil{{0.0, 0.0}};   // convex: slopes increase
  std::deque<Point> floor{{0.0, 0.0}};  // concave: slopes decrease

  for (std::size_t i = 1; i <= n; ++i) {
    const double x = static_cast<double>(i);
    const double slack = i == n ? 0.0 : lambda;
    const Point hi{x, r[i] + slack};
    const Point lo{x, r[i] - slack};

    if (floor.size() >= 2 && slope(floor[0], hi) <= slope(floor[0], floor[1])) {
      while (floor.size() >= 2 && slope(floor[0], hi) <= slope(floor[0], floor[1])) {
        emit(floor[0], floor[1]);
        floor.pop_front();
      }
      ceil.assign({floor.front(), hi});
    } else {
      while (ceil.size() >= 2 && slope(ceil[ceil.size() - 2], hi) <=
                                     slope(ceil[ceil.size() - 2], ceil.back())) {
        ceil.pop_back();
      }
      ceil.push_back(hi);
    }

    if (ceil.size() >= 2 && slope(ceil[0], lo) >= slope(ceil[0], ceil[1])) {
      while (ceil.size() >= 2 && slope(ceil[0], lo) >= slope(ceil[0], ceil[1])) {
        emit(ceil[0], ceil[1]);
        ceil.pop_front();
      }
      floor.assign({ceil.front(), lo});
    } else {
      while (floor.size() >= 2 && slope(floor[floor.size() - 2], lo) >=
                                      slope(floor[floor.size() - 2], floor.back())) {
        floor.pop_back();
      }
      floor.push_back(lo);
    }
  }
  for (std::size_t j = 0; j + 1 < ceil.size(); ++j) emit(ceil[j], ceil[j + 1]);
  return u;
}

/// Objective 1/2 ||u - f||^2 + lambda TV(u) of tv_denoise().
inline double tv_denoise_energy(std::span<const double> u, std::span<const double> f,
                                double lambda) {
  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) e += 0.5 * (u[i] - f[i]) * (u[i] - f[i]);
  for (std::size_t i = 0; i + 1 < u.size(); ++i) e += lambda * std::abs(u[i + 1] - u[i]);
  return e;
}

/// TV-denoise f (the interior problem) and extend the result by one
/// replicated sample on each side, so a signal on [a, b] maps to [a-1, b+1].
inline Signal taut_string_denoise(const Signal& f, double lambda) {
  if (f.size() < 1) throw DimensionError("taut_string_denoise: empty signal");
  const auto inner = tv_denoise(f.values, lambda);
  Signal out{f.first - 1, {}};
  out.values.reserve(inner.size() + 2);
  out.values.push_back(inner.front());
  out.values.insert(out.values.end(), inner.begin(), inner.end());
  out.values.push_back(inner.back());
  return out;
}

/// Half-open lambda range [min, max); empty when min >= max.
struct LambdaInterval {
  double min = 0.0;
  double max = 0.0;

  bool empty() const noexcept { return !(min < max); }
  bool contains(double lambda) const noexcept {
    return !empty() && lambda >= min && lambda < max;
  }
  double width() const noexcept { return empty() ? 0.0 : max - min; }
};

/// Which side of the original jump the denoised jump lands on.
enum class JumpCase { left, center, right, none };

inline std::string_view to_string(JumpCase c) noexcept {
  switch (c) {
    case JumpCase::left: return "left";
    case JumpCase::center: return "center";
    case JumpCase::right: return "right";
    case JumpCase::none: return "none";
  }
  return "?";
}

/// Position of the first sample at the upper level of a two-level result.
inline int jump_position(JumpCase c) noexcept {
  switch (c) {
    case JumpCase::left: return -1;
    case JumpCase::right: return 1;
    default: return 0;
  }
}

struct LambdaIntervals {
  LambdaInterval left;
  LambdaInterval center;
  LambdaInterval right;

  const LambdaInterval& operator[](JumpCase c) const {
    switch (c) {
      case JumpCase::left: return left;
      case JumpCase::center: return center;
      case JumpCase::right: return right;
      default: throw DomainError("LambdaIntervals: no interval for JumpCase::none");
    }
  }

  /// First interval containing lambda, or none.
  JumpCase classify(double lambda) const noexcept {
    if (left.contains(lambda)) return JumpCase::left;
    if (center.contains(lambda)) return JumpCase::center;
    if (right.contains(lambda)) return JumpCase::right;
    return JumpCase::none;
  }
};

/// Ranges of lambda for which TV denoising of a blurred step returns a
/// sharp two-level signal, one per jump position.
inline LambdaIntervals lambda_intervals(const StepSignal& s, const Blur3& b) {
  s.validate();
  b.validate();
  const double d = s.height();
  const double L1 = s.L1, L2 = s.L2, d1 = b.delta1, d2 = b.delta2;
  LambdaIntervals iv;
  iv.left.min = d * (L2 - L2 * d1 - d2);
  iv.left.max = d * (L1 - 2) / (L1 + L2 - 1) * (L2 + d1 - d2);
  iv.center.min = d * std::max((L1 - 2) * d1, (L2 - 1) * d2);
  iv.center.max = d * (L2 * (L1 - 1) - L2 * d1 - (L1 - 1) * d2) / (L1 + L2 - 1);
  iv.right.min = d * (L1 - d1 - (L1 - 1) * d2 - 1);
  iv.right.max = d * (L2 - 1) / (L1 + L2 - 1) * (L1 - d1 + d2 - 1);
  return iv;
}

struct ClosedFormResult {
  Signal u;  ///< on [-L1, L2]; empty when which == none
  JumpCase which = JumpCase::none;
  double level1 = 0.0;
  double level2 = 0.0;
};

/// Two levels of the sharp denoising result for a given case.
inline std::pair<double, double> closed_form_levels(const StepSignal& s, const Blur3& b,
                                                    double lambda, JumpCase which) {
  const double d = s.height();
  const double L1 = s.L1, L2 = s.L2;
  switch (which) {
    case JumpCase::left:
      return {s.U1 + lambda / (L1 - 2),
              (s.U1 + s.U2 * L2) / (L2 + 1) + ((b.delta1 - b.delta2) * d - lambda) / (L2 + 1)};
    case JumpCase::center:
      return {s.U1 + (b.delta1 * d + lambda) / (L1 - 1), s.U2 + (-b.delta2 * d - lambda) / L2};
    case JumpCase::right:
      return {(s.U1 * (L1 - 1) + s.U2 + (b.delta1 - b.delta2) * d + lambda) / L1,
              s.U2 - lambda / (L2 - 1)};
    case JumpCase::none: break;
  }
  throw DomainError("closed_form_levels: no levels for JumpCase::none");
}

/// Two-level signal on [-L1, L2] with the upper level starting at `jump`.
inline Signal two_level_signal(const StepSignal& s, double level1, double level2, int jump) {
  Signal u{-s.L1, std::vector<double>(static_cast<std::size_t>(s.L1 + s.L2 + 1))};
  for (int x = -s.L1; x <= s.L2; ++x) u.at(x) = x < jump ? level1 : level2;
  return u;
}

/// Closed-form TV denoising of blur_step(s, b) when lambda falls in one of
/// the three intervals; otherwise which == none and u is empty.
inline ClosedFormResult closed_form_denoise(const StepSignal& s, const Blur3& b, double lambda) {
  const auto which = lambda_intervals(s, b).classify(lambda);
  ClosedFormResult res;
  res.which = which;
  if (which == JumpCase::none) return res;
  std::tie(res.level1, res.level2) = closed_form_levels(s, b, lambda, which);
  res.u = two_level_signal(s, res.level1, res.level2, jump_position(which));
  return res;
}

/// Solution of min 1/2 ||v - fx||^2 + lambda ||v||_1, elementwise shrinkage.
inline std::vector<double> soft_threshold_denoise(std::span<const double> fx, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("soft_threshold_denoise: lambda must be >= 0");
  std::vector<double> out(fx.size());
  for (std::size_t i = 0; i < fx.size(); ++i) {
    const double m = std::max(std::abs(fx[i]) - lambda, 0.0);
    out[i] = m == 0.0 ? 0.0 : std::copysign(m, fx[i]);
  }
  return out;
}

/// Forward difference f[x+1] - f[x] of blur_step(), on [-L1+1, L2-2].
inline Signal step_derivative(const StepSignal& s, const Blur3& b) {
  const Signal f = blur_step(s, b);
  Signal fx{f.first, std::vector<double>(f.size() - 1)};
  for (std::size_t i = 0; i + 1 < f.size(); ++i) fx.values[i] = f.values[i + 1] - f.values[i];
  return fx;
}

/// A single spike predicted for the filtered (derivative-domain) problem.
struct FilteredSpike {
  JumpCase which = JumpCase::none;
  int position = 0;      ///< -2, -1 or 0
  double height = 0.0;   ///< value of the derivative there
  double threshold = 0.0;  ///< smallest lambda giving this single spike
};

/// Single-spike solution of the filtered denoising problem, if lambda admits
/// one: the largest derivative sample survives shrinkage and the other two
/// vanish.
inline std::optional<FilteredSpike> filtered_spike_solution(const StepSignal& s, const Blur3& b,
                                                            double lambda) {
  s.validate();
  b.validate();
  const double d = s.height();
  const double d1 = b.delta1, d2 = b.delta2, c = b.center();
  FilteredSpike sp;
  if (d1 > std::max(d2, (1.0 - d2) / 2.0)) {
    sp = {JumpCase::left, -2, d1 * d, std::max(d2, c) * d};
  } else if (1.0 > std::max(2 * d1 + d2, 2 * d2 + d1)) {
    sp = {JumpCase::center, -1, c * d, std::max(d1, d2) * d};
  } else if (d2 > std::max(d1, (1.0 - d1) / 2.0)) {
    sp = {JumpCase::right, 0, d2 * d, std::max(d1, c) * d};
  } else {
    return std::nullopt;
  }
  if (lambda < sp.threshold || lambda >= sp.height) return std::nullopt;
  sp.height -= lambda;
  return sp;
}

/// Blur configurations for which no lambda yields a sharp result.
/// Unfiltered: the two lines of the step/blur analysis (depend on L1, L2).
/// Filtered: the three segments of the derivative-domain analysis.
inline bool degenerate_region(const Blur3& b, const StepSignal& s, bool filtered,
                              double tol = 1e-9) {
  const double d1 = b.delta1, d2 = b.delta2;
  if (filtered) {
    const double third = 1.0 / 3.0 - tol;
    return (std::abs(d2 - d1) <= tol && d1 >= third) ||
           (std::abs(d1 - (1.0 - d2) / 2.0) <= tol && d1 >= third) ||
           (std::abs(d2 - (1.0 - d1) / 2.0) <= tol && d2 >= third);
  }
  const double L1 = s.L1, L2 = s.L2;
  return std::abs(d2 - (L1 - d1 - 1.0) / (L1 + L2 - 2.0)) <= tol ||
         std::abs(d2 - (L2 - (L1 + L2 - 2.0) * d1)) <= tol;
}

}  // namespace tvbd
