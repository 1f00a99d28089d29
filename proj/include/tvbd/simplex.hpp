#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

#include "tvbd/errors.hpp"
#include "tvbd/image.hpp"

namespace tvbd {

/// Euclidean projection onto { x >= 0, sum x = z } (sort and threshold).
inline std::vector<double> project_simplex(std::span<const double> v, double z = 1.0) {
  if (v.empty()) throw DimensionError("project_simplex: empty vector");
  if (!(z > 0.0)) throw DomainError("project_simplex: radius must be positive");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cum += s[i];
    const double t = (cum - z) / static_cast<double>(i + 1);
    if (s[i] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

inline Kernel project_simplex(const Kernel& k) {
  return Kernel(k.width(), k.height(), project_simplex(k.data()));
}

/// Clamp negative taps to zero, then divide by the L1 norm. Both steps, in
/// this order, are the feasibility projection applied after an unconstrained
/// kernel update.
inline Kernel project_kernel(const Kernel& k) {
  Kernel out = k;
  for (double& v : out.data()) v = std::max(v, 0.0);
  const double s = out.sum();
  if (!(s > 1e-12)) throw DegenerateKernelError("project_kernel: no positive mass left to normalize");
  for (double& v : out.data()) v /= s;
  return out;
}

}  // namespace tvbd
