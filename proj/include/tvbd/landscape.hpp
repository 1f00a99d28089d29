#pragma once

// Energy landscapes over 3-tap blurs with a fixed L1 norm.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "tvbd/alternating.hpp"
#include "tvbd/tv1d.hpp"

namespace tvbd {

struct LandscapeCell {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double energy = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;  ///< false when the inner solve did not converge
};

/// Blurs [delta1, norm - delta1 - delta2, delta2] on a triangular grid with
/// delta1 = i h, delta2 = j h, h = norm / (resolution - 1), i + j < resolution.
/// Cells are stored row-major over (j, i), skipping the infeasible half.
class SimplexGrid {
 public:
  SimplexGrid() = default;
  SimplexGrid(int resolution, double norm) : resolution_(resolution), norm_(norm) {
    if (resolution < 2) throw DomainError("SimplexGrid: resolution must be >= 2");
    if (!(norm > 0.0)) throw DomainError("SimplexGrid: norm must be positive");
    offsets_.resize(static_cast<std::size_t>(resolution) + 1, 0);
    for (int j = 0; j < resolution; ++j) offsets_[j + 1] = offsets_[j] + (resolution - j);
    cells_.resize(offsets_.back());
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i + j < resolution; ++i) {
        auto& c = cells_[index(i, j)];
        c.delta1 = i * spacing();
        c.delta2 = j * spacing();
      }
  }

  int resolution() const noexcept { return resolution_; }
  double norm() const noexcept { return norm_; }
  double spacing() const noexcept { return norm_ / (resolution_ - 1); }
  bool contains(int i, int j) const noexcept {
    return i >= 0 && j >= 0 && i + j < resolution_;
  }
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(offsets_[j] + i);
  }
  LandscapeCell& at(int i, int j) { return cells_.at(index(i, j)); }
  const LandscapeCell& at(int i, int j) const { return cells_.at(index(i, j)); }
  std::vector<LandscapeCell>& cells() noexcept { return cells_; }
  const std::vector<LandscapeCell>& cells() const noexcept { return cells_; }

  Kernel kernel(int i, int j) const {
    const auto& c = at(i, j);
    return Kernel::row({c.delta1, norm_ - c.delta1 - c.delta2, c.delta2});
  }

  /// Grid coordinates of the cell nearest to (delta1, delta2).
  std::pair<int, int> nearest(double delta1, double delta2) const {
    int i = static_cast<int>(std::lround(delta1 / spacing()));
    int j = static_cast<int>(std::lround(delta2 / spacing()));
    i = std::clamp(i, 0, resolution_ - 1);
    j = std::clamp(j, 0, resolution_ - 1 - i);
    return {i, j};
  }

  /// Strictly below every valid neighbour in the 8-neighbourhood.
  bool is_strict_local_min(int i, int j) const {
    const auto& c = at(i, j);
    if (!c.valid) return false;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        if ((di == 0 && dj == 0) || !contains(i + di, j + dj)) continue;
        const auto& n = at(i + di, j + dj);
        if (n.valid && !(c.energy < n.energy)) return false;
      }
    return true;
  }

  /// Grid coordinates of the lowest valid cell.
  std::pair<int, int> argmin() const {
    std::pair<int, int> best{-1, -1};
    double e = std::numeric_limits<double>::infinity();
    for (int j = 0; j < resolution_; ++j)
      for (int i = 0; i + j < resolution_; ++i) {
        const auto& c = at(i, j);
        if (c.valid && c.energy < e) e = c.energy, best = {i, j};
      }
    return best;
  }

 private:
  int resolution_ = 0;
  double norm_ = 1.0;
  std::vector<int> offsets_;
  std::vector<LandscapeCell> cells_;
};

struct LandscapeOptions {
  int resolution = 101;
  SolverOptions solver{20000, 1e-13, 1e-11, 20, {500, 1e-12}};
  /// Fraction of cells re-solved from a cold start as a check on warm starts.
  double recheck_fraction = 0.05;
  unsigned recheck_seed = 1;
};

struct LandscapeStats {
  int invalid_cells = 0;
  int rechecked = 0;
  double max_recheck_gap = 0.0;  ///< largest |warm - cold| energy seen
};

struct MinU {
  Image u;
  double energy = 0.0;
  bool converged = false;
};

/// min over u of 1/2 ||k o u - f||^2 + lambda TV(u) for a row kernel k.
inline MinU min_u_energy(const Signal& f, const Kernel& k, double lambda,
                         const SolverOptions& opt = {}, std::optional<Image> init = std::nullopt) {
  const Image fr = as_row(f);
  auto r = am_u_step(fr, k, lambda, opt, std::move(init));
  const double e = blind_energy(r.u, k, fr, lambda);
  return {std::move(r.u), e, r.converged};
}

/// Fills the unit-norm grid with the energy minimized over u at each blur.
/// Every row of cells is swept from the previous row's first optimizer and
/// then from its left neighbour.
inline SimplexGrid landscape_min_u(const Signal& f, double lambda, const LandscapeOptions& opt = {},
                                   LandscapeStats* stats = nullptr) {
  if (f.size() < 1) throw DimensionError("landscape_min_u: empty signal");
  SimplexGrid grid(opt.resolution, 1.0);
  LandscapeStats st;
  std::mt19937_64 rng(opt.recheck_seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::optional<Image> row_start;
  for (int j = 0; j < grid.resolution(); ++j) {
    std::optional<Image> prev = row_start;
    for (int i = 0; i + j < grid.resolution(); ++i) {
      const Kernel k = grid.kernel(i, j);
      auto r = min_u_energy(f, k, lambda, opt.solver, prev);
      if (U(rng) < opt.recheck_fraction) {
        const auto cold = min_u_energy(f, k, lambda, opt.solver);
        ++st.rechecked;
        st.max_recheck_gap = std::max(st.max_recheck_gap, std::abs(cold.energy - r.energy));
        if (cold.energy < r.energy) r = cold;
      }
      auto& c = grid.at(i, j);
      c.energy = r.energy;
      c.valid = r.converged && std::isfinite(r.energy);
      if (!c.valid) ++st.invalid_cells;
      prev = r.u;
      if (i == 0) row_start = r.u;
    }
  }
  if (stats) *stats = st;
  return grid;
}

/// Quadratic cost ||k * u1 - f||^2 with u1 the TV-denoised f, on one grid
/// per requested kernel norm.
inline std::vector<SimplexGrid> landscape_fixed_u(const Signal& f, double lambda,
                                                  const std::vector<double>& norms,
                                                  int resolution = 101) {
  if (norms.empty()) throw DomainError("landscape_fixed_u: no norms given");
  if (!(lambda >= 0.0)) throw DomainError("landscape_fixed_u: lambda must be >= 0");
  const Image u1 = as_row(taut_string_denoise(f, lambda));
  const Image fr = as_row(f);
  std::vector<SimplexGrid> out;
  for (double a : norms) {
    SimplexGrid grid(resolution, a);
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i + j < resolution; ++i) {
        auto& c = grid.at(i, j);
        c.energy = data_cost(u1, grid.kernel(i, j), fr);
        c.valid = std::isfinite(c.energy);
      }
    out.push_back(std::move(grid));
  }
  return out;
}

struct PathPoint {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double energy = 0.0;  ///< min-u energy at this blur
};

struct PathOptions {
  int max_iters = 500;
  double move_tol = 1e-8;
  SolverOptions solver{20000, 1e-13, 1e-11, 20, {500, 1e-12}};
};

/// Blurs visited by PAM from `start`: a u-step, an unconstrained kernel
/// step, a projection; repeated until the kernel moves less than move_tol.
/// The first point is the start.
inline std::vector<PathPoint> pam_path_overlay(const Signal& f, double lambda, const Blur3& start,
                                               const PathOptions& opt = {}) {
  start.validate();
  const Image fr = as_row(f);
  std::vector<PathPoint> path;
  Kernel k = start.kernel();
  std::optional<Image> warm;
  for (int it = 0;; ++it) {
    auto r = min_u_energy(f, k, lambda, opt.solver, warm);
    path.push_back(PathPoint{k(0, 0), k(2, 0), r.energy});
    if (it >= opt.max_iters) break;
    warm = r.u;
    Kernel next;
    try {
      next = pam_k_step(fr, r.u, 3, 1, opt.solver).k;
    } catch (const DegenerateKernelError&) {
      break;
    }
    const double moved = next.max_abs_diff(k);
    k = std::move(next);
    if (moved < opt.move_tol) break;
  }
  return path;
}

inline void write_landscape_csv(std::ostream& os, const std::vector<SimplexGrid>& grids) {
  os << "delta1,delta2,norm,energy\n" << std::setprecision(12);
  for (const auto& g : grids)
    for (const auto& c : g.cells()) {
      os << c.delta1 << ',' << c.delta2 << ',' << g.norm() << ',';
      if (c.valid) os << c.energy;
      else os << "nan";
      os << '\n';
    }
}

/// resolution x resolution heat map, min-max normalized over valid cells,
/// delta1 to the right and delta2 downwards; the infeasible half is black.
inline Image landscape_heatmap(const SimplexGrid& g) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : g.cells())
    if (c.valid) lo = std::min(lo, c.energy), hi = std::max(hi, c.energy);
  Image img(g.resolution(), g.resolution());
  const double span = hi > lo ? hi - lo : 1.0;
  for (int j = 0; j < g.resolution(); ++j)
    for (int i = 0; i + j < g.resolution(); ++i) {
      const auto& c = g.at(i, j);
      img(i, j) = c.valid ? (c.energy - lo) / span : 0.0;
    }
  return img;
}

}  // namespace tvbd
