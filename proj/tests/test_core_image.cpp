#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tvbd/convolution.hpp"
#include "tvbd/differential.hpp"

using namespace tvbd;

namespace {

Image random_image(int w, int h, std::mt19937& rng, int channels = 1) {
  std::uniform_real_distribution<double> U(0, 1);
  Image img(w, h, channels);
  for (double& v : img.data()) v = U(rng);
  return img;
}

Kernel random_kernel(int w, int h, std::mt19937& rng, bool normalize = true) {
  std::uniform_real_distribution<double> U(0, 1);
  Kernel k(w, h);
  for (double& v : k.data()) v = U(rng);
  if (normalize) {
    const double s = k.sum();
    for (double& v : k.data()) v /= s;
  }
  return k;
}

double max_abs_diff(const Image& a, const Image& b) {
  EXPECT_TRUE(a.same_shape(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace

TEST(ConvolveValid, OutputSize) {
  const Image f = convolve_valid(Image(10, 10), Kernel::uniform(3, 3));
  EXPECT_EQ(f.width(), 8);
  EXPECT_EQ(f.height(), 8);
  const Image g = convolve_valid(Image(12, 7, 3), Kernel(5, 3));
  EXPECT_EQ(g.width(), 8);
  EXPECT_EQ(g.height(), 5);
  EXPECT_EQ(g.channels(), 3);
}

TEST(ConvolveValid, KernelLargerThanImageThrows) {
  EXPECT_THROW(convolve_valid(Image(2, 5), Kernel(3, 3)), DimensionError);
}

TEST(ConvolveValid, DeltaIsCentralCrop) {
  std::mt19937 rng(1);
  const Image u = random_image(9, 11, rng, 2);
  const Image f = convolve_valid(u, Kernel::delta(5, 3));
  EXPECT_EQ(max_abs_diff(f, crop_center(u, 5, 9)), 0.0);
}

TEST(ConvolveValid, BlurredStep) {
  // 1 x 11 step on [-5, 5]; the stored kernel [0.2, 0.5, 0.3] weighs the
  // right neighbour with 0.2 and the left one with 0.3.
  std::vector<double> s(11);
  for (int i = 0; i < 11; ++i) s[i] = i < 5 ? 0.0 : 1.0;
  const Image f = convolve_valid(Image::row(s), Kernel::row({0.2, 0.5, 0.3}));
  ASSERT_EQ(f.width(), 9);
  const std::vector<double> expect{0, 0, 0, 0.2, 0.7, 1, 1, 1, 1};
  for (int x = 0; x < 9; ++x) EXPECT_NEAR(f(x, 0), expect[x], 1e-15) << x;
  const Image ref = oracle::convolve_bruteforce(Image::row(s), Kernel::row({0.2, 0.5, 0.3}));
  EXPECT_EQ(max_abs_diff(f, ref), 0.0);
}

TEST(ConvolveValid, MatchesBruteForce) {
  std::mt19937 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Image u = random_image(7 + t % 4, 6 + t % 3, rng, 1 + t % 2 * 2);
    const Kernel k = random_kernel(1 + 2 * (t % 3), 1 + 2 * ((t / 3) % 3), rng, false);
    EXPECT_LT(max_abs_diff(convolve_valid(u, k), oracle::convolve_bruteforce(u, k)), 1e-13);
  }
}

TEST(ConvolveValid, Linearity) {
  std::mt19937 rng(3);
  const Image u = random_image(9, 9, rng), v = random_image(9, 9, rng);
  const Kernel k = random_kernel(3, 5, rng);
  const Image lhs = convolve_valid(2.5 * u - 0.7 * v, k);
  const Image rhs = 2.5 * convolve_valid(u, k) - 0.7 * convolve_valid(v, k);
  EXPECT_LT(max_abs_diff(lhs, rhs), 1e-12 * lhs.max_abs());
}

TEST(ConvolveFull, SizeAndDelta) {
  std::mt19937 rng(4);
  const Image u = random_image(8, 8, rng);
  const Image g = convolve_full(u, Kernel::delta(3, 3));
  ASSERT_EQ(g.width(), 10);
  ASSERT_EQ(g.height(), 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) {
      const bool inside = x >= 1 && x <= 8 && y >= 1 && y <= 8;
      EXPECT_EQ(g(x, y), inside ? u(x - 1, y - 1) : 0.0);
    }
}

TEST(ConvolveFull, IsAdjointOfValid) {
  std::mt19937 rng(5);
  for (int t = 0; t < 30; ++t) {
    const Image u = random_image(5, 5, rng);
    const Kernel k = random_kernel(3, 1 + 2 * (t % 2), rng, false);
    const Image ku = convolve_valid(u, k);
    const Image v = random_image(ku.width(), ku.height(), rng);
    const double lhs = dot(ku, v);
    const double rhs = dot(u, convolve_full(v, k.flipped()));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(ConvolveBoundary, ConstantIsFixedPoint) {
  std::mt19937 rng(6);
  const Kernel k = random_kernel(5, 3, rng);
  for (auto mode : {BoundaryMode::symmetric, BoundaryMode::periodic, BoundaryMode::replicate}) {
    const Image out = convolve_boundary(Image(7, 6, 1, 0.37), k, mode);
    for (double v : out.data()) EXPECT_NEAR(v, 0.37, 1e-15);
  }
  EXPECT_THROW(convolve_boundary(Image(7, 6), k, BoundaryMode::valid_free), DomainError);
}

TEST(ConvolveBoundary, ReplicateRamp) {
  const Image ramp = Image::row({0, 1, 2, 3, 4, 5});
  const Image out = convolve_boundary(ramp, Kernel::row({1. / 3, 1. / 3, 1. / 3}),
                                      BoundaryMode::replicate);
  const std::vector<double> expect{1. / 3, 1, 2, 3, 4, 14. / 3};
  for (int x = 0; x < 6; ++x) EXPECT_NEAR(out(x, 0), expect[x], 1e-14);
}

TEST(ConvolveBoundary, PeriodicIsCircular) {
  std::mt19937 rng(7);
  for (int t = 0; t < 10; ++t) {
    const Image u = random_image(6, 6, rng);
    const Kernel k = random_kernel(3, 5, rng, false);
    const Image out = convolve_boundary(u, k, BoundaryMode::periodic);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) {
        double s = 0.0;
        for (int j = 0; j < k.height(); ++j)
          for (int i = 0; i < k.width(); ++i) {
            const int sx = ((x - (i - k.width() / 2)) % 6 + 6) % 6;
            const int sy = ((y - (j - k.height() / 2)) % 6 + 6) % 6;
            s += k(i, j) * u(sx, sy);
          }
        EXPECT_NEAR(out(x, y), s, 1e-13);
      }
  }
}

TEST(ConvolveBoundary, SymmetricMirrorsEdgeSample) {
  const Image out = convolve_boundary(Image::row({1, 2, 3, 4}), Kernel::row({0, 0, 1}),
                                      BoundaryMode::symmetric);
  // Stored tap 2 reads the left neighbour; at x = 0 the mirror gives u(0).
  EXPECT_EQ(out(0, 0), 1.0);
  EXPECT_EQ(out(1, 0), 1.0);
  EXPECT_EQ(out(3, 0), 3.0);
}

TEST(BlurOperator, AdjointForEveryMode) {
  std::mt19937 rng(8);
  for (auto mode : {BoundaryMode::valid_free, BoundaryMode::symmetric, BoundaryMode::periodic,
                    BoundaryMode::replicate}) {
    const BlurOperator op{mode};
    const Kernel k = random_kernel(3, 5, rng, false);
    const Image u = random_image(8, 9, rng, 2);
    const Image ku = op.apply(u, k);
    const Image v = random_image(ku.width(), ku.height(), rng, 2);
    EXPECT_NEAR(dot(ku, v), dot(u, op.adjoint(v, k)), 1e-10) << to_string(mode);
  }
}

TEST(BlurOperator, KernelGradientIsAdjointInK) {
  std::mt19937 rng(9);
  for (auto mode : {BoundaryMode::valid_free, BoundaryMode::replicate}) {
    const BlurOperator op{mode};
    const Image u = random_image(9, 8, rng);
    const Kernel k = random_kernel(5, 3, rng, false);
    const Image r = random_image(op.apply(u, k).width(), op.apply(u, k).height(), rng);
    // <k o u, r> is linear in k, so it equals <k, grad_k>.
    const Kernel g = op.kernel_grad(u, r, k);
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k.data()[i] * g.data()[i];
    EXPECT_NEAR(s, dot(op.apply(u, k), r), 1e-10);
  }
}

TEST(Gradient, ConstantAndStep) {
  auto [gx, gy] = gradient(Image(5, 4, 1, 2.0));
  EXPECT_EQ(gx.max_abs(), 0.0);
  EXPECT_EQ(gy.max_abs(), 0.0);
  auto [sx, sy] = gradient(Image::row({0, 0, 0, 1, 1}));
  EXPECT_EQ(sx(2, 0), 1.0);
  EXPECT_EQ(sx.sum(), 1.0);
  EXPECT_EQ(sy.max_abs(), 0.0);
}

TEST(Gradient, DivergenceIsNegativeAdjoint) {
  std::mt19937 rng(10);
  for (int t = 0; t < 20; ++t) {
    const Image u = random_image(4, 4, rng);
    const Image px = random_image(4, 4, rng), py = random_image(4, 4, rng);
    auto [gx, gy] = gradient(u);
    EXPECT_NEAR(dot(gx, px) + dot(gy, py), -dot(u, divergence(px, py)), 1e-12);
  }
}

TEST(TvNorm, Basics) {
  EXPECT_EQ(tv_norm(Image(6, 6, 1, 0.4)), 0.0);
  Image step(6, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 3; x < 6; ++x) step(x, y) = 1.0;
  EXPECT_DOUBLE_EQ(tv_norm(step, TvVariant::isotropic), 5.0);
  EXPECT_DOUBLE_EQ(tv_norm(step, TvVariant::anisotropic), 5.0);
  std::mt19937 rng(11);
  for (int t = 0; t < 20; ++t) {
    const Image u = random_image(7, 7, rng);
    const double iso = tv_norm(u), aniso = tv_norm(u, TvVariant::anisotropic);
    EXPECT_GE(aniso, iso);
    EXPECT_GE(iso, aniso / std::sqrt(2.0));
  }
}

TEST(GradLpNorm, Basics) {
  std::mt19937 rng(12);
  const Image u = random_image(6, 5, rng);
  EXPECT_NEAR(grad_lp_norm(u, 1.0), tv_norm(u, TvVariant::anisotropic), 1e-12);
  EXPECT_EQ(grad_lp_norm(Image(4, 4, 1, 3.0), 2.0), 0.0);
  EXPECT_THROW(grad_lp_norm(u, 0.5), DomainError);
  auto [gx, gy] = gradient(u);
  EXPECT_EQ(grad_lp_norm(u, INFINITY), std::max(gx.max_abs(), gy.max_abs()));
}

TEST(GradLpNorm, BlurNeverIncreasesIt) {
  std::mt19937 rng(13);
  for (int t = 0; t < 200; ++t) {
    const Image u0 = random_image(8 + t % 5, 7 + t % 4, rng);
    const Kernel k0 = random_kernel(1 + 2 * (t % 3), 1 + 2 * ((t / 3) % 3), rng);
    const Image f = convolve_valid(u0, k0);
    for (double p : {1.0, 2.0}) EXPECT_LE(grad_lp_norm(f, p), grad_lp_norm(u0, p) + 1e-9);
  }
}

TEST(SmoothedTv, CurvatureIsNegativeGradient) {
  std::mt19937 rng(14);
  for (auto mode : {ColorMode::grayscale, ColorMode::coupled_color}) {
    Image u = random_image(5, 4, rng, 3);
    const double eps = 1e-2;
    const Image curv = tv_curvature(u, eps, mode);
    for (std::size_t i = 0; i < u.size(); i += 7) {
      const double h = 1e-6, old = u.data()[i];
      u.data()[i] = old + h;
      const double ep = smoothed_tv(u, eps, mode);
      u.data()[i] = old - h;
      const double em = smoothed_tv(u, eps, mode);
      u.data()[i] = old;
      EXPECT_NEAR(-curv.data()[i], (ep - em) / (2 * h), 1e-6);
    }
  }
}

TEST(BoundaryModes, ParseAndResolve) {
  EXPECT_EQ(parse_boundary_mode("free"), BoundaryMode::valid_free);
  EXPECT_EQ(parse_boundary_mode("periodic"), BoundaryMode::periodic);
  EXPECT_THROW(parse_boundary_mode("zero"), DomainError);
  EXPECT_EQ(resolve_index(-1, 5, BoundaryMode::periodic), 4);
  EXPECT_EQ(resolve_index(-1, 5, BoundaryMode::symmetric), 0);
  EXPECT_EQ(resolve_index(-2, 5, BoundaryMode::symmetric), 1);
  EXPECT_EQ(resolve_index(6, 5, BoundaryMode::symmetric), 3);
  EXPECT_EQ(resolve_index(7, 5, BoundaryMode::replicate), 4);
}

TEST(KernelType, InvariantsAndHelpers) {
  EXPECT_THROW(Kernel(2, 3), DimensionError);
  const Kernel d = Kernel::delta(3, 5);
  EXPECT_EQ(d(1, 2), 1.0);
  EXPECT_TRUE(d.is_feasible());
  EXPECT_TRUE(Kernel::uniform(5, 5).is_feasible());
  EXPECT_FALSE(Kernel::row({-0.1, 0.6, 0.5}).is_feasible());
  const Kernel k = Kernel::row({1, 2, 3});
  EXPECT_EQ(k.flipped()(0, 0), 3.0);
}
