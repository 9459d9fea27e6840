#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "capa/quadrature.hpp"
#include "oracles.hpp"

using namespace capa;

TEST(GaussLegendre, OrderOne) {
  const auto r = gauss_legendre_1d(1);
  ASSERT_EQ(r.roots.size(), 1u);
  EXPECT_NEAR(r.roots[0], 0.0, 1e-15);
  EXPECT_NEAR(r.weights[0], 2.0, 1e-15);
}

TEST(GaussLegendre, OrderTwoClosedForm) {
  const auto r = gauss_legendre_1d(2);
  EXPECT_NEAR(r.roots[0], -1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.roots[1], 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.weights[0], 1.0, 1e-15);
  EXPECT_NEAR(r.weights[1], 1.0, 1e-15);
}

TEST(GaussLegendre, OrderTenIntegratesX18) {
  const auto r = gauss_legendre_1d(10);
  double s = 0.0;
  for (int i = 0; i < 10; ++i) s += r.weights[i] * std::pow(r.roots[i], 18);
  EXPECT_NEAR(s, 2.0 / 19.0, 1e-12);
}

TEST(GaussLegendre, ZeroOrderRejected) {
  EXPECT_THROW(gauss_legendre_1d(0), std::invalid_argument);
}

TEST(GaussLegendre, AgreesWithGolubWelsch) {
  for (int n : {3, 7, 16, 40, 64}) {
    const auto r = gauss_legendre_1d(n);
    const auto gw = oracle::golub_welsch(n);
    for (int i = 0; i < n; ++i) {
      EXPECT_NEAR(r.roots[i], gw.nodes(i), 1e-13) << "n=" << n;
      EXPECT_NEAR(r.weights[i], gw.weights(i), 1e-13) << "n=" << n;
    }
  }
}

// Random polynomials of degree 2n-1 against their exact antiderivative.
TEST(GaussLegendre, RandomPolynomialExactness) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int n = 1; n <= 30; ++n) {
    const auto r = gauss_legendre_1d(n);
    std::vector<double> c(2 * n);
    for (double& x : c) x = g(rng);
    double exact = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (k % 2 == 0) exact += 2.0 * c[k] / static_cast<double>(k + 1);
      scale += std::abs(c[k]) * 2.0 / static_cast<double>(k + 1);
    }
    double q = 0.0;
    for (int i = 0; i < n; ++i) {
      double p = 0.0;
      for (std::size_t k = c.size(); k-- > 0;) p = p * r.roots[i] + c[k];
      q += r.weights[i] * p;
    }
    EXPECT_LT(std::abs(q - exact) / scale, 1e-11) << "n=" << n;
  }
}

TEST(GlGrid, PaperSizedGrid) {
  const auto g = gl_grid({2.0, 2.0}, 10);
  EXPECT_EQ(g.size(), 100u);
  EXPECT_NEAR(g.total_weight(), 4.0, 4e-10);
  EXPECT_TRUE(std::all_of(g.weights.begin(), g.weights.end(), [](double w) { return w > 0; }));
}

TEST(GlGrid, OrderOneIsCentre) {
  const auto g = gl_grid({0.3, 0.7}, 1);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_LT(g.points[0].norm(), 1e-15);
  EXPECT_NEAR(g.weights[0], 0.21, 1e-15);
}

TEST(GlGrid, TensorWeights) {
  const ApertureSpec ap{1.5, 0.5};
  const auto g = gl_grid(ap, 6);
  const auto r = gauss_legendre_1d(6);
  for (int m = 0; m < 6; ++m) {
    for (int n = 0; n < 6; ++n) {
      // Find the node and compare weight to xi_m xi_n A / 4.
      const Vec2 target(r.roots[m] * 0.75, r.roots[n] * 0.25);
      const auto it = std::find_if(g.points.begin(), g.points.end(),
                                   [&](const Vec2& p) { return (p - target).norm() < 1e-14; });
      ASSERT_NE(it, g.points.end());
      const auto idx = static_cast<std::size_t>(it - g.points.begin());
      EXPECT_NEAR(g.weights[idx], r.weights[m] * r.weights[n] * ap.area() / 4.0, 1e-15);
    }
  }
}

TEST(GlGrid, ZeroOrderRejected) {
  EXPECT_THROW(gl_grid({1, 1}, 0), std::invalid_argument);
}

TEST(Sobol, UniformWeights) {
  const auto g = sobol_grid({2.0, 2.0}, 100, 17);
  ASSERT_EQ(g.size(), 100u);
  for (double w : g.weights) EXPECT_NEAR(w, 0.04, 1e-15);
  EXPECT_NEAR(g.total_weight(), 4.0, 4e-10);
}

TEST(Sobol, DeterministicInSeed) {
  const auto a = sobol_grid({1.0, 1.0}, 64, 9);
  const auto b = sobol_grid({1.0, 1.0}, 64, 9);
  const auto c = sobol_grid({1.0, 1.0}, 64, 10);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.points[i], b.points[i]);
    differs = differs || a.points[i] != c.points[i];
  }
  EXPECT_TRUE(differs);
}

TEST(Sobol, PointsStrictlyInside) {
  const ApertureSpec ap{0.5, 0.25};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const auto& p : sobol_grid(ap, 4096, seed).points) {
      EXPECT_LT(std::abs(p.x()), 0.25);
      EXPECT_LT(std::abs(p.y()), 0.125);
    }
  }
}

TEST(Sobol, InscribedDiskArea) {
  const auto g = sobol_grid({2.0, 2.0}, 4096, 3);
  double est = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) est += g.points[i].norm() < 1.0 ? g.weights[i] : 0.0;
  EXPECT_NEAR(est, oracle::kPi, 0.01 * oracle::kPi);
}

// Star discrepancy over anchored boxes with random (non-dyadic) corners,
// averaged over scrambles.
TEST(Sobol, DiscrepancyShrinksWithCount) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> corners(400);
  for (auto& c : corners) c = Vec2(u(rng), u(rng));
  auto discrepancy = [&](const QuadratureGrid& g) {
    double worst = 0.0;
    for (const auto& c : corners) {
      std::size_t inside = 0;
      for (const auto& p : g.points) inside += (p.x() + 0.5 < c.x() && p.y() + 0.5 < c.y()) ? 1 : 0;
      const double frac = static_cast<double>(inside) / static_cast<double>(g.size());
      worst = std::max(worst, std::abs(frac - c.x() * c.y()));
    }
    return worst;
  };
  double prev = 1.0;
  for (int count : {64, 256, 1024, 4096}) {
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) mean += discrepancy(sobol_grid({1, 1}, count, seed));
    mean /= 8.0;
    EXPECT_LT(mean, prev) << "count=" << count;
    prev = mean;
  }
}

TEST(Sobol, ZeroCountRejected) {
  EXPECT_THROW(sobol_grid({1, 1}, 0, 1), std::invalid_argument);
}

TEST(ScaledOrder, FollowsApertureRatio) {
  EXPECT_EQ(scaled_gl_order({2, 2}, {0.5, 0.5}, 20), 5);
  EXPECT_EQ(scaled_gl_order({2, 2}, {0.5, 0.5}, 10), 3);
  EXPECT_EQ(scaled_gl_order({0.5, 0.5}, {0.125, 0.125}, 10), 3);
}

TEST(Integrate, OnesGiveArea) {
  const auto g = gl_grid({0.7, 1.3}, 9);
  const Eigen::MatrixXcd ones = Eigen::MatrixXcd::Ones(static_cast<Eigen::Index>(g.size()), 1);
  EXPECT_NEAR(std::abs(integrate(g, ones)(0) - 0.91), 0.0, 1e-13);
}

TEST(Integrate, OddFunctionVanishes) {
  const auto g = gl_grid({1.0, 1.0}, 8);
  Eigen::MatrixXcd f(static_cast<Eigen::Index>(g.size()), 1);
  for (std::size_t i = 0; i < g.size(); ++i) f(static_cast<Eigen::Index>(i), 0) = g.points[i].x();
  EXPECT_LT(std::abs(integrate(g, f)(0)), 1e-12);
}

TEST(Integrate, FullPeriodExponentialVanishes) {
  const double l = 0.8;
  const auto g = gl_grid({l, l}, 20);
  Eigen::MatrixXcd f(static_cast<Eigen::Index>(g.size()), 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    f(static_cast<Eigen::Index>(i), 0) = std::exp(cplx(0.0, 2.0 * oracle::kPi * g.points[i].x() / l));
  }
  EXPECT_LT(std::abs(integrate(g, f)(0)), 1e-10);
}

TEST(Integrate, LengthMismatchRejected) {
  const auto g = gl_grid({1.0, 1.0}, 3);
  EXPECT_THROW(integrate(g, Eigen::MatrixXcd::Ones(5, 1)), std::invalid_argument);
}

TEST(WeightedGram, MatchesExplicitSum) {
  std::mt19937_64 rng(6);
  const auto g = gl_grid({0.5, 0.5}, 5);
  const auto n = static_cast<Eigen::Index>(g.size());
  const auto a = oracle::random_field(rng, n, 2);
  const auto b = oracle::random_field(rng, n, 3);
  Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(2, 3);
  for (Eigen::Index i = 0; i < n; ++i) expected += g.weights[i] * a.row(i).adjoint() * b.row(i);
  EXPECT_LT((weighted_gram(g, a, b) - expected).norm(), 1e-12 * expected.norm());
}
