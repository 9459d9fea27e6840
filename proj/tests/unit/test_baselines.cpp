#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "capa/baselines.hpp"
#include "capa/scenario_io.hpp"
#include "oracles.hpp"

using namespace capa;

namespace {

WmmseConfig long_run() {
  WmmseConfig c;
  c.max_iters = 100000;
  return c;
}

std::size_t index_of(const FourierBasis& b, int nx, int ny) {
  const auto it = std::find(b.indices.begin(), b.indices.end(), std::make_pair(nx, ny));
  return static_cast<std::size_t>(it - b.indices.begin());
}

double rate_of(const SystemModel& sys, const std::vector<FieldSamples>& beams) {
  return sum_rate(sys, beams).sum_rate_nats;
}

}  // namespace

TEST(FourierBasis, IndexLayout) {
  const auto b = fourier_basis({1.0, 0.5}, 2, 1);
  EXPECT_EQ(b.size(), 15);
  EXPECT_EQ(b.indices.front(), std::make_pair(-2, -1));
  EXPECT_EQ(b.indices.back(), std::make_pair(2, 1));
  EXPECT_EQ(default_truncation(0.5, 0.125), 4);
  EXPECT_EQ(default_truncation(0.3, 0.125), 3);
}

TEST(FourierBasis, OrthonormalUnderQuadrature) {
  const ApertureSpec ap{0.5, 0.4};
  const auto b = fourier_basis(ap, 3, 2);
  const auto g = gl_grid(ap, 24);
  const Eigen::MatrixXcd s = b.sample(g);
  const Eigen::MatrixXcd gram = s.adjoint() * g.weight_vector().asDiagonal() * s;
  EXPECT_LT((gram - Eigen::MatrixXcd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FourierBasis, ValueIsNormalisedExponential) {
  const ApertureSpec ap{0.5, 0.25};
  const auto b = fourier_basis(ap, 2, 2);
  const Vec2 p(0.1, -0.07);
  const std::size_t n = index_of(b, 1, -2);
  const cplx expected = std::exp(cplx(0.0, 2 * oracle::kPi * (0.1 / 0.5 - 2 * -0.07 / 0.25))) / std::sqrt(ap.area());
  EXPECT_LT(std::abs(b.value(n, p) - expected), 1e-14);
}

TEST(ProjectChannel, ConstantKernelHitsOnlyZeroFrequency) {
  const ApertureSpec bs{0.5, 0.5}, user{0.125, 0.125};
  const auto bg = gl_grid(bs, 20), ug = gl_grid(user, 12);
  ChannelTable t;
  t.h = Eigen::MatrixXcd::Constant(static_cast<Eigen::Index>(ug.size()), static_cast<Eigen::Index>(bg.size()), cplx(2.0, -1.0));
  const auto bb = fourier_basis(bs, 2, 2), ub = fourier_basis(user, 1, 1);
  const auto proj = project_channel(t, ub, bb, ug, bg);
  EXPECT_FALSE(proj.under_resolved);
  const auto a0 = static_cast<Eigen::Index>(index_of(ub, 0, 0));
  const auto b0 = static_cast<Eigen::Index>(index_of(bb, 0, 0));
  const cplx expected = cplx(2.0, -1.0) * std::sqrt(bs.area() * user.area());
  for (Eigen::Index a = 0; a < proj.h.rows(); ++a) {
    for (Eigen::Index b = 0; b < proj.h.cols(); ++b) {
      const cplx want = (a == a0 && b == b0) ? expected : cplx(0.0);
      EXPECT_LT(std::abs(proj.h(a, b) - want), 1e-10) << a << "," << b;
    }
  }
}

TEST(ProjectChannel, CoarseGridFlagsUnderResolution) {
  const auto sc = sample_scenario(desk_distribution(1), 1);
  const auto bg = gl_grid(sc.bs_aperture, 4), ug = gl_grid(sc.user_aperture, 4);
  const auto t = channel_table(sc, 0, ug, bg);
  EXPECT_TRUE(project_channel(t, fourier_basis(sc.user_aperture, 1, 1),
                              fourier_basis(sc.bs_aperture, 3, 3), ug, bg).under_resolved);
}

// Truncation never adds energy and captures more of it as it grows.
TEST(ProjectChannel, ParsevalBound) {
  const auto sc = sample_scenario(desk_distribution(1), 2);
  const auto bg = gl_grid(sc.bs_aperture, 16), ug = gl_grid(sc.user_aperture, 12);
  const auto t = channel_table(sc, 0, ug, bg);
  const double total = weight_scaled(t, ug, bg).squaredNorm();
  double prev = 0.0;
  for (int n = 0; n <= 4; ++n) {
    const auto proj = project_channel(t, fourier_basis(sc.user_aperture, std::min(n, 2), std::min(n, 2)),
                                      fourier_basis(sc.bs_aperture, n, n), ug, bg);
    const double e = proj.h.squaredNorm();
    EXPECT_LE(e, total * (1 + 1e-9));
    EXPECT_GE(e, prev * (1 - 1e-12));
    prev = e;
  }
}

TEST(ReconstructBeams, SingleBasisFunction) {
  const ApertureSpec ap{0.5, 0.5};
  const auto b = fourier_basis(ap, 2, 2);
  const auto g = gl_grid(ap, 8);
  Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(b.size(), 1);
  const std::size_t n = index_of(b, -1, 2);
  coeffs(static_cast<Eigen::Index>(n), 0) = 1.0;
  const FieldSamples v = reconstruct_beams(coeffs, b, g);
  for (std::size_t p = 0; p < g.size(); ++p) {
    EXPECT_LT(std::abs(v(static_cast<Eigen::Index>(p), 0) - b.value(n, g.points[p])), 1e-15);
  }
}

TEST(ReconstructBeams, PowerEqualsCoefficientEnergy) {
  std::mt19937_64 rng(3);
  const ApertureSpec ap{0.5, 0.5};
  const auto b = fourier_basis(ap, 3, 3);
  const auto g = gl_grid(ap, 24);
  const auto coeffs = oracle::random_field(rng, b.size(), 2);
  const FieldSamples v = reconstruct_beams(coeffs, b, g);
  EXPECT_NEAR(beam_power(g, {v}), coeffs.squaredNorm(), 1e-6 * coeffs.squaredNorm());
}

TEST(ReconstructBeams, ProjectionRoundTrip) {
  std::mt19937_64 rng(4);
  const ApertureSpec ap{0.5, 0.3};
  const auto b = fourier_basis(ap, 3, 2);
  const auto g = gl_grid(ap, 24);
  const auto coeffs = oracle::random_field(rng, b.size(), 1);
  const FieldSamples v = reconstruct_beams(coeffs, b, g);
  const Eigen::MatrixXcd back = b.sample(g).adjoint() * g.weight_vector().asDiagonal() * v;
  EXPECT_LT((back - coeffs).norm(), 1e-8 * coeffs.norm());
}

TEST(MatrixWmmse, SingleUserIsDominantSingularVector) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXcd h = oracle::random_field(rng, 6, 9);
  const double budget = 10.0, s2 = 0.3;
  const auto r = matrix_wmmse({h}, s2, budget, 1, long_run());
  EXPECT_TRUE(r.converged);
  const double s1 = oracle::top_singular_value(h);
  const Eigen::VectorXcd v = r.v[0].col(0);
  EXPECT_NEAR(v.squaredNorm(), budget, 1e-6 * budget);
  EXPECT_NEAR((h * v).squaredNorm() / v.squaredNorm(), s1 * s1, 1e-6 * s1 * s1);
  EXPECT_NEAR(r.objective_trace.back(), std::log1p(budget * s1 * s1 / s2), 1e-4);
}

TEST(MatrixWmmse, MonotoneAndFeasible) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 5; ++t) {
    std::vector<Eigen::MatrixXcd> hs;
    for (int k = 0; k < 3; ++k) hs.push_back(oracle::random_field(rng, 4, 12));
    const auto r = matrix_wmmse(hs, 0.1, 5.0, 2, long_run());
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
      EXPECT_GE(r.objective_trace[i], r.objective_trace[i - 1] - 1e-9);
    }
    double p = 0.0;
    for (const auto& v : r.v) p += v.squaredNorm();
    EXPECT_NEAR(p, 5.0, 5e-6);
  }
}

// A discretised system fed to matrix WMMSE reproduces the functional solver.
TEST(MatrixWmmse, AgreesWithFunctionalSolverOnScaledChannels) {
  const auto sys = make_system(sample_scenario(desk_distribution(2), 7), 6);
  std::vector<Eigen::MatrixXcd> hs;
  for (const auto& c : sys.channels) hs.push_back(weight_scaled(c, sys.user_grid, sys.bs_grid));
  const auto m = matrix_wmmse(hs, sys.noise_var(), sys.scenario.current_budget, 1, long_run());
  const auto f = solve(sys, long_run());
  EXPECT_NEAR(m.objective_trace.back(), f.state.objective_trace.back(), 1e-6 * std::abs(f.state.objective_trace.back()));
}

TEST(FourierSolve, BudgetMetAndBelowWmmse) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto sys = make_system(sample_scenario(desk_distribution(2), 10 + s), 10);
    FourierConfig fc;
    fc.wmmse = long_run();
    const auto fr = fourier_solve(sys, fc);
    const double c_max = sys.scenario.current_budget;
    EXPECT_NEAR(beam_power(sys.bs_grid, fr.beams), c_max, 1e-6 * c_max);
    const double w = solve(sys, long_run()).report.sum_rate_nats;
    const double f = rate_of(sys, fr.beams);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, w + 1e-6);
  }
}

TEST(FourierSolve, ApproachesWmmseAsTruncationGrows) {
  const auto sys = make_system(sample_scenario(desk_distribution(2), 20), 12);
  const double w = solve(sys, long_run()).report.sum_rate_nats;
  double prev = -1.0;
  double last = 0.0;
  for (int n : {1, 2, 4}) {
    FourierConfig fc;
    fc.bs_max_x = fc.bs_max_y = n;
    fc.wmmse = long_run();
    last = rate_of(sys, fourier_solve(sys, fc).beams);
    EXPECT_GT(last, prev) << "truncation " << n;
    EXPECT_LE(last, w + 1e-6);
    prev = last;
  }
  EXPECT_GT(last, 0.98 * w);
}

TEST(SpdaArray, HalfWavelengthLayout) {
  const auto arr = spda_array({0.5, 0.5}, 0.0625);
  EXPECT_EQ(arr.count_x, 8);
  EXPECT_EQ(arr.count_y, 8);
  EXPECT_EQ(arr.size(), 64u);
  EXPECT_DOUBLE_EQ(arr.spacing, 0.0625);
  for (const auto& c : arr.centers) {
    EXPECT_LE(std::abs(c.x()) + 0.5 * arr.spacing, 0.25 + 1e-12);
    EXPECT_LE(std::abs(c.y()) + 0.5 * arr.spacing, 0.25 + 1e-12);
  }
  for (std::size_t i = 0; i < arr.size(); ++i) EXPECT_EQ(arr.element_at(arr.centers[i]), static_cast<int>(i));
  EXPECT_EQ(arr.element_at(Vec2(0.3, 0.0)), -1);
}

TEST(SpdaArray, TooSmallApertureRejected) {
  EXPECT_THROW(spda_array({0.05, 0.5}, 0.0625), std::invalid_argument);
  EXPECT_THROW(spda_array({0.5, 0.5}, 0.0), std::invalid_argument);
}

TEST(SpdaSolve, BudgetMetAndBelowWmmse) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto sys = make_system(sample_scenario(desk_distribution(2), 30 + s), 10);
    SpdaConfig sc;
    sc.wmmse = long_run();
    const auto sr = spda_solve(sys, sc);
    const double c_max = sys.scenario.current_budget;
    EXPECT_NEAR(beam_power(sys.bs_grid, sr.beams), c_max, 1e-6 * c_max);
    EXPECT_LE(rate_of(sys, sr.beams), solve(sys, long_run()).report.sum_rate_nats + 1e-6);
  }
}

// Finer element grids close the gap from below. The evaluation grid is
// refined with the elements so every patch contains nodes.
TEST(SpdaSolve, RefinementApproachesWmmseFromBelow) {
  const auto sc = sample_scenario(desk_distribution(1), 40);
  const auto sys = make_system(sc, 32);
  const double w = solve(sys, long_run()).report.sum_rate_nats;
  double prev = 0.0;
  for (double spacing : {0.0625, 0.03125, 0.015625}) {
    SpdaConfig cfg;
    cfg.spacing = spacing;
    cfg.wmmse = long_run();
    const double r = rate_of(sys, spda_solve(sys, cfg).beams);
    EXPECT_LE(r, w + 1e-6);
    EXPECT_GT(r, prev);
    prev = r;
  }
}
