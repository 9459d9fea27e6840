#include "capa/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace capa {

Eigen::VectorXd QuadratureGrid::weight_vector() const {
  return Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                           static_cast<Eigen::Index>(weights.size()));
}

double QuadratureGrid::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x, d0 = 0.0, d1 = 1.0;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    const double dk = d0 + (2.0 * k - 1.0) * p1;
    p0 = p1;
    p1 = pk;
    d0 = d1;
    d1 = dk;
  }
  return {p1, d1};
}

}  // namespace

GaussLegendreRule gauss_legendre_1d(int order) {
  if (order < 1) {
    throw std::invalid_argument("Gauss-Legendre order must be >= 1 (got " +
                                std::to_string(order) + ")");
  }
  const int n = order;
  GaussLegendreRule rule;
  rule.roots.resize(n);
  rule.weights.resize(n);

  // Roots are symmetric; Newton on the upper half from Tricomi's guesses.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    if (n % 2 == 1 && i == n / 2) {
      x = 0.0;
    } else {
      for (int iter = 0; iter < 100; ++iter) {
        const auto [p, dp] = legendre(n, x);
        const double dx = p / dp;
        x -= dx;
        if (std::abs(dx) <= 1e-14) break;
      }
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.roots[i] = -x;
    rule.roots[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

QuadratureGrid gl_grid(const ApertureSpec& aperture, int order) {
  aperture.validate();
  const auto rule = gauss_legendre_1d(order);
  QuadratureGrid grid;
  grid.kind = GridKind::GaussLegendre;
  grid.aperture = aperture;
  grid.points.reserve(static_cast<std::size_t>(order) * order);
  grid.weights.reserve(static_cast<std::size_t>(order) * order);
  const double scale = aperture.area() / 4.0;
  for (int m = 0; m < order; ++m) {
    for (int n = 0; n < order; ++n) {
      grid.points.emplace_back(rule.roots[m] * aperture.side_x / 2.0,
                               rule.roots[n] * aperture.side_y / 2.0);
      grid.weights.push_back(rule.weights[m] * rule.weights[n] * scale);
    }
  }
  return grid;
}

namespace {

std::uint32_t reverse_bits(std::uint32_t x) {
  x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
  x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
  x = ((x >> 4) & 0x0F0F0F0Fu) | ((x & 0x0F0F0F0Fu) << 4);
  x = ((x >> 8) & 0x00FF00FFu) | ((x & 0x00FF00FFu) << 8);
  return (x >> 16) | (x << 16);
}

// Laine-Karras style hash; applied to bit-reversed values it acts as a
// nested uniform (Owen) scramble.
std::uint32_t lk_permutation(std::uint32_t x, std::uint32_t seed) {
  x += seed;
  x ^= x * 0x6c50b47cu;
  x ^= x * 0xb82f1e52u;
  x ^= x * 0xc7afe638u;
  x ^= x * 0x8d22f6e6u;
  return x;
}

std::uint32_t nested_uniform_scramble(std::uint32_t x, std::uint32_t seed) {
  return reverse_bits(lk_permutation(reverse_bits(x), seed));
}

std::uint32_t hash_combine(std::uint32_t seed, std::uint32_t v) {
  return seed ^ (v + (seed << 6) + (seed >> 2));
}

std::uint32_t fold_seed(std::uint64_t seed) {
  // splitmix64 finaliser folded to 32 bits
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  return static_cast<std::uint32_t>(z ^ (z >> 32));
}

// Direction numbers for the first two Sobol dimensions: dimension 0 is the
// van der Corput sequence, dimension 1 uses the primitive polynomial x + 1.
const std::array<std::array<std::uint32_t, 32>, 2>& sobol_directions() {
  static const auto table = [] {
    std::array<std::array<std::uint32_t, 32>, 2> t{};
    std::uint32_t m = 1;
    for (int j = 0; j < 32; ++j) {
      t[0][j] = 1u << (31 - j);
      if (j > 0) m = (m << 1) ^ m;
      t[1][j] = m << (31 - j);
    }
    return t;
  }();
  return table;
}

std::uint32_t sobol_value(std::uint32_t index, int dim) {
  const auto& v = sobol_directions()[dim];
  std::uint32_t x = 0;
  for (int j = 0; index != 0; ++j, index >>= 1) {
    if (index & 1u) x ^= v[j];
  }
  return x;
}

}  // namespace

Vec2 scrambled_sobol_point(std::uint32_t i, std::uint64_t seed) {
  const std::uint32_t s = fold_seed(seed);
  const std::uint32_t index = nested_uniform_scramble(i, s);
  const std::uint32_t x = nested_uniform_scramble(sobol_value(index, 0), hash_combine(s, 0u));
  const std::uint32_t y = nested_uniform_scramble(sobol_value(index, 1), hash_combine(s, 1u));
  // Cell midpoints keep every point strictly inside (0, 1).
  constexpr double inv = 1.0 / 4294967296.0;
  return {(static_cast<double>(x) + 0.5) * inv, (static_cast<double>(y) + 0.5) * inv};
}

QuadratureGrid sobol_grid(const ApertureSpec& aperture, int count, std::uint64_t seed) {
  aperture.validate();
  if (count < 1) {
    throw std::invalid_argument("Sobol point count must be >= 1 (got " +
                                std::to_string(count) + ")");
  }
  QuadratureGrid grid;
  grid.kind = GridKind::Sobol;
  grid.aperture = aperture;
  grid.points.reserve(count);
  grid.weights.assign(count, aperture.area() / count);
  for (int i = 0; i < count; ++i) {
    const Vec2 u = scrambled_sobol_point(static_cast<std::uint32_t>(i), seed);
    grid.points.emplace_back((u.x() - 0.5) * aperture.side_x, (u.y() - 0.5) * aperture.side_y);
  }
  return grid;
}

int scaled_gl_order(const ApertureSpec& bs, const ApertureSpec& user, int bs_order) {
  if (bs_order < 1) throw std::invalid_argument("GL order must be >= 1");
  // Guard against ceil(2.0000000000000004) style round-up.
  const double raw = user.side_x / bs.side_x * bs_order;
  const double rounded = std::round(raw);
  const int order = std::abs(raw - rounded) < 1e-9 ? static_cast<int>(rounded)
                                                   : static_cast<int>(std::ceil(raw));
  return std::max(order, 1);
}

Eigen::VectorXcd integrate(const QuadratureGrid& grid, const Eigen::MatrixXcd& values) {
  if (static_cast<std::size_t>(values.rows()) != grid.size()) {
    throw std::invalid_argument("integrate: " + std::to_string(values.rows()) +
                                " value rows for " + std::to_string(grid.size()) +
                                " grid points");
  }
  return values.transpose() * grid.weight_vector().cast<std::complex<double>>();
}

Eigen::MatrixXcd weighted_gram(const QuadratureGrid& grid, const Eigen::MatrixXcd& a,
                               const Eigen::MatrixXcd& b) {
  if (static_cast<std::size_t>(a.rows()) != grid.size() || a.rows() != b.rows()) {
    throw std::invalid_argument("weighted_gram: row count does not match grid size");
  }
  return a.adjoint() * (grid.weight_vector().asDiagonal() * b);
}

}  // namespace capa
