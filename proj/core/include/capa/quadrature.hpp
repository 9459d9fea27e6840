#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "capa/geometry.hpp"

namespace capa {

enum class GridKind { GaussLegendre, Sobol };

/// Integration nodes (local in-plane coordinates, meters) and weights (m^2)
/// on a rectangular aperture centred at the origin.
struct QuadratureGrid {
  std::vector<Vec2> points;
  std::vector<double> weights;
  GridKind kind = GridKind::GaussLegendre;
  ApertureSpec aperture;

  std::size_t size() const { return points.size(); }
  Eigen::VectorXd weight_vector() const;
  double total_weight() const;
};

struct GaussLegendreRule {
  std::vector<double> roots;    // ascending, in (-1, 1)
  std::vector<double> weights;  // sum to 2
};

/// Order-n Gauss-Legendre rule on [-1, 1]. Exact for polynomials of degree
/// <= 2n - 1. Throws std::invalid_argument for order < 1.
GaussLegendreRule gauss_legendre_1d(int order);

/// Tensor GL grid with order^2 nodes (phi_m Lx/2, phi_n Ly/2) and weights
/// xi_m xi_n Lx Ly / 4.
QuadratureGrid gl_grid(const ApertureSpec& aperture, int order);

/// Owen-scrambled 2D Sobol points mapped onto the aperture with uniform
/// weights area/count. Deterministic in (count, seed); points are strictly
/// interior.
QuadratureGrid sobol_grid(const ApertureSpec& aperture, int count, std::uint64_t seed);

/// Raw scrambled Sobol point in [0,1)^2 for index `i`; exposed for tests.
Vec2 scrambled_sobol_point(std::uint32_t i, std::uint64_t seed);

/// Per-axis user-side GL order ceil((L_U^x / L_B^x) * bs_order).
int scaled_gl_order(const ApertureSpec& bs, const ApertureSpec& user, int bs_order);

/// sum_i w_i * values.row(i); values has one row per grid point.
Eigen::VectorXcd integrate(const QuadratureGrid& grid, const Eigen::MatrixXcd& values);

/// Weighted Gram matrix sum_i w_i a.row(i)^H b.row(i).
Eigen::MatrixXcd weighted_gram(const QuadratureGrid& grid, const Eigen::MatrixXcd& a,
                               const Eigen::MatrixXcd& b);

}  // namespace capa
