#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "capa/geometry.hpp"
#include "capa/quadrature.hpp"

namespace capa {

using cplx = std::complex<double>;

/// Line-of-sight dyadic Green's function contracted with the receive and
/// transmit polarizations:
///   rx^T * (-j eta e^{-j 2 pi |r-s| / lambda} / (2 lambda |r-s|))
///        * (I - (r-s)(r-s)^T / |r-s|^2) * tx
/// Throws std::invalid_argument when r and s coincide.
cplx green_kernel(const Vec3& rx_pol, const Vec3& r, const Vec3& s, double wavelength,
                  double impedance);

/// Kernel for user `user_index` of `scenario` between a global point on the
/// user aperture and a global point on the BS plane.
cplx green_kernel(const ScenarioGeometry& scenario, std::size_t user_index, const Vec3& r,
                  const Vec3& s);

/// Samples of h_k(r_q, s_p): row q is a user-grid point, column p a BS-grid
/// point. Tables are the only channel representation the solvers see.
struct ChannelTable {
  Eigen::MatrixXcd h;
  std::vector<Vec3> user_points;  // global coordinates of the user grid
  std::vector<Vec3> bs_points;    // global coordinates of the BS grid

  Eigen::Index user_size() const { return h.rows(); }
  Eigen::Index bs_size() const { return h.cols(); }
};

ChannelTable channel_table(const ScenarioGeometry& scenario, std::size_t user_index,
                           const QuadratureGrid& user_grid, const QuadratureGrid& bs_grid);

/// One table per user, in user order.
std::vector<ChannelTable> channel_tables(const ScenarioGeometry& scenario,
                                         const QuadratureGrid& user_grid,
                                         const QuadratureGrid& bs_grid);

/// diag(sqrt(w_user)) * H * diag(sqrt(w_bs)). With this scaling every
/// quadrature integral becomes a plain matrix product.
Eigen::MatrixXcd weight_scaled(const ChannelTable& table, const QuadratureGrid& user_grid,
                               const QuadratureGrid& bs_grid);

}  // namespace capa
