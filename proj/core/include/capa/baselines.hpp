#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "capa/rate.hpp"
#include "capa/wmmse.hpp"

namespace capa {

/// Planar exponentials exp(j 2 pi (n_x x / L_x + n_y y / L_y)) / sqrt(A) with
/// |n_x| <= max_x, |n_y| <= max_y, ordered by n_x then n_y.
struct FourierBasis {
  ApertureSpec aperture;
  int max_x = 0;
  int max_y = 0;
  std::vector<std::pair<int, int>> indices;

  Eigen::Index size() const { return static_cast<Eigen::Index>(indices.size()); }
  cplx value(std::size_t n, const Vec2& point) const;
  /// grid.size() x size() matrix of basis values.
  Eigen::MatrixXcd sample(const QuadratureGrid& grid) const;
};

FourierBasis fourier_basis(const ApertureSpec& aperture, int max_x, int max_y);

/// Wavenumber-limited truncation ceil(L / lambda) on one axis.
int default_truncation(double side, double wavelength);

struct Projection {
  Eigen::MatrixXcd h;          // user coefficients x BS coefficients
  bool under_resolved = false; // a GL grid has fewer than 2 max + 2 nodes per axis
};

/// H[a, b] = sum_q sum_p w_q w_p conj(alpha_a(r_q)) h(r_q, s_p) beta_b(s_p).
Projection project_channel(const ChannelTable& table, const FourierBasis& user_basis,
                           const FourierBasis& bs_basis, const QuadratureGrid& user_grid,
                           const QuadratureGrid& bs_grid);

/// v(s_p) = beta(s_p) V.
FieldSamples reconstruct_beams(const Eigen::MatrixXcd& coeffs, const FourierBasis& basis,
                               const QuadratureGrid& grid);

/// Finite-dimensional WMMSE on y_k = H_k sum_j V_j x_j + n_k with
/// sum_k Tr(V_k^H V_k) <= budget. Follows the same stopping rule and multiplier
/// bracketing as the functional solver, but with the classic eigenvalue form
/// of the transmit update.
struct MatrixWmmseResult {
  std::vector<Eigen::MatrixXcd> v;
  std::vector<Eigen::MatrixXcd> u;
  std::vector<Eigen::MatrixXcd> w;
  std::vector<double> objective_trace;
  double mu = 0.0;
  int iterations = 0;
  bool converged = false;
};

MatrixWmmseResult matrix_wmmse(const std::vector<Eigen::MatrixXcd>& channels, double noise_var,
                               double budget, int streams, const WmmseConfig& config = {});

struct BaselineResult {
  std::vector<FieldSamples> beams;  // on the evaluation BS grid, scaled to the budget
  MatrixWmmseResult inner;
  std::vector<std::string> warnings;
};

struct FourierConfig {
  int bs_max_x = -1;  // negative selects default_truncation
  int bs_max_y = -1;
  int user_max_x = -1;
  int user_max_y = -1;
  WmmseConfig wmmse;
};

BaselineResult fourier_solve(const SystemModel& system, const FourierConfig& config = {});

/// Square patches of side `spacing` centred on a regular grid inside the
/// aperture, floor(L / spacing) per axis.
struct SpdaArray {
  ApertureSpec aperture;
  double spacing = 0.0;
  int count_x = 0;
  int count_y = 0;
  std::vector<Vec2> centers;  // local coordinates, x-major

  double patch_area() const { return spacing * spacing; }
  std::size_t size() const { return centers.size(); }
  /// Element whose patch contains `point`, or -1.
  int element_at(const Vec2& point) const;
};

SpdaArray spda_array(const ApertureSpec& aperture, double spacing);

struct SpdaConfig {
  double spacing = 0.0;  // 0 selects half a wavelength
  WmmseConfig wmmse;
};

/// Element channels sqrt(a_U) h(r_q, s_p) sqrt(a_B) at patch centres, matrix
/// WMMSE on the element currents, then a piecewise-constant embedding onto
/// the system BS grid.
BaselineResult spda_solve(const SystemModel& system, const SpdaConfig& config = {});

}  // namespace capa
