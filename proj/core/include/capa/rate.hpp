#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "capa/channel.hpp"
#include "capa/geometry.hpp"
#include "capa/quadrature.hpp"

namespace capa {

/// A vector-valued complex function sampled on a grid: row i holds the
/// 1 x d value at grid point i.
using FieldSamples = Eigen::MatrixXcd;

/// Per-user beamforming functions v_k sampled on the BS grid.
struct BeamformerSet {
  QuadratureGrid grid;
  std::vector<FieldSamples> beams;

  std::size_t user_count() const { return beams.size(); }
  Eigen::Index streams() const { return beams.empty() ? 0 : beams.front().cols(); }
};

/// sum_k sum_p w_p |v_k(s_p)|^2
double beam_power(const BeamformerSet& beams);
double beam_power(const QuadratureGrid& grid, const std::vector<FieldSamples>& beams);

/// Scenario together with its quadrature grids and cached channel tables.
struct SystemModel {
  ScenarioGeometry scenario;
  QuadratureGrid bs_grid;
  QuadratureGrid user_grid;  // local coordinates, shared by every user
  std::vector<ChannelTable> channels;

  std::size_t user_count() const { return scenario.user_count(); }
  int streams() const { return scenario.streams; }
  double noise_var() const { return scenario.noise_var; }
};

/// Builds GL grids of the given per-axis BS order (user order follows the
/// aperture-ratio rule unless given) and samples the channel tables.
SystemModel make_system(const ScenarioGeometry& scenario, int bs_order, int user_order = 0);
SystemModel make_system(const ScenarioGeometry& scenario, QuadratureGrid bs_grid,
                        QuadratureGrid user_grid);

/// a(r_q) = sum_p w_p h(r_q, s_p) v(s_p)
FieldSamples effective_field(const ChannelTable& channel, const FieldSamples& v,
                             const QuadratureGrid& bs_grid);

/// fields[k][j] = a_kj on user k's grid.
using EffectiveFields = std::vector<std::vector<FieldSamples>>;
EffectiveFields effective_fields(const SystemModel& system, const std::vector<FieldSamples>& beams);

struct RateReport {
  std::vector<double> rate_nats;
  std::vector<double> rate_bits;
  double sum_rate_nats = 0.0;
  double sum_rate_bits = 0.0;
  std::vector<Eigen::MatrixXcd> q;  // per-user d x d
  bool jitter_applied = false;
};

/// Achievable sum rate. Q_k is formed from quadrature Gram matrices of the
/// desired field a_kk and the stacked interference fields [a_ki]_{i != k}
/// (ascending i); the only inverse taken is of the (K-1)d x (K-1)d
/// interference correction.
RateReport rate_from_fields(const EffectiveFields& fields, const QuadratureGrid& user_grid,
                            double noise_var);
RateReport sum_rate(const SystemModel& system, const BeamformerSet& beams);
RateReport sum_rate(const SystemModel& system, const std::vector<FieldSamples>& beams);

/// E_k = I - B_kk - B_kk^H + sum_j B_kj B_kj^H + sigma^2 int u_k^H u_k with
/// B_kj = int u_k^H a_kj.
std::vector<Eigen::MatrixXcd> mse_matrices(const SystemModel& system,
                                           const std::vector<FieldSamples>& beams,
                                           const std::vector<FieldSamples>& combiners);

/// Finite-rank perturbation of a scaled identity kernel on one grid:
///   J(r1, r2) = scale * delta(r1 - r2) + a(r1) b(r2)
/// `a` holds the 1 x m row a(r_q) in row q; `b` holds the m x 1 column b(r_q)
/// transposed in row q.
struct LowRankKernel {
  double scale = 1.0;
  FieldSamples a;
  FieldSamples b;
};

/// (J f)(r) = scale f(r) + a(r) int b(r') f(r') dr'
FieldSamples apply_kernel(const LowRankKernel& kernel, const FieldSamples& f,
                          const QuadratureGrid& grid);

/// (J^{-1} f)(r) = f(r)/scale - psi(r) (I + G)^{-1} int phi(r') f(r') dr'
/// with psi = a/scale, phi = b/scale, G = int b a / scale. Throws
/// SingularKernelError when I + G cannot be inverted.
FieldSamples woodbury_inverse_apply(const LowRankKernel& kernel, const FieldSamples& target,
                                    const QuadratureGrid& grid);

}  // namespace capa
