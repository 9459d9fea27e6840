#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "capa/rate.hpp"

namespace capa {

enum class InitKind { MatchedFilter, Random };

struct WmmseConfig {
  int max_iters = 200;
  double tolerance = 1e-5;        // stop when |change of sum_k log det W_k| < tolerance
  double bisection_tol = 1e-12;   // relative width of the final multiplier bracket
  double mu_bracket_growth = 2.0;
  InitKind init = InitKind::MatchedFilter;
  std::uint64_t seed = 0;         // used by InitKind::Random

  void validate() const;
};

struct WmmseState {
  std::vector<FieldSamples> beams;        // v_k on the BS grid
  std::vector<FieldSamples> combiners;    // u_k on the user grid
  std::vector<Eigen::MatrixXcd> weights;  // W_k, d x d
  double mu = 0.0;
  std::vector<double> objective_trace;    // sum_k log det W_k per iteration
};

/// Combiner update u_k(r) = sum_i a_ki(r) L_ki, i.e. u_k = o_k L_k with
/// o_k = [a_k1, ..., a_kK]. Also returns Z_k, related by
/// L_k = e_k / sigma^2 - Z_k / sigma^4 (e_k selects block k).
struct CombinerUpdate {
  std::vector<FieldSamples> combiners;
  std::vector<Eigen::MatrixXcd> coeffs;  // L_k, Kd x d
  std::vector<Eigen::MatrixXcd> z;       // Z_k, Kd x d
  EffectiveFields fields;                // a_kj the update was computed from
};

/// Beam update v_k(s) = sum_i c_i(s) F_ki = (1/mu) c_k(s) W_k - m(s) D_k with
/// m(s) = [c_1(s), ..., c_K(s)] and c_k(s) = int h_k^H(r, s) u_k(r) dr.
struct BeamUpdate {
  std::vector<FieldSamples> beams;
  FieldSamples basis;                    // m on the BS grid, N_B x Kd
  std::vector<Eigen::MatrixXcd> coeffs;  // F_k, Kd x d
  std::vector<Eigen::MatrixXcd> d;       // D_k, Kd x d
  double mu = 0.0;
  double power = 0.0;
  bool constraint_inactive = false;      // budget not binding even at the lower bracket
};

WmmseState init_state(const SystemModel& system, const WmmseConfig& config);

CombinerUpdate update_combiners(const SystemModel& system, const std::vector<FieldSamples>& beams);

/// W_k = (I - int u_k^H a_kk)^{-1}. Throws NumericalError when I - B_kk is
/// not positive definite.
std::vector<Eigen::MatrixXcd> update_weights(const SystemModel& system,
                                             const EffectiveFields& fields,
                                             const std::vector<FieldSamples>& combiners);
std::vector<Eigen::MatrixXcd> update_weights(const SystemModel& system,
                                             const std::vector<FieldSamples>& beams,
                                             const std::vector<FieldSamples>& combiners);

/// Beam update for a fixed multiplier mu > 0.
BeamUpdate beams_for_multiplier(const SystemModel& system,
                                const std::vector<FieldSamples>& combiners,
                                const std::vector<Eigen::MatrixXcd>& weights, double mu);

/// Beam update with mu chosen by bisection so that the total power meets the
/// budget. Throws NumericalError if the upper bracket cannot be found within
/// 200 expansions.
BeamUpdate update_beams(const SystemModel& system, const std::vector<FieldSamples>& combiners,
                        const std::vector<Eigen::MatrixXcd>& weights, const WmmseConfig& config);

struct WmmseResult {
  WmmseState state;  // combiners and weights are consistent with the final beams
  RateReport report;
  int iterations = 0;
  bool converged = false;
};

WmmseResult solve(const SystemModel& system, const WmmseConfig& config = {});

}  // namespace capa
