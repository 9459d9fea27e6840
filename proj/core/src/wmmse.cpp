#include "capa/wmmse.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "capa/errors.hpp"
#include "capa/linalg.hpp"

namespace capa {

void WmmseConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  if (!(bisection_tol > 0.0)) throw std::invalid_argument("bisection_tol must be > 0");
  if (!(mu_bracket_growth > 1.0)) throw std::invalid_argument("mu_bracket_growth must be > 1");
}

namespace {

Eigen::MatrixXcd block_diagonal(const std::vector<Eigen::MatrixXcd>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  Eigen::Index off = 0;
  for (const auto& b : blocks) {
    out.block(off, off, b.rows(), b.cols()) = b;
    off += b.rows();
  }
  return out;
}

void scale_to_budget(const QuadratureGrid& grid, std::vector<FieldSamples>& beams, double budget) {
  const double p = beam_power(grid, beams);
  if (p > 0.0) {
    const double s = std::sqrt(budget / p);
    for (auto& v : beams) v *= s;
  }
}

}  // namespace

WmmseState init_state(const SystemModel& system, const WmmseConfig& config) {
  config.validate();
  const std::size_t users = system.user_count();
  const Eigen::Index d = system.streams();
  const auto nb = static_cast<Eigen::Index>(system.bs_grid.size());
  const Eigen::VectorXd inv_sqrt_w = system.bs_grid.weight_vector().cwiseSqrt().cwiseInverse();

  WmmseState state;
  state.beams.reserve(users);
  if (config.init == InitKind::MatchedFilter) {
    // d leading right singular directions of each weight-scaled table, equal
    // power per user and stream.
    const double per_stream = system.scenario.current_budget / (static_cast<double>(users) * d);
    for (std::size_t k = 0; k < users; ++k) {
      const Eigen::MatrixXcd hs = weight_scaled(system.channels[k], system.user_grid, system.bs_grid);
      const bool full = d > std::min(hs.rows(), hs.cols());
      Eigen::BDCSVD<Eigen::MatrixXcd> svd(hs, full ? Eigen::ComputeFullV : Eigen::ComputeThinV);
      const Eigen::MatrixXcd dirs = svd.matrixV().leftCols(d) * std::sqrt(per_stream);
      state.beams.push_back(inv_sqrt_w.asDiagonal() * dirs);
    }
  } else {
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < users; ++k) {
      FieldSamples v(nb, d);
      for (Eigen::Index p = 0; p < nb; ++p) {
        for (Eigen::Index s = 0; s < d; ++s) v(p, s) = cplx(normal(rng), normal(rng));
      }
      state.beams.push_back(std::move(v));
    }
  }
  scale_to_budget(system.bs_grid, state.beams, system.scenario.current_budget);
  state.weights.assign(users, Eigen::MatrixXcd::Identity(d, d));
  return state;
}

CombinerUpdate update_combiners(const SystemModel& system, const std::vector<FieldSamples>& beams) {
  const std::size_t users = system.user_count();
  const double s2 = system.noise_var();
  CombinerUpdate out;
  out.fields = effective_fields(system, beams);
  const Eigen::Index d = beams.front().cols();
  const auto kd = static_cast<Eigen::Index>(users) * d;

  for (std::size_t k = 0; k < users; ++k) {
    const auto nq = out.fields[k][k].rows();
    Eigen::MatrixXcd o(nq, kd);
    for (std::size_t i = 0; i < users; ++i) o.middleCols(static_cast<Eigen::Index>(i) * d, d) = out.fields[k][i];

    // L_k = e_k/s2 - (I + G_k)^{-1} int o^H a_kk / s2^2 with G_k = int o^H o / s2,
    // evaluated as (s2 I + int o^H o)^{-1} e_k to avoid cancellation.
    Eigen::MatrixXcd gram = weighted_gram(system.user_grid, o, o);
    gram.diagonal().array() += s2;
    Eigen::MatrixXcd select = Eigen::MatrixXcd::Zero(kd, d);
    select.middleRows(static_cast<Eigen::Index>(k) * d, d).setIdentity();
    Eigen::MatrixXcd l = hermitian_solve(gram, select);
    out.z.push_back(s2 * select - s2 * s2 * l);
    out.combiners.push_back(o * l);
    out.coeffs.push_back(std::move(l));
  }
  return out;
}

std::vector<Eigen::MatrixXcd> update_weights(const SystemModel& system,
                                             const EffectiveFields& fields,
                                             const std::vector<FieldSamples>& combiners) {
  std::vector<Eigen::MatrixXcd> weights;
  weights.reserve(combiners.size());
  for (std::size_t k = 0; k < combiners.size(); ++k) {
    const Eigen::Index d = combiners[k].cols();
    const Eigen::MatrixXcd e = Eigen::MatrixXcd::Identity(d, d) -
                               weighted_gram(system.user_grid, combiners[k], fields[k][k]);
    Eigen::LLT<Eigen::MatrixXcd> llt(hermitian_part(e));
    if (llt.info() != Eigen::Success) {
      throw NumericalError("weight update: I - B_kk is not positive definite for user " +
                           std::to_string(k) + " (stream count too large?)");
    }
    weights.push_back(hermitian_part(llt.solve(Eigen::MatrixXcd::Identity(d, d))));
  }
  return weights;
}

std::vector<Eigen::MatrixXcd> update_weights(const SystemModel& system,
                                             const std::vector<FieldSamples>& beams,
                                             const std::vector<FieldSamples>& combiners) {
  return update_weights(system, effective_fields(system, beams), combiners);
}

namespace {

// Quantities of the beam update that do not depend on mu.
struct BeamProblem {
  FieldSamples basis;      // m(s) on the BS grid
  Eigen::MatrixXcd gram;   // int m^H m
  Eigen::MatrixXcd wblk;   // blockdiag(W_1, ..., W_K)
  Eigen::MatrixXcd p;      // int n m = wblk * gram
  Eigen::Index d = 0;
  std::size_t users = 0;
};

BeamProblem beam_problem(const SystemModel& system, const std::vector<FieldSamples>& combiners,
                         const std::vector<Eigen::MatrixXcd>& weights) {
  BeamProblem bp;
  bp.users = system.user_count();
  if (combiners.size() != bp.users || weights.size() != bp.users) {
    throw std::invalid_argument("beam update: one combiner and weight per user required");
  }
  bp.d = combiners.front().cols();
  const auto nb = static_cast<Eigen::Index>(system.bs_grid.size());
  const Eigen::VectorXd wu = system.user_grid.weight_vector();
  bp.basis.resize(nb, static_cast<Eigen::Index>(bp.users) * bp.d);
  for (std::size_t k = 0; k < bp.users; ++k) {
    // c_k(s_p) = sum_q w_q conj(h_k(r_q, s_p)) u_k(r_q)
    bp.basis.middleCols(static_cast<Eigen::Index>(k) * bp.d, bp.d) =
        system.channels[k].h.adjoint() * (wu.asDiagonal() * combiners[k]);
  }
  bp.gram = hermitian_part(weighted_gram(system.bs_grid, bp.basis, bp.basis));
  std::vector<Eigen::MatrixXcd> herm;
  herm.reserve(weights.size());
  for (const auto& w : weights) herm.push_back(hermitian_part(w));
  bp.wblk = block_diagonal(herm);
  bp.p = bp.wblk * bp.gram;
  return bp;
}

// F = W/mu - D with D = (1/mu^2)(I + P/mu)^{-1} P W; computed as
// (mu I + P)^{-1} W, which is the same matrix without the cancellation.
Eigen::MatrixXcd coefficients(const BeamProblem& bp, double mu) {
  Eigen::MatrixXcd a = bp.p;
  a.diagonal().array() += mu;
  return general_solve(a, bp.wblk);
}

double power_of(const BeamProblem& bp, const Eigen::MatrixXcd& f) {
  return (f.adjoint() * bp.gram * f).trace().real();
}

BeamUpdate assemble(const BeamProblem& bp, const Eigen::MatrixXcd& f, double mu) {
  BeamUpdate out;
  out.mu = mu;
  out.basis = bp.basis;
  out.power = power_of(bp, f);
  const Eigen::MatrixXcd dall = bp.wblk / mu - f;
  for (std::size_t k = 0; k < bp.users; ++k) {
    const Eigen::Index off = static_cast<Eigen::Index>(k) * bp.d;
    out.coeffs.push_back(f.middleCols(off, bp.d));
    out.d.push_back(dall.middleCols(off, bp.d));
    out.beams.push_back(bp.basis * out.coeffs.back());
  }
  return out;
}

}  // namespace

BeamUpdate beams_for_multiplier(const SystemModel& system,
                                const std::vector<FieldSamples>& combiners,
                                const std::vector<Eigen::MatrixXcd>& weights, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("multiplier must be positive");
  const BeamProblem bp = beam_problem(system, combiners, weights);
  return assemble(bp, coefficients(bp, mu), mu);
}

BeamUpdate update_beams(const SystemModel& system, const std::vector<FieldSamples>& combiners,
                        const std::vector<Eigen::MatrixXcd>& weights, const WmmseConfig& config) {
  const BeamProblem bp = beam_problem(system, combiners, weights);
  const double budget = system.scenario.current_budget;
  const auto kd = static_cast<double>(bp.p.rows());
  const double scale = std::abs(bp.p.trace().real()) / kd;

  if (!(scale > 0.0) || !std::isfinite(scale)) {
    // c_k == 0 for all k: every multiplier gives the zero beam.
    BeamUpdate out = assemble(bp, Eigen::MatrixXcd::Zero(bp.p.rows(), bp.p.cols()), 1.0);
    out.constraint_inactive = true;
    return out;
  }

  // With S = W^{1/2} G W^{1/2} = Q diag(lambda) Q^H,
  // F(mu) = W^{1/2} Q (mu + lambda)^{-1} Q^H W^{1/2} and
  // power(mu) = sum_i lambda_i (Q^H W Q)_ii / (mu + lambda_i)^2.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> weig(bp.wblk);
  const Eigen::MatrixXcd wroot = weig.eigenvectors() *
                                 weig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                 weig.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> seig(hermitian_part(wroot * bp.gram * wroot));
  const Eigen::VectorXd lambda = seig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd y = seig.eigenvectors().adjoint() * wroot;
  const Eigen::VectorXd energy = (lambda.array() * y.rowwise().squaredNorm().array()).matrix();
  auto power = [&](double mu) { return (energy.array() / (lambda.array() + mu).square()).sum(); };
  auto coeffs_at = [&](double mu) -> Eigen::MatrixXcd {
    return y.adjoint() * (lambda.array() + mu).inverse().matrix().asDiagonal() * y;
  };

  double lo = 1e-12 * scale;
  double hi = scale;
  int expansions = 0;
  while (power(hi) > budget) {
    if (++expansions > 200) {
      throw NumericalError("beam update: multiplier bracket did not close after 200 expansions");
    }
    lo = hi;
    hi *= config.mu_bracket_growth;
  }

  if (expansions == 0) {
    const double p_lo = power(lo);
    if (p_lo <= budget) {
      // Budget not binding: raise the MMSE beams to full power. Uniform
      // scaling raises every user's rate, so the ascent is kept.
      Eigen::MatrixXcd f_lo = coeffs_at(lo);
      if (p_lo > 0.0) f_lo *= std::sqrt(budget / p_lo);
      BeamUpdate out = assemble(bp, f_lo, lo);
      out.constraint_inactive = true;
      return out;
    }
  }

  // Geometric bisection; power(mu) is decreasing, keep hi on the feasible side.
  while (hi / lo - 1.0 > config.bisection_tol) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    (power(mid) > budget ? lo : hi) = mid;
  }
  return assemble(bp, coeffs_at(hi), hi);
}

WmmseResult solve(const SystemModel& system, const WmmseConfig& config) {
  config.validate();
  WmmseResult result;
  WmmseState& state = result.state;
  state = init_state(system, config);

  double previous = 0.0;  // log det I
  state.objective_trace.push_back(previous);
  for (int it = 1; it <= config.max_iters; ++it) {
    CombinerUpdate cu = update_combiners(system, state.beams);
    state.weights = update_weights(system, cu.fields, cu.combiners);
    state.combiners = std::move(cu.combiners);

    double objective = 0.0;
    for (const auto& w : state.weights) objective += log_det_hpd(w);
    state.objective_trace.push_back(objective);

    BeamUpdate bu = update_beams(system, state.combiners, state.weights, config);
    state.beams = std::move(bu.beams);
    state.mu = bu.mu;
    result.iterations = it;

    if (std::abs(objective - previous) < config.tolerance) {
      result.converged = true;
      break;
    }
    previous = objective;
  }

  CombinerUpdate final_u = update_combiners(system, state.beams);
  state.weights = update_weights(system, final_u.fields, final_u.combiners);
  state.combiners = std::move(final_u.combiners);
  result.report = rate_from_fields(final_u.fields, system.user_grid, system.noise_var());
  return result;
}

}  // namespace capa
