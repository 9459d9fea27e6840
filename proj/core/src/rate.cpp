#include "capa/rate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "capa/errors.hpp"
#include "capa/linalg.hpp"

namespace capa {

namespace {

void require_finite(const FieldSamples& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " contains non-finite values");
}

Eigen::MatrixXcd stack_fields(const std::vector<FieldSamples>& row, std::size_t skip) {
  const Eigen::Index n = row.front().rows();
  const Eigen::Index d = row.front().cols();
  const auto count = static_cast<Eigen::Index>(row.size() - (skip < row.size() ? 1 : 0));
  Eigen::MatrixXcd out(n, count * d);
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i == skip) continue;
    out.middleCols(col, d) = row[i];
    col += d;
  }
  return out;
}

}  // namespace

double beam_power(const QuadratureGrid& grid, const std::vector<FieldSamples>& beams) {
  const Eigen::VectorXd w = grid.weight_vector();
  double p = 0.0;
  for (const auto& v : beams) {
    if (static_cast<std::size_t>(v.rows()) != grid.size()) {
      throw std::invalid_argument("beam_power: beam rows do not match grid size");
    }
    p += (w.asDiagonal() * v.cwiseAbs2()).sum();
  }
  return p;
}

double beam_power(const BeamformerSet& beams) { return beam_power(beams.grid, beams.beams); }

SystemModel make_system(const ScenarioGeometry& scenario, int bs_order, int user_order) {
  scenario.validate();
  if (user_order <= 0) {
    user_order = scaled_gl_order(scenario.bs_aperture, scenario.user_aperture, bs_order);
  }
  return make_system(scenario, gl_grid(scenario.bs_aperture, bs_order),
                     gl_grid(scenario.user_aperture, user_order));
}

SystemModel make_system(const ScenarioGeometry& scenario, QuadratureGrid bs_grid,
                        QuadratureGrid user_grid) {
  scenario.validate();
  SystemModel system;
  system.scenario = scenario;
  system.bs_grid = std::move(bs_grid);
  system.user_grid = std::move(user_grid);
  system.channels = channel_tables(system.scenario, system.user_grid, system.bs_grid);
  return system;
}

FieldSamples effective_field(const ChannelTable& channel, const FieldSamples& v,
                             const QuadratureGrid& bs_grid) {
  if (v.rows() != channel.bs_size() || static_cast<std::size_t>(v.rows()) != bs_grid.size()) {
    throw std::invalid_argument("effective_field: beam has " + std::to_string(v.rows()) +
                                " samples, channel expects " +
                                std::to_string(channel.bs_size()));
  }
  return channel.h * (bs_grid.weight_vector().asDiagonal() * v);
}

EffectiveFields effective_fields(const SystemModel& system, const std::vector<FieldSamples>& beams) {
  if (beams.size() != system.user_count()) {
    throw std::invalid_argument("effective_fields: expected " +
                                std::to_string(system.user_count()) + " beams, got " +
                                std::to_string(beams.size()));
  }
  EffectiveFields fields(system.user_count());
  for (std::size_t k = 0; k < system.user_count(); ++k) {
    fields[k].reserve(beams.size());
    for (const auto& v : beams) {
      fields[k].push_back(effective_field(system.channels[k], v, system.bs_grid));
    }
  }
  return fields;
}

RateReport rate_from_fields(const EffectiveFields& fields, const QuadratureGrid& user_grid,
                            double noise_var) {
  if (!(noise_var > 0.0)) throw std::invalid_argument("noise variance must be positive");
  const std::size_t users = fields.size();
  RateReport report;
  report.rate_nats.resize(users);
  report.rate_bits.resize(users);
  report.q.resize(users);
  const double s2 = noise_var;

  for (std::size_t k = 0; k < users; ++k) {
    const FieldSamples& akk = fields[k][k];
    require_finite(akk, "effective field");
    const Eigen::Index d = akk.cols();
    Eigen::MatrixXcd q = weighted_gram(user_grid, akk, akk) / s2;
    if (users > 1) {
      const Eigen::MatrixXcd interference = stack_fields(fields[k], k);
      require_finite(interference, "interference field");
      const Eigen::MatrixXcd cross = weighted_gram(user_grid, akk, interference);
      Eigen::MatrixXcd core = weighted_gram(user_grid, interference, interference) / s2;
      core.diagonal().array() += 1.0;
      bool jitter = false;
      const Eigen::MatrixXcd solved = hermitian_solve(core, cross.adjoint(), &jitter);
      report.jitter_applied = report.jitter_applied || jitter;
      q -= cross * solved / (s2 * s2);
    }
    q = hermitian_part(q);
    report.q[k] = q;
    const double r = log_det_hpd(Eigen::MatrixXcd::Identity(d, d) + q);
    report.rate_nats[k] = r;
    report.rate_bits[k] = r / std::numbers::ln2;
    report.sum_rate_nats += r;
  }
  report.sum_rate_bits = report.sum_rate_nats / std::numbers::ln2;
  return report;
}

RateReport sum_rate(const SystemModel& system, const std::vector<FieldSamples>& beams) {
  for (const auto& v : beams) require_finite(v, "beam");
  return rate_from_fields(effective_fields(system, beams), system.user_grid, system.noise_var());
}

RateReport sum_rate(const SystemModel& system, const BeamformerSet& beams) {
  if (beams.grid.size() != system.bs_grid.size()) {
    throw std::invalid_argument("sum_rate: beam grid does not match the system BS grid");
  }
  return sum_rate(system, beams.beams);
}

std::vector<Eigen::MatrixXcd> mse_matrices(const SystemModel& system,
                                           const std::vector<FieldSamples>& beams,
                                           const std::vector<FieldSamples>& combiners) {
  if (combiners.size() != system.user_count()) {
    throw std::invalid_argument("mse_matrices: one combiner per user required");
  }
  const EffectiveFields fields = effective_fields(system, beams);
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(system.user_count());
  for (std::size_t k = 0; k < system.user_count(); ++k) {
    const FieldSamples& u = combiners[k];
    if (u.rows() != fields[k][k].rows() || u.cols() != fields[k][k].cols()) {
      throw std::invalid_argument("mse_matrices: combiner shape mismatch");
    }
    const Eigen::Index d = u.cols();
    const Eigen::MatrixXcd bkk = weighted_gram(system.user_grid, u, fields[k][k]);
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Identity(d, d) - bkk - bkk.adjoint();
    for (std::size_t j = 0; j < system.user_count(); ++j) {
      const Eigen::MatrixXcd bkj = weighted_gram(system.user_grid, u, fields[k][j]);
      e += bkj * bkj.adjoint();
    }
    e += system.noise_var() * weighted_gram(system.user_grid, u, u);
    out.push_back(e);
  }
  return out;
}

FieldSamples apply_kernel(const LowRankKernel& kernel, const FieldSamples& f,
                          const QuadratureGrid& grid) {
  const Eigen::MatrixXcd bf = kernel.b.transpose() * (grid.weight_vector().asDiagonal() * f);
  return kernel.scale * f + kernel.a * bf;
}

FieldSamples woodbury_inverse_apply(const LowRankKernel& kernel, const FieldSamples& target,
                                    const QuadratureGrid& grid) {
  if (!(kernel.scale > 0.0)) throw std::invalid_argument("woodbury: scale must be positive");
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (kernel.a.rows() != n || kernel.b.rows() != n || target.rows() != n ||
      kernel.a.cols() != kernel.b.cols()) {
    throw std::invalid_argument("woodbury: fields must share the grid and rank");
  }
  const double c = kernel.scale;
  const FieldSamples base = target / c;
  if (kernel.a.cols() == 0) return base;

  const Eigen::VectorXd w = grid.weight_vector();
  const Eigen::MatrixXcd bt_w = kernel.b.transpose() * w.asDiagonal();
  Eigen::MatrixXcd core = bt_w * kernel.a / c;  // G
  core.diagonal().array() += 1.0;
  const Eigen::MatrixXcd phi_f = bt_w * target / c;
  return base - (kernel.a / c) * general_solve(core, phi_f);
}

}  // namespace capa
