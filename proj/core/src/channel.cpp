#include "capa/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace capa {

cplx green_kernel(const Vec3& rx_pol, const Vec3& r, const Vec3& s, double wavelength,
                  double impedance) {
  const Vec3 diff = r - s;
  const double dist = diff.norm();
  if (!(dist > 0.0)) {
    throw std::invalid_argument("green_kernel: coincident points make the kernel singular");
  }
  const Vec3 tx = tx_polarization();
  // rx^T (I - u u^T) tx with u the unit propagation direction
  const Vec3 u = diff / dist;
  const double projection = rx_pol.dot(tx) - rx_pol.dot(u) * u.dot(tx);
  const double phase = -2.0 * std::numbers::pi * dist / wavelength;
  const cplx scalar = cplx(0.0, -impedance) * std::polar(1.0, phase) / (2.0 * wavelength * dist);
  return scalar * projection;
}

cplx green_kernel(const ScenarioGeometry& scenario, std::size_t user_index, const Vec3& r,
                  const Vec3& s) {
  if (user_index >= scenario.user_count()) {
    throw std::invalid_argument("green_kernel: user index " + std::to_string(user_index) +
                                " out of range");
  }
  return green_kernel(rx_polarization(scenario.poses[user_index]), r, s, scenario.wavelength,
                      scenario.impedance);
}

ChannelTable channel_table(const ScenarioGeometry& scenario, std::size_t user_index,
                           const QuadratureGrid& user_grid, const QuadratureGrid& bs_grid) {
  if (user_grid.size() == 0 || bs_grid.size() == 0) {
    throw std::invalid_argument("channel_table: grids must be non-empty");
  }
  if (user_index >= scenario.user_count()) {
    throw std::invalid_argument("channel_table: user index out of range");
  }
  const UserPose& pose = scenario.poses[user_index];
  const Vec3 pol = rx_polarization(pose);

  ChannelTable table;
  table.user_points.reserve(user_grid.size());
  for (const Vec2& p : user_grid.points) table.user_points.push_back(local_to_global(pose, p));
  table.bs_points.reserve(bs_grid.size());
  for (const Vec2& p : bs_grid.points) table.bs_points.emplace_back(p.x(), p.y(), 0.0);

  const auto nq = static_cast<Eigen::Index>(user_grid.size());
  const auto np = static_cast<Eigen::Index>(bs_grid.size());
  table.h.resize(nq, np);
  for (Eigen::Index p = 0; p < np; ++p) {
    for (Eigen::Index q = 0; q < nq; ++q) {
      table.h(q, p) = green_kernel(pol, table.user_points[q], table.bs_points[p],
                                   scenario.wavelength, scenario.impedance);
    }
  }
  return table;
}

std::vector<ChannelTable> channel_tables(const ScenarioGeometry& scenario,
                                         const QuadratureGrid& user_grid,
                                         const QuadratureGrid& bs_grid) {
  std::vector<ChannelTable> tables;
  tables.reserve(scenario.user_count());
  for (std::size_t k = 0; k < scenario.user_count(); ++k) {
    tables.push_back(channel_table(scenario, k, user_grid, bs_grid));
  }
  return tables;
}

Eigen::MatrixXcd weight_scaled(const ChannelTable& table, const QuadratureGrid& user_grid,
                               const QuadratureGrid& bs_grid) {
  const Eigen::VectorXd su = user_grid.weight_vector().cwiseSqrt();
  const Eigen::VectorXd sb = bs_grid.weight_vector().cwiseSqrt();
  return su.asDiagonal() * table.h * sb.asDiagonal();
}

}  // namespace capa
