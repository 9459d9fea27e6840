#include "capa/baselines.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "capa/channel.hpp"
#include "capa/errors.hpp"
#include "capa/linalg.hpp"

namespace capa {

cplx FourierBasis::value(std::size_t n, const Vec2& point) const {
  const auto [nx, ny] = indices.at(n);
  const double phase = 2.0 * std::numbers::pi *
                       (nx * point.x() / aperture.side_x + ny * point.y() / aperture.side_y);
  return std::polar(1.0 / std::sqrt(aperture.area()), phase);
}

Eigen::MatrixXcd FourierBasis::sample(const QuadratureGrid& grid) const {
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(grid.size()), size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (std::size_t n = 0; n < indices.size(); ++n) {
      out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n)) = value(n, grid.points[p]);
    }
  }
  return out;
}

FourierBasis fourier_basis(const ApertureSpec& aperture, int max_x, int max_y) {
  aperture.validate();
  if (max_x < 0 || max_y < 0) throw std::invalid_argument("Fourier truncation must be >= 0");
  FourierBasis basis;
  basis.aperture = aperture;
  basis.max_x = max_x;
  basis.max_y = max_y;
  for (int nx = -max_x; nx <= max_x; ++nx) {
    for (int ny = -max_y; ny <= max_y; ++ny) basis.indices.emplace_back(nx, ny);
  }
  return basis;
}

int default_truncation(double side, double wavelength) {
  if (!(side > 0.0) || !(wavelength > 0.0)) {
    throw std::invalid_argument("side and wavelength must be positive");
  }
  return static_cast<int>(std::ceil(side / wavelength - 1e-12));
}

namespace {

bool gl_too_coarse(const QuadratureGrid& grid, const FourierBasis& basis) {
  if (grid.kind != GridKind::GaussLegendre) return false;
  const auto order = static_cast<int>(std::lround(std::sqrt(static_cast<double>(grid.size()))));
  return order < 2 * std::max(basis.max_x, basis.max_y) + 2;
}

void scale_to_budget(const QuadratureGrid& grid, std::vector<FieldSamples>& beams, double budget) {
  const double p = beam_power(grid, beams);
  if (p > 0.0) {
    const double s = std::sqrt(budget / p);
    for (auto& v : beams) v *= s;
  }
}

Eigen::MatrixXcd leading_right_vectors(const Eigen::MatrixXcd& h, Eigen::Index d) {
  const bool full = d > std::min(h.rows(), h.cols());
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(h, full ? Eigen::ComputeFullV : Eigen::ComputeThinV);
  return svd.matrixV().leftCols(d);
}

}  // namespace

Projection project_channel(const ChannelTable& table, const FourierBasis& user_basis,
                           const FourierBasis& bs_basis, const QuadratureGrid& user_grid,
                           const QuadratureGrid& bs_grid) {
  if (static_cast<std::size_t>(table.user_size()) != user_grid.size() ||
      static_cast<std::size_t>(table.bs_size()) != bs_grid.size()) {
    throw std::invalid_argument("project_channel: table does not match the grids");
  }
  const Eigen::MatrixXcd a = user_basis.sample(user_grid);
  const Eigen::MatrixXcd b = bs_basis.sample(bs_grid);
  Projection out;
  out.h = a.adjoint() * user_grid.weight_vector().asDiagonal() * table.h *
          bs_grid.weight_vector().asDiagonal() * b;
  out.under_resolved = gl_too_coarse(user_grid, user_basis) || gl_too_coarse(bs_grid, bs_basis);
  return out;
}

FieldSamples reconstruct_beams(const Eigen::MatrixXcd& coeffs, const FourierBasis& basis,
                               const QuadratureGrid& grid) {
  if (coeffs.rows() != basis.size()) {
    throw std::invalid_argument("reconstruct_beams: coefficient rows must equal basis size");
  }
  return basis.sample(grid) * coeffs;
}

MatrixWmmseResult matrix_wmmse(const std::vector<Eigen::MatrixXcd>& channels, double noise_var,
                               double budget, int streams, const WmmseConfig& config) {
  config.validate();
  if (channels.empty()) throw std::invalid_argument("matrix_wmmse: no users");
  if (!(noise_var > 0.0) || !(budget > 0.0) || streams < 1) {
    throw std::invalid_argument("matrix_wmmse: noise, budget and streams must be positive");
  }
  const Eigen::Index nt = channels.front().cols();
  for (const auto& h : channels) {
    if (h.cols() != nt) throw std::invalid_argument("matrix_wmmse: inconsistent transmit size");
    if (!h.allFinite()) throw std::invalid_argument("matrix_wmmse: non-finite channel");
  }
  const std::size_t users = channels.size();
  const Eigen::Index d = streams;
  const Eigen::Index kd = static_cast<Eigen::Index>(users) * d;

  MatrixWmmseResult res;
  const double per_stream = budget / static_cast<double>(kd);
  for (const auto& h : channels) res.v.push_back(leading_right_vectors(h, d) * std::sqrt(per_stream));

  double previous = 0.0;
  res.objective_trace.push_back(previous);
  for (int it = 1; it <= config.max_iters; ++it) {
    res.u.clear();
    res.w.clear();
    double objective = 0.0;
    Eigen::MatrixXcd v_all(nt, kd);
    for (std::size_t j = 0; j < users; ++j) v_all.middleCols(static_cast<Eigen::Index>(j) * d, d) = res.v[j];
    for (std::size_t k = 0; k < users; ++k) {
      // With A = H_k [V_1, ..., V_K] and M = s2 I + A^H A:
      // U_k = A M^{-1} S_k and I - U_k^H H_k V_k = s2 (M^{-1})_kk.
      const Eigen::MatrixXcd a = channels[k] * v_all;
      Eigen::MatrixXcd m = a.adjoint() * a;
      m.diagonal().array() += noise_var;
      Eigen::MatrixXcd select = Eigen::MatrixXcd::Zero(kd, d);
      select.middleRows(static_cast<Eigen::Index>(k) * d, d).setIdentity();
      const Eigen::MatrixXcd l = hermitian_solve(m, select);
      res.u.push_back(a * l);
      const Eigen::MatrixXcd e = noise_var * l.middleRows(static_cast<Eigen::Index>(k) * d, d);
      Eigen::LLT<Eigen::MatrixXcd> llt(hermitian_part(e));
      if (llt.info() != Eigen::Success) {
        throw NumericalError("matrix WMMSE weight update: I - U^H H V is not positive definite");
      }
      res.w.push_back(hermitian_part(llt.solve(Eigen::MatrixXcd::Identity(d, d))));
      objective += log_det_hpd(res.w.back());
    }
    res.objective_trace.push_back(objective);

    // Transmit update V_k = (sum_j H_j^H U_j W_j U_j^H H_j + mu I)^{-1} H_k^H U_k W_k.
    // V lies in the span of C = [H_1^H U_1, ..., H_K^H U_K]; with
    // S = W^{1/2} C^H C W^{1/2} = Q diag(lambda) Q^H and Y = Q^H W^{1/2},
    // V = C Y^H (mu + lambda)^{-1} Y.
    Eigen::MatrixXcd c(nt, kd);
    Eigen::MatrixXcd wblk = Eigen::MatrixXcd::Zero(kd, kd);
    for (std::size_t k = 0; k < users; ++k) {
      const Eigen::Index off = static_cast<Eigen::Index>(k) * d;
      c.middleCols(off, d) = channels[k].adjoint() * res.u[k];
      wblk.block(off, off, d, d) = res.w[k];
    }
    const Eigen::Index r = std::min(nt, kd);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> weig(wblk);
    const Eigen::MatrixXcd wroot = weig.eigenvectors() *
                                   weig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                   weig.eigenvectors().adjoint();
    const Eigen::MatrixXcd gram = c.adjoint() * c;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hermitian_part(wroot * gram * wroot));
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXcd y = eig.eigenvectors().adjoint() * wroot;
    const Eigen::VectorXd y_energy = (lambda.array() * y.rowwise().squaredNorm().array()).matrix();
    auto power = [&](double mu) {
      return (y_energy.array() / (lambda.array() + mu).square()).sum();
    };

    const double scale = lambda.sum() / static_cast<double>(r);
    double mu = 1.0;
    bool inactive = false;
    if (scale > 0.0 && std::isfinite(scale)) {
      double lo = 1e-12 * scale;
      double hi = scale;
      int expansions = 0;
      while (power(hi) > budget) {
        if (++expansions > 200) {
          throw NumericalError("matrix WMMSE: multiplier bracket did not close after 200 expansions");
        }
        lo = hi;
        hi *= config.mu_bracket_growth;
      }
      if (expansions == 0 && power(lo) <= budget) {
        hi = lo;
        inactive = true;
      } else {
        while (hi / lo - 1.0 > config.bisection_tol) {
          const double mid = std::sqrt(lo * hi);
          if (mid <= lo || mid >= hi) break;
          (power(mid) > budget ? lo : hi) = mid;
        }
      }
      mu = hi;
    }
    res.mu = mu;
    const Eigen::VectorXd inv = (lambda.array() + mu).inverse().matrix();
    v_all = c * (y.adjoint() * inv.asDiagonal() * y);
    if (inactive) {
      const double p = v_all.squaredNorm();
      if (p > 0.0) v_all *= std::sqrt(budget / p);
    }
    for (std::size_t k = 0; k < users; ++k) {
      res.v[k] = v_all.middleCols(static_cast<Eigen::Index>(k) * d, d);
    }
    res.iterations = it;
    if (std::abs(objective - previous) < config.tolerance) {
      res.converged = true;
      break;
    }
    previous = objective;
  }
  return res;
}

BaselineResult fourier_solve(const SystemModel& system, const FourierConfig& config) {
  const ScenarioGeometry& sc = system.scenario;
  auto pick = [&](int given, double side) {
    return given >= 0 ? given : default_truncation(side, sc.wavelength);
  };
  const FourierBasis bs_basis =
      fourier_basis(sc.bs_aperture, pick(config.bs_max_x, sc.bs_aperture.side_x),
                    pick(config.bs_max_y, sc.bs_aperture.side_y));
  const FourierBasis user_basis =
      fourier_basis(sc.user_aperture, pick(config.user_max_x, sc.user_aperture.side_x),
                    pick(config.user_max_y, sc.user_aperture.side_y));

  BaselineResult out;
  std::vector<Eigen::MatrixXcd> coeff_channels;
  bool coarse = false;
  for (const auto& table : system.channels) {
    Projection p = project_channel(table, user_basis, bs_basis, system.user_grid, system.bs_grid);
    coarse = coarse || p.under_resolved;
    coeff_channels.push_back(std::move(p.h));
  }
  if (coarse) {
    out.warnings.push_back("quadrature order below 2 * truncation + 2; projections are under-resolved");
  }
  out.inner = matrix_wmmse(coeff_channels, sc.noise_var, sc.current_budget, sc.streams,
                           config.wmmse);
  const Eigen::MatrixXcd b = bs_basis.sample(system.bs_grid);
  for (const auto& v : out.inner.v) out.beams.push_back(b * v);
  scale_to_budget(system.bs_grid, out.beams, sc.current_budget);
  return out;
}

int SpdaArray::element_at(const Vec2& point) const {
  const double x0 = -0.5 * count_x * spacing;
  const double y0 = -0.5 * count_y * spacing;
  const double fx = (point.x() - x0) / spacing;
  const double fy = (point.y() - y0) / spacing;
  if (fx < 0.0 || fy < 0.0 || fx >= count_x || fy >= count_y) return -1;
  return static_cast<int>(fx) * count_y + static_cast<int>(fy);
}

SpdaArray spda_array(const ApertureSpec& aperture, double spacing) {
  aperture.validate();
  if (!(spacing > 0.0)) throw std::invalid_argument("element spacing must be positive");
  SpdaArray arr;
  arr.aperture = aperture;
  arr.spacing = spacing;
  arr.count_x = static_cast<int>(std::floor(aperture.side_x / spacing + 1e-9));
  arr.count_y = static_cast<int>(std::floor(aperture.side_y / spacing + 1e-9));
  if (arr.count_x < 1 || arr.count_y < 1) {
    throw std::invalid_argument("aperture is smaller than one element spacing");
  }
  for (int i = 0; i < arr.count_x; ++i) {
    for (int j = 0; j < arr.count_y; ++j) {
      arr.centers.emplace_back((i + 0.5 - 0.5 * arr.count_x) * spacing,
                               (j + 0.5 - 0.5 * arr.count_y) * spacing);
    }
  }
  return arr;
}

BaselineResult spda_solve(const SystemModel& system, const SpdaConfig& config) {
  const ScenarioGeometry& sc = system.scenario;
  const double spacing = config.spacing > 0.0 ? config.spacing : 0.5 * sc.wavelength;
  const SpdaArray bs = spda_array(sc.bs_aperture, spacing);
  const SpdaArray user = spda_array(sc.user_aperture, spacing);
  const double amp = std::sqrt(user.patch_area()) * std::sqrt(bs.patch_area());

  std::vector<Eigen::MatrixXcd> element_channels;
  for (std::size_t k = 0; k < sc.user_count(); ++k) {
    Eigen::MatrixXcd h(static_cast<Eigen::Index>(user.size()), static_cast<Eigen::Index>(bs.size()));
    for (std::size_t q = 0; q < user.size(); ++q) {
      const Vec3 r = local_to_global(sc.poses[k], user.centers[q]);
      for (std::size_t p = 0; p < bs.size(); ++p) {
        const Vec3 s(bs.centers[p].x(), bs.centers[p].y(), 0.0);
        h(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) =
            amp * green_kernel(sc, k, r, s);
      }
    }
    element_channels.push_back(std::move(h));
  }

  BaselineResult out;
  out.inner = matrix_wmmse(element_channels, sc.noise_var, sc.current_budget, sc.streams,
                           config.wmmse);
  const double inv_sqrt_area = 1.0 / std::sqrt(bs.patch_area());
  const auto np = static_cast<Eigen::Index>(system.bs_grid.size());
  std::size_t uncovered = 0;
  for (const auto& x : out.inner.v) {
    FieldSamples v = FieldSamples::Zero(np, x.cols());
    for (Eigen::Index p = 0; p < np; ++p) {
      const int e = bs.element_at(system.bs_grid.points[static_cast<std::size_t>(p)]);
      if (e < 0) {
        ++uncovered;
        continue;
      }
      v.row(p) = x.row(e) * inv_sqrt_area;
    }
    out.beams.push_back(std::move(v));
  }
  if (uncovered > 0) {
    out.warnings.push_back("some grid nodes fall outside the element patches and carry no current");
  }
  scale_to_budget(system.bs_grid, out.beams, sc.current_budget);
  return out;
}

}  // namespace capa
