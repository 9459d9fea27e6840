#include "capa_cli/verify.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "capa/baselines.hpp"
#include "capa/wmmse.hpp"

namespace capa::cli {

namespace {

using Clock = std::chrono::steady_clock;

// Plain restatement of the polarised free-space kernel, kept separate from
// the library implementation.
cplx reference_kernel(const Vec3& pol, const Vec3& r, const Vec3& s, double lambda, double eta) {
  const Vec3 d = r - s;
  const double dist = d.norm();
  const Vec3 u = d / dist;
  const double k0 = 2.0 * std::numbers::pi / lambda;
  const cplx g = cplx(0.0, -eta / (2.0 * lambda * dist)) * std::exp(cplx(0.0, -k0 * dist));
  const double dyad = pol.y() - pol.dot(u) * u.y();
  return g * dyad;
}

Eigen::MatrixXcd table_with(const KernelFn& kernel, const ScenarioGeometry& sc, std::size_t k,
                            const QuadratureGrid& ug, const QuadratureGrid& bg) {
  Eigen::MatrixXcd h(static_cast<Eigen::Index>(ug.size()), static_cast<Eigen::Index>(bg.size()));
  const Vec3 pol = rx_polarization(sc.poses[k]);
  for (std::size_t q = 0; q < ug.size(); ++q) {
    const Vec3 r = local_to_global(sc.poses[k], ug.points[q]);
    for (std::size_t p = 0; p < bg.size(); ++p) {
      const Vec3 s(bg.points[p].x(), bg.points[p].y(), 0.0);
      h(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) =
          kernel(pol, r, s, sc.wavelength, sc.impedance);
    }
  }
  return h;
}

double logdet_chol(const Eigen::MatrixXcd& a) {
  Eigen::LLT<Eigen::MatrixXcd> llt(0.5 * (a + a.adjoint()));
  if (llt.info() != Eigen::Success) throw std::runtime_error("oracle: matrix not positive definite");
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::log(llt.matrixLLT()(i, i).real());
  return 2.0 * s;
}

// Full-covariance rate: log det(s2 I + sum_j S_j S_j^H) - log det(s2 I + sum_{j != k} ...)
// with S_j = diag(sqrt(w_U)) H_k diag(w_B) v_j.
double brute_force_rate(const std::vector<Eigen::MatrixXcd>& tables, const QuadratureGrid& ug,
                        const QuadratureGrid& bg, const std::vector<FieldSamples>& beams,
                        double s2) {
  const Eigen::VectorXd su = ug.weight_vector().cwiseSqrt();
  const Eigen::VectorXd wb = bg.weight_vector();
  double total = 0.0;
  for (std::size_t k = 0; k < tables.size(); ++k) {
    const auto n = static_cast<Eigen::Index>(ug.size());
    Eigen::MatrixXcd all = s2 * Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd interf = all;
    for (std::size_t j = 0; j < beams.size(); ++j) {
      const Eigen::MatrixXcd sj = su.asDiagonal() * tables[k] * wb.asDiagonal() * beams[j];
      all += sj * sj.adjoint();
      if (j != k) interf += sj * sj.adjoint();
    }
    total += logdet_chol(all) - logdet_chol(interf);
  }
  return total;
}

FieldSamples random_field(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  FieldSamples f(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) f(i, j) = cplx(n(rng), n(rng));
  }
  return f;
}

struct Instance {
  ScenarioGeometry scenario;
  QuadratureGrid bs_grid;
  QuadratureGrid user_grid;
  std::vector<FieldSamples> beams;
};

Instance random_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto users = static_cast<std::size_t>(1 + rng() % 3);
  const int d = static_cast<int>(1 + rng() % 2);
  const int order = static_cast<int>(4 + rng() % 5);
  Instance in;
  in.scenario = sample_scenario(desk_distribution(users), derive_seed(seed, 1));
  in.scenario.streams = d;
  in.bs_grid = gl_grid(in.scenario.bs_aperture, order);
  in.user_grid = gl_grid(in.scenario.user_aperture, order);
  for (std::size_t k = 0; k < users; ++k) {
    in.beams.push_back(random_field(rng, static_cast<Eigen::Index>(in.bs_grid.size()), d));
  }
  const double p = beam_power(in.bs_grid, in.beams);
  for (auto& v : in.beams) v *= std::sqrt(in.scenario.current_budget / p);
  return in;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

CheckResult check(const std::string& name, const std::function<std::string(bool&)>& body) {
  CheckResult r;
  r.name = name;
  const auto t0 = Clock::now();
  try {
    bool pass = true;
    r.detail = body(pass);
    r.pass = pass;
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

std::string gl_exactness(bool& pass) {
  double worst = 0.0;
  for (int n = 1; n <= 40; ++n) {
    const GaussLegendreRule rule = gauss_legendre_1d(n);
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.roots[i], deg);
      const double exact = deg % 2 == 1 ? 0.0 : 2.0 / (deg + 1);
      worst = std::max(worst, std::abs(s - exact));
    }
  }
  pass = worst < 1e-12;
  return "max monomial error " + fmt(worst);
}

std::string kernel_reference(const KernelFn& kernel, bool& pass) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const UserPose pose{Vec3(5 * u(rng), 5 * u(rng), 25 + 5 * u(rng)), {u(rng), u(rng), u(rng)}};
    const Vec3 pol = rx_polarization(pose);
    const Vec3 r = local_to_global(pose, Vec2(0.2 * u(rng), 0.2 * u(rng)));
    const Vec3 s(u(rng), u(rng), 0.0);
    const cplx a = kernel(pol, r, s, 0.125, 120 * std::numbers::pi);
    const cplx b = reference_kernel(pol, r, s, 0.125, 120 * std::numbers::pi);
    worst = std::max(worst, std::abs(a - b) / std::abs(b));
  }
  // Straight above the origin at 200.25 wavelengths the phase factor is -j.
  const double lambda = 0.125, eta = 120 * std::numbers::pi, dist = 200.25 * lambda;
  const cplx h = kernel(Vec3::UnitY(), Vec3(0, 0, dist), Vec3::Zero(), lambda, eta);
  const double expected = -eta / (2 * lambda * dist);
  const double phase_err = std::abs(h - expected) / std::abs(expected);
  pass = worst < 1e-12 && phase_err < 1e-9;
  return "max relative error " + fmt(worst) + ", quarter-wave phase error " + fmt(phase_err);
}

std::string rate_oracle(const KernelFn& kernel, bool& pass) {
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 25; ++t) {
    const Instance in = random_instance(1000 + t);
    const auto& sc = in.scenario;
    std::vector<Eigen::MatrixXcd> test_tables, ref_tables;
    EffectiveFields fields(sc.user_count());
    for (std::size_t k = 0; k < sc.user_count(); ++k) {
      test_tables.push_back(table_with(kernel, sc, k, in.user_grid, in.bs_grid));
      ref_tables.push_back(table_with(reference_kernel, sc, k, in.user_grid, in.bs_grid));
      for (const auto& v : in.beams) {
        fields[k].push_back(test_tables[k] * (in.bs_grid.weight_vector().asDiagonal() * v));
      }
    }
    const double fast = rate_from_fields(fields, in.user_grid, sc.noise_var).sum_rate_nats;
    const double slow = brute_force_rate(ref_tables, in.user_grid, in.bs_grid, in.beams, sc.noise_var);
    worst = std::max(worst, std::abs(fast - slow) / std::abs(slow));
  }
  pass = worst < 1e-10;
  return "max relative rate mismatch " + fmt(worst);
}

std::string channel_table_agrees(const KernelFn& kernel, bool& pass) {
  const Instance in = random_instance(77);
  double worst = 0.0;
  for (std::size_t k = 0; k < in.scenario.user_count(); ++k) {
    const ChannelTable t = channel_table(in.scenario, k, in.user_grid, in.bs_grid);
    const Eigen::MatrixXcd h = table_with(kernel, in.scenario, k, in.user_grid, in.bs_grid);
    worst = std::max(worst, (t.h - h).norm() / h.norm());
  }
  pass = worst < 1e-12;
  return "relative table difference " + fmt(worst);
}

std::string woodbury_residual(bool& pass) {
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 40; ++t) {
    std::mt19937_64 rng(5000 + t);
    const int order = static_cast<int>(2 + rng() % 7);
    const auto rank = static_cast<Eigen::Index>(1 + rng() % 6);
    const QuadratureGrid g = gl_grid({0.5, 0.5}, order);
    const auto n = static_cast<Eigen::Index>(g.size());
    LowRankKernel kernel;
    kernel.scale = 0.5 + std::uniform_real_distribution<double>(0.0, 1.5)(rng);
    kernel.a = random_field(rng, n, rank);
    kernel.b = random_field(rng, n, rank);
    const FieldSamples f = random_field(rng, n, 1 + static_cast<Eigen::Index>(rng() % 2));
    const FieldSamples x = woodbury_inverse_apply(kernel, f, g);
    const FieldSamples res = apply_kernel(kernel, x, g) - f;
    const Eigen::VectorXd w = g.weight_vector();
    const double rel = std::sqrt((w.asDiagonal() * res.cwiseAbs2()).sum() /
                                 (w.asDiagonal() * f.cwiseAbs2()).sum());
    worst = std::max(worst, rel);
  }
  pass = worst < 1e-9;
  return "max weighted residual " + fmt(worst);
}

std::string wmmse_monotone(bool& pass) {
  double worst_drop = 0.0, worst_w = 0.0, worst_power = 0.0;
  int unconverged = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const SystemModel sys = make_system(sample_scenario(desk_distribution(2), s), 10);
    WmmseConfig cfg;
    cfg.max_iters = 100000;
    const WmmseResult r = solve(sys, cfg);
    const auto& tr = r.state.objective_trace;
    for (std::size_t i = 1; i < tr.size(); ++i) worst_drop = std::max(worst_drop, tr[i - 1] - tr[i]);
    unconverged += r.converged ? 0 : 1;
    const auto e = mse_matrices(sys, r.state.beams, r.state.combiners);
    for (std::size_t k = 0; k < e.size(); ++k) {
      const Eigen::MatrixXcd einv = e[k].inverse();
      worst_w = std::max(worst_w, (r.state.weights[k] - einv).norm() / einv.norm());
    }
    const double p = beam_power(sys.bs_grid, r.state.beams);
    worst_power = std::max(worst_power, std::abs(p - sys.scenario.current_budget) / sys.scenario.current_budget);
  }
  pass = worst_drop <= 1e-9 && unconverged == 0 && worst_w < 1e-6 && worst_power < 1e-6;
  return "max drop " + fmt(worst_drop) + ", unconverged " + std::to_string(unconverged) +
         ", W vs E^-1 " + fmt(worst_w) + ", power gap " + fmt(worst_power);
}

std::string single_user(bool& pass) {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const SystemModel sys = make_system(sample_scenario(desk_distribution(1), 40 + s), 10);
    const WmmseResult r = solve(sys);
    const Eigen::MatrixXcd hs = weight_scaled(sys.channels[0], sys.user_grid, sys.bs_grid);
    const double s1 = Eigen::JacobiSVD<Eigen::MatrixXcd>(hs).singularValues()(0);
    const double expected = std::log1p(sys.scenario.current_budget * s1 * s1 / sys.noise_var());
    worst = std::max(worst, std::abs(r.report.sum_rate_nats - expected) / expected);
  }
  pass = worst < 1e-3;
  return "max relative gap to the top-singular-direction rate " + fmt(worst);
}

std::string permutation(bool& pass) {
  const ScenarioGeometry sc = sample_scenario(desk_distribution(3), 11);
  const std::vector<std::size_t> perm{2, 0, 1};
  ScenarioGeometry permuted = sc;
  for (std::size_t k = 0; k < perm.size(); ++k) permuted.poses[k] = sc.poses[perm[k]];
  WmmseConfig cfg;
  cfg.max_iters = 100000;
  const WmmseResult a = solve(make_system(sc, 8), cfg);
  const WmmseResult b = solve(make_system(permuted, 8), cfg);
  const double rate_gap = std::abs(a.report.sum_rate_nats - b.report.sum_rate_nats) /
                          a.report.sum_rate_nats;
  double beam_gap = 0.0;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const auto& va = a.state.beams[perm[k]];
    beam_gap = std::max(beam_gap, (b.state.beams[k] - va).norm() / va.norm());
  }
  pass = rate_gap < 1e-8 && beam_gap < 1e-6;
  return "rate gap " + fmt(rate_gap) + ", beam gap " + fmt(beam_gap);
}

std::string baseline_power(bool& pass) {
  const SystemModel sys = make_system(sample_scenario(desk_distribution(2), 3), 10);
  const double c = sys.scenario.current_budget;
  const double pf = beam_power(sys.bs_grid, fourier_solve(sys).beams);
  const double ps = beam_power(sys.bs_grid, spda_solve(sys).beams);
  const double gap = std::max(std::abs(pf - c), std::abs(ps - c)) / c;
  pass = gap < 1e-6;
  return "max relative power gap " + fmt(gap);
}

// Continuous beams fixed independently of the grid: conjugate of the
// channel seen from each user's centre, scaled once.
std::string quadrature_convergence(bool& pass) {
  ScenarioGeometry sc = sample_scenario(desk_distribution(2), 21);
  auto beams_on = [&](const QuadratureGrid& g) {
    std::vector<FieldSamples> v;
    for (std::size_t k = 0; k < sc.user_count(); ++k) {
      FieldSamples f(static_cast<Eigen::Index>(g.size()), 1);
      for (std::size_t p = 0; p < g.size(); ++p) {
        const Vec3 s(g.points[p].x(), g.points[p].y(), 0.0);
        f(static_cast<Eigen::Index>(p), 0) = std::conj(green_kernel(sc, k, sc.poses[k].center, s));
      }
      v.push_back(f);
    }
    return v;
  };
  const QuadratureGrid fine = gl_grid(sc.bs_aperture, 60);
  const double alpha = std::sqrt(sc.current_budget / beam_power(fine, beams_on(fine)));
  std::vector<double> rates;
  for (int order : {10, 20, 40}) {
    const SystemModel sys = make_system(sc, order, order / 2);
    auto v = beams_on(sys.bs_grid);
    for (auto& f : v) f *= alpha;
    rates.push_back(sum_rate(sys, v).sum_rate_nats);
  }
  const double d2 = std::abs(rates[1] - rates[2]);
  pass = d2 < 1e-3 * rates[2];
  return "R10 " + fmt(rates[0]) + ", R20 " + fmt(rates[1]) + ", R40 " + fmt(rates[2]);
}

std::string baseline_ordering(bool& pass) {
  int violations = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const SystemModel sys = make_system(sample_scenario(desk_distribution(2), 300 + s), 10);
    WmmseConfig cfg;
    cfg.max_iters = 100000;
    FourierConfig fc;
    fc.wmmse = cfg;
    SpdaConfig sc;
    sc.wmmse = cfg;
    const double w = solve(sys, cfg).report.sum_rate_nats;
    const double f = sum_rate(sys, fourier_solve(sys, fc).beams).sum_rate_nats;
    const double p = sum_rate(sys, spda_solve(sys, sc).beams).sum_rate_nats;
    if (w < f - 1e-6 || w < p - 1e-6 || f < 0.0) ++violations;
  }
  pass = violations == 0;
  return std::to_string(violations) + " of 5 scenarios out of order";
}

std::string dataset_roundtrip(bool& pass) {
  const auto path = std::filesystem::temp_directory_path() / "capa_verify_dataset.jsonl";
  const DatasetFile written = generate_dataset(desk_distribution(2), 3, 4, 8, 99, path);
  const DatasetFile read = read_dataset(path);
  std::filesystem::remove(path);
  bool same = read.records.size() == written.records.size();
  for (std::size_t t = 0; same && t < read.records.size(); ++t) {
    same = read.records[t].po == written.records[t].po && read.records[t].seed == written.records[t].seed;
    for (std::size_t i = 0; same && i < read.records[t].sobol.size(); ++i) {
      same = read.records[t].sobol[i] == written.records[t].sobol[i];
    }
  }
  pass = same;
  return same ? "bit-exact" : "mismatch after re-reading";
}

}  // namespace

VerifyLevel parse_verify_level(const std::string& name) {
  if (name == "fast") return VerifyLevel::Fast;
  if (name == "full") return VerifyLevel::Full;
  throw std::invalid_argument("unknown verify level '" + name + "' (expected fast or full)");
}

KernelFn production_kernel() {
  return [](const Vec3& pol, const Vec3& r, const Vec3& s, double lambda, double eta) {
    return green_kernel(pol, r, s, lambda, eta);
  };
}

std::vector<CheckResult> run_verify(VerifyLevel level, const KernelFn& kernel) {
  std::vector<CheckResult> out;
  out.push_back(check("gl_exactness", gl_exactness));
  out.push_back(check("kernel_reference", [&](bool& p) { return kernel_reference(kernel, p); }));
  out.push_back(check("channel_table_agrees", [&](bool& p) { return channel_table_agrees(kernel, p); }));
  out.push_back(check("rate_oracle", [&](bool& p) { return rate_oracle(kernel, p); }));
  out.push_back(check("woodbury_residual", woodbury_residual));
  out.push_back(check("single_user_oracle", single_user));
  out.push_back(check("baseline_power", baseline_power));
  out.push_back(check("wmmse_monotone", wmmse_monotone));
  out.push_back(check("permutation", permutation));
  out.push_back(check("dataset_roundtrip", dataset_roundtrip));
  if (level == VerifyLevel::Full) {
    out.push_back(check("quadrature_convergence", quadrature_convergence));
    out.push_back(check("baseline_ordering", baseline_ordering));
  }
  return out;
}

json verify_report(VerifyLevel level, const std::vector<CheckResult>& checks) {
  json list = json::array();
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.pass;
    list.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}, {"seconds", c.seconds}});
  }
  return {{"level", level == VerifyLevel::Fast ? "fast" : "full"}, {"pass", all}, {"checks", list}};
}

}  // namespace capa::cli
