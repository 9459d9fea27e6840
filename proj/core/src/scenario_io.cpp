#include "capa/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace capa {

namespace {

json complex_pair(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("complex value must be [re, im]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected a pair [x, y]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a triple [x, y, z]");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

ApertureSpec aperture_from(const json& j) {
  const Vec2 v = vec2_from(j);
  return {v.x(), v.y()};
}

void read_range(const json& j, const char* key, double& lo, double& hi) {
  if (!j.contains(key)) return;
  const Vec2 v = vec2_from(j.at(key));
  lo = v.x();
  hi = v.y();
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

ScenarioDistribution distribution_from_json(const json& j, const ScenarioDistribution& defaults) {
  ScenarioDistribution d = defaults;
  d.users = j.value("users", d.users);
  read_range(j, "x", d.x_min, d.x_max);
  read_range(j, "y", d.y_min, d.y_max);
  read_range(j, "z", d.z_min, d.z_max);
  read_range(j, "angle", d.angle_min, d.angle_max);
  d.validate();
  return d;
}

json distribution_to_json(const ScenarioDistribution& d) {
  return {{"users", d.users},
          {"x", {d.x_min, d.x_max}},
          {"y", {d.y_min, d.y_max}},
          {"z", {d.z_min, d.z_max}},
          {"angle", {d.angle_min, d.angle_max}}};
}

const char* grid_kind_name(GridKind k) {
  return k == GridKind::GaussLegendre ? "gauss_legendre" : "sobol";
}

}  // namespace

void ScenarioDistribution::validate() const {
  if (users < 1) throw std::invalid_argument("distribution needs at least one user");
  if (!(x_min <= x_max) || !(y_min <= y_max) || !(z_min <= z_max) || !(angle_min <= angle_max)) {
    throw std::invalid_argument("distribution ranges must satisfy min <= max");
  }
}

ScenarioGeometry default_scenario() {
  ScenarioGeometry s;
  s.bs_aperture = {2.0, 2.0};
  s.user_aperture = {0.5, 0.5};
  s.wavelength = 0.125;
  s.impedance = 120.0 * std::numbers::pi;
  s.noise_var = 5.6e-3;
  s.current_budget = 1000.0;
  s.streams = 1;
  s.poses = {UserPose{Vec3(-3.0, 1.0, 22.0), {0.3, -0.2, 0.5}},
             UserPose{Vec3(0.5, -2.0, 25.0), {-0.4, 0.1, -0.7}},
             UserPose{Vec3(3.5, 2.5, 28.0), {0.2, 0.6, 1.1}}};
  return s;
}

ScenarioDistribution default_distribution() {
  ScenarioDistribution d;
  d.base = default_scenario();
  return d;
}

ScenarioDistribution desk_distribution(std::size_t users) {
  ScenarioDistribution d = default_distribution();
  d.users = users;
  d.base.bs_aperture = {0.5, 0.5};
  d.base.user_aperture = {0.125, 0.125};
  d.base.streams = 1;
  return d;
}

int dof_streams(const ScenarioGeometry& scenario) {
  auto dof = [&](const ApertureSpec& a) {
    const auto nx = static_cast<int>(std::ceil(a.side_x / scenario.wavelength - 1e-12));
    const auto ny = static_cast<int>(std::ceil(a.side_y / scenario.wavelength - 1e-12));
    return (2 * nx + 1) * (2 * ny + 1);
  };
  return std::min(dof(scenario.bs_aperture), dof(scenario.user_aperture));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed ^ (index * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Eigen::MatrixXd sample_geometry(const ScenarioDistribution& dist, std::uint64_t seed) {
  dist.validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  Eigen::MatrixXd po(static_cast<Eigen::Index>(dist.users), 6);
  for (Eigen::Index k = 0; k < po.rows(); ++k) {
    po(k, 0) = uniform(dist.x_min, dist.x_max);
    po(k, 1) = uniform(dist.y_min, dist.y_max);
    po(k, 2) = uniform(dist.z_min, dist.z_max);
    for (int a = 3; a < 6; ++a) po(k, a) = uniform(dist.angle_min, dist.angle_max);
  }
  return po;
}

std::vector<UserPose> poses_from_geometry(const Eigen::MatrixXd& po) {
  if (po.cols() != 6) throw std::invalid_argument("geometry matrix must have 6 columns");
  std::vector<UserPose> poses;
  for (Eigen::Index k = 0; k < po.rows(); ++k) {
    poses.push_back({Vec3(po(k, 0), po(k, 1), po(k, 2)), {po(k, 3), po(k, 4), po(k, 5)}});
  }
  return poses;
}

Eigen::MatrixXd geometry_from_poses(const std::vector<UserPose>& poses) {
  Eigen::MatrixXd po(static_cast<Eigen::Index>(poses.size()), 6);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    const auto& p = poses[k];
    po.row(static_cast<Eigen::Index>(k)) << p.center.x(), p.center.y(), p.center.z(), p.angles.x,
        p.angles.y, p.angles.z;
  }
  return po;
}

ScenarioGeometry sample_scenario(const ScenarioDistribution& dist, std::uint64_t seed) {
  ScenarioGeometry s = dist.base;
  s.poses = poses_from_geometry(sample_geometry(dist, seed));
  return s;
}

json scenario_to_json(const ScenarioGeometry& s) {
  json users = json::array();
  for (const auto& p : s.poses) {
    users.push_back({{"center", {p.center.x(), p.center.y(), p.center.z()}},
                     {"angles", {p.angles.x, p.angles.y, p.angles.z}}});
  }
  return {{"bs_aperture", {s.bs_aperture.side_x, s.bs_aperture.side_y}},
          {"user_aperture", {s.user_aperture.side_x, s.user_aperture.side_y}},
          {"wavelength", s.wavelength},
          {"impedance", s.impedance},
          {"noise_var", s.noise_var},
          {"current_budget", s.current_budget},
          {"streams", s.streams},
          {"users", users}};
}

ScenarioGeometry scenario_from_json(const json& j, const ScenarioGeometry& defaults) {
  return guarded("scenario", [&] {
    if (!j.is_object()) throw std::invalid_argument("scenario must be an object");
    ScenarioGeometry s = defaults;
    if (j.contains("bs_aperture")) s.bs_aperture = aperture_from(j.at("bs_aperture"));
    if (j.contains("user_aperture")) s.user_aperture = aperture_from(j.at("user_aperture"));
    if (j.contains("frequency")) s.wavelength = 2.998e8 / j.at("frequency").get<double>();
    s.wavelength = j.value("wavelength", s.wavelength);
    s.impedance = j.value("impedance", s.impedance);
    s.noise_var = j.value("noise_var", s.noise_var);
    s.current_budget = j.value("current_budget", s.current_budget);
    if (j.contains("users")) {
      s.poses.clear();
      for (const auto& u : j.at("users")) {
        UserPose p;
        p.center = vec3_from(u.at("center"));
        if (u.contains("angles")) {
          const Vec3 a = vec3_from(u.at("angles"));
          p.angles = {a.x(), a.y(), a.z()};
        }
        s.poses.push_back(p);
      }
    }
    if (j.contains("streams")) {
      const json& d = j.at("streams");
      s.streams = d.is_string() && d.get<std::string>() == "auto" ? dof_streams(s) : d.get<int>();
    }
    s.validate();
    return s;
  });
}

json grid_to_json(const QuadratureGrid& grid) {
  json points = json::array();
  for (const auto& p : grid.points) points.push_back(vec2_json(p));
  return {{"kind", grid_kind_name(grid.kind)},
          {"aperture", {grid.aperture.side_x, grid.aperture.side_y}},
          {"points", points},
          {"weights", grid.weights}};
}

QuadratureGrid grid_from_json(const json& j) {
  return guarded("grid", [&] {
    QuadratureGrid g;
    const std::string kind = j.value("kind", std::string("gauss_legendre"));
    if (kind == "gauss_legendre") {
      g.kind = GridKind::GaussLegendre;
    } else if (kind == "sobol") {
      g.kind = GridKind::Sobol;
    } else {
      throw std::invalid_argument("unknown grid kind '" + kind + "'");
    }
    g.aperture = aperture_from(j.at("aperture"));
    for (const auto& p : j.at("points")) g.points.push_back(vec2_from(p));
    g.weights = j.at("weights").get<std::vector<double>>();
    if (g.points.size() != g.weights.size() || g.points.empty()) {
      throw std::invalid_argument("grid needs matching, non-empty points and weights");
    }
    return g;
  });
}

DatasetRecord make_record(const DatasetHeader& header, std::size_t id) {
  DatasetRecord r;
  r.id = id;
  r.seed = derive_seed(header.seed, id);
  r.po = sample_geometry(header.distribution, r.seed);
  r.sobol = sobol_grid(header.scenario.bs_aperture, header.sobol_count, r.seed).points;
  return r;
}

namespace {

json header_to_json(const DatasetHeader& h, const QuadratureGrid& gl) {
  return {{"schema", h.schema},
          {"scenario", scenario_to_json(h.scenario)},
          {"distribution", distribution_to_json(h.distribution)},
          {"gl_order", h.gl_order},
          {"gl_grid", grid_to_json(gl)},
          {"sobol_count", h.sobol_count},
          {"seed", h.seed},
          {"n_samples", h.n_samples}};
}

json record_to_json(const DatasetRecord& r) {
  json po = json::array();
  for (Eigen::Index k = 0; k < r.po.rows(); ++k) {
    json row = json::array();
    for (Eigen::Index c = 0; c < 6; ++c) row.push_back(r.po(k, c));
    po.push_back(row);
  }
  json sobol = json::array();
  for (const auto& p : r.sobol) sobol.push_back(vec2_json(p));
  return {{"id", r.id}, {"Po", po}, {"sobol", sobol}, {"seed", r.seed}};
}

DatasetRecord record_from_json(const json& j) {
  DatasetRecord r;
  r.id = j.at("id").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  const json& po = j.at("Po");
  r.po.resize(static_cast<Eigen::Index>(po.size()), 6);
  for (std::size_t k = 0; k < po.size(); ++k) {
    if (po[k].size() != 6) throw std::invalid_argument("Po rows must have 6 entries");
    for (std::size_t c = 0; c < 6; ++c) {
      r.po(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = po[k][c].get<double>();
    }
  }
  for (const auto& p : j.at("sobol")) r.sobol.push_back(vec2_from(p));
  return r;
}

}  // namespace

DatasetFile generate_dataset(const ScenarioDistribution& dist, std::size_t n_samples, int gl_order,
                             int sobol_count, std::uint64_t seed,
                             const std::filesystem::path& path) {
  if (n_samples < 1) throw std::invalid_argument("dataset needs at least one sample");
  if (sobol_count < 1) throw std::invalid_argument("sobol_count must be >= 1");
  dist.validate();
  DatasetFile file;
  file.header.scenario = dist.base;
  file.header.distribution = dist;
  file.header.gl_order = gl_order;
  file.header.sobol_count = sobol_count;
  file.header.seed = seed;
  file.header.n_samples = n_samples;
  file.gl = gl_grid(dist.base.bs_aperture, gl_order);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open dataset for writing: " + path.string());
  out << header_to_json(file.header, file.gl).dump() << '\n';
  file.records.reserve(n_samples);
  for (std::size_t t = 0; t < n_samples; ++t) {
    file.records.push_back(make_record(file.header, t));
    out << record_to_json(file.records.back()).dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed for dataset: " + path.string());
  return file;
}

DatasetFile read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
  DatasetFile file;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty dataset: " + path.string());
  guarded("dataset header", [&] {
    const json h = json::parse(line);
    if (h.at("schema").get<int>() != 1) throw std::invalid_argument("unsupported dataset schema");
    file.header.scenario = scenario_from_json(h.at("scenario"), default_scenario());
    ScenarioDistribution dist;
    dist.base = file.header.scenario;
    file.header.distribution = distribution_from_json(h.at("distribution"), dist);
    file.header.gl_order = h.at("gl_order").get<int>();
    file.header.sobol_count = h.at("sobol_count").get<int>();
    file.header.seed = h.at("seed").get<std::uint64_t>();
    file.header.n_samples = h.at("n_samples").get<std::size_t>();
    file.gl = grid_from_json(h.at("gl_grid"));
    return 0;
  });
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    file.records.push_back(guarded("dataset record", [&] { return record_from_json(json::parse(line)); }));
  }
  if (file.records.size() != file.header.n_samples) {
    throw std::invalid_argument("dataset " + path.string() + " declares " +
                                std::to_string(file.header.n_samples) + " records but holds " +
                                std::to_string(file.records.size()));
  }
  return file;
}

json beams_to_json(const BeamsFile& b) {
  json users = json::array();
  for (const auto& v : b.beams.beams) {
    json rows = json::array();
    for (Eigen::Index p = 0; p < v.rows(); ++p) {
      json row = json::array();
      for (Eigen::Index s = 0; s < v.cols(); ++s) row.push_back(complex_pair(v(p, s)));
      rows.push_back(row);
    }
    users.push_back(rows);
  }
  json j = {{"schema", 1},
            {"grid", grid_to_json(b.beams.grid)},
            {"streams", b.beams.streams()},
            {"beams", users}};
  if (b.has_user_grid) j["user_grid"] = grid_to_json(b.user_grid);
  return j;
}

BeamsFile beams_from_json(const json& j) {
  return guarded("beams", [&] {
    BeamsFile b;
    b.beams.grid = grid_from_json(j.at("grid"));
    const auto n = static_cast<Eigen::Index>(b.beams.grid.size());
    for (const auto& user : j.at("beams")) {
      if (static_cast<Eigen::Index>(user.size()) != n) {
        throw std::invalid_argument("beam sample count does not match the grid");
      }
      const auto d = static_cast<Eigen::Index>(user.at(0).size());
      FieldSamples v(n, d);
      for (Eigen::Index p = 0; p < n; ++p) {
        const json& row = user.at(static_cast<std::size_t>(p));
        if (static_cast<Eigen::Index>(row.size()) != d) {
          throw std::invalid_argument("ragged beam streams");
        }
        for (Eigen::Index s = 0; s < d; ++s) v(p, s) = complex_from(row.at(static_cast<std::size_t>(s)));
      }
      b.beams.beams.push_back(std::move(v));
    }
    if (j.contains("user_grid")) {
      b.has_user_grid = true;
      b.user_grid = grid_from_json(j.at("user_grid"));
    }
    return b;
  });
}

json result_to_json(const ResultRecord& r) {
  json per_user = json::array();
  for (std::size_t k = 0; k < r.report.rate_nats.size(); ++k) {
    per_user.push_back({{"rate_nats", r.report.rate_nats[k]}, {"rate_bits", r.report.rate_bits[k]}});
  }
  return {{"method", r.method},
          {"scenario", scenario_to_json(r.scenario)},
          {"sum_rate_nats", r.report.sum_rate_nats},
          {"sum_rate_bits", r.report.sum_rate_bits},
          {"per_user", per_user},
          {"trace", r.trace},
          {"power", r.power},
          {"power_feasible", r.power_feasible},
          {"iters", r.iters},
          {"converged", r.converged},
          {"mu", r.mu},
          {"jitter_applied", r.report.jitter_applied},
          {"warnings", r.warnings},
          {"seconds", r.seconds}};
}

SolveConfig config_from_json(const json& j) {
  return guarded("config", [&] {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    SolveConfig c;
    c.seed = j.value("seed", c.seed);
    c.gl_order = j.value("gl_order", c.gl_order);
    c.user_order = j.value("user_order", c.user_order);
    if (c.gl_order < 1) throw std::invalid_argument("gl_order must be >= 1");
    if (c.user_order < 0) throw std::invalid_argument("user_order must be >= 0");

    c.scenario = default_scenario();
    const json scen = j.value("scenario", json::object());
    c.scenario = scenario_from_json(scen, c.scenario);
    c.distribution = default_distribution();
    c.distribution.base = c.scenario;
    if (j.contains("distribution")) {
      c.distribution = distribution_from_json(j.at("distribution"), c.distribution);
      if (!scen.contains("users")) {
        c.scenario.poses = poses_from_geometry(sample_geometry(c.distribution, c.seed));
        c.scenario.validate();
      }
    }

    if (j.contains("method")) {
      c.methods = {j.at("method").get<std::string>()};
    } else if (j.contains("methods")) {
      c.methods = j.at("methods").get<std::vector<std::string>>();
    }
    if (c.methods.empty()) throw std::invalid_argument("no method selected");
    for (const auto& m : c.methods) {
      if (m != "wmmse" && m != "fourier" && m != "spda") {
        throw std::invalid_argument("unknown method '" + m + "' (expected wmmse, fourier or spda)");
      }
    }

    if (j.contains("wmmse")) {
      const json& w = j.at("wmmse");
      c.wmmse.max_iters = w.value("max_iters", c.wmmse.max_iters);
      c.wmmse.tolerance = w.value("tolerance", c.wmmse.tolerance);
      c.wmmse.bisection_tol = w.value("bisection_tol", c.wmmse.bisection_tol);
      c.wmmse.mu_bracket_growth = w.value("mu_bracket_growth", c.wmmse.mu_bracket_growth);
      c.wmmse.seed = w.value("seed", c.seed);
      const std::string init = w.value("init", std::string("matched_filter"));
      if (init == "matched_filter") {
        c.wmmse.init = InitKind::MatchedFilter;
      } else if (init == "random") {
        c.wmmse.init = InitKind::Random;
      } else {
        throw std::invalid_argument("unknown init '" + init + "'");
      }
    } else {
      c.wmmse.seed = c.seed;
    }
    c.wmmse.validate();
    c.fourier.wmmse = c.wmmse;
    c.spda.wmmse = c.wmmse;
    if (j.contains("fourier")) {
      const json& f = j.at("fourier");
      if (f.contains("bs_truncation")) {
        const Vec2 t = vec2_from(f.at("bs_truncation"));
        c.fourier.bs_max_x = static_cast<int>(t.x());
        c.fourier.bs_max_y = static_cast<int>(t.y());
      }
      if (f.contains("user_truncation")) {
        const Vec2 t = vec2_from(f.at("user_truncation"));
        c.fourier.user_max_x = static_cast<int>(t.x());
        c.fourier.user_max_y = static_cast<int>(t.y());
      }
    }
    if (j.contains("spda")) c.spda.spacing = j.at("spda").value("spacing", 0.0);
    return c;
  });
}

json config_to_json(const SolveConfig& c) {
  return {{"scenario", scenario_to_json(c.scenario)},
          {"methods", c.methods},
          {"gl_order", c.gl_order},
          {"user_order", c.user_order},
          {"seed", c.seed},
          {"wmmse",
           {{"max_iters", c.wmmse.max_iters},
            {"tolerance", c.wmmse.tolerance},
            {"bisection_tol", c.wmmse.bisection_tol},
            {"mu_bracket_growth", c.wmmse.mu_bracket_growth},
            {"init", c.wmmse.init == InitKind::MatchedFilter ? "matched_filter" : "random"},
            {"seed", c.wmmse.seed}}},
          {"fourier",
           {{"bs_truncation", {c.fourier.bs_max_x, c.fourier.bs_max_y}},
            {"user_truncation", {c.fourier.user_max_x, c.fourier.user_max_y}}}},
          {"spda", {{"spacing", c.spda.spacing}}}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace capa
