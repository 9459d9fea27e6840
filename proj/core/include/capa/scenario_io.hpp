#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "capa/baselines.hpp"
#include "capa/geometry.hpp"
#include "capa/quadrature.hpp"
#include "capa/rate.hpp"
#include "capa/wmmse.hpp"

namespace capa {

using nlohmann::json;

/// Uniform user placement: centres in the given boxes, each rotation angle
/// in [angle_min, angle_max].
struct ScenarioDistribution {
  std::size_t users = 3;
  double x_min = -5.0, x_max = 5.0;
  double y_min = -5.0, y_max = 5.0;
  double z_min = 20.0, z_max = 30.0;
  double angle_min = -1.5707963267948966, angle_max = 1.5707963267948966;
  ScenarioGeometry base;  // constants; poses are replaced by sampling

  void validate() const;
};

/// 2 x 2 m BS, 0.5 x 0.5 m users, lambda = 0.125 m, eta = 120 pi, C_max = 1000,
/// sigma^2 = 5.6e-3, three users at fixed poses and one stream each.
ScenarioGeometry default_scenario();
ScenarioDistribution default_distribution();

/// Default constants and placement with both apertures scaled by 1/4
/// (0.5 m BS, 0.125 m users), one stream per user.
ScenarioDistribution desk_distribution(std::size_t users);

/// min(d_B, d_U) with d = (2 ceil(L^x / lambda) + 1)(2 ceil(L^y / lambda) + 1).
int dof_streams(const ScenarioGeometry& scenario);

/// splitmix64 of seed combined with index; used for per-record and per-cell seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// K x 6 matrix with rows [r_x, r_y, r_z, w_x, w_y, w_z].
Eigen::MatrixXd sample_geometry(const ScenarioDistribution& dist, std::uint64_t seed);
std::vector<UserPose> poses_from_geometry(const Eigen::MatrixXd& po);
Eigen::MatrixXd geometry_from_poses(const std::vector<UserPose>& poses);
ScenarioGeometry sample_scenario(const ScenarioDistribution& dist, std::uint64_t seed);

json scenario_to_json(const ScenarioGeometry& scenario);
/// Fields missing from `j` keep their value from `defaults`.
ScenarioGeometry scenario_from_json(const json& j, const ScenarioGeometry& defaults);

json grid_to_json(const QuadratureGrid& grid);
QuadratureGrid grid_from_json(const json& j);

/// Dataset: one header line, then one record per line.
struct DatasetHeader {
  int schema = 1;
  ScenarioGeometry scenario;
  ScenarioDistribution distribution;
  int gl_order = 10;
  int sobol_count = 100;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
};

struct DatasetRecord {
  std::size_t id = 0;
  Eigen::MatrixXd po;        // K x 6
  std::vector<Vec2> sobol;   // points on the BS aperture
  std::uint64_t seed = 0;
};

struct DatasetFile {
  DatasetHeader header;
  QuadratureGrid gl;  // shared by all records
  std::vector<DatasetRecord> records;
};

/// Record t depends only on (seed, t).
DatasetRecord make_record(const DatasetHeader& header, std::size_t id);
DatasetFile generate_dataset(const ScenarioDistribution& dist, std::size_t n_samples, int gl_order,
                             int sobol_count, std::uint64_t seed,
                             const std::filesystem::path& path);
DatasetFile read_dataset(const std::filesystem::path& path);

/// Beams with the grids they were sampled on. The user grid is optional and
/// pins the evaluation grid when present.
struct BeamsFile {
  BeamformerSet beams;
  bool has_user_grid = false;
  QuadratureGrid user_grid;
};

json beams_to_json(const BeamsFile& beams);
BeamsFile beams_from_json(const json& j);

struct ResultRecord {
  std::string method;
  ScenarioGeometry scenario;
  RateReport report;
  std::vector<double> trace;
  double power = 0.0;
  bool power_feasible = true;
  int iters = 0;
  bool converged = false;
  double mu = 0.0;
  double seconds = 0.0;  // informative only
  std::vector<std::string> warnings;
};

json result_to_json(const ResultRecord& result);

/// Everything a solve run needs. Poses come from the scenario block when it
/// lists users, otherwise they are sampled from the distribution with `seed`.
struct SolveConfig {
  ScenarioGeometry scenario;
  ScenarioDistribution distribution;
  std::vector<std::string> methods{"wmmse"};
  int gl_order = 20;
  int user_order = 0;  // 0 follows the aperture ratio
  std::uint64_t seed = 0;
  WmmseConfig wmmse;
  FourierConfig fourier;
  SpdaConfig spda;
};

SolveConfig config_from_json(const json& j);
json config_to_json(const SolveConfig& config);

/// Whole-file helpers; failures name the path.
json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace capa
