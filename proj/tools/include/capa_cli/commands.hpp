#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "capa/scenario_io.hpp"

namespace capa::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInvalidInput = 2, kNumericalFailure = 3 };

struct MethodRun {
  ResultRecord result;
  BeamsFile beams;
};

/// Runs one of "wmmse", "fourier", "spda" on a prepared system and scores
/// the beams with the continuous rate evaluator.
MethodRun run_method(const SystemModel& system, const std::string& method,
                     const SolveConfig& config);

std::vector<MethodRun> solve_config(const SolveConfig& config);

/// Scores stored beams. The user grid comes from the beams file when
/// present, otherwise a GL grid of `user_order` (0 follows the aperture
/// ratio of the BS grid order).
ResultRecord evaluate_beams(const BeamsFile& beams, const ScenarioGeometry& scenario,
                            int user_order = 0);

/// Accepts a solve config, a result file or a bare scenario object.
ScenarioGeometry scenario_from_any(const json& j);

enum class SweepParam { Budget, Users, UserArea, Frequency, BsArea };

SweepParam parse_sweep_param(const std::string& name);
std::string sweep_param_name(SweepParam p);

struct SweepSpec {
  SweepParam param = SweepParam::Budget;
  std::vector<double> values;
  std::vector<std::string> methods{"wmmse"};
  int reps = 1;
  std::uint64_t seed = 0;
  bool auto_d = false;
  SolveConfig base;

  void validate() const;
};

struct SweepRow {
  double value = 0.0;
  std::string method;
  int rep = -1;  // -1 marks an averaged row
  double sum_rate_bits = 0.0;
  int iters = 0;
  double seconds = 0.0;
  std::string status = "ok";
};

/// Scenario for one sweep cell: poses drawn with derive_seed(seed, rep), then
/// the swept parameter applied.
SolveConfig sweep_cell_config(const SweepSpec& spec, double value, int rep);

/// Per-cell rows sorted by (value, method, rep), followed by averaged rows.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, int jobs);
void write_sweep_csv(const std::filesystem::path& path, const SweepSpec& spec,
                     const std::vector<SweepRow>& rows);

}  // namespace capa::cli
