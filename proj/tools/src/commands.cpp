#include "capa_cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace capa::cli {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void score(ResultRecord& r, const SystemModel& system, const std::vector<FieldSamples>& beams) {
  r.report = sum_rate(system, beams);
  r.power = beam_power(system.bs_grid, beams);
  r.power_feasible = r.power <= system.scenario.current_budget * (1.0 + 1e-6);
}

}  // namespace

MethodRun run_method(const SystemModel& system, const std::string& method,
                     const SolveConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  MethodRun run;
  ResultRecord& r = run.result;
  r.method = method;
  r.scenario = system.scenario;
  std::vector<FieldSamples> beams;

  if (method == "wmmse") {
    WmmseResult w = solve(system, config.wmmse);
    r.trace = w.state.objective_trace;
    r.iters = w.iterations;
    r.converged = w.converged;
    r.mu = w.state.mu;
    beams = std::move(w.state.beams);
  } else if (method == "fourier" || method == "spda") {
    BaselineResult b = method == "fourier" ? fourier_solve(system, config.fourier)
                                           : spda_solve(system, config.spda);
    r.trace = b.inner.objective_trace;
    r.iters = b.inner.iterations;
    r.converged = b.inner.converged;
    r.mu = b.inner.mu;
    r.warnings = std::move(b.warnings);
    beams = std::move(b.beams);
  } else {
    throw std::invalid_argument("unknown method '" + method + "' (expected wmmse, fourier or spda)");
  }
  if (!r.converged) r.warnings.push_back("iteration limit reached before the objective settled");

  score(r, system, beams);
  r.seconds = seconds_since(t0);
  run.beams.beams = {system.bs_grid, std::move(beams)};
  run.beams.has_user_grid = true;
  run.beams.user_grid = system.user_grid;
  return run;
}

std::vector<MethodRun> solve_config(const SolveConfig& config) {
  for (const auto& m : config.methods) {
    if (m != "wmmse" && m != "fourier" && m != "spda") {
      throw std::invalid_argument("unknown method '" + m + "' (expected wmmse, fourier or spda)");
    }
  }
  const SystemModel system = make_system(config.scenario, config.gl_order, config.user_order);
  std::vector<MethodRun> runs;
  for (const auto& m : config.methods) runs.push_back(run_method(system, m, config));
  return runs;
}

ResultRecord evaluate_beams(const BeamsFile& beams, const ScenarioGeometry& scenario,
                            int user_order) {
  scenario.validate();
  const QuadratureGrid& bs = beams.beams.grid;
  if (beams.beams.user_count() != scenario.user_count()) {
    throw std::invalid_argument("beams file holds " + std::to_string(beams.beams.user_count()) +
                                " users, scenario has " + std::to_string(scenario.user_count()));
  }
  if (std::abs(bs.aperture.side_x - scenario.bs_aperture.side_x) > 1e-12 ||
      std::abs(bs.aperture.side_y - scenario.bs_aperture.side_y) > 1e-12) {
    throw std::invalid_argument("beam grid aperture does not match the scenario BS aperture");
  }
  QuadratureGrid user_grid;
  if (beams.has_user_grid) {
    user_grid = beams.user_grid;
  } else {
    if (user_order <= 0) {
      const auto bs_order = static_cast<int>(std::lround(std::sqrt(static_cast<double>(bs.size()))));
      user_order = scaled_gl_order(scenario.bs_aperture, scenario.user_aperture, bs_order);
    }
    user_grid = gl_grid(scenario.user_aperture, user_order);
  }
  const SystemModel system = make_system(scenario, bs, user_grid);

  ResultRecord r;
  r.method = "eval";
  r.scenario = scenario;
  r.converged = true;
  score(r, system, beams.beams.beams);
  if (!r.power_feasible) r.warnings.push_back("beams exceed the current budget");
  return r;
}

ScenarioGeometry scenario_from_any(const json& j) {
  if (j.is_array() && !j.empty()) return scenario_from_any(j.front());
  if (!j.is_object()) throw std::invalid_argument("scenario file must hold a JSON object");
  if (j.contains("method") && j.contains("scenario") && j.contains("sum_rate_nats")) {
    return scenario_from_json(j.at("scenario"), default_scenario());
  }
  if (j.contains("scenario") || j.contains("distribution")) return config_from_json(j).scenario;
  return scenario_from_json(j, default_scenario());
}

}  // namespace capa::cli
