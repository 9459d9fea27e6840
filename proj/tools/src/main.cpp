#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capa/errors.hpp"
#include "capa_cli/commands.hpp"
#include "capa_cli/verify.hpp"

namespace {

using namespace capa;
using namespace capa::cli;

SolveConfig load_config(const std::string& path) {
  return path.empty() ? config_from_json(json::object()) : config_from_json(read_json_file(path));
}

std::vector<std::string> split_methods(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const std::size_t comma = item.find(',', start);
      const std::string tok = item.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!tok.empty()) out.push_back(tok);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

void reseed(SolveConfig& c, std::uint64_t seed, const json& raw) {
  c.seed = seed;
  c.wmmse.seed = seed;
  c.fourier.wmmse.seed = seed;
  c.spda.wmmse.seed = seed;
  if (raw.contains("distribution") && !(raw.contains("scenario") && raw.at("scenario").contains("users"))) {
    c.scenario.poses = poses_from_geometry(sample_geometry(c.distribution, seed));
  }
}

std::filesystem::path beams_path_for(const std::string& base, const std::string& method, bool several) {
  if (!several) return base;
  std::filesystem::path p(base);
  return p.parent_path() / (p.stem().string() + "." + method + p.extension().string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-aperture multiuser beamforming toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, beams_out, beams_path, param, level = "fast", values_raw;
  std::vector<std::string> methods_raw;
  std::optional<std::uint64_t> seed;
  std::optional<int> gl_order;
  int jobs = 1, reps = 1, sobol_count = 100;
  std::size_t n_samples = 1;
  bool auto_d = false;

  auto* solve_cmd = app.add_subcommand("solve", "Solve one scenario and write a result file");
  solve_cmd->add_option("--config", config_path, "Solve config (JSON); defaults when omitted");
  solve_cmd->add_option("--out", out_path, "Result JSON")->required();
  solve_cmd->add_option("--method", methods_raw, "wmmse, fourier, spda (repeat or comma-separate)");
  solve_cmd->add_option("--seed", seed, "Seed for sampled poses and random init");
  solve_cmd->add_option("--gl-order", gl_order, "Per-axis GL order on the BS aperture");
  solve_cmd->add_option("--beams-out", beams_out, "Also write the beams (JSON)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter and write a CSV");
  sweep_cmd->add_option("--config", config_path, "Base solve config (JSON)");
  sweep_cmd->add_option("--out", out_path, "CSV output")->required();
  sweep_cmd->add_option("--param", param, "budget, users, user_area, frequency or bs_area")->required();
  sweep_cmd->add_option("--values", values_raw, "Comma-separated values")->required();
  sweep_cmd->add_option("--method", methods_raw, "Methods to run");
  sweep_cmd->add_option("--reps", reps, "Repetitions per value");
  sweep_cmd->add_option("--seed", seed, "Base seed")->required();
  sweep_cmd->add_option("--jobs", jobs, "Worker threads");
  sweep_cmd->add_option("--gl-order", gl_order, "Per-axis GL order on the BS aperture");
  sweep_cmd->add_flag("--auto-d", auto_d, "Set d from the aperture degrees of freedom per cell");

  auto* gen_cmd = app.add_subcommand("gen-dataset", "Write a GL/Sobol training dataset (JSONL)");
  gen_cmd->add_option("--config", config_path, "Config providing scenario constants and distribution");
  gen_cmd->add_option("--out", out_path, "Dataset path")->required();
  gen_cmd->add_option("--n", n_samples, "Number of samples")->required();
  gen_cmd->add_option("--gl-order", gl_order, "Per-axis GL order of the shared grid");
  gen_cmd->add_option("--sobol-count", sobol_count, "Sobol points per sample");
  gen_cmd->add_option("--seed", seed, "Dataset seed")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Score stored beams with the continuous evaluator");
  eval_cmd->add_option("--beams", beams_path, "Beams JSON")->required();
  eval_cmd->add_option("--config", config_path, "Scenario, config or result JSON")->required();
  eval_cmd->add_option("--out", out_path, "Result JSON");
  eval_cmd->add_option("--gl-order", gl_order, "User-side GL order when the beams carry no user grid");

  auto* verify_cmd = app.add_subcommand("verify", "Run the property and oracle checks");
  verify_cmd->add_option("--level", level, "fast or full");
  verify_cmd->add_option("--out", out_path, "Report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidInput;
  }

  try {
    if (solve_cmd->parsed()) {
      const json raw = config_path.empty() ? json::object() : read_json_file(config_path);
      SolveConfig c = config_from_json(raw);
      if (seed) reseed(c, *seed, raw);
      if (gl_order) c.gl_order = *gl_order;
      if (!methods_raw.empty()) c.methods = split_methods(methods_raw);
      const auto runs = solve_config(c);
      json out = json::array();
      for (const auto& run : runs) {
        out.push_back(result_to_json(run.result));
        std::cout << run.result.method << ": " << run.result.report.sum_rate_bits << " bit/s/Hz, "
                  << run.result.iters << " iterations" << (run.result.converged ? "" : " (not converged)")
                  << '\n';
        if (!beams_out.empty()) {
          write_json_file(beams_path_for(beams_out, run.result.method, runs.size() > 1),
                          beams_to_json(run.beams));
        }
      }
      write_json_file(out_path, runs.size() == 1 ? out.front() : out);
    } else if (sweep_cmd->parsed()) {
      SweepSpec spec;
      spec.base = load_config(config_path);
      if (gl_order) spec.base.gl_order = *gl_order;
      spec.param = parse_sweep_param(param);
      for (const auto& v : split_methods({values_raw})) {
        try {
          spec.values.push_back(std::stod(v));
        } catch (const std::exception&) {
          throw std::invalid_argument("sweep value '" + v + "' is not a number");
        }
      }
      if (!methods_raw.empty()) spec.methods = split_methods(methods_raw);
      spec.reps = reps;
      spec.seed = *seed;
      spec.auto_d = auto_d;
      const auto rows = run_sweep(spec, jobs);
      write_sweep_csv(out_path, spec, rows);
      std::size_t failed = 0;
      for (const auto& r : rows) failed += r.status == "ok" ? 0 : 1;
      std::cout << rows.size() << " rows written to " << out_path;
      if (failed > 0) std::cout << " (" << failed << " failed cells)";
      std::cout << '\n';
    } else if (gen_cmd->parsed()) {
      const SolveConfig c = load_config(config_path);
      ScenarioDistribution dist = c.distribution;
      dist.base = c.scenario;
      const DatasetFile f = generate_dataset(dist, n_samples, gl_order.value_or(10), sobol_count,
                                             *seed, out_path);
      std::cout << f.records.size() << " records written to " << out_path << '\n';
    } else if (eval_cmd->parsed()) {
      const BeamsFile beams = beams_from_json(read_json_file(beams_path));
      const ScenarioGeometry scenario = scenario_from_any(read_json_file(config_path));
      const ResultRecord r = evaluate_beams(beams, scenario, gl_order.value_or(0));
      std::cout << "sum rate " << r.report.sum_rate_bits << " bit/s/Hz, power " << r.power
                << (r.power_feasible ? "" : " (exceeds budget)") << '\n';
      if (!out_path.empty()) write_json_file(out_path, result_to_json(r));
    } else if (verify_cmd->parsed()) {
      const VerifyLevel lv = parse_verify_level(level);
      const auto checks = run_verify(lv);
      const json report = verify_report(lv, checks);
      for (const auto& c : checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
      }
      if (!out_path.empty()) write_json_file(out_path, report);
      return report.at("pass").get<bool>() ? kOk : kCheckFailed;
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kOk;
}
