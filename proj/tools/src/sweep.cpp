#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "capa/errors.hpp"
#include "capa_cli/commands.hpp"

namespace capa::cli {

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "budget") return SweepParam::Budget;
  if (name == "users") return SweepParam::Users;
  if (name == "user_area") return SweepParam::UserArea;
  if (name == "frequency") return SweepParam::Frequency;
  if (name == "bs_area") return SweepParam::BsArea;
  throw std::invalid_argument("unknown sweep parameter '" + name +
                              "' (expected budget, users, user_area, frequency or bs_area)");
}

std::string sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::Budget: return "budget";
    case SweepParam::Users: return "users";
    case SweepParam::UserArea: return "user_area";
    case SweepParam::Frequency: return "frequency";
    case SweepParam::BsArea: return "bs_area";
  }
  return "";
}

void SweepSpec::validate() const {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (reps < 1) throw std::invalid_argument("sweep needs at least one repetition");
  if (methods.empty()) throw std::invalid_argument("sweep needs at least one method");
  for (double v : values) {
    if (!(v > 0.0)) throw std::invalid_argument("sweep values must be positive");
    if (param == SweepParam::Users && v != std::floor(v)) {
      throw std::invalid_argument("user counts must be integers");
    }
  }
  for (const auto& m : methods) {
    if (m != "wmmse" && m != "fourier" && m != "spda") {
      throw std::invalid_argument("unknown method '" + m + "'");
    }
  }
}

SolveConfig sweep_cell_config(const SweepSpec& spec, double value, int rep) {
  SolveConfig c = spec.base;
  ScenarioDistribution dist = c.distribution;
  dist.base = c.scenario;
  if (spec.param == SweepParam::Users) dist.users = static_cast<std::size_t>(value);
  c.scenario.poses = poses_from_geometry(
      sample_geometry(dist, derive_seed(spec.seed, static_cast<std::uint64_t>(rep))));

  switch (spec.param) {
    case SweepParam::Budget: c.scenario.current_budget = value; break;
    case SweepParam::Users: break;
    case SweepParam::UserArea: c.scenario.user_aperture = {value, value}; break;
    case SweepParam::Frequency: c.scenario.wavelength = 2.998e8 / value; break;
    case SweepParam::BsArea: c.scenario.bs_aperture = {value, value}; break;
  }
  if (spec.auto_d) c.scenario.streams = dof_streams(c.scenario);
  c.scenario.validate();
  return c;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, int jobs) {
  spec.validate();
  struct Cell {
    double value;
    int rep;
  };
  std::vector<Cell> cells;
  for (double v : spec.values) {
    for (int r = 0; r < spec.reps; ++r) cells.push_back({v, r});
  }

  // One slot per (cell, method); workers fill disjoint slots.
  std::vector<SweepRow> rows(cells.size() * spec.methods.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      for (std::size_t m = 0; m < spec.methods.size(); ++m) {
        SweepRow& row = rows[i * spec.methods.size() + m];
        row.value = cell.value;
        row.method = spec.methods[m];
        row.rep = cell.rep;
        try {
          const SolveConfig c = sweep_cell_config(spec, cell.value, cell.rep);
          const SystemModel system = make_system(c.scenario, c.gl_order, c.user_order);
          const MethodRun run = run_method(system, row.method, c);
          row.sum_rate_bits = run.result.report.sum_rate_bits;
          row.iters = run.result.iters;
          row.seconds = run.result.seconds;
        } catch (const NumericalError& e) {
          row.status = std::string("numerical_failure: ") + e.what();
        } catch (const std::exception& e) {
          row.status = std::string("error: ") + e.what();
        }
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.value, a.method, a.rep) < std::tie(b.value, b.method, b.rep);
  });

  std::map<std::pair<double, std::string>, std::vector<const SweepRow*>> groups;
  for (const auto& r : rows) {
    if (r.status == "ok") groups[{r.value, r.method}].push_back(&r);
  }
  std::vector<SweepRow> means;
  for (const auto& [key, members] : groups) {
    SweepRow mean;
    mean.value = key.first;
    mean.method = key.second;
    for (const SweepRow* r : members) {
      mean.sum_rate_bits += r->sum_rate_bits;
      mean.iters += r->iters;
      mean.seconds += r->seconds;
    }
    const auto count = static_cast<double>(members.size());
    mean.sum_rate_bits /= count;
    mean.iters = static_cast<int>(std::lround(mean.iters / count));
    mean.seconds /= count;
    means.push_back(mean);
  }
  rows.insert(rows.end(), means.begin(), means.end());
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepSpec& spec,
                     const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "param,value,method,rep,sum_rate_bits,iters,seconds,status\n";
  out << std::setprecision(17);
  const std::string name = sweep_param_name(spec.param);
  for (const auto& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << name << ',' << r.value << ',' << r.method << ','
        << (r.rep < 0 ? std::string("mean") : std::to_string(r.rep)) << ',' << r.sum_rate_bits
        << ',' << r.iters << ',' << r.seconds << ',' << status << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace capa::cli
