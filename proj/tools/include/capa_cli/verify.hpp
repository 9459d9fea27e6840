#pragma once

#include <functional>
#include <string>
#include <vector>

#include "capa/channel.hpp"
#include "capa/scenario_io.hpp"

namespace capa::cli {

enum class VerifyLevel { Fast, Full };

VerifyLevel parse_verify_level(const std::string& name);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Kernel under test. Checks that build channels by hand use it, so a faulty
/// kernel can be injected to confirm the suite notices.
using KernelFn = std::function<cplx(const Vec3& rx_pol, const Vec3& r, const Vec3& s,
                                    double wavelength, double impedance)>;

KernelFn production_kernel();

/// Fast: closed-form and property checks. Full adds quadrature refinement,
/// baseline ordering and dataset round trips.
std::vector<CheckResult> run_verify(VerifyLevel level, const KernelFn& kernel = production_kernel());

json verify_report(VerifyLevel level, const std::vector<CheckResult>& checks);

}  // namespace capa::cli
