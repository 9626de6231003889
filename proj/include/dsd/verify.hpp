#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dsd/priors.hpp"
#include "dsd/qf.hpp"

namespace dsd {

enum class CheckStatus { pass, fail, skipped };

struct CheckResult {
  std::string fixture;
  std::string name;
  CheckStatus status = CheckStatus::fail;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyFixture {
  std::string label;
  DsdParams params;
  std::optional<QfWeights> weights;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::size_t mc_draws = 100000;
  int threads = 1;
  std::size_t residual_points = 25;
};

/// Invariant battery per fixture: normalization of the base, benchmark and
/// DSD densities; the two reduction identities; the integral-equation
/// residual on the 1%-99% benchmark quantile grid; Ruben series against
/// simulated V when weights are given.
std::vector<CheckResult> run_verification(const std::vector<VerifyFixture>& fixtures,
                                          const VerifyOptions& options);

/// n = 50 points on [-1, 1], cubic B-splines with m = 5 and m = 20 and an RW2
/// penalty, constrained; b = 1, p = 0.5, q = 1.5.
std::vector<VerifyFixture> default_fixtures();

nlohmann::json to_json(const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace dsd
