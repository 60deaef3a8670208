#pragma once

#include <functional>
#include <string>
#include <vector>

#include "polyproc/config.hpp"
#include "polyproc/oracle.hpp"

namespace polyproc {

using GateGroupFn = std::function<std::vector<GateResult>(const RunConfig&)>;

struct GateGroup {
  std::string name;
  GateGroupFn run;
};

std::vector<GateResult> gates_conditional_moments(const RunConfig& c);
std::vector<GateResult> gates_word_expansion(const RunConfig& c);
std::vector<GateResult> gates_ou_homomorphism(const RunConfig& c);
std::vector<GateResult> gates_left_multiplier(const RunConfig& c);
std::vector<GateResult> gates_second_derivative(const RunConfig& c);
std::vector<GateResult> gates_frechet(const RunConfig& c);
std::vector<GateResult> gates_norm_moments(const RunConfig& c);
std::vector<GateResult> gates_pricing(const RunConfig& c);
std::vector<GateResult> gates_conditional_laws(const RunConfig& c);

/// All groups in suite order.
const std::vector<GateGroup>& gate_groups();

struct SuiteReport {
  std::vector<GateResult> gates;
  std::string config_hash;
  double seconds = 0.0;
  bool pass() const;
  nlohmann::json to_json() const;
  /// Fixed-width table, one line per gate.
  std::string summary_table() const;
};

/// Runs every group. A group that throws is recorded as one failed gate.
SuiteReport run_validation(const RunConfig& c);
SuiteReport run_groups(const RunConfig& c, const std::vector<GateGroup>& groups);

}  // namespace polyproc
