#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "polyproc/algebra.hpp"
#include "polyproc/process.hpp"

namespace polyproc {

struct NoiseConfig {
  double sigma = 0.1;
  double gamma = 1.0;
};

struct MCSettings {
  std::size_t n_paths = 200000;
  std::uint64_t seed = 1;
  double k_sigma = 5.0;
};

struct ScenarioConfig {
  double s = 0.5;
  double t = 1.0;
  double path_dt = 0.05;
  /// Initial curve f0(x) = level + slope x on the grid nodes.
  double curve_level = 1.0;
  double curve_slope = 0.1;
};

struct PricingDefaults {
  double strike = 1.0;
  std::size_t degree = 16;
  double domain_M = 4.0;
  double s = 0.0;
  double t = 1.0;
  double x = 1.0;
};

struct OutputPaths {
  std::string report;
  std::string junit;
};

struct RunConfig {
  GridSpec grid;
  NoiseConfig noise;
  MCSettings mc;
  ScenarioConfig scenario;
  PricingDefaults pricing;
  double dt_quadrature = 1e-3;
  OutputPaths outputs;

  void validate() const;
  OUProcess ou_process() const;
  Eigen::VectorXd initial_curve() const;
};

/// Strict parse: unknown keys and wrong types throw InputError.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& c);
/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& c);

}  // namespace polyproc
