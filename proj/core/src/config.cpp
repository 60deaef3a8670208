#include "polyproc/config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

#include "polyproc/io.hpp"

namespace polyproc {

namespace {

using Handlers = std::map<std::string, std::function<void(const nlohmann::json&)>>;

void visit(const nlohmann::json& j, const std::string& section, const Handlers& handlers) {
  if (!j.is_object()) {
    throw InputError(section.empty() ? "config: expected an object" : "config: '" + section + "' must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    const auto it = handlers.find(key);
    const std::string where = section.empty() ? key : section + "." + key;
    if (it == handlers.end()) throw InputError("config: unknown key '" + where + "'");
    try {
      it->second(value);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("config: bad value for '" + where + "': " + e.what());
    } catch (const std::domain_error& e) {
      throw InputError("config: bad value for '" + where + "': " + e.what());
    }
  }
}

template <class T>
std::function<void(const nlohmann::json&)> into(T& slot) {
  return [&slot](const nlohmann::json& v) {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw std::domain_error("expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw std::domain_error("expected a nonnegative integer");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::domain_error("expected a string");
    }
    slot = v.get<T>();
  };
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError("config: " + what);
}

}  // namespace

void RunConfig::validate() const {
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: grid: ") + e.what());
  }
  require(noise.sigma >= 0.0 && std::isfinite(noise.sigma), "noise.sigma must be >= 0");
  require(noise.gamma > 0.0 && std::isfinite(noise.gamma), "noise.gamma must be > 0");
  require(mc.n_paths >= 100, "mc.n_paths must be >= 100");
  require(mc.k_sigma > 0.0, "mc.k_sigma must be > 0");
  require(scenario.s >= 0.0 && scenario.t >= scenario.s, "scenario needs 0 <= s <= t");
  require(scenario.path_dt > 0.0, "scenario.path_dt must be > 0");
  require(pricing.degree >= 1 && pricing.degree <= 20, "pricing.degree must be in 1..20");
  require(pricing.domain_M > 0.0, "pricing.domain_M must be > 0");
  require(pricing.s >= 0.0 && pricing.t >= pricing.s, "pricing needs 0 <= s <= t");
  require(pricing.x >= 0.0, "pricing.x must be >= 0");
  require(dt_quadrature > 0.0 && dt_quadrature <= 0.1, "dt_quadrature must be in (0, 0.1]");
}

OUProcess RunConfig::ou_process() const {
  return OUProcess::exponential_kernel(FilipovicGeometry(grid), noise.sigma, noise.gamma, dt_quadrature);
}

Eigen::VectorXd RunConfig::initial_curve() const {
  const FilipovicGeometry geo(grid);
  return Eigen::VectorXd::Constant(geo.nodes().size(), scenario.curve_level) + scenario.curve_slope * geo.nodes();
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  visit(j, "",
        {{"grid", [&](const nlohmann::json& v) {
            visit(v, "grid",
                  {{"x_max", into(c.grid.x_max)}, {"n_points", into(c.grid.n_points)}, {"alpha", into(c.grid.alpha)}});
          }},
         {"noise", [&](const nlohmann::json& v) {
            visit(v, "noise", {{"sigma", into(c.noise.sigma)}, {"gamma", into(c.noise.gamma)}});
          }},
         {"mc", [&](const nlohmann::json& v) {
            visit(v, "mc",
                  {{"n_paths", into(c.mc.n_paths)}, {"seed", into(c.mc.seed)}, {"k_sigma", into(c.mc.k_sigma)}});
          }},
         {"scenario", [&](const nlohmann::json& v) {
            visit(v, "scenario",
                  {{"s", into(c.scenario.s)},
                   {"t", into(c.scenario.t)},
                   {"path_dt", into(c.scenario.path_dt)},
                   {"curve_level", into(c.scenario.curve_level)},
                   {"curve_slope", into(c.scenario.curve_slope)}});
          }},
         {"pricing", [&](const nlohmann::json& v) {
            visit(v, "pricing",
                  {{"strike", into(c.pricing.strike)},
                   {"degree", into(c.pricing.degree)},
                   {"domain_M", into(c.pricing.domain_M)},
                   {"s", into(c.pricing.s)},
                   {"t", into(c.pricing.t)},
                   {"x", into(c.pricing.x)}});
          }},
         {"dt_quadrature", into(c.dt_quadrature)},
         {"outputs", [&](const nlohmann::json& v) {
            visit(v, "outputs", {{"report", into(c.outputs.report)}, {"junit", into(c.outputs.junit)}});
          }}});
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open config file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json config_to_json(const RunConfig& c) {
  return {{"grid", grid_to_json(c.grid)},
          {"noise", {{"sigma", c.noise.sigma}, {"gamma", c.noise.gamma}}},
          {"mc", {{"n_paths", c.mc.n_paths}, {"seed", c.mc.seed}, {"k_sigma", c.mc.k_sigma}}},
          {"scenario",
           {{"s", c.scenario.s},
            {"t", c.scenario.t},
            {"path_dt", c.scenario.path_dt},
            {"curve_level", c.scenario.curve_level},
            {"curve_slope", c.scenario.curve_slope}}},
          {"pricing",
           {{"strike", c.pricing.strike},
            {"degree", c.pricing.degree},
            {"domain_M", c.pricing.domain_M},
            {"s", c.pricing.s},
            {"t", c.pricing.t},
            {"x", c.pricing.x}}},
          {"dt_quadrature", c.dt_quadrature},
          {"outputs", {{"report", c.outputs.report}, {"junit", c.outputs.junit}}}};
}

std::string config_hash(const RunConfig& c) {
  const std::string dump = config_to_json(c).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace polyproc
