#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "polyproc/algebra.hpp"
#include "polyproc/montecarlo.hpp"
#include "polyproc/process.hpp"

namespace polyproc {

/// A realized path up to s whose independent remainder is resampled from
/// streams derived from seed_base. The path seed and seed_base are kept
/// disjoint by deriving both from the scenario seed.
struct FrozenScenario {
  Path path_to_s;
  double s = 0.0;
  std::uint64_t seed_base = 0;
};

/// Simulates the OU path from x0 up to s with step dt and freezes it.
FrozenScenario freeze(const OUProcess& p, const Eigen::VectorXd& x0, double s, double dt, std::uint64_t seed);
FrozenScenario freeze(const MatrixLevyProcess& p, const Eigen::VectorXd& x0, double s, double dt,
                      std::uint64_t seed);

using Functional = std::function<Eigen::VectorXd(const AlgebraElement&)>;

/// E[functional(X(t)) | F_s] by resampling X_perp(s;t) with X_par frozen.
MCEstimate conditional_mc(const Decomposition& d, const Functional& functional, std::size_t n,
                          std::uint64_t seed);
/// Draws use the stream derive_seed(scenario.seed_base, stream); distinct
/// stream ids give independent resamples of the same frozen path.
MCEstimate conditional_mc(const OUProcess& p, const FrozenScenario& scenario, const Functional& functional,
                          double t, std::size_t n, std::uint64_t stream = 0);

/// x -> mean of exp(-x r_j) over one pooled sample r_j = ||X(t)||^power
/// (common random numbers, so monotone in x).
class LaplaceEstimator {
 public:
  explicit LaplaceEstimator(std::vector<double> pooled);

  double operator()(double x) const;
  /// 1 - operator()(x), summed as -expm1 so it stays accurate near x = 0.
  double complement(double x) const;
  double standard_error(double x) const;
  std::size_t size() const { return samples_.size(); }
  const std::vector<double>& samples() const { return samples_; }

 private:
  std::vector<double> samples_;
};

using NormFn = std::function<double(const AlgebraElement&)>;

LaplaceEstimator laplace_estimator(const Decomposition& d, const NormFn& norm, unsigned power, std::size_t n,
                                   std::uint64_t seed);

struct GateVerdict {
  bool pass = false;
  /// max_i |mean_i - claim_i| / se_i (infinity when se_i = 0 and they differ).
  double max_z = 0.0;
  Eigen::Index worst = 0;
};

/// PASS iff |mean - claim| <= k_sigma se componentwise. A zero standard
/// error leaves only rounding slack (1e-12 relative).
GateVerdict tolerance_gate(const MCEstimate& estimate, const Eigen::VectorXd& claim, double k_sigma = 5.0);

/// Same gate against an independent estimate: combined se = sqrt(se_a^2 + se_b^2).
GateVerdict tolerance_gate(const MCEstimate& a, const MCEstimate& b, double k_sigma = 5.0);

/// One named check with its outcome and the numbers behind it.
struct GateResult {
  std::string name;
  std::string group;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  nlohmann::json data = nlohmann::json::object();
};

nlohmann::json gate_report_json(const std::vector<GateResult>& gates);
std::string gate_report_junit(const std::vector<GateResult>& gates, const std::string& suite_name);

}  // namespace polyproc
