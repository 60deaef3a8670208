#include "polyproc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace polyproc {

namespace {

std::string xml_escape(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  for (const char c : in) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

FrozenScenario freeze(const OUProcess& p, const Eigen::VectorXd& x0, double s, double dt, std::uint64_t seed) {
  FrozenScenario sc;
  sc.s = s;
  sc.path_to_s = simulate_path(p, x0, s, dt, derive_seed(seed, 0));
  sc.seed_base = derive_seed(seed, 1);
  return sc;
}

FrozenScenario freeze(const MatrixLevyProcess& p, const Eigen::VectorXd& x0, double s, double dt,
                      std::uint64_t seed) {
  FrozenScenario sc;
  sc.s = s;
  sc.path_to_s = simulate_path(p, x0, s, dt, derive_seed(seed, 0));
  sc.seed_base = derive_seed(seed, 1);
  return sc;
}

MCEstimate conditional_mc(const Decomposition& d, const Functional& functional, std::size_t n,
                          std::uint64_t seed) {
  if (n < 100) throw std::invalid_argument("conditional Monte Carlo needs at least 100 draws");
  const Eigen::Index width = functional(d.parallel).size();
  MCConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  return monte_carlo(cfg, width, [&](Rng& rng) {
    AlgebraElement x = d.parallel;
    x.coords += d.perp_law.sample(rng);
    return functional(x);
  });
}

MCEstimate conditional_mc(const OUProcess& p, const FrozenScenario& scenario, const Functional& functional,
                          double t, std::size_t n, std::uint64_t stream) {
  if (t < scenario.s) throw std::invalid_argument("conditional Monte Carlo needs t >= s");
  const Decomposition d = decompose(p, scenario.path_to_s, scenario.s, t);
  return conditional_mc(d, functional, n, derive_seed(scenario.seed_base, stream));
}

// ---------------------------------------------------------------------------
// Laplace estimator

LaplaceEstimator::LaplaceEstimator(std::vector<double> pooled) : samples_(std::move(pooled)) {
  if (samples_.empty()) throw std::invalid_argument("Laplace estimator needs samples");
  for (const double r : samples_) {
    if (!std::isfinite(r) || r < 0.0) throw std::invalid_argument("pooled norm powers must be finite and >= 0");
  }
}

double LaplaceEstimator::operator()(double x) const {
  if (x == 0.0) return 1.0;
  double acc = 0.0;
  for (const double r : samples_) acc += std::exp(-x * r);
  return acc / static_cast<double>(samples_.size());
}

double LaplaceEstimator::complement(double x) const {
  if (x == 0.0) return 0.0;
  double acc = 0.0;
  for (const double r : samples_) acc -= std::expm1(-x * r);
  return acc / static_cast<double>(samples_.size());
}

double LaplaceEstimator::standard_error(double x) const {
  const double mean = (*this)(x);
  double ss = 0.0;
  for (const double r : samples_) {
    const double e = std::exp(-x * r) - mean;
    ss += e * e;
  }
  const auto n = static_cast<double>(samples_.size());
  return n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

LaplaceEstimator laplace_estimator(const Decomposition& d, const NormFn& norm, unsigned power, std::size_t n,
                                   std::uint64_t seed) {
  const MCConfig cfg{n, seed};
  const std::size_t blocks = (n + cfg.block - 1) / cfg.block;
  std::vector<double> pooled;
  pooled.reserve(n);
  // Sequential over blocks so the pooled order is fixed.
  for (std::size_t b = 0; b < blocks; ++b) {
    Rng rng = make_rng(seed, b);
    const std::size_t count = std::min(cfg.block, n - b * cfg.block);
    for (std::size_t i = 0; i < count; ++i) {
      AlgebraElement x = d.parallel;
      x.coords += d.perp_law.sample(rng);
      pooled.push_back(std::pow(norm(x), static_cast<double>(power)));
    }
  }
  return LaplaceEstimator(std::move(pooled));
}

// ---------------------------------------------------------------------------
// Gates

GateVerdict tolerance_gate(const MCEstimate& estimate, const Eigen::VectorXd& claim, double k_sigma) {
  if (claim.size() != estimate.mean.size()) throw std::invalid_argument("claim and estimate differ in shape");
  GateVerdict v;
  v.pass = true;
  for (Eigen::Index i = 0; i < claim.size(); ++i) {
    const double diff = std::abs(estimate.mean(i) - claim(i));
    const double slack = 1e-12 * (1.0 + std::abs(claim(i)));
    const double se = estimate.se(i);
    const double z = se > 0.0 ? diff / se : (diff <= slack ? 0.0 : std::numeric_limits<double>::infinity());
    if (diff > k_sigma * se + slack) v.pass = false;
    if (z > v.max_z || i == 0) {
      v.max_z = std::max(v.max_z, z);
      if (z >= v.max_z) v.worst = i;
    }
  }
  return v;
}

GateVerdict tolerance_gate(const MCEstimate& a, const MCEstimate& b, double k_sigma) {
  if (a.mean.size() != b.mean.size()) throw std::invalid_argument("estimates differ in shape");
  MCEstimate combined = a;
  combined.se = (a.se.cwiseProduct(a.se) + b.se.cwiseProduct(b.se)).cwiseSqrt();
  return tolerance_gate(combined, b.mean, k_sigma);
}

nlohmann::json gate_report_json(const std::vector<GateResult>& gates) {
  nlohmann::json out;
  std::size_t failed = 0;
  out["gates"] = nlohmann::json::array();
  for (const auto& g : gates) {
    failed += g.pass ? 0 : 1;
    out["gates"].push_back({{"name", g.name},
                            {"group", g.group},
                            {"verdict", g.pass ? "PASS" : "FAIL"},
                            {"detail", g.detail},
                            {"seconds", g.seconds},
                            {"data", g.data}});
  }
  out["total"] = gates.size();
  out["failed"] = failed;
  out["verdict"] = failed == 0 ? "PASS" : "FAIL";
  return out;
}

std::string gate_report_junit(const std::vector<GateResult>& gates, const std::string& suite_name) {
  std::size_t failed = 0;
  double seconds = 0.0;
  for (const auto& g : gates) {
    failed += g.pass ? 0 : 1;
    seconds += g.seconds;
  }
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<testsuite name=\"" << xml_escape(suite_name) << "\" tests=\"" << gates.size() << "\" failures=\""
     << failed << "\" time=\"" << seconds << "\">\n";
  for (const auto& g : gates) {
    os << "  <testcase classname=\"" << xml_escape(g.group) << "\" name=\"" << xml_escape(g.name)
       << "\" time=\"" << g.seconds << "\"";
    if (g.pass) {
      os << "/>\n";
    } else {
      os << ">\n    <failure message=\"" << xml_escape(g.detail) << "\"/>\n  </testcase>\n";
    }
  }
  os << "</testsuite>\n";
  return os.str();
}

}  // namespace polyproc
