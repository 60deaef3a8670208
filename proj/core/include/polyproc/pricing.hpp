#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "polyproc/process.hpp"

namespace polyproc {

inline constexpr std::size_t kMaxPayoffDegree = 20;

/// Degree-n polynomial on [0, M] held in both the Bernstein and the monomial
/// basis.
struct PayoffPolynomial {
  std::size_t degree = 0;
  double domain_M = 1.0;
  Eigen::VectorXd bernstein;  // h(kM/n), k = 0..n
  Eigen::VectorXd monomial;   // h_0..h_n in powers of z
  /// sup over [0, M] of |h - Bernstein image|, measured on 1001 points.
  double sup_error = 0.0;
  /// sup over [0, M] of the disagreement between the two bases.
  double basis_residual = 0.0;

  double eval_bernstein(double z) const;
  double eval_monomial(double z) const;
};

/// Bernstein polynomial of degree n for h on [0, M] and its exact monomial
/// form h_i = C(n, i) Delta^i b_0 / M^i. Rejects n > 20.
PayoffPolynomial bernstein_expand(const std::function<double(double)>& h, std::size_t n, double M);

/// Same conversion from given Bernstein coefficients (sup_error left at 0).
PayoffPolynomial from_bernstein(Eigen::VectorXd coeffs, double M);

enum class PayoffKind { kCall, kPut, kForward, kCustom };

/// max(z - K, 0), max(K - z, 0) or z - K.
std::function<double(double)> vanilla_payoff(PayoffKind kind, double strike);

struct PricingRequest {
  PayoffPolynomial payoff;
  double s = 0.0;
  double t = 1.0;
  double x = 1.0;
  Eigen::VectorXd f_s;
};

/// Evaluation beyond x_max is flagged up to this many years, rejected past it.
inline constexpr double kMaxExtrapolation = 1.0;

struct PriceDiagnostics {
  double forward = 0.0;        // f(s, x + t - s)
  double perp_variance = 0.0;  // delta_x of the pointwise perp variance
  double bernstein_sup_error = 0.0;
  double basis_residual = 0.0;
  /// Probability that the forward at exercise leaves [0, M].
  double domain_exit_prob = 0.0;
  bool extrapolated = false;
  std::string method;
};

struct PriceResult {
  double price = 0.0;
  std::optional<double> se;
  PriceDiagnostics diagnostics;
};

/// P(s, t) ~ sum_i h_i sum_k C(i, k) delta_x(E[(X_perp)^(i-k)]) f(s, x + t - s)^k.
PriceResult price_option(const PricingRequest& req, const OUProcess& p);

/// Frozen-path Monte Carlo price of the exact payoff h(delta_x(X_par + X_perp)).
PriceResult price_mc(const PricingRequest& req, const std::function<double(double)>& payoff,
                     const OUProcess& p, std::size_t n_paths, std::uint64_t seed);

}  // namespace polyproc
