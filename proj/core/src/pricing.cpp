#include "polyproc/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "polyproc/moments.hpp"
#include "polyproc/montecarlo.hpp"

namespace polyproc {

namespace {

double binomial(std::size_t n, std::size_t k) {
  double b = 1.0;
  for (std::size_t i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  return b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_request(const PricingRequest& req, const OUProcess& p) {
  if (!(req.s >= 0.0) || req.t < req.s) throw std::invalid_argument("pricing needs 0 <= s <= t");
  if (!(req.x >= 0.0)) throw std::invalid_argument("delivery offset x must be >= 0");
  const double x_max = p.geometry().grid().x_max;
  if (req.x > x_max + kMaxExtrapolation || req.x + req.t - req.s > x_max + kMaxExtrapolation) {
    throw std::invalid_argument("delivery point lies more than " + std::to_string(kMaxExtrapolation) +
                                " years beyond the curve domain");
  }
  if (req.f_s.size() != static_cast<Eigen::Index>(p.geometry().size())) {
    throw std::invalid_argument("forward curve has wrong number of grid samples");
  }
  if (req.payoff.degree > kMaxPayoffDegree) throw std::invalid_argument("payoff degree exceeds 20");
}

}  // namespace

double PayoffPolynomial::eval_bernstein(double z) const {
  const double u = z / domain_M;
  const auto n = degree;
  double total = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    total += bernstein(static_cast<Eigen::Index>(k)) * binomial(n, k) * std::pow(u, static_cast<double>(k)) *
             std::pow(1.0 - u, static_cast<double>(n - k));
  }
  return total;
}

double PayoffPolynomial::eval_monomial(double z) const {
  double acc = 0.0;
  for (Eigen::Index i = monomial.size(); i-- > 0;) acc = acc * z + monomial(i);
  return acc;
}

PayoffPolynomial from_bernstein(Eigen::VectorXd coeffs, double M) {
  if (coeffs.size() < 1) throw std::invalid_argument("need at least one Bernstein coefficient");
  const auto n = static_cast<std::size_t>(coeffs.size() - 1);
  if (n > kMaxPayoffDegree) throw std::invalid_argument("payoff degree exceeds 20");
  if (!(M > 0.0)) throw std::invalid_argument("payoff domain M must be positive");

  PayoffPolynomial p;
  p.degree = n;
  p.domain_M = M;
  p.bernstein = std::move(coeffs);
  p.monomial = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + 1));
  // Forward differences Delta^i b_0 = sum_j (-1)^(i-j) C(i, j) b_j, summed in long double.
  for (std::size_t i = 0; i <= n; ++i) {
    long double diff = 0.0L;
    for (std::size_t j = 0; j <= i; ++j) {
      const long double sign = ((i - j) % 2 == 0) ? 1.0L : -1.0L;
      diff += sign * static_cast<long double>(binomial(i, j)) * p.bernstein(static_cast<Eigen::Index>(j));
    }
    p.monomial(static_cast<Eigen::Index>(i)) = static_cast<double>(
        static_cast<long double>(binomial(n, i)) * diff / std::pow(static_cast<long double>(M), static_cast<long double>(i)));
  }
  for (int i = 0; i <= 1000; ++i) {
    const double z = M * i / 1000.0;
    p.basis_residual = std::max(p.basis_residual, std::abs(p.eval_bernstein(z) - p.eval_monomial(z)));
  }
  return p;
}

PayoffPolynomial bernstein_expand(const std::function<double(double)>& h, std::size_t n, double M) {
  if (n > kMaxPayoffDegree) throw std::invalid_argument("payoff degree exceeds 20");
  if (n == 0) throw std::invalid_argument("payoff degree must be at least 1");
  if (!(M > 0.0)) throw std::invalid_argument("payoff domain M must be positive");
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(n + 1));
  for (std::size_t k = 0; k <= n; ++k) {
    coeffs(static_cast<Eigen::Index>(k)) = h(M * static_cast<double>(k) / static_cast<double>(n));
  }
  PayoffPolynomial p = from_bernstein(std::move(coeffs), M);
  for (int i = 0; i <= 1000; ++i) {
    const double z = M * i / 1000.0;
    p.sup_error = std::max(p.sup_error, std::abs(h(z) - p.eval_bernstein(z)));
  }
  return p;
}

std::function<double(double)> vanilla_payoff(PayoffKind kind, double strike) {
  switch (kind) {
    case PayoffKind::kCall:
      return [strike](double z) { return std::max(z - strike, 0.0); };
    case PayoffKind::kPut:
      return [strike](double z) { return std::max(strike - z, 0.0); };
    case PayoffKind::kForward:
      return [strike](double z) { return z - strike; };
    case PayoffKind::kCustom:
      break;
  }
  throw std::invalid_argument("custom payoffs have no closed form");
}

PriceResult price_option(const PricingRequest& req, const OUProcess& p) {
  check_request(req, p);
  const FilipovicGeometry& geo = p.geometry();
  const std::size_t n = req.payoff.degree;

  const Algebra alg = p.algebra();
  const GaussianLaw perp = ou_perp_covariance(p, req.s, req.t);
  const auto node_moments = perp_power_moments(alg, perp, n);
  std::vector<double> mom(n + 1);
  for (std::size_t m = 0; m <= n; ++m) mom[m] = geo.eval_delta(req.x, node_moments[m].coords);

  const PointValue fwd = geo.eval_delta_checked(req.x + req.t - req.s, req.f_s);
  const double f = fwd.value;

  double price = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double hi = req.payoff.monomial(static_cast<Eigen::Index>(i));
    if (hi == 0.0) continue;
    double inner = 0.0;
    for (std::size_t k = 0; k <= i; ++k) inner += binomial(i, k) * mom[i - k] * std::pow(f, static_cast<double>(k));
    price += hi * inner;
  }

  PriceResult r;
  r.price = price;
  auto& d = r.diagnostics;
  d.forward = f;
  d.perp_variance = geo.eval_delta(req.x, perp.cov().diagonal());
  d.bernstein_sup_error = req.payoff.sup_error;
  d.basis_residual = req.payoff.basis_residual;
  d.extrapolated = fwd.extrapolated || req.x > geo.grid().x_max;
  d.method = "closed_form";
  const double sd = std::sqrt(std::max(d.perp_variance, 0.0));
  if (sd > 0.0) {
    d.domain_exit_prob = normal_cdf(-f / sd) + normal_cdf((f - req.payoff.domain_M) / sd);
  } else {
    d.domain_exit_prob = (f < 0.0 || f > req.payoff.domain_M) ? 1.0 : 0.0;
  }
  return r;
}

PriceResult price_mc(const PricingRequest& req, const std::function<double(double)>& payoff,
                     const OUProcess& p, std::size_t n_paths, std::uint64_t seed) {
  check_request(req, p);
  const FilipovicGeometry& geo = p.geometry();
  const Eigen::VectorXd parallel = geo.shift(req.t - req.s, req.f_s);
  const PointValue par_x = geo.eval_delta_checked(req.x, parallel);
  const GaussianLaw perp = ou_perp_covariance(p, req.s, req.t);
  const double M = req.payoff.domain_M;

  PriceResult r;
  auto& d = r.diagnostics;
  d.method = "monte_carlo";
  d.forward = par_x.value;
  d.extrapolated = par_x.extrapolated || req.x + req.t - req.s > geo.grid().x_max;
  d.bernstein_sup_error = req.payoff.sup_error;
  d.basis_residual = req.payoff.basis_residual;
  d.perp_variance = geo.eval_delta(req.x, perp.cov().diagonal());

  if (perp.is_degenerate()) {
    r.price = payoff(par_x.value);
    r.se = 0.0;
    d.domain_exit_prob = (par_x.value < 0.0 || par_x.value > M) ? 1.0 : 0.0;
    return r;
  }

  MCConfig cfg;
  cfg.n = n_paths;
  cfg.seed = seed;
  const MCEstimate est = monte_carlo(cfg, 2, [&](Rng& rng) {
    const double v = par_x.value + geo.eval_delta(req.x, perp.sample(rng));
    Eigen::VectorXd out(2);
    out << payoff(v), (v < 0.0 || v > M) ? 1.0 : 0.0;
    return out;
  });
  r.price = est.mean(0);
  r.se = est.se(0);
  d.domain_exit_prob = est.mean(1);
  return r;
}

}  // namespace polyproc
