#include "polyproc/moments.hpp"

#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "polyproc/montecarlo.hpp"

namespace polyproc {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::atomic<int> g_sign_flip{0};

double binomial(std::size_t n, std::size_t k) {
  double b = 1.0;
  for (std::size_t i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  return b;
}

constexpr std::size_t kMaxIsserlisOrder = 16;

// Gaussian recursion E[X_a prod_rest] = mu_a E[prod_rest] + sum_b C_ab E[prod_rest \ b],
// memoized over subsets of positions.
double isserlis(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::span<const Eigen::Index> idx) {
  const std::size_t m = idx.size();
  if (m == 0) return 1.0;
  if (m > kMaxIsserlisOrder) throw std::invalid_argument("moment order too large");
  const bool centered = mean.isZero(0.0);
  if (centered && (m % 2 == 1)) return 0.0;

  const std::uint32_t full = (1U << m) - 1U;
  std::vector<double> memo(std::size_t{1} << m, 0.0);
  memo[0] = 1.0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const int pc = std::popcount(mask);
    if (centered && (pc % 2 == 1)) continue;
    const int first = std::countr_zero(mask);
    const std::uint32_t rest = mask & ~(1U << first);
    const Eigen::Index a = idx[static_cast<std::size_t>(first)];
    double v = centered ? 0.0 : mean(a) * memo[rest];
    for (std::uint32_t r = rest; r != 0; r &= r - 1) {
      const int b = std::countr_zero(r);
      const double c = cov(a, idx[static_cast<std::size_t>(b)]);
      if (c != 0.0) v += c * memo[rest & ~(1U << b)];
    }
    memo[mask] = v;
  }
  return memo[full];
}

void decode(std::size_t flat, std::size_t dim, std::span<Eigen::Index> digits) {
  for (std::size_t s = digits.size(); s-- > 0;) {
    digits[s] = static_cast<Eigen::Index>(flat % dim);
    flat /= dim;
  }
}

std::size_t power(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) out *= base;
  return out;
}

}  // namespace

double gaussian_moment(const GaussianLaw& law, std::span<const Eigen::Index> indices) {
  for (const auto i : indices) {
    if (i < 0 || i >= law.dim()) throw std::out_of_range("moment index out of range");
  }
  return isserlis(law.mean(), law.cov(), indices);
}

MomentTensor gaussian_moment_tensor(const GaussianLaw& law, std::size_t m) {
  if (m > kMaxMomentOrder) {
    throw std::invalid_argument("moment tensor order " + std::to_string(m) + " exceeds cap " +
                                std::to_string(kMaxMomentOrder));
  }
  const auto dim = static_cast<std::size_t>(law.dim());
  MomentTensor out{m, DenseTensor::zeros(dim, m)};
  if (m == 0) {
    out.tensor.coeffs(0) = 1.0;
    return out;
  }
  std::array<Eigen::Index, kMaxMomentOrder> digits{};
  const std::span<Eigen::Index> idx(digits.data(), m);
  const bool centered = law.mean().isZero(0.0);
  if (centered && (m % 2 == 1)) return out;
  for (Eigen::Index flat = 0; flat < out.tensor.coeffs.size(); ++flat) {
    decode(static_cast<std::size_t>(flat), dim, idx);
    out.tensor.coeffs(flat) = isserlis(law.mean(), law.cov(), idx);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Words

std::size_t Word::par_count() const {
  std::size_t n = 0;
  for (const auto l : letters) n += (l == Letter::kPar) ? 1 : 0;
  return n;
}

std::vector<Word> enumerate_words(std::size_t k) {
  if (k > 30) throw std::invalid_argument("word length too large");
  std::vector<Word> words;
  words.reserve(std::size_t{1} << k);
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    Word w;
    w.letters.resize(k);
    for (std::size_t i = 0; i < k; ++i) w.letters[i] = ((mask >> i) & 1U) ? Letter::kPar : Letter::kPerp;
    words.push_back(std::move(w));
  }
  return words;
}

std::string_view to_string(Method m) { return m == Method::kExact ? "exact" : "mc"; }

// ---------------------------------------------------------------------------
// Commutative formula

std::vector<AlgebraElement> perp_power_moments(const Algebra& algebra, const GaussianLaw& law, std::size_t k) {
  if (!algebra.is_commutative()) {
    throw std::invalid_argument("perp power moments are only defined here for commutative algebras");
  }
  if (static_cast<std::size_t>(law.dim()) != algebra.dimension()) {
    throw std::invalid_argument("law dimension does not match the algebra");
  }
  std::vector<AlgebraElement> out;
  out.reserve(k + 1);
  if (algebra.tag() == AlgebraTag::kGrid) {
    for (std::size_t m = 0; m <= k; ++m) {
      AlgebraElement e = algebra.zero();
      for (Eigen::Index i = 0; i < e.coords.size(); ++i) {
        e.coords(i) = gaussian_raw_moment(law.mean()(i), law.cov()(i, i), static_cast<unsigned>(m));
      }
      out.push_back(std::move(e));
    }
    return out;
  }
  out.push_back(algebra.one());
  for (std::size_t m = 1; m <= k; ++m) {
    const DenseTensor t = KLinearMap::product(algebra, m).to_dense();
    const MomentTensor mom = gaussian_moment_tensor(law, m);
    const auto dim = static_cast<Eigen::Index>(algebra.dimension());
    AlgebraElement e = algebra.zero();
    e.coords = Eigen::Map<const RowMajor>(t.coeffs.data(), dim, t.coeffs.size() / dim) * mom.tensor.coeffs;
    out.push_back(std::move(e));
  }
  return out;
}

ConditionalMomentResult cond_moment_commutative(std::size_t k, const Algebra& algebra,
                                                const AlgebraElement& parallel,
                                                std::span<const AlgebraElement> perp_moments) {
  if (!algebra.is_commutative()) {
    throw std::invalid_argument(
        "binomial conditional moments need a commutative algebra; use cond_expectation_words");
  }
  algebra.check(parallel);
  if (perp_moments.size() < k + 1) throw std::invalid_argument("need perp moments of orders 0..k");

  const bool flip = testing::binomial_sign_flip_active();
  ConditionalMomentResult r;
  r.order_k = k;
  r.value = algebra.zero();
  AlgebraElement par_power = algebra.one();
  for (std::size_t n = 0; n <= k; ++n) {
    if (n > 0) par_power = algebra.mul(par_power, parallel);
    double coeff = binomial(k, n);
    if (flip && (n % 2 == 1)) coeff = -coeff;
    AlgebraElement term = coeff * algebra.mul(perp_moments[k - n], par_power);
    r.value = r.value + term;
    r.contributions.push_back({n, std::move(term)});
  }
  return r;
}

ConditionalMomentResult cond_moment_commutative(std::size_t k, const Algebra& algebra, const Decomposition& d) {
  const auto moments = perp_power_moments(algebra, d.perp_law, k);
  return cond_moment_commutative(k, algebra, d.parallel, moments);
}

ConditionalMomentResult cond_moment_ou(std::size_t k, const Eigen::VectorXd& f_s, double s, double t,
                                       const OUProcess& p) {
  if (t < s) throw std::invalid_argument("conditional moment needs t >= s");
  const Algebra alg = p.algebra();
  const AlgebraElement fs = alg.element(f_s);
  const auto moments = perp_power_moments(alg, ou_perp_covariance(p, s, t), k);
  const Eigen::MatrixXd shift = p.geometry().shift_matrix(t - s);

  ConditionalMomentResult r;
  r.order_k = k;
  r.value = alg.zero();
  AlgebraElement fs_power = alg.one();
  for (std::size_t n = 0; n <= k; ++n) {
    if (n > 0) fs_power = alg.mul(fs_power, fs);
    const AlgebraElement transported{AlgebraTag::kGrid, shift * fs_power.coords};
    AlgebraElement term = binomial(k, n) * alg.mul(moments[k - n], transported);
    r.value = r.value + term;
    r.contributions.push_back({n, std::move(term)});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Word expansion

ConditionalMomentResult cond_expectation_words(const KLinearMap& map, const Decomposition& d,
                                               const WordExpansionOptions& opts) {
  const std::size_t k = map.arity();
  if (k > kMaxWordArity) {
    throw std::invalid_argument("word expansion supports arity <= 5, got " + std::to_string(k));
  }
  const Algebra& alg = map.algebra();
  alg.check(d.parallel);
  if (static_cast<std::size_t>(d.perp_law.dim()) != alg.dimension()) {
    throw std::invalid_argument("perp law dimension does not match the algebra");
  }
  const auto dim = static_cast<Eigen::Index>(alg.dimension());
  const auto words = enumerate_words(k);

  ConditionalMomentResult r;
  r.order_k = k;
  r.value = alg.zero();
  for (std::size_t j = 0; j <= k; ++j) r.contributions.push_back({j, alg.zero()});

  if (map.is_dense() && !opts.force_mc) {
    r.method = Method::kExact;
    const DenseTensor& t = map.tensor();
    const auto inputs = static_cast<Eigen::Index>(power(t.dim, k));
    const Eigen::Map<const RowMajor> coeffs(t.coeffs.data(), dim, inputs);
    std::vector<std::optional<MomentTensor>> moment_cache(k + 1);
    std::array<Eigen::Index, kMaxWordArity> digits{};
    for (const auto& w : words) {
      const std::size_t p = k - w.par_count();
      if (!moment_cache[p]) moment_cache[p] = gaussian_moment_tensor(d.perp_law, p);
      const Eigen::VectorXd& mom = moment_cache[p]->tensor.coeffs;
      Eigen::VectorXd arg(inputs);
      for (Eigen::Index flat = 0; flat < inputs; ++flat) {
        decode(static_cast<std::size_t>(flat), t.dim, std::span(digits.data(), k));
        double v = 1.0;
        std::size_t perp_flat = 0;
        for (std::size_t s = 0; s < k && v != 0.0; ++s) {
          if (w.letters[s] == Letter::kPar) {
            v *= d.parallel.coords(digits[s]);
          } else {
            perp_flat = perp_flat * t.dim + static_cast<std::size_t>(digits[s]);
          }
        }
        arg(flat) = (v == 0.0) ? 0.0 : v * mom(static_cast<Eigen::Index>(perp_flat));
      }
      r.contributions[w.par_count()].value.coords.noalias() += coeffs * arg;
    }
    for (const auto& c : r.contributions) r.value = r.value + c.value;
    return r;
  }

  r.method = Method::kMonteCarlo;
  const Eigen::Index width = dim * static_cast<Eigen::Index>(k + 2);
  MCConfig cfg;
  cfg.n = opts.n_mc;
  cfg.seed = opts.seed;
  const MCEstimate est = monte_carlo(cfg, width, [&](Rng& rng) {
    const AlgebraElement z{alg.tag(), d.perp_law.sample(rng)};
    Eigen::VectorXd out = Eigen::VectorXd::Zero(width);
    std::vector<AlgebraElement> args(k);
    for (const auto& w : words) {
      for (std::size_t s = 0; s < k; ++s) args[s] = (w.letters[s] == Letter::kPar) ? d.parallel : z;
      const Eigen::VectorXd v = map.eval(args).coords;
      out.head(dim) += v;
      out.segment(dim * static_cast<Eigen::Index>(1 + w.par_count()), dim) += v;
    }
    return out;
  });
  r.value.coords = est.mean.head(dim);
  r.se = est.se.head(dim);
  for (std::size_t j = 0; j <= k; ++j) {
    r.contributions[j].value.coords = est.mean.segment(dim * static_cast<Eigen::Index>(1 + j), dim);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Norm moments

double norm_even_moment(std::size_t k, const GaussianLaw& law, const Eigen::MatrixXd& gram) {
  if (2 * k > kMaxMomentOrder) {
    throw std::invalid_argument("even norm moment order 2k = " + std::to_string(2 * k) + " exceeds cap 8");
  }
  if (gram.rows() != law.dim() || gram.cols() != law.dim()) {
    throw std::invalid_argument("Gram matrix does not match the law");
  }
  if (k == 0) return 1.0;
  // Coordinates in an orthonormal basis: y = L^T x with G = L L^T.
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("Gram matrix is not positive definite");
  const Eigen::MatrixXd lt = llt.matrixU();
  const Eigen::VectorXd mean_y = lt * law.mean();
  const Eigen::MatrixXd cov_y = lt * law.cov() * lt.transpose();

  // E[(sum_i y_i^2)^k] = sum over multisets {i_1 <= ... <= i_k} of the
  // multinomial count times E[y_{i_1}^2 ... y_{i_k}^2].
  const Eigen::Index n = law.dim();
  std::vector<Eigen::Index> pick(k, 0);
  std::vector<Eigen::Index> idx(2 * k);
  const double k_fact = std::tgamma(static_cast<double>(k) + 1.0);
  double total = 0.0;
  while (true) {
    double denom = 1.0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= k; ++i) {
      if (i < k && pick[i] == pick[i - 1]) {
        ++run;
      } else {
        denom *= std::tgamma(static_cast<double>(run) + 1.0);
        run = 1;
      }
    }
    for (std::size_t i = 0; i < k; ++i) idx[2 * i] = idx[2 * i + 1] = pick[i];
    total += (k_fact / denom) * isserlis(mean_y, cov_y, idx);

    // next nondecreasing tuple
    std::size_t pos = k;
    while (pos > 0 && pick[pos - 1] == n - 1) --pos;
    if (pos == 0) break;
    ++pick[pos - 1];
    for (std::size_t i = pos; i < k; ++i) pick[i] = pick[pos - 1];
  }
  return total;
}

double norm_even_moment(std::size_t k, const GaussianLaw& law, const FilipovicGeometry& geometry) {
  return norm_even_moment(k, law, geometry.gram());
}

double norm_odd_moment_from_complement(std::size_t k, const std::function<double(double)>& one_minus_laplace,
                                       const OddMomentQuadrature& quad) {
  const double alpha = static_cast<double>(2 * k + 1) / static_cast<double>(2 * k + 2);
  const double prefactor = alpha / std::tgamma(1.0 - alpha);

  auto tail = [&](double x) {
    const double v = one_minus_laplace(x);
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) {
      throw std::invalid_argument("Laplace estimator complement " + std::to_string(v) + " outside [0, 1]");
    }
    return std::clamp(v, 0.0, 1.0);
  };

  // Locate the scale where 1 - phi reaches half its limit.
  const double tail_far = tail(1e150);
  if (tail_far <= 0.0) return 0.0;  // ||X|| = 0 almost surely
  const double target = 0.5 * tail_far;
  double x_half = 1.0;
  if (tail(x_half) < target) {
    while (x_half < 1e150 && tail(x_half) < target) x_half *= 2.0;
  } else {
    while (x_half > 1e-300 && tail(x_half) >= target) x_half *= 0.5;
  }

  const double eps = 1e-7 * x_half;
  const double x_hi = 1e14 * x_half;

  // [0, eps]: 1 - phi(x) ~ x E||X||^(2k+2).
  const double slope = tail(eps) / eps;
  const double lower = slope * std::pow(eps, 1.0 - alpha) / (1.0 - alpha);

  // [eps, x_hi] in v = log x: integrand (1 - phi(e^v)) e^(-alpha v).
  auto integrand = [&](double v) { return tail(std::exp(v)) * std::exp(-alpha * v); };
  double err = 0.0;
  const double middle = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, std::log(eps), std::log(x_hi), quad.max_depth, quad.tolerance, &err);

  // [x_hi, inf): 1 - phi is nearly flat there.
  const double upper = tail(x_hi) * std::pow(x_hi, -alpha) / alpha;

  return prefactor * (lower + middle + upper);
}

double norm_odd_moment(std::size_t k, const std::function<double(double)>& laplace,
                       const OddMomentQuadrature& quad) {
  return norm_odd_moment_from_complement(
      k,
      [&](double x) {
        const double v = laplace(x);
        if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) {
          throw std::invalid_argument("Laplace estimator returned " + std::to_string(v) + " outside [0, 1]");
        }
        return 1.0 - v;
      },
      quad);
}

namespace testing {

ScopedBinomialSignFlip::ScopedBinomialSignFlip() { g_sign_flip.fetch_add(1); }
ScopedBinomialSignFlip::~ScopedBinomialSignFlip() { g_sign_flip.fetch_sub(1); }
bool binomial_sign_flip_active() { return g_sign_flip.load() > 0; }

}  // namespace testing

}  // namespace polyproc
