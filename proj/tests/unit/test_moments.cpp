#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "polyproc/counterexample.hpp"
#include "polyproc/moments.hpp"
#include "polyproc/montecarlo.hpp"
#include "polyproc/oracle.hpp"

namespace polyproc {
namespace {

using test::to_matrix;
using test::to_row_major;

double binom(std::size_t k, std::size_t n) {
  return std::round(std::tgamma(static_cast<double>(k) + 1) /
                    (std::tgamma(static_cast<double>(n) + 1) * std::tgamma(static_cast<double>(k - n) + 1)));
}

GaussianLaw random_law(Rng& rng, Eigen::Index dim, double mean_scale) {
  Eigen::MatrixXd a(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) a.col(j) = 0.5 * standard_normal(rng, dim);
  Eigen::VectorXd mean = mean_scale * standard_normal(rng, dim);
  return {mean, a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim)};
}

Functional pointwise_power(std::size_t k) {
  return [k](const AlgebraElement& x) { return Eigen::VectorXd(x.coords.array().pow(static_cast<double>(k))); };
}

TEST(Moments, IsserlisMatchesBruteForcePairings) {
  Rng rng(1);
  const GaussianLaw law = random_law(rng, 3, 0.7);
  std::uniform_int_distribution<Eigen::Index> pick(0, 2);
  for (std::size_t m = 1; m <= 6; ++m) {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<Eigen::Index> idx(m);
      for (auto& i : idx) i = pick(rng);
      const double expected = test::brute_force_gaussian_moment(law.mean(), law.cov(), idx);
      EXPECT_NEAR(gaussian_moment(law, idx), expected, 1e-12 * (1.0 + std::abs(expected))) << "m=" << m;
    }
  }
}

TEST(Moments, SecondOrderTensorIsCovPlusMeanOuter) {
  Rng rng(2);
  const GaussianLaw law = random_law(rng, 4, 1.0);
  const MomentTensor t = gaussian_moment_tensor(law, 2);
  const Eigen::MatrixXd expected = law.cov() + law.mean() * law.mean().transpose();
  EXPECT_LT((to_matrix(t.tensor.coeffs, 4) - expected).cwiseAbs().maxCoeff(), 1e-13);
  const MomentTensor first = gaussian_moment_tensor(law, 1);
  EXPECT_LT((first.tensor.coeffs - law.mean()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Moments, IdentityCovarianceFourthMomentsByQuadrature) {
  const GaussianLaw law = GaussianLaw::centered(Eigen::Matrix2d::Identity());
  const MomentTensor t = gaussian_moment_tensor(law, 4);
  const double x1sq_x2sq = test::gauss_hermite_expectation(2, 5, [](const Eigen::VectorXd& z) {
    return z(0) * z(0) * z(1) * z(1);
  });
  const double x1_4 = test::gauss_hermite_expectation(2, 5, [](const Eigen::VectorXd& z) { return std::pow(z(0), 4); });
  EXPECT_NEAR(x1sq_x2sq, 1.0, 1e-12);
  EXPECT_NEAR(x1_4, 3.0, 1e-12);
  // Flat index of (0, 0, 1, 1) and (0, 0, 0, 0) in a dim-2 tensor.
  EXPECT_NEAR(t.tensor.coeffs(3), x1sq_x2sq, 1e-12);
  EXPECT_NEAR(t.tensor.coeffs(0), x1_4, 1e-12);
}

TEST(Moments, OddCenteredTensorVanishes) {
  Rng rng(3);
  const GaussianLaw law = random_law(rng, 3, 0.0);
  EXPECT_EQ(gaussian_moment_tensor(law, 3).tensor.coeffs, Eigen::VectorXd::Zero(27));
  EXPECT_EQ(gaussian_moment_tensor(law, 5).tensor.coeffs, Eigen::VectorXd::Zero(243));
}

TEST(Moments, TensorSymmetricUnderPermutation) {
  Rng rng(4);
  const GaussianLaw law = random_law(rng, 3, 0.5);
  const MomentTensor t = gaussian_moment_tensor(law, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) {
        const double v = t.tensor.coeffs(i * 9 + j * 3 + k);
        EXPECT_NEAR(t.tensor.coeffs(j * 9 + i * 3 + k), v, 1e-14 * (1 + std::abs(v)));
        EXPECT_NEAR(t.tensor.coeffs(k * 9 + j * 3 + i), v, 1e-14 * (1 + std::abs(v)));
      }
    }
  }
}

TEST(Moments, TensorOrderCap) {
  const GaussianLaw law = GaussianLaw::centered(Eigen::Matrix2d::Identity());
  EXPECT_NO_THROW(gaussian_moment_tensor(law, 8));
  EXPECT_THROW(gaussian_moment_tensor(law, 9), std::invalid_argument);
}

TEST(Moments, WordCountsAreBinomial) {
  for (std::size_t k = 0; k <= 5; ++k) {
    const auto words = enumerate_words(k);
    EXPECT_EQ(words.size(), std::size_t{1} << k);
    std::vector<double> counts(k + 1, 0.0);
    for (const auto& w : words) {
      EXPECT_EQ(w.letters.size(), k);
      counts[w.par_count()] += 1.0;
    }
    for (std::size_t n = 0; n <= k; ++n) EXPECT_EQ(counts[n], binom(k, n));
  }
}

class OUFixture : public ::testing::Test {
 protected:
  OUProcess p = OUProcess::exponential_kernel(FilipovicGeometry{});
  Algebra alg = Algebra::grid();
  double s = 0.5;
  double t = 1.0;
  Eigen::VectorXd f0 = Eigen::VectorXd::Constant(16, 1.0) + 0.1 * FilipovicGeometry{}.nodes();
  FrozenScenario scenario = freeze(p, f0, s, 0.05, 5);
  Decomposition d = decompose(p, scenario.path_to_s, s, t);
};

TEST_F(OUFixture, FirstMomentIsParallel) {
  const auto r = cond_moment_commutative(1, alg, d);
  EXPECT_EQ(r.value.coords, d.parallel.coords);
  EXPECT_EQ(r.method, Method::kExact);
}

TEST_F(OUFixture, SecondMomentAddsNodeVariance) {
  const auto r = cond_moment_commutative(2, alg, d);
  const Eigen::VectorXd expected = d.parallel.coords.array().square().matrix() + d.perp_law.cov().diagonal();
  EXPECT_LT((r.value.coords - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST_F(OUFixture, ThirdMomentAgreesWithFrozenPathMC) {
  const auto r = cond_moment_commutative(3, alg, d);
  const MCEstimate mc = conditional_mc(p, scenario, pointwise_power(3), t, 200000);
  EXPECT_TRUE(tolerance_gate(mc, r.value.coords, 5.0).pass);
}

TEST_F(OUFixture, ContributionsSumToValueAndRespectDegree) {
  for (std::size_t k = 0; k <= 5; ++k) {
    const auto r = cond_moment_commutative(k, alg, d);
    EXPECT_EQ(r.order_k, k);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(16);
    for (const auto& c : r.contributions) {
      EXPECT_LE(c.order, k);
      sum += c.value.coords;
    }
    EXPECT_LT((sum - r.value.coords).cwiseAbs().maxCoeff(), 1e-12 * (1 + r.value.coords.cwiseAbs().maxCoeff()));
  }
}

TEST_F(OUFixture, OUFormulaFirstMomentIsShift) {
  const Eigen::VectorXd fs = scenario.path_to_s.at(s);
  EXPECT_EQ(cond_moment_ou(1, fs, s, t, p).value.coords, p.geometry().shift(t - s, fs));
  EXPECT_THROW(cond_moment_ou(1, fs, t, s, p), std::invalid_argument);
}

TEST_F(OUFixture, OUFormulaMatchesDecompositionAtGridMultiples) {
  const Eigen::VectorXd fs = scenario.path_to_s.at(s);
  const double t_grid = s + 2 * p.geometry().grid().dx();
  const Decomposition dg = decompose(p, scenario.path_to_s, s, t_grid);
  for (std::size_t k = 0; k <= 5; ++k) {
    const Eigen::VectorXd a = cond_moment_ou(k, fs, s, t_grid, p).value.coords;
    const Eigen::VectorXd b = cond_moment_commutative(k, alg, dg).value.coords;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + b.cwiseAbs().maxCoeff())) << "k=" << k;
  }
  const Eigen::VectorXd sq = fs.cwiseProduct(fs);
  const Eigen::VectorXd residual =
      p.geometry().shift(t_grid - s, sq) - p.geometry().shift(t_grid - s, fs).cwiseProduct(p.geometry().shift(t_grid - s, fs));
  EXPECT_EQ(p.geometry().norm(residual), 0.0);
}

TEST_F(OUFixture, TowerProperty) {
  const double dx = p.geometry().grid().dx();
  const double r0 = s;
  const double s1 = r0 + 2 * dx;
  const double t1 = s1 + 2 * dx;
  const Eigen::VectorXd fr = scenario.path_to_s.at(r0);
  const GaussianLaw to_s1 = ou_perp_covariance(p, r0, s1);
  const auto moments_s1_t1 = perp_power_moments(alg, ou_perp_covariance(p, s1, t1), 4);
  const Eigen::VectorXd transported = p.geometry().shift(s1 - r0, fr);
  for (std::size_t k = 1; k <= 4; ++k) {
    MCConfig cfg;
    cfg.n = 20000;
    cfg.seed = 40 + k;
    const MCEstimate inner = monte_carlo(cfg, 16, [&](Rng& rng) {
      const Eigen::VectorXd xs = transported + to_s1.sample(rng);
      const AlgebraElement par{AlgebraTag::kGrid, p.geometry().shift(t1 - s1, xs)};
      return cond_moment_commutative(k, alg, par, moments_s1_t1).value.coords;
    });
    const Eigen::VectorXd direct = cond_moment_ou(k, fr, r0, t1, p).value.coords;
    EXPECT_TRUE(tolerance_gate(inner, direct, 5.0).pass) << "k=" << k;
  }
}

TEST(Moments, NonCommutativeRejectedByBinomialFormula) {
  const Algebra m = Algebra::matrix(2);
  const Decomposition d{m.one(), GaussianLaw::centered(Eigen::Matrix4d::Identity())};
  EXPECT_THROW(cond_moment_commutative(2, m, d), std::invalid_argument);
}

TEST(Moments, LatticeDriftedLawAgainstMC) {
  const Algebra lat = Algebra::lattice(4);
  Rng rng(6);
  const GaussianLaw law = random_law(rng, 5, 0.3);
  const Decomposition d{lat.element(standard_normal(rng, 5)), law};
  const auto r = cond_moment_commutative(3, lat, d);
  const MCEstimate mc = conditional_mc(
      d,
      [&](const AlgebraElement& x) { return lat.mul(lat.mul(x, x), x).coords; },
      200000, 9);
  EXPECT_TRUE(tolerance_gate(mc, r.value.coords, 5.0).pass);
}

TEST(Moments, GridWordsAgreeWithBinomialFormula) {
  const OUProcess p = OUProcess::exponential_kernel(FilipovicGeometry{});
  const Algebra alg = Algebra::grid();
  const Decomposition d{alg.element(Eigen::VectorXd::Constant(16, 1.0)), ou_perp_covariance(p, 0.0, 0.5)};
  for (std::size_t k = 1; k <= 4; ++k) {
    WordExpansionOptions opts;
    opts.n_mc = 50000;
    opts.seed = 100 + k;
    const auto words = cond_expectation_words(KLinearMap::product(alg, k), d, opts);
    EXPECT_EQ(words.method, Method::kMonteCarlo);
    ASSERT_TRUE(words.se.has_value());
    MCEstimate as_estimate{words.value.coords, *words.se, opts.n_mc};
    EXPECT_TRUE(tolerance_gate(as_estimate, cond_moment_commutative(k, alg, d).value.coords, 5.0).pass) << "k=" << k;
  }
}

TEST(Moments, MatrixMixedWordIsSandwich) {
  const Algebra m = Algebra::matrix(2);
  const double mu = 0.5;
  const double var = 1.0;
  const Eigen::MatrixXd y = (Eigen::Matrix2d() << 1.0, -2.0, 0.5, 3.0).finished();
  const Decomposition d{m.element(to_row_major(y)),
                        GaussianLaw(Eigen::VectorXd::Constant(4, mu), var * Eigen::MatrixXd::Identity(4, 4))};
  const KLinearMap cube = KLinearMap::dense(m, 3, KLinearMap::product(m, 3).to_dense().coeffs, 1.0);
  const auto r = cond_expectation_words(cube, d);
  EXPECT_EQ(r.method, Method::kExact);
  const EntryMoments em = EntryMoments::gaussian(mu, var);
  const Eigen::MatrixXd delta_sq = operator_L(Eigen::Matrix2d::Identity(), em);
  // One PAR letter: Y D D + D Y D + D D Y.
  const Eigen::MatrixXd j1 = y * delta_sq + operator_L(y, em) + delta_sq * y;
  EXPECT_LT((to_matrix(r.contributions[1].value.coords, 2) - j1).cwiseAbs().maxCoeff(), 1e-12);
  // Two PAR letters: Y Y E[D] + Y E[D] Y + E[D] Y Y.
  const Eigen::MatrixXd ed = Eigen::Matrix2d::Constant(mu);
  const Eigen::MatrixXd j2 = y * y * ed + y * ed * y + ed * y * y;
  EXPECT_LT((to_matrix(r.contributions[2].value.coords, 2) - j2).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((to_matrix(r.contributions[3].value.coords, 2) - y * y * y).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((to_matrix(r.contributions[0].value.coords, 2) - triple_sandwich(Eigen::Matrix2d::Identity(),
                                                                             Eigen::Matrix2d::Identity(), em))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(Moments, ZeroParallelLeavesOnlyAllPerpWord) {
  const Algebra m = Algebra::matrix(2);
  const double var = 0.7;
  const Decomposition d{m.zero(), GaussianLaw::centered(var * Eigen::MatrixXd::Identity(4, 4))};
  const KLinearMap sq = KLinearMap::dense(m, 2, KLinearMap::product(m, 2).to_dense().coeffs, 1.0);
  const auto r = cond_expectation_words(sq, d);
  EXPECT_EQ(r.contributions[1].value.coords, Eigen::VectorXd::Zero(4));
  EXPECT_EQ(r.contributions[2].value.coords, Eigen::VectorXd::Zero(4));
  const Eigen::MatrixXd expected = operator_L(Eigen::Matrix2d::Identity(), EntryMoments::gaussian(0.0, var));
  EXPECT_LT((to_matrix(r.value.coords, 2) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Moments, WordExpansionLinearInTheMap) {
  Rng rng(7);
  std::uniform_int_distribution<int> coef(-3, 3);
  const Algebra m = Algebra::matrix(2);
  Eigen::VectorXd c1(64);
  Eigen::VectorXd c2(64);
  for (Eigen::Index i = 0; i < 64; ++i) {
    c1(i) = coef(rng);
    c2(i) = coef(rng);
  }
  const KLinearMap l1 = KLinearMap::dense(m, 2, c1, 100.0);
  const KLinearMap l2 = KLinearMap::dense(m, 2, c2, 100.0);
  const Decomposition d{m.element(Eigen::Vector4d(1, -2, 0, 3)),
                        GaussianLaw(Eigen::Vector4d(1, 0, -1, 2), 2.0 * Eigen::MatrixXd::Identity(4, 4))};
  const Eigen::VectorXd combined = cond_expectation_words(l1.combine(2.0, l2, -3.0), d).value.coords;
  const Eigen::VectorXd separate =
      2.0 * cond_expectation_words(l1, d).value.coords - 3.0 * cond_expectation_words(l2, d).value.coords;
  EXPECT_EQ(combined, separate);
}

TEST(Moments, ExactAndMonteCarloWordRoutesAgree) {
  const Algebra m = Algebra::matrix(2);
  const Decomposition d{m.element(Eigen::Vector4d(0.5, 1, -1, 0.2)),
                        GaussianLaw(Eigen::VectorXd::Constant(4, 0.3), 0.5 * Eigen::MatrixXd::Identity(4, 4))};
  const KLinearMap cube = KLinearMap::dense(m, 3, KLinearMap::product(m, 3).to_dense().coeffs, 1.0);
  const auto exact = cond_expectation_words(cube, d);
  WordExpansionOptions opts;
  opts.force_mc = true;
  opts.n_mc = 100000;
  const auto mc = cond_expectation_words(cube, d, opts);
  ASSERT_TRUE(mc.se.has_value());
  EXPECT_TRUE(tolerance_gate(MCEstimate{mc.value.coords, *mc.se, opts.n_mc}, exact.value.coords, 5.0).pass);
}

TEST(Moments, WordArityCap) {
  const Algebra m = Algebra::matrix(2);
  const Decomposition d{m.zero(), GaussianLaw::centered(Eigen::Matrix4d::Identity())};
  EXPECT_THROW(cond_expectation_words(KLinearMap::product(m, 6), d), std::invalid_argument);
}

TEST(Moments, EvenNormMomentsMatchTraceIdentities) {
  const FilipovicGeometry geo;
  const GaussianLaw law = ou_perp_covariance(OUProcess::exponential_kernel(geo), 0.0, 1.0);
  const Eigen::MatrixXd gc = geo.gram() * law.cov();
  const double tr1 = gc.trace();
  const double tr2 = (gc * gc).trace();
  EXPECT_NEAR(norm_even_moment(1, law, geo), tr1, 1e-12 * tr1);
  EXPECT_NEAR(norm_even_moment(2, law, geo), tr1 * tr1 + 2.0 * tr2, 1e-10 * (tr1 * tr1 + 2.0 * tr2));
}

TEST(Moments, EvenNormMomentsAgainstMC) {
  const FilipovicGeometry geo;
  const GaussianLaw perp = ou_perp_covariance(OUProcess::exponential_kernel(geo), 0.0, 1.0);
  const GaussianLaw law(0.05 * geo.nodes(), perp.cov());
  MCConfig cfg;
  cfg.n = 100000;
  cfg.seed = 8;
  const MCEstimate mc = monte_carlo(cfg, 4, [&](Rng& rng) {
    const double r2 = std::pow(geo.hilbert_norm(law.sample(rng)), 2.0);
    return Eigen::Vector4d(r2, r2 * r2, r2 * r2 * r2, r2 * r2 * r2 * r2);
  });
  Eigen::Vector4d claim;
  for (std::size_t k = 1; k <= 4; ++k) claim(static_cast<Eigen::Index>(k - 1)) = norm_even_moment(k, law, geo);
  EXPECT_TRUE(tolerance_gate(mc, claim, 5.0).pass);
  EXPECT_THROW(norm_even_moment(5, law, geo), std::invalid_argument);
}

TEST(Moments, EvenNormMomentOfZeroLaw) {
  const FilipovicGeometry geo;
  const GaussianLaw zero = GaussianLaw::degenerate(Eigen::VectorXd::Zero(16));
  for (std::size_t k = 1; k <= 4; ++k) EXPECT_EQ(norm_even_moment(k, zero, geo), 0.0);
}

TEST(Moments, OddNormMomentOfStandardNormal) {
  const double v = norm_odd_moment(0, [](double x) { return 1.0 / std::sqrt(1.0 + 2.0 * x); });
  EXPECT_NEAR(v, std::sqrt(2.0 / std::numbers::pi), 1e-4);
  EXPECT_NEAR(v, 0.79788, 1e-4);
}

TEST(Moments, OddNormMomentDegenerateAndInvalid) {
  EXPECT_EQ(norm_odd_moment(0, [](double) { return 1.0; }), 0.0);
  EXPECT_THROW(norm_odd_moment(0, [](double) { return 1.5; }), std::invalid_argument);
  EXPECT_THROW(norm_odd_moment(0, [](double) { return -0.1; }), std::invalid_argument);
}

TEST(Moments, OddNormMomentThirdAbsoluteMomentFromSamples) {
  const Algebra s = Algebra::matrix(1);
  const Decomposition d{s.zero(), GaussianLaw::centered(Eigen::MatrixXd::Identity(1, 1))};
  const LaplaceEstimator phi =
      laplace_estimator(d, [](const AlgebraElement& x) { return std::abs(x.coords(0)); }, 4, 100000, 3);
  const double v = norm_odd_moment_from_complement(1, [&](double x) { return phi.complement(x); });
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const double r4 : phi.samples()) {
    const double c = std::pow(r4, 0.75);
    sum += c;
    sum_sq += c * c;
  }
  const double n = static_cast<double>(phi.size());
  const double se = std::sqrt((sum_sq / n - (sum / n) * (sum / n)) / n);
  EXPECT_LE(std::abs(v - 2.0 * std::sqrt(2.0 / std::numbers::pi)), 5.0 * se);
}

TEST(Moments, OddNormMomentGridLaplaceVsDirect) {
  const OUProcess p = OUProcess::exponential_kernel(FilipovicGeometry{});
  const Algebra alg = Algebra::grid();
  const Decomposition d{alg.element(Eigen::VectorXd::Constant(16, 0.1)), ou_perp_covariance(p, 0.0, 1.0)};
  const FilipovicGeometry& geo = p.geometry();
  const NormFn norm = [&](const AlgebraElement& x) { return geo.hilbert_norm(x.coords); };
  const LaplaceEstimator phi = laplace_estimator(d, norm, 2, 100000, derive_seed(12, 0));
  const double via_laplace = norm_odd_moment_from_complement(0, [&](double x) { return phi.complement(x); });
  const MCEstimate direct =
      conditional_mc(d, [&](const AlgebraElement& x) { return Eigen::VectorXd::Constant(1, norm(x)); }, 100000,
                     derive_seed(12, 1));
  MCEstimate laplace_est{Eigen::VectorXd::Constant(1, via_laplace), Eigen::VectorXd::Constant(1, 0.0), phi.size()};
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const double r2 : phi.samples()) {
    sum += std::sqrt(r2);
    sum_sq += r2;
  }
  const double n = static_cast<double>(phi.size());
  laplace_est.se(0) = std::sqrt((sum_sq / n - (sum / n) * (sum / n)) / n);
  EXPECT_TRUE(tolerance_gate(laplace_est, direct, 5.0).pass);
}

TEST(Moments, SignFlipHookBreaksTheFormula) {
  const Algebra alg = Algebra::grid();
  const Decomposition d{alg.element(Eigen::VectorXd::Constant(16, 1.0)),
                        GaussianLaw::centered(0.01 * Eigen::MatrixXd::Identity(16, 16))};
  const Eigen::VectorXd good = cond_moment_commutative(1, alg, d).value.coords;
  {
    const testing::ScopedBinomialSignFlip flip;
    EXPECT_TRUE(testing::binomial_sign_flip_active());
    EXPECT_NE(cond_moment_commutative(1, alg, d).value.coords, good);
  }
  EXPECT_FALSE(testing::binomial_sign_flip_active());
  EXPECT_EQ(cond_moment_commutative(1, alg, d).value.coords, good);
}

TEST(Moments, GaussianRawMomentMatchesQuadrature) {
  for (unsigned n = 0; n <= 8; ++n) {
    const double expected = test::gauss_hermite_expectation(1, 8, [&](const Eigen::VectorXd& z) {
      return std::pow(0.4 + 1.3 * z(0), static_cast<double>(n));
    });
    EXPECT_NEAR(gaussian_raw_moment(0.4, 1.69, n), expected, 1e-10 * (1.0 + std::abs(expected))) << n;
  }
}

}  // namespace
}  // namespace polyproc
