#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "polyproc/multilinear.hpp"
#include "polyproc/random.hpp"

namespace polyproc {
namespace {

Eigen::VectorXd integer_vec(Rng& rng, Eigen::Index n, int lo = -3, int hi = 3) {
  std::uniform_int_distribution<int> dist(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

double factorial_ratio(std::size_t k, std::size_t n) {
  double r = 1.0;
  for (std::size_t i = k - n + 1; i <= k; ++i) r *= static_cast<double>(i);
  return r;
}

TEST(Multilinear, ProductMapCubeIsPointwiseCube) {
  const Algebra a = Algebra::grid();
  Rng rng(1);
  const auto g = a.element(standard_normal(rng, 16));
  const KLinearMap cube = KLinearMap::product(a, 3);
  const std::vector<AlgebraElement> args(3, g);
  EXPECT_EQ(cube.eval(args).coords, g.coords.array().cube().matrix());
}

TEST(Multilinear, ZeroTensorGivesZero) {
  const Algebra a = Algebra::matrix(2);
  const KLinearMap zero = KLinearMap::dense(a, 2, Eigen::VectorXd::Zero(64), 0.0);
  Rng rng(2);
  const std::vector<AlgebraElement> args{a.element(standard_normal(rng, 4)), a.element(standard_normal(rng, 4))};
  EXPECT_EQ(zero.eval(args).coords, Eigen::VectorXd::Zero(4));
}

TEST(Multilinear, ScalarDenseMapIsScaledProduct) {
  const Algebra a = Algebra::matrix(1);
  ASSERT_EQ(a.dimension(), 1u);
  const double c = 2.5;
  for (std::size_t k = 1; k <= 5; ++k) {
    const KLinearMap m = KLinearMap::dense(a, k, Eigen::VectorXd::Constant(1, c), c);
    std::vector<AlgebraElement> args;
    double direct = c;
    for (std::size_t i = 0; i < k; ++i) {
      const double x = 0.5 + static_cast<double>(i);
      args.push_back(a.element(Eigen::VectorXd::Constant(1, x)));
      direct *= x;
    }
    EXPECT_DOUBLE_EQ(m.eval(args).coords(0), direct);
  }
}

TEST(Multilinear, ArityMismatchRejected) {
  const Algebra a = Algebra::grid();
  const KLinearMap m = KLinearMap::product(a, 3);
  const std::vector<AlgebraElement> two(2, a.one());
  EXPECT_THROW(m.eval(two), std::invalid_argument);
  EXPECT_THROW(KLinearMap::dense(a, 2, Eigen::VectorXd::Zero(10), 1.0), std::invalid_argument);
  EXPECT_THROW(KLinearMap::product(a, 0), std::invalid_argument);
}

TEST(Multilinear, LinearInEachSlot) {
  Rng rng(3);
  const Algebra mat = Algebra::matrix(2);
  const std::vector<KLinearMap> maps{
      KLinearMap::product(Algebra::grid(), 3),
      KLinearMap::product(mat, 3),
      KLinearMap::dense(mat, 3, standard_normal(rng, 256), 1.0),
      KLinearMap::product(Algebra::lattice(5), 3),
  };
  for (const auto& m : maps) {
    const Algebra& a = m.algebra();
    const auto n = static_cast<Eigen::Index>(a.dimension());
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<AlgebraElement> args;
      for (std::size_t i = 0; i < 3; ++i) args.push_back(a.element(standard_normal(rng, n)));
      const auto x = a.element(standard_normal(rng, n));
      const auto y = a.element(standard_normal(rng, n));
      const std::size_t slot = static_cast<std::size_t>(rep) % 3;
      const double alpha = 1.7;
      const double beta = -0.4;
      auto with = [&](const AlgebraElement& v) {
        auto copy = args;
        copy[slot] = v;
        return m.eval(copy).coords;
      };
      const Eigen::VectorXd lhs = with(alpha * x + beta * y);
      const Eigen::VectorXd rhs = alpha * with(x) + beta * with(y);
      EXPECT_LE((lhs - rhs).norm(), 1e-12 * std::max(1.0, rhs.norm()) * 10.0);
    }
  }
}

TEST(Multilinear, ProductMapBoundedByOne) {
  Rng rng(4);
  for (const Algebra& a : {Algebra::grid(), Algebra::matrix(3), Algebra::lattice(5)}) {
    const KLinearMap m = KLinearMap::product(a, 3);
    EXPECT_DOUBLE_EQ(m.bound(), 1.0);
    const auto n = static_cast<Eigen::Index>(a.dimension());
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<AlgebraElement> args;
      double prod = 1.0;
      for (int i = 0; i < 3; ++i) {
        args.push_back(a.element(standard_normal(rng, n)));
        prod *= a.norm(args.back());
      }
      EXPECT_LE(a.norm(m.eval(args)), m.bound() * prod * (1.0 + 1e-9));
    }
    EXPECT_LE(estimate_bound(m, 500, 9), m.bound() * (1.0 + 1e-9));
  }
}

TEST(Multilinear, DenseExpansionMatchesProductMap) {
  Rng rng(5);
  const Algebra a = Algebra::matrix(2);
  const KLinearMap p = KLinearMap::product(a, 2);
  const KLinearMap d = KLinearMap::dense(a, 2, p.to_dense().coeffs, 1.0);
  const std::vector<AlgebraElement> args{a.element(standard_normal(rng, 4)), a.element(standard_normal(rng, 4))};
  EXPECT_LT((p.eval(args).coords - d.eval(args).coords).norm(), 1e-14);
}

TEST(Multilinear, DenseCapEnforced) {
  const KLinearMap big = KLinearMap::product(Algebra::matrix(4), 6);
  EXPECT_THROW(big.to_dense(), std::length_error);
}

TEST(Multilinear, CombineIsLinear) {
  Rng rng(6);
  const Algebra a = Algebra::matrix(2);
  const KLinearMap l1 = KLinearMap::product(a, 2);
  const KLinearMap l2 = KLinearMap::dense(a, 2, integer_vec(rng, 64), 10.0);
  const KLinearMap c = l1.combine(2.0, l2, -3.0);
  const std::vector<AlgebraElement> args{a.element(integer_vec(rng, 4)), a.element(integer_vec(rng, 4))};
  EXPECT_EQ(c.eval(args).coords, 2.0 * l1.eval(args).coords - 3.0 * l2.eval(args).coords);
}

TEST(Multilinear, ScalarDerivativeMatchesClosedForm) {
  const Algebra a = Algebra::matrix(1);
  for (std::size_t k = 1; k <= 5; ++k) {
    const Monomial m{KLinearMap::product(a, k)};
    const double x = 1.5;
    const auto u = a.element(Eigen::VectorXd::Constant(1, x));
    for (std::size_t n = 1; n <= k; ++n) {
      std::vector<AlgebraElement> dirs;
      double hprod = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double h = 0.5 + 0.25 * static_cast<double>(j);
        dirs.push_back(a.element(Eigen::VectorXd::Constant(1, h)));
        hprod *= h;
      }
      const double expected = factorial_ratio(k, n) * std::pow(x, static_cast<double>(k - n)) * hprod;
      EXPECT_NEAR(frechet_derivative(m, u, n, dirs).coords(0), expected, 1e-12 * expected);
    }
  }
}

TEST(Multilinear, MatrixSquareFirstDerivative) {
  Rng rng(7);
  const Algebra a = Algebra::matrix(3);
  const Monomial sq{KLinearMap::product(a, 2)};
  for (int rep = 0; rep < 20; ++rep) {
    const auto u = a.element(integer_vec(rng, 9));
    const auto h = a.element(integer_vec(rng, 9));
    const std::vector<AlgebraElement> dirs{h};
    const Eigen::VectorXd expected = a.mul(h, u).coords + a.mul(u, h).coords;
    EXPECT_EQ(frechet_derivative(sq, u, 1, dirs).coords, expected);
  }
}

TEST(Multilinear, DerivativeOrderLimits) {
  const Algebra a = Algebra::grid();
  const Monomial m{KLinearMap::product(a, 3)};
  const std::vector<AlgebraElement> four(4, a.one());
  EXPECT_EQ(frechet_derivative(m, a.one(), 4, four).coords, Eigen::VectorXd::Zero(16));
  const std::vector<AlgebraElement> five(5, a.one());
  EXPECT_THROW(frechet_derivative(m, a.one(), 5, five), std::invalid_argument);
  EXPECT_THROW(frechet_derivative(m, a.one(), 0, {}), std::invalid_argument);
  EXPECT_THROW(finite_difference_derivative(m, a.one(), 1, std::vector<AlgebraElement>{a.one()}, 0.0),
               std::invalid_argument);
}

TEST(Multilinear, CommutativeCoefficientIdentityExact) {
  Rng rng(8);
  for (const Algebra& a : {Algebra::grid(), Algebra::lattice(6)}) {
    const auto dim = static_cast<Eigen::Index>(a.dimension());
    for (std::size_t k = 1; k <= 4; ++k) {
      const Monomial m{KLinearMap::product(a, k)};
      const auto u = a.element(integer_vec(rng, dim, -2, 2));
      for (std::size_t n = 1; n <= k; ++n) {
        std::vector<AlgebraElement> dirs;
        AlgebraElement expected = a.one();
        for (std::size_t j = 0; j < n; ++j) {
          dirs.push_back(a.element(integer_vec(rng, dim, -2, 2)));
          expected = a.mul(expected, dirs.back());
        }
        for (std::size_t j = n; j < k; ++j) expected = a.mul(expected, u);
        expected.coords *= factorial_ratio(k, n);
        EXPECT_EQ(frechet_derivative(m, u, n, dirs).coords, expected.coords) << "k=" << k << " n=" << n;
      }
    }
  }
}

TEST(Multilinear, DerivativeSymmetricUnderPermutation) {
  Rng rng(9);
  const Algebra a = Algebra::matrix(2);
  const Monomial m{KLinearMap::dense(a, 4, integer_vec(rng, 1024), 100.0)};
  const auto u = a.element(integer_vec(rng, 4));
  for (std::size_t n = 2; n <= 4; ++n) {
    std::vector<AlgebraElement> dirs;
    for (std::size_t j = 0; j < n; ++j) dirs.push_back(a.element(integer_vec(rng, 4)));
    const Eigen::VectorXd base = frechet_derivative(m, u, n, dirs).coords;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    while (std::next_permutation(perm.begin(), perm.end())) {
      std::vector<AlgebraElement> p;
      for (const auto i : perm) p.push_back(dirs[i]);
      EXPECT_EQ(frechet_derivative(m, u, n, p).coords, base);
    }
  }
}

TEST(Multilinear, FiniteDifferenceConvergesQuadratically) {
  Rng rng(10);
  const Algebra grid = Algebra::grid();
  const Algebra mat = Algebra::matrix(2);
  const std::vector<Monomial> monomials{Monomial{KLinearMap::product(grid, 4)},
                                        Monomial{KLinearMap::dense(mat, 4, standard_normal(rng, 1024), 1.0)}};
  for (const auto& m : monomials) {
    const Algebra& a = m.base.algebra();
    const auto dim = static_cast<Eigen::Index>(a.dimension());
    const auto u = a.element(0.5 * standard_normal(rng, dim));
    for (std::size_t n = 1; n <= 2; ++n) {
      std::vector<AlgebraElement> dirs;
      for (std::size_t j = 0; j < n; ++j) dirs.push_back(a.element(0.5 * standard_normal(rng, dim)));
      const Eigen::VectorXd exact = frechet_derivative(m, u, n, dirs).coords;
      std::vector<double> err;
      for (const double h : {1e-2, 5e-3, 2.5e-3}) {
        err.push_back((finite_difference_derivative(m, u, n, dirs, h).coords - exact).norm());
      }
      for (std::size_t i = 1; i < err.size(); ++i) {
        const double ratio = err[i - 1] / err[i];
        EXPECT_GT(ratio, 3.5) << "n=" << n;
        EXPECT_LT(ratio, 4.5) << "n=" << n;
      }
    }
  }
}

TEST(Multilinear, FiniteDifferenceExactOnLinearMonomial) {
  Rng rng(11);
  const Algebra a = Algebra::grid();
  const Monomial m{KLinearMap::product(a, 1)};
  const auto u = a.element(standard_normal(rng, 16));
  const std::vector<AlgebraElement> dirs{a.element(standard_normal(rng, 16))};
  for (const double h : {1e-1, 1e-3}) {
    const Eigen::VectorXd fd = finite_difference_derivative(m, u, 1, dirs, h).coords;
    EXPECT_LT((fd - dirs[0].coords).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Multilinear, FiniteDifferenceOfVanishingDerivative) {
  const Algebra a = Algebra::matrix(1);
  const Monomial m{KLinearMap::product(a, 2)};
  const auto u = a.element(Eigen::VectorXd::Constant(1, 0.75));
  const std::vector<AlgebraElement> dirs(3, a.element(Eigen::VectorXd::Constant(1, 1.0)));
  double previous = 1.0;
  for (const double h : {1e-1, 1e-2}) {
    const double v = std::abs(finite_difference_derivative(m, u, 3, dirs, h).coords(0));
    EXPECT_LE(v, previous);
    previous = v;
  }
  EXPECT_LT(previous, 1e-9);
}

TEST(Multilinear, LipschitzWitnessExamples) {
  const Algebra s = Algebra::matrix(1);
  const Monomial sq{KLinearMap::product(s, 2)};
  const auto two = s.element(Eigen::VectorXd::Constant(1, 2.0));
  const auto one = s.element(Eigen::VectorXd::Constant(1, 1.0));
  const LipschitzWitness w = lipschitz_witness(sq, two, one);
  EXPECT_DOUBLE_EQ(w.lhs, 3.0);
  EXPECT_DOUBLE_EQ(w.rhs, 3.0);
  const LipschitzWitness same = lipschitz_witness(sq, two, two);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_EQ(same.rhs, 0.0);
}

TEST(Multilinear, LipschitzBoundHoldsOnRandomGridPairs) {
  Rng rng(12);
  const Algebra a = Algebra::grid();
  for (std::size_t k = 1; k <= 4; ++k) {
    const Monomial m{KLinearMap::product(a, k)};
    for (int rep = 0; rep < 250; ++rep) {
      const auto x = a.element(standard_normal(rng, 16));
      const auto y = a.element(x.coords + 0.3 * standard_normal(rng, 16));
      const LipschitzWitness w = lipschitz_witness(m, x, y);
      EXPECT_LE(w.lhs, w.rhs * (1.0 + 1e-9)) << "k=" << k;
    }
  }
}

TEST(Multilinear, FormFromIdentityIsCoordinateFunctional) {
  const Algebra a = Algebra::grid();
  const FilipovicGeometry& geo = a.geometry();
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(16);
  e1(1) = 1.0;
  const auto z = a.element(e1 / geo.hilbert_norm(e1));
  const Monomial id{KLinearMap::product(a, 1)};
  const MultilinearForm f = form_from_monomial(id, z);
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd x = standard_normal(rng, 16);
    EXPECT_NEAR(f.monomial(x), geo.inner(x, z.coords), 1e-12 * (1.0 + std::abs(geo.inner(x, z.coords))));
  }
}

TEST(Multilinear, FormFromSquareMonomial) {
  const Algebra a = Algebra::grid();
  const FilipovicGeometry& geo = a.geometry();
  Rng rng(14);
  Eigen::VectorXd zv = standard_normal(rng, 16);
  zv /= geo.hilbert_norm(zv);
  const auto z = a.element(zv);
  const Monomial sq{KLinearMap::product(a, 2)};
  const MultilinearForm f = form_from_monomial(sq, z);
  const Eigen::VectorXd x = standard_normal(rng, 16);
  const double expected = geo.inner(x.cwiseProduct(x), zv);
  EXPECT_NEAR(f.monomial(x), expected, 1e-10 * (1.0 + std::abs(expected)));
}

TEST(Multilinear, PairedInnerProductFormIsNormSquare) {
  const FilipovicGeometry geo;
  const MultilinearForm f = paired_inner_product_form(geo, 1);
  Rng rng(15);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd x = standard_normal(rng, 16);
    const double n2 = geo.hilbert_norm(x) * geo.hilbert_norm(x);
    EXPECT_NEAR(f.monomial(x), n2, 1e-12 * n2);
  }
  const MultilinearForm f2 = paired_inner_product_form(geo, 2);
  const Eigen::VectorXd x = standard_normal(rng, 16);
  const double n4 = std::pow(geo.hilbert_norm(x), 4.0);
  EXPECT_NEAR(f2.monomial(x), n4, 1e-11 * n4);
}

TEST(Multilinear, ZeroMonomialGivesZeroForm) {
  const Algebra a = Algebra::grid();
  const Monomial zero{KLinearMap::dense(a, 2, Eigen::VectorXd::Zero(16 * 16 * 16), 0.0)};
  Eigen::VectorXd zv = Eigen::VectorXd::Ones(16);
  zv /= a.geometry().hilbert_norm(zv);
  const MultilinearForm f = form_from_monomial(zero, a.element(zv));
  EXPECT_EQ(f.tensor().coeffs, Eigen::VectorXd::Zero(256));
}

TEST(Multilinear, FormNeedsInnerProductAndUnitZ) {
  const Algebra m = Algebra::matrix(2);
  EXPECT_THROW(form_from_monomial(Monomial{KLinearMap::product(m, 1)}, m.one()), std::invalid_argument);
  const Algebra g = Algebra::grid();
  EXPECT_THROW(form_from_monomial(Monomial{KLinearMap::product(g, 1)}, 3.0 * g.one()), std::invalid_argument);
}

TEST(Multilinear, OrthonormalBasisDiagonalizesGram) {
  const FilipovicGeometry geo;
  const Eigen::MatrixXd b = orthonormal_basis(geo);
  const Eigen::MatrixXd should_be_identity = b.transpose() * geo.gram() * b;
  EXPECT_LT((should_be_identity - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Multilinear, ContractTrailingMatchesManualSum) {
  Rng rng(16);
  DenseTensor t = DenseTensor::zeros(3, 3);
  t.coeffs = standard_normal(rng, 27);
  const Eigen::VectorXd x = standard_normal(rng, 3);
  const Eigen::VectorXd y = standard_normal(rng, 3);
  const std::vector<Eigen::VectorXd> args{x, y};
  const Eigen::VectorXd got = contract_trailing(t, args);
  for (int o = 0; o < 3; ++o) {
    double manual = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) manual += t.coeffs(o * 9 + i * 3 + j) * x(i) * y(j);
    }
    EXPECT_NEAR(got(o), manual, 1e-13);
  }
}

}  // namespace
}  // namespace polyproc
