#include "polyproc/multilinear.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "polyproc/random.hpp"

namespace polyproc {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t checked_power(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (out > kDenseTensorCap / std::max<std::size_t>(base, 1)) {
      throw std::length_error("dense tensor exceeds the 2^24 coefficient cap; use a product map");
    }
    out *= base;
  }
  if (out > kDenseTensorCap) {
    throw std::length_error("dense tensor exceeds the 2^24 coefficient cap; use a product map");
  }
  return out;
}

void check_args(const Algebra& algebra, std::size_t k, std::span<const AlgebraElement> args) {
  if (args.size() != k) {
    throw std::invalid_argument("k-linear map of arity " + std::to_string(k) + " called with " +
                                std::to_string(args.size()) + " arguments");
  }
  for (const auto& a : args) algebra.check(a);
}

}  // namespace

DenseTensor DenseTensor::zeros(std::size_t dim, std::size_t rank) {
  DenseTensor t;
  t.dim = dim;
  t.shape.assign(rank, dim);
  t.coeffs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(checked_power(dim, rank)));
  return t;
}

Eigen::VectorXd contract_trailing(const DenseTensor& t, std::span<const Eigen::VectorXd> args) {
  if (args.size() > t.rank()) throw std::invalid_argument("more arguments than tensor indices");
  const auto dim = static_cast<Eigen::Index>(t.dim);
  Eigen::VectorXd cur = t.coeffs;
  for (auto it = args.rbegin(); it != args.rend(); ++it) {
    if (it->size() != dim) throw std::invalid_argument("contraction vector has wrong length");
    const Eigen::Index rows = cur.size() / dim;
    Eigen::VectorXd next = Eigen::Map<const RowMajor>(cur.data(), rows, dim) * (*it);
    cur = std::move(next);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// KLinearMap

KLinearMap KLinearMap::dense(Algebra algebra, std::size_t k, Eigen::VectorXd coeffs, double bound_K) {
  if (k == 0) throw std::invalid_argument("arity must be at least 1");
  const std::size_t dim = algebra.dimension();
  const std::size_t expected = checked_power(dim, k + 1);
  if (static_cast<std::size_t>(coeffs.size()) != expected) {
    throw std::invalid_argument("dense tensor has " + std::to_string(coeffs.size()) +
                                " coefficients, expected " + std::to_string(expected));
  }
  if (!(bound_K >= 0.0)) throw std::invalid_argument("bound K must be nonnegative");
  DenseTensor t;
  t.dim = dim;
  t.shape.assign(k + 1, dim);
  t.coeffs = std::move(coeffs);
  return KLinearMap(std::move(algebra), k, std::move(t), bound_K);
}

KLinearMap KLinearMap::product(Algebra algebra, std::size_t k, std::optional<Eigen::MatrixXd> post) {
  if (k == 0) throw std::invalid_argument("arity must be at least 1");
  double bound = 1.0;
  if (post) {
    const auto dim = static_cast<Eigen::Index>(algebra.dimension());
    if (post->rows() != dim || post->cols() != dim) {
      throw std::invalid_argument("post-map must be square of the algebra dimension");
    }
    bound = operator_norm(algebra, *post);
  }
  return KLinearMap(std::move(algebra), k, ProductRep{std::move(post)}, bound);
}

const DenseTensor& KLinearMap::tensor() const {
  if (const auto* t = std::get_if<DenseTensor>(&rep_)) return *t;
  throw std::logic_error("map is not dense");
}

const ProductRep& KLinearMap::product_rep() const {
  if (const auto* p = std::get_if<ProductRep>(&rep_)) return *p;
  throw std::logic_error("map is not a product map");
}

AlgebraElement KLinearMap::eval(std::span<const AlgebraElement> args) const {
  check_args(algebra_, k_, args);
  if (const auto* t = std::get_if<DenseTensor>(&rep_)) {
    std::vector<Eigen::VectorXd> vs;
    vs.reserve(args.size());
    for (const auto& a : args) vs.push_back(a.coords);
    return {algebra_.tag(), contract_trailing(*t, vs)};
  }
  const auto& p = std::get<ProductRep>(rep_);
  AlgebraElement acc = args[0];
  for (std::size_t i = 1; i < args.size(); ++i) acc = algebra_.mul(acc, args[i]);
  if (p.post) acc.coords = (*p.post) * acc.coords;
  return acc;
}

DenseTensor KLinearMap::to_dense() const {
  if (const auto* t = std::get_if<DenseTensor>(&rep_)) return *t;
  const std::size_t dim = algebra_.dimension();
  DenseTensor t = DenseTensor::zeros(dim, k_ + 1);
  const std::size_t inputs = checked_power(dim, k_);

  std::vector<AlgebraElement> basis;
  basis.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    AlgebraElement e = algebra_.zero();
    e.coords(static_cast<Eigen::Index>(i)) = 1.0;
    basis.push_back(std::move(e));
  }
  std::vector<std::size_t> idx(k_, 0);
  std::vector<AlgebraElement> args(k_, basis[0]);
  for (std::size_t flat = 0; flat < inputs; ++flat) {
    std::size_t rem = flat;
    for (std::size_t s = k_; s-- > 0;) {
      idx[s] = rem % dim;
      rem /= dim;
      args[s] = basis[idx[s]];
    }
    const AlgebraElement out = eval(args);
    for (std::size_t o = 0; o < dim; ++o) {
      t.coeffs(static_cast<Eigen::Index>(o * inputs + flat)) = out.coords(static_cast<Eigen::Index>(o));
    }
  }
  return t;
}

KLinearMap KLinearMap::combine(double a, const KLinearMap& other, double b) const {
  if (other.k_ != k_ || other.algebra_.tag() != algebra_.tag() ||
      other.algebra_.dimension() != algebra_.dimension()) {
    throw std::invalid_argument("cannot combine maps of different arity or algebra");
  }
  DenseTensor lhs = to_dense();
  const DenseTensor rhs = other.to_dense();
  lhs.coeffs = a * lhs.coeffs + b * rhs.coeffs;
  return KLinearMap(algebra_, k_, std::move(lhs), std::abs(a) * bound_ + std::abs(b) * other.bound_);
}

double operator_norm(const Algebra& algebra, const Eigen::MatrixXd& linear) {
  switch (algebra.tag()) {
    case AlgebraTag::kGrid: {
      // ||v||_G = |L^T v| with G = L L^T; the constant c cancels.
      const Eigen::LLT<Eigen::MatrixXd> llt(algebra.geometry().gram());
      const Eigen::MatrixXd lt = llt.matrixU();
      const Eigen::MatrixXd lt_inv = lt.triangularView<Eigen::Upper>().solve(
          Eigen::MatrixXd::Identity(lt.rows(), lt.cols()));
      const Eigen::MatrixXd similar = lt * linear * lt_inv;
      return Eigen::JacobiSVD<Eigen::MatrixXd>(similar).singularValues()(0);
    }
    case AlgebraTag::kMatrix:
      return Eigen::JacobiSVD<Eigen::MatrixXd>(linear).singularValues()(0);
    case AlgebraTag::kLattice:
      return linear.cwiseAbs().colwise().sum().maxCoeff();
  }
  return 0.0;
}

double estimate_bound(const KLinearMap& map, std::size_t draws, std::uint64_t seed) {
  const Algebra& alg = map.algebra();
  const auto dim = static_cast<Eigen::Index>(alg.dimension());
  Rng rng = make_rng(seed, 0);
  std::vector<AlgebraElement> args(map.arity());
  double best = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    for (auto& a : args) {
      a = alg.element(standard_normal(rng, dim));
      const double n = alg.norm(a);
      if (n > 0.0) a.coords /= n;
    }
    best = std::max(best, alg.norm(map.eval(args)));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Monomials and derivatives

AlgebraElement Monomial::operator()(const AlgebraElement& x) const {
  std::vector<AlgebraElement> args(base.arity(), x);
  return base.eval(args);
}

AlgebraElement frechet_derivative(const Monomial& m, const AlgebraElement& u, std::size_t n,
                                  std::span<const AlgebraElement> dirs) {
  const std::size_t k = m.degree();
  const Algebra& alg = m.base.algebra();
  alg.check(u);
  if (n == 0) throw std::invalid_argument("derivative order must be at least 1");
  if (n > k + 1) {
    throw std::invalid_argument("derivative order " + std::to_string(n) + " exceeds k + 1 = " +
                                std::to_string(k + 1));
  }
  if (dirs.size() != n) throw std::invalid_argument("need exactly n directions");
  for (const auto& h : dirs) alg.check(h);
  if (n == k + 1) return alg.zero();

  // Each direction goes to a distinct slot; every ordered placement is one term.
  AlgebraElement sum = alg.zero();
  std::vector<AlgebraElement> args(k, u);
  std::vector<bool> used(k, false);
  std::function<void(std::size_t)> place = [&](std::size_t j) {
    if (j == n) {
      sum.coords += m.base.eval(args).coords;
      return;
    }
    for (std::size_t slot = 0; slot < k; ++slot) {
      if (used[slot]) continue;
      used[slot] = true;
      args[slot] = dirs[j];
      place(j + 1);
      args[slot] = u;
      used[slot] = false;
    }
  };
  place(0);
  return sum;
}

AlgebraElement finite_difference_derivative(const Monomial& m, const AlgebraElement& u, std::size_t n,
                                            std::span<const AlgebraElement> dirs, double h_step) {
  const Algebra& alg = m.base.algebra();
  alg.check(u);
  if (n == 0 || dirs.size() != n) throw std::invalid_argument("need n >= 1 directions");
  if (!(h_step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  for (const auto& h : dirs) alg.check(h);

  AlgebraElement sum = alg.zero();
  const std::size_t corners = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    AlgebraElement point = u;
    double sign = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool plus = (mask >> j) & 1U;
      point.coords += (plus ? h_step : -h_step) * dirs[j].coords;
      if (!plus) sign = -sign;
    }
    sum.coords += sign * m(point).coords;
  }
  sum.coords /= std::pow(2.0 * h_step, static_cast<double>(n));
  return sum;
}

LipschitzWitness lipschitz_witness(const Monomial& m, const AlgebraElement& x, const AlgebraElement& y) {
  const Algebra& alg = m.base.algebra();
  const std::size_t k = m.degree();
  const double nx = alg.norm(x);
  const double ny = alg.norm(y);
  const double ndiff = alg.norm(x - y);
  double poly = 0.0;
  for (std::size_t i = 1; i <= k; ++i) {
    poly += std::pow(nx, static_cast<double>(k - i)) * std::pow(ny, static_cast<double>(i - 1));
  }
  return {alg.norm(m(x) - m(y)), m.base.bound() * poly * ndiff};
}

// ---------------------------------------------------------------------------
// Forms

MultilinearForm::MultilinearForm(std::size_t dim, std::size_t k, Eigen::VectorXd coeffs) {
  if (k == 0) throw std::invalid_argument("form arity must be at least 1");
  tensor_ = DenseTensor::zeros(dim, k);
  if (coeffs.size() != tensor_.coeffs.size()) throw std::invalid_argument("form tensor has wrong size");
  tensor_.coeffs = std::move(coeffs);
}

double MultilinearForm::eval(std::span<const Eigen::VectorXd> args) const {
  if (args.size() != arity()) throw std::invalid_argument("form called with wrong number of arguments");
  return contract_trailing(tensor_, args)(0);
}

double MultilinearForm::monomial(const Eigen::VectorXd& x) const {
  std::vector<Eigen::VectorXd> args(arity(), x);
  return eval(args);
}

MultilinearForm form_from_monomial(const Monomial& m, const AlgebraElement& z) {
  const Algebra& alg = m.base.algebra();
  if (!alg.has_inner_product()) {
    throw std::invalid_argument("forms from monomials need an inner-product (grid) algebra");
  }
  alg.check(z);
  const FilipovicGeometry& geo = alg.geometry();
  if (std::abs(geo.hilbert_norm(z.coords) - 1.0) > 1e-9) {
    throw std::invalid_argument("z must have unit norm");
  }
  const DenseTensor t = m.base.to_dense();
  const auto dim = static_cast<Eigen::Index>(alg.dimension());
  const Eigen::Index inputs = t.coeffs.size() / dim;
  const Eigen::VectorXd gz = geo.gram() * z.coords;
  Eigen::VectorXd coeffs = Eigen::Map<const RowMajor>(t.coeffs.data(), dim, inputs).transpose() * gz;
  return MultilinearForm(alg.dimension(), m.degree(), std::move(coeffs));
}

MultilinearForm paired_inner_product_form(const FilipovicGeometry& geometry, std::size_t k) {
  const std::size_t dim = geometry.size();
  checked_power(dim, 2 * k);
  const Eigen::MatrixXd& g = geometry.gram();
  Eigen::VectorXd pair(static_cast<Eigen::Index>(dim * dim));
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      pair(static_cast<Eigen::Index>(i * dim + j)) =
          g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  Eigen::VectorXd coeffs = pair;
  for (std::size_t r = 1; r < k; ++r) {
    Eigen::VectorXd next(coeffs.size() * pair.size());
    for (Eigen::Index a = 0; a < coeffs.size(); ++a) {
      next.segment(a * pair.size(), pair.size()) = coeffs(a) * pair;
    }
    coeffs = std::move(next);
  }
  return MultilinearForm(dim, 2 * k, std::move(coeffs));
}

Eigen::MatrixXd orthonormal_basis(const FilipovicGeometry& geometry) {
  const Eigen::LLT<Eigen::MatrixXd> llt(geometry.gram());
  const Eigen::MatrixXd lt = llt.matrixU();
  return lt.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(lt.rows(), lt.cols()));
}

}  // namespace polyproc
