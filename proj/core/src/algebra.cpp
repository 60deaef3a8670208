#include "polyproc/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace polyproc {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_same(const AlgebraElement& a, const AlgebraElement& b) {
  if (a.tag != b.tag || a.coords.size() != b.coords.size()) {
    throw std::invalid_argument("algebra elements differ in tag or dimension");
  }
}

}  // namespace

std::string_view to_string(AlgebraTag tag) {
  switch (tag) {
    case AlgebraTag::kGrid:
      return "grid";
    case AlgebraTag::kMatrix:
      return "matrix";
    case AlgebraTag::kLattice:
      return "lattice";
  }
  return "unknown";
}

double GridSpec::weight(double x) const { return std::exp(alpha * x); }

void GridSpec::validate() const {
  if (n_points < 2) throw std::invalid_argument("grid needs at least two points");
  if (!(x_max > 0.0) || !std::isfinite(x_max)) {
    throw std::invalid_argument("grid x_max must be positive and finite");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("weight rate alpha must be positive (int 1/w must be finite)");
  }
}

AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
  require_same(a, b);
  return {a.tag, a.coords + b.coords};
}

AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
  require_same(a, b);
  return {a.tag, a.coords - b.coords};
}

AlgebraElement operator*(double s, const AlgebraElement& a) { return {a.tag, s * a.coords}; }

// ---------------------------------------------------------------------------
// FilipovicGeometry

FilipovicGeometry::FilipovicGeometry(GridSpec grid) : grid_(grid) {
  grid_.validate();
  const auto n = static_cast<Eigen::Index>(grid_.n_points);
  const double dx = grid_.dx();

  // int_0^inf exp(-alpha x) dx = 1 / alpha
  c_norm_ = std::sqrt(1.0 + 8.0 * (1.0 + 1.0 / grid_.alpha));

  nodes_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) nodes_(i) = grid_.node(static_cast<std::size_t>(i));

  quad_ = Eigen::VectorXd::Constant(n, dx);
  quad_(0) = quad_(n - 1) = 0.5 * dx;

  deriv_ = Eigen::MatrixXd::Zero(n, n);
  deriv_(0, 0) = -1.0 / dx;
  deriv_(0, 1) = 1.0 / dx;
  deriv_(n - 1, n - 2) = -1.0 / dx;
  deriv_(n - 1, n - 1) = 1.0 / dx;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    deriv_(i, i - 1) = -0.5 / dx;
    deriv_(i, i + 1) = 0.5 / dx;
  }

  Eigen::VectorXd wq(n);
  for (Eigen::Index i = 0; i < n; ++i) wq(i) = quad_(i) * grid_.weight(nodes_(i));
  gram_ = deriv_.transpose() * wq.asDiagonal() * deriv_;
  gram_(0, 0) += 1.0;
  gram_ = 0.5 * (gram_ + gram_.transpose()).eval();
}

double FilipovicGeometry::inner(const Eigen::VectorXd& g, const Eigen::VectorXd& h) const {
  if (g.size() != gram_.rows() || h.size() != gram_.rows()) {
    throw std::invalid_argument("grid function has wrong number of samples");
  }
  return g.dot(gram_ * h);
}

double FilipovicGeometry::hilbert_norm(const Eigen::VectorXd& g) const {
  return std::sqrt(std::abs(inner(g, g)));
}

double FilipovicGeometry::norm(const Eigen::VectorXd& g) const { return c_norm_ * hilbert_norm(g); }

PointValue FilipovicGeometry::eval_delta_checked(double x, const Eigen::VectorXd& g) const {
  if (g.size() != nodes_.size()) throw std::invalid_argument("grid function has wrong number of samples");
  if (!(x >= 0.0)) throw std::invalid_argument("evaluation point must be >= 0");
  const auto n = nodes_.size();
  const double pos = x / grid_.dx();
  if (pos >= static_cast<double>(n - 1)) {
    // Within rounding of the last node counts as on-grid.
    const bool beyond = pos > static_cast<double>(n - 1) + 1e-9;
    return {g(n - 1), beyond};
  }
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-9) return {g(static_cast<Eigen::Index>(nearest)), false};
  const auto i = static_cast<Eigen::Index>(std::floor(pos));
  const double theta = pos - static_cast<double>(i);
  return {(1.0 - theta) * g(i) + theta * g(i + 1), false};
}

bool FilipovicGeometry::is_grid_multiple(double t) const {
  const double pos = t / grid_.dx();
  return std::abs(pos - std::round(pos)) < 1e-9;
}

Eigen::MatrixXd FilipovicGeometry::shift_matrix(double t) const {
  if (!(t >= 0.0)) throw std::invalid_argument("shift time must be >= 0");
  const auto n = static_cast<Eigen::Index>(grid_.n_points);
  double pos = t / grid_.dx();
  if (std::abs(pos - std::round(pos)) < 1e-9) pos = std::round(pos);
  const double whole = std::floor(pos);
  const double theta = pos - whole;
  const auto m = static_cast<Eigen::Index>(std::min(whole, static_cast<double>(n)));

  // (1 - theta) S^m + theta S^(m+1), S the one-node shift with the last value held.
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::min(i + m, n - 1);
    const Eigen::Index hi = std::min(i + m + 1, n - 1);
    s(i, lo) += 1.0 - theta;
    if (theta != 0.0) s(i, hi) += theta;
  }
  return s;
}

Eigen::VectorXd FilipovicGeometry::shift(double t, const Eigen::VectorXd& g) const {
  if (g.size() != nodes_.size()) throw std::invalid_argument("grid function has wrong number of samples");
  return shift_matrix(t) * g;
}

// ---------------------------------------------------------------------------
// Algebra

Algebra Algebra::grid(GridSpec spec) { return Algebra(FilipovicGeometry(spec)); }

Algebra Algebra::matrix(std::size_t d) {
  if (d == 0) throw std::invalid_argument("matrix dimension must be positive");
  return Algebra(MatrixAlgebraSpec{d});
}

Algebra Algebra::lattice(std::size_t m) { return Algebra(LatticeSpec{m}); }

AlgebraTag Algebra::tag() const {
  switch (spec_.index()) {
    case 0:
      return AlgebraTag::kGrid;
    case 1:
      return AlgebraTag::kMatrix;
    default:
      return AlgebraTag::kLattice;
  }
}

std::size_t Algebra::dimension() const {
  if (const auto* g = std::get_if<FilipovicGeometry>(&spec_)) return g->size();
  if (const auto* m = std::get_if<MatrixAlgebraSpec>(&spec_)) return m->d * m->d;
  return std::get<LatticeSpec>(spec_).m + 1;
}

const FilipovicGeometry& Algebra::geometry() const {
  if (const auto* g = std::get_if<FilipovicGeometry>(&spec_)) return *g;
  throw std::logic_error("algebra has no Filipovic geometry");
}

std::size_t Algebra::matrix_dim() const {
  if (const auto* m = std::get_if<MatrixAlgebraSpec>(&spec_)) return m->d;
  throw std::logic_error("not a matrix algebra");
}

void Algebra::check(const AlgebraElement& a) const {
  if (a.tag != tag()) {
    throw std::invalid_argument("element tag " + std::string(to_string(a.tag)) +
                                " does not match algebra " + std::string(to_string(tag())));
  }
  if (static_cast<std::size_t>(a.coords.size()) != dimension()) {
    throw std::invalid_argument("element has " + std::to_string(a.coords.size()) +
                                " coordinates, algebra expects " + std::to_string(dimension()));
  }
}

AlgebraElement Algebra::element(Eigen::VectorXd coords) const {
  AlgebraElement e{tag(), std::move(coords)};
  check(e);
  return e;
}

AlgebraElement Algebra::zero() const {
  return {tag(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()))};
}

AlgebraElement Algebra::one() const {
  AlgebraElement e = zero();
  switch (tag()) {
    case AlgebraTag::kGrid:
      e.coords.setOnes();
      break;
    case AlgebraTag::kMatrix: {
      const auto d = static_cast<Eigen::Index>(matrix_dim());
      for (Eigen::Index i = 0; i < d; ++i) e.coords(i * d + i) = 1.0;
      break;
    }
    case AlgebraTag::kLattice:
      e.coords(0) = 1.0;
      break;
  }
  return e;
}

AlgebraElement Algebra::mul(const AlgebraElement& a, const AlgebraElement& b) const {
  check(a);
  check(b);
  AlgebraElement out{tag(), Eigen::VectorXd()};
  switch (tag()) {
    case AlgebraTag::kGrid:
      out.coords = a.coords.cwiseProduct(b.coords);
      break;
    case AlgebraTag::kMatrix: {
      const auto d = static_cast<Eigen::Index>(matrix_dim());
      Eigen::Map<const RowMajor> ma(a.coords.data(), d, d);
      Eigen::Map<const RowMajor> mb(b.coords.data(), d, d);
      out.coords.resize(d * d);
      Eigen::Map<RowMajor>(out.coords.data(), d, d).noalias() = ma * mb;
      break;
    }
    case AlgebraTag::kLattice: {
      const auto n = a.coords.size();
      out.coords = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (a.coords(i) == 0.0) continue;
        for (Eigen::Index j = 0; j < n; ++j) {
          out.coords(std::min(i + j, n - 1)) += a.coords(i) * b.coords(j);
        }
      }
      break;
    }
  }
  return out;
}

double Algebra::norm(const AlgebraElement& a) const {
  check(a);
  switch (tag()) {
    case AlgebraTag::kGrid:
      return geometry().norm(a.coords);
    case AlgebraTag::kMatrix:
      return a.coords.norm();  // Frobenius
    case AlgebraTag::kLattice:
      return a.coords.lpNorm<1>();  // total variation
  }
  return 0.0;
}

}  // namespace polyproc
