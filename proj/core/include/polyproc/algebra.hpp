#pragma once

#include <cstddef>
#include <string_view>
#include <utility>
#include <variant>

#include <Eigen/Dense>

namespace polyproc {

/// Which concrete Banach algebra a coordinate vector lives in.
enum class AlgebraTag {
  kGrid,     // curves sampled on a uniform grid, pointwise product
  kMatrix,   // d x d matrices (row-major), matrix product
  kLattice,  // signed measures on {0, ..., m}, truncated convolution
};

std::string_view to_string(AlgebraTag tag);

/// Uniform grid on [0, x_max] carrying the exponential weight w(x) = exp(alpha x).
struct GridSpec {
  double x_max = 4.0;
  std::size_t n_points = 16;
  double alpha = 1.0;

  double dx() const { return x_max / static_cast<double>(n_points - 1); }
  double node(std::size_t i) const { return dx() * static_cast<double>(i); }
  double weight(double x) const;

  /// Throws std::invalid_argument unless n_points >= 2, x_max > 0, alpha > 0.
  void validate() const;
};

struct AlgebraElement {
  AlgebraTag tag = AlgebraTag::kGrid;
  Eigen::VectorXd coords;

  friend AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b);
  friend AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b);
  friend AlgebraElement operator*(double s, const AlgebraElement& a);
};

/// Value of a point evaluation together with the extrapolation flag.
struct PointValue {
  double value = 0.0;
  bool extrapolated = false;
};

/// Discretized Filipovic space H_w: inner product
///   <g, h> = g(0) h(0) + int_0^x_max w(x) g'(x) h'(x) dx
/// with g' by central differences (one-sided at the two boundary nodes) and
/// the integral by the trapezoidal rule. The algebra norm is c * sqrt(<g, g>)
/// with c = sqrt(1 + 8 (1 + 1 / alpha)).
class FilipovicGeometry {
 public:
  explicit FilipovicGeometry(GridSpec grid = {});

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return grid_.n_points; }
  double c_norm() const { return c_norm_; }
  const Eigen::VectorXd& quadrature_weights() const { return quad_; }
  const Eigen::VectorXd& nodes() const { return nodes_; }

  /// Finite-difference derivative operator on grid samples.
  const Eigen::MatrixXd& derivative_matrix() const { return deriv_; }
  /// Gram matrix G of the discretized inner product: <g, h> = g^T G h.
  const Eigen::MatrixXd& gram() const { return gram_; }

  double inner(const Eigen::VectorXd& g, const Eigen::VectorXd& h) const;
  double hilbert_norm(const Eigen::VectorXd& g) const;
  /// c-rescaled norm, the one under which pointwise product is submultiplicative.
  double norm(const Eigen::VectorXd& g) const;

  /// Linear interpolation at x >= 0; beyond x_max the last sample is held
  /// constant and the result is flagged.
  PointValue eval_delta_checked(double x, const Eigen::VectorXd& g) const;
  double eval_delta(double x, const Eigen::VectorXd& g) const {
    return eval_delta_checked(x, g).value;
  }

  /// Matrix of the shift g -> g(. + t) on the grid, t >= 0.
  Eigen::MatrixXd shift_matrix(double t) const;
  Eigen::VectorXd shift(double t, const Eigen::VectorXd& g) const;

  /// True when t is an integer multiple of dx up to rounding.
  bool is_grid_multiple(double t) const;

 private:
  GridSpec grid_;
  double c_norm_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd quad_;
  Eigen::MatrixXd deriv_;
  Eigen::MatrixXd gram_;
};

struct MatrixAlgebraSpec {
  std::size_t d = 2;
};

/// Lattice {0, ..., m}; mass pushed past m by a convolution accumulates at m.
struct LatticeSpec {
  std::size_t m = 8;
};

/// One of the three concrete algebras. Holds whatever geometry the tag needs
/// to compute products and norms.
class Algebra {
 public:
  static Algebra grid(GridSpec spec = {});
  static Algebra matrix(std::size_t d);
  static Algebra lattice(std::size_t m);

  AlgebraTag tag() const;
  std::size_t dimension() const;
  bool is_commutative() const { return tag() != AlgebraTag::kMatrix; }
  bool has_inner_product() const { return tag() == AlgebraTag::kGrid; }

  /// Throws std::logic_error for non-grid algebras.
  const FilipovicGeometry& geometry() const;
  std::size_t matrix_dim() const;

  AlgebraElement element(Eigen::VectorXd coords) const;
  AlgebraElement zero() const;
  /// Multiplicative identity (all-ones curve, identity matrix, unit mass at 0).
  AlgebraElement one() const;

  AlgebraElement mul(const AlgebraElement& a, const AlgebraElement& b) const;
  double norm(const AlgebraElement& a) const;

  /// Throws std::invalid_argument when a does not belong to this algebra.
  void check(const AlgebraElement& a) const;

 private:
  using Spec = std::variant<FilipovicGeometry, MatrixAlgebraSpec, LatticeSpec>;
  explicit Algebra(Spec spec) : spec_(std::move(spec)) {}
  Spec spec_;
};

}  // namespace polyproc
