#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "polyproc/algebra.hpp"

namespace polyproc {

/// Largest dense coefficient tensor we are willing to hold.
inline constexpr std::size_t kDenseTensorCap = std::size_t{1} << 24;

/// Dense coefficient tensor. For a k-linear map into the algebra the shape is
/// dim^(k+1) with the output index first; for a scalar form it is dim^k.
/// Storage is row-major: the last index varies fastest.
struct DenseTensor {
  std::size_t dim = 0;
  std::vector<std::size_t> shape;
  Eigen::VectorXd coeffs;

  static DenseTensor zeros(std::size_t dim, std::size_t rank);
  std::size_t rank() const { return shape.size(); }
};

/// Contracts the trailing indices of `t` with the given vectors, last argument
/// first. Returns the remaining leading block as a flat vector.
Eigen::VectorXd contract_trailing(const DenseTensor& t, std::span<const Eigen::VectorXd> args);

/// Designated algebra product x1 * x2 * ... * xk, optionally followed by a
/// bounded linear post-map.
struct ProductRep {
  std::optional<Eigen::MatrixXd> post;
};

/// Bounded k-linear map B^k -> B.
class KLinearMap {
 public:
  /// coeffs must have dim^(k+1) entries; bound_K is the declared boundedness
  /// constant (see estimate_bound).
  static KLinearMap dense(Algebra algebra, std::size_t k, Eigen::VectorXd coeffs, double bound_K);
  /// Product map. Its bound is exact: 1 times the operator norm of the post-map.
  static KLinearMap product(Algebra algebra, std::size_t k,
                            std::optional<Eigen::MatrixXd> post = std::nullopt);

  std::size_t arity() const { return k_; }
  const Algebra& algebra() const { return algebra_; }
  double bound() const { return bound_; }
  bool is_dense() const { return std::holds_alternative<DenseTensor>(rep_); }
  const DenseTensor& tensor() const;
  const ProductRep& product_rep() const;

  AlgebraElement eval(std::span<const AlgebraElement> args) const;

  /// Dense coefficient tensor of this map (expands product maps). Throws
  /// std::length_error if the tensor would exceed kDenseTensorCap.
  DenseTensor to_dense() const;

  /// a * this + b * other, as a dense map.
  KLinearMap combine(double a, const KLinearMap& other, double b) const;

 private:
  KLinearMap(Algebra algebra, std::size_t k, std::variant<DenseTensor, ProductRep> rep, double bound)
      : algebra_(std::move(algebra)), k_(k), rep_(std::move(rep)), bound_(bound) {}

  Algebra algebra_;
  std::size_t k_;
  std::variant<DenseTensor, ProductRep> rep_;
  double bound_;
};

/// Operator norm of a linear map on algebra coordinates, measured in the
/// algebra norm on both sides.
double operator_norm(const Algebra& algebra, const Eigen::MatrixXd& linear);

/// Lower estimate of sup ||L(x1..xk)|| over unit-norm arguments by random
/// sampling.
double estimate_bound(const KLinearMap& map, std::size_t draws, std::uint64_t seed);

/// The diagonal x -> L(x, ..., x).
struct Monomial {
  KLinearMap base;

  std::size_t degree() const { return base.arity(); }
  AlgebraElement operator()(const AlgebraElement& x) const;
};

/// n-th Frechet derivative of M at u along dirs: sum over every placement of
/// the n directions into distinct slots of the k-linear map, u in the rest.
/// Zero for n = k + 1; n > k + 1 or n = 0 is rejected.
AlgebraElement frechet_derivative(const Monomial& m, const AlgebraElement& u, std::size_t n,
                                  std::span<const AlgebraElement> dirs);

/// Central mixed finite difference of order n with step h.
AlgebraElement finite_difference_derivative(const Monomial& m, const AlgebraElement& u,
                                            std::size_t n, std::span<const AlgebraElement> dirs,
                                            double h_step = 1e-3);

struct LipschitzWitness {
  double lhs = 0.0;  // ||M(x) - M(y)||
  double rhs = 0.0;  // K sum_i ||x||^(k-i) ||y||^(i-1) ||x - y||
};

LipschitzWitness lipschitz_witness(const Monomial& m, const AlgebraElement& x, const AlgebraElement& y);

/// Bounded k-linear form B^k -> R as a dense dim^k tensor.
class MultilinearForm {
 public:
  MultilinearForm(std::size_t dim, std::size_t k, Eigen::VectorXd coeffs);

  std::size_t arity() const { return tensor_.rank(); }
  const DenseTensor& tensor() const { return tensor_; }

  double eval(std::span<const Eigen::VectorXd> args) const;
  /// Diagonal evaluation x -> F(x, ..., x).
  double monomial(const Eigen::VectorXd& x) const;

 private:
  DenseTensor tensor_;
};

/// x1..xk -> <M(x1..xk), z> for a grid-algebra map and z of unit Hilbert norm.
MultilinearForm form_from_monomial(const Monomial& m, const AlgebraElement& z);

/// <x1, y1> ... <xk, yk> on the grid algebra (arity 2k); its diagonal is ||x||^(2k).
MultilinearForm paired_inner_product_form(const FilipovicGeometry& geometry, std::size_t k);

/// Columns form an orthonormal basis of the discretized H_w inner product.
Eigen::MatrixXd orthonormal_basis(const FilipovicGeometry& geometry);

}  // namespace polyproc
