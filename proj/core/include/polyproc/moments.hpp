#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "polyproc/algebra.hpp"
#include "polyproc/multilinear.hpp"
#include "polyproc/process.hpp"

namespace polyproc {

/// E[X_{i1} ... X_{im}] for X with the given Gaussian law (Isserlis with means).
double gaussian_moment(const GaussianLaw& law, std::span<const Eigen::Index> indices);

/// Symmetric tensor of all order-m mixed moments.
struct MomentTensor {
  std::size_t order = 0;
  DenseTensor tensor;
};

inline constexpr std::size_t kMaxMomentOrder = 8;

/// Throws std::invalid_argument for m > 8 and std::length_error when dim^m
/// exceeds the dense cap.
MomentTensor gaussian_moment_tensor(const GaussianLaw& law, std::size_t m);

enum class Letter { kPerp, kPar };

/// One of the 2^k terms of (X_perp + X_par)^k in slot order.
struct Word {
  std::vector<Letter> letters;

  std::size_t par_count() const;
};

std::vector<Word> enumerate_words(std::size_t k);

enum class Method { kExact, kMonteCarlo };
std::string_view to_string(Method m);

struct Contribution {
  std::size_t order = 0;  // degree j in X_par
  AlgebraElement value;
};

struct ConditionalMomentResult {
  std::size_t order_k = 0;
  AlgebraElement value;
  std::vector<Contribution> contributions;
  Method method = Method::kExact;
  /// Per-coordinate standard error of value (Monte Carlo only).
  std::optional<Eigen::VectorXd> se;
};

/// E[(X_perp)^m] for m = 0..k in a commutative algebra. On the grid this is
/// pointwise Gaussian raw moments; otherwise a dense contraction of the
/// product map with the moment tensor.
std::vector<AlgebraElement> perp_power_moments(const Algebra& algebra, const GaussianLaw& law,
                                               std::size_t k);

/// E[X(t)^k | F_s] = sum_n C(k, n) E[(X_perp)^(k-n)] (X_par)^n in a commutative algebra.
ConditionalMomentResult cond_moment_commutative(std::size_t k, const Algebra& algebra,
                                                const AlgebraElement& parallel,
                                                std::span<const AlgebraElement> perp_moments);
ConditionalMomentResult cond_moment_commutative(std::size_t k, const Algebra& algebra,
                                                const Decomposition& d);

/// Same moment for the OU forward curve, written in powers of X(s) itself:
/// sum_n C(k, n) E[(X_perp)^(k-n)] S_{t-s}(f_s^n).
ConditionalMomentResult cond_moment_ou(std::size_t k, const Eigen::VectorXd& f_s, double s, double t,
                                       const OUProcess& p);

inline constexpr std::size_t kMaxWordArity = 5;

struct WordExpansionOptions {
  std::size_t n_mc = 200000;
  std::uint64_t seed = 1;
  /// Use the Monte Carlo route even when an exact contraction is available.
  bool force_mc = false;
};

/// E[L(X(t), ..., X(t)) | F_s] by the 2^k word expansion. PAR slots are frozen
/// at X_par; PERP slots are integrated exactly against the Gaussian moment
/// tensor for dense maps, otherwise by Monte Carlo. Contributions are grouped
/// by the number of PAR letters.
ConditionalMomentResult cond_expectation_words(const KLinearMap& map, const Decomposition& d,
                                               const WordExpansionOptions& opts = {});

/// E ||X||^(2k) in the H_w Hilbert norm, by Isserlis over the coordinates of
/// an orthonormal basis.
double norm_even_moment(std::size_t k, const GaussianLaw& law, const FilipovicGeometry& geometry);

/// Same quantity from an arbitrary symmetric PSD Gram matrix (the inner
/// product in coordinates).
double norm_even_moment(std::size_t k, const GaussianLaw& law, const Eigen::MatrixXd& gram);

struct OddMomentQuadrature {
  double tolerance = 1e-10;
  unsigned max_depth = 20;
};

/// E ||X||^(2k+1) = a / Gamma(1 - a) int_0^inf (1 - phi(x)) x^(-1-a) dx with
/// a = (2k+1)/(2k+2) and phi(x) = E exp(-x ||X||^(2k+2)).
double norm_odd_moment(std::size_t k, const std::function<double(double)>& laplace,
                       const OddMomentQuadrature& quad = {});
/// Same integral driven by x -> 1 - phi(x), for callers that can evaluate
/// the complement without cancellation near x = 0.
double norm_odd_moment_from_complement(std::size_t k, const std::function<double(double)>& one_minus_laplace,
                                       const OddMomentQuadrature& quad = {});

namespace testing {

/// Flips the sign of the odd binomial terms in cond_moment_commutative while
/// alive. Exists only so the validation suite can prove it detects a broken
/// formula.
class ScopedBinomialSignFlip {
 public:
  ScopedBinomialSignFlip();
  ~ScopedBinomialSignFlip();
  ScopedBinomialSignFlip(const ScopedBinomialSignFlip&) = delete;
  ScopedBinomialSignFlip& operator=(const ScopedBinomialSignFlip&) = delete;
};

bool binomial_sign_flip_active();

}  // namespace testing

}  // namespace polyproc
