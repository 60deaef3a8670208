#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "polyproc/montecarlo.hpp"

namespace polyproc {

/// Raw moments of one scalar entry increment Delta L over (s, t].
struct EntryMoments {
  double m1 = 0.0;
  double m2 = 1.0;
  double m3 = 0.0;

  /// Moments of a N(mu, var) increment.
  static EntryMoments gaussian(double mu, double var);
  /// Throws std::invalid_argument unless m2 >= m1^2.
  void validate() const;
};

/// y -> E[Delta y Delta] for a d x d matrix Delta with i.i.d. entries:
/// (L h)_ij = sum_pq E[Delta_ip Delta_qj] h_pq with
/// E[Delta_ip Delta_qj] = m2 when (i, p) = (q, j), m1^2 otherwise.
Eigen::MatrixXd operator_L(const Eigen::MatrixXd& h, const EntryMoments& em);

/// E[Delta h1 Delta h2 Delta] for i.i.d. entries, from raw moments m1..m3.
Eigen::MatrixXd triple_sandwich(const Eigen::MatrixXd& h1, const Eigen::MatrixXd& h2, const EntryMoments& em);

struct LeftMultiplierVerdict {
  bool consistent = false;
  /// Least-squares (minimum-norm) solution of a h = g.
  Eigen::MatrixXd a;
  /// min over a of ||a h - g||_F; the certificate when inconsistent.
  double residual = 0.0;
};

/// Solves a h = g in the d^2 unknowns of a.
LeftMultiplierVerdict assert_no_left_multiplier(const Eigen::MatrixXd& h, const Eigen::MatrixXd& g);

struct D2Verdict {
  /// D^2 f(y)(h1, h2) for f(y) = E[Delta y Delta y Delta], h1 = e11, h2 = e22.
  Eigen::MatrixXd lhs;
  /// D^2 of any L2(y^2) + L1(y) + b at (h1, h2) vanishes since h1 h2 = h2 h1 = 0.
  bool rhs_is_zero = false;
  bool contradiction = false;
};

D2Verdict d2_mismatch(const EntryMoments& em);

/// Monte Carlo estimate of E[Delta h Delta] with N(mu, var) entries (row-major).
MCEstimate operator_L_mc(const Eigen::MatrixXd& h, double mu, double var, std::size_t n, std::uint64_t seed);

/// Monte Carlo estimate of D^2 f(y)(h1, h2) by the central mixed difference
/// of f(y) = Delta y Delta y Delta, sample by sample (row-major).
MCEstimate d2_finite_difference_mc(const Eigen::MatrixXd& y, const Eigen::MatrixXd& h1,
                                   const Eigen::MatrixXd& h2, double mu, double var, double step,
                                   std::size_t n, std::uint64_t seed);

/// Unit matrix e_ij (1-based indices as in the usual notation).
Eigen::MatrixXd unit_matrix(std::size_t d, std::size_t i, std::size_t j);

}  // namespace polyproc
