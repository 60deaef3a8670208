#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "polyproc/algebra.hpp"
#include "polyproc/random.hpp"

namespace polyproc {

/// Gaussian law on algebra coordinates. The covariance is symmetrized on
/// construction; eigenvalues down to -1e-10 (relative to the largest entry)
/// are clipped to zero, anything more negative is rejected.
class GaussianLaw {
 public:
  GaussianLaw(Eigen::VectorXd mean, Eigen::MatrixXd cov);
  static GaussianLaw degenerate(Eigen::VectorXd mean);
  static GaussianLaw centered(Eigen::MatrixXd cov);

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  /// A with A A^T = cov (spectral square root after clipping).
  const Eigen::MatrixXd& factor() const { return factor_; }
  bool is_degenerate() const { return degenerate_; }

  Eigen::VectorXd sample(Rng& rng) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
  bool degenerate_ = false;
};

/// E[Y^n] for Y ~ N(mean, var).
double gaussian_raw_moment(double mean, double var, unsigned n);

/// Realized path on a time grid.
struct Path {
  AlgebraTag tag = AlgebraTag::kGrid;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;

  /// State at a stored time; throws std::out_of_range if t is not on the path.
  const Eigen::VectorXd& at(double t) const;
  double end_time() const { return times.empty() ? 0.0 : times.back(); }
};

/// X(t) = X_perp(s;t) + X_par(s;t): the realized F_s-measurable part and the
/// law of the independent part.
struct Decomposition {
  AlgebraElement parallel;
  GaussianLaw perp_law;
};

/// Ornstein-Uhlenbeck stochastic convolution X(t) = int_0^t S_{t-u} dW(u) on
/// the discretized Filipovic space, S the shift semigroup and W a Wiener
/// process with covariance Q per unit time.
class OUProcess {
 public:
  OUProcess(FilipovicGeometry geometry, Eigen::MatrixXd noise_cov, double dt_quadrature = 1e-3);

  /// Q(xi_i, xi_j) = sigma^2 exp(-gamma |xi_i - xi_j|).
  static OUProcess exponential_kernel(FilipovicGeometry geometry, double sigma = 0.1, double gamma = 1.0,
                                      double dt_quadrature = 1e-3);

  const FilipovicGeometry& geometry() const { return geometry_; }
  Algebra algebra() const { return Algebra::grid(geometry_.grid()); }
  const Eigen::MatrixXd& noise_cov() const { return noise_cov_; }
  double dt_quadrature() const { return dt_quadrature_; }
  /// Matrix of the one-node shift S_dx.
  Eigen::MatrixXd shift_matrix_step() const { return geometry_.shift_matrix(geometry_.grid().dx()); }

  /// int_0^tau S_u Q S_u^T du by the trapezoidal rule.
  Eigen::MatrixXd transported_covariance(double tau) const;

 private:
  FilipovicGeometry geometry_;
  Eigen::MatrixXd noise_cov_;
  double dt_quadrature_;
};

/// Zero-mean law of X_perp(s;t) = int_s^t S_{t-u} dW(u).
GaussianLaw ou_perp_covariance(const OUProcess& p, double s, double t);

/// X_par(s;t) = S_{t-s} X(s); X_perp as above.
Decomposition decompose(const OUProcess& p, const Path& path_to_s, double s, double t);

/// Exact-in-law stepping X(t + dt) = S_dt X(t) + G, G ~ law of X_perp(t; t + dt).
/// The final step is shortened to land on t_end.
Path simulate_path(const OUProcess& p, const Eigen::VectorXd& x0, double t_end, double dt,
                   std::uint64_t seed);

/// d x d matrix of independent Brownian motions with drift mu and variance
/// sigma2 per unit time.
struct MatrixLevyProcess {
  std::size_t d = 2;
  double mu = 0.0;
  double sigma2 = 1.0;

  Algebra algebra() const { return Algebra::matrix(d); }
  /// Raw moments m_1..m_6 of one entry increment over a span of length dt.
  std::vector<double> entry_moments(double dt) const;
  GaussianLaw increment_law(double s, double t) const;
};

Decomposition decompose(const MatrixLevyProcess& p, const Path& path_to_s, double s, double t);

Path simulate_path(const MatrixLevyProcess& p, const Eigen::VectorXd& x0, double t_end, double dt,
                   std::uint64_t seed);

/// One draw of the perp part (mean plus factor times standard normals).
AlgebraElement sample_perp(const Decomposition& d, Rng& rng);
AlgebraElement sample_perp(const GaussianLaw& law, AlgebraTag tag, std::uint64_t seed);

}  // namespace polyproc
