#include "polyproc/process.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace polyproc {

namespace {

std::size_t step_count(double span, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / dt - 1e-9)));
}

std::vector<double> time_grid(double t_end, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(t_end >= 0.0)) throw std::invalid_argument("end time must be nonnegative");
  std::vector<double> times{0.0};
  if (t_end == 0.0) return times;
  const std::size_t n = step_count(t_end, dt);
  for (std::size_t i = 1; i < n; ++i) times.push_back(dt * static_cast<double>(i));
  times.push_back(t_end);
  return times;
}

}  // namespace

// ---------------------------------------------------------------------------
// GaussianLaw

GaussianLaw::GaussianLaw(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  const Eigen::Index n = mean_.size();
  if (cov_.rows() != n || cov_.cols() != n) throw std::invalid_argument("covariance shape mismatch");
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("covariance is not symmetric");
  }
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();

  if (cov_.isZero(0.0)) {
    degenerate_ = true;
    factor_ = Eigen::MatrixXd::Zero(n, n);
    return;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  Eigen::VectorXd lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-10 * scale) {
    throw std::invalid_argument("covariance is not positive semidefinite (eigenvalue " +
                                std::to_string(lambda.minCoeff()) + ")");
  }
  lambda = lambda.cwiseMax(0.0);
  factor_ = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

GaussianLaw GaussianLaw::degenerate(Eigen::VectorXd mean) {
  const Eigen::Index n = mean.size();
  return GaussianLaw(std::move(mean), Eigen::MatrixXd::Zero(n, n));
}

GaussianLaw GaussianLaw::centered(Eigen::MatrixXd cov) {
  const Eigen::Index n = cov.rows();
  return GaussianLaw(Eigen::VectorXd::Zero(n), std::move(cov));
}

Eigen::VectorXd GaussianLaw::sample(Rng& rng) const {
  if (degenerate_) return mean_;
  return mean_ + factor_ * standard_normal(rng, mean_.size());
}

double gaussian_raw_moment(double mean, double var, unsigned n) {
  // sum over even j of C(n, j) mean^(n-j) (j-1)!! var^(j/2)
  double total = 0.0;
  double binom = 1.0;  // C(n, j)
  double dfact = 1.0;  // (j-1)!!
  for (unsigned j = 0; j <= n; ++j) {
    if (j > 0) binom = binom * static_cast<double>(n - j + 1) / static_cast<double>(j);
    if (j % 2 == 0) {
      if (j >= 2) dfact *= static_cast<double>(j - 1);
      total += binom * std::pow(mean, static_cast<double>(n - j)) * dfact *
               std::pow(var, static_cast<double>(j / 2));
    }
  }
  return total;
}

const Eigen::VectorXd& Path::at(double t) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return states[i];
  }
  throw std::out_of_range("time " + std::to_string(t) + " is not on the realized path");
}

// ---------------------------------------------------------------------------
// OU

OUProcess::OUProcess(FilipovicGeometry geometry, Eigen::MatrixXd noise_cov, double dt_quadrature)
    : geometry_(std::move(geometry)), noise_cov_(std::move(noise_cov)), dt_quadrature_(dt_quadrature) {
  const auto n = static_cast<Eigen::Index>(geometry_.size());
  if (noise_cov_.rows() != n || noise_cov_.cols() != n) {
    throw std::invalid_argument("noise covariance must match the grid size");
  }
  if (!(dt_quadrature_ > 0.0)) throw std::invalid_argument("quadrature step must be positive");
  // Validates symmetry and PSD.
  (void)GaussianLaw::centered(noise_cov_);
}

OUProcess OUProcess::exponential_kernel(FilipovicGeometry geometry, double sigma, double gamma,
                                        double dt_quadrature) {
  if (!(sigma >= 0.0) || !(gamma > 0.0)) throw std::invalid_argument("kernel needs sigma >= 0, gamma > 0");
  const auto n = static_cast<Eigen::Index>(geometry.size());
  Eigen::MatrixXd q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      q(i, j) = sigma * sigma * std::exp(-gamma * std::abs(geometry.nodes()(i) - geometry.nodes()(j)));
    }
  }
  return OUProcess(std::move(geometry), std::move(q), dt_quadrature);
}

Eigen::MatrixXd OUProcess::transported_covariance(double tau) const {
  const auto n = static_cast<Eigen::Index>(geometry_.size());
  if (!(tau >= 0.0)) throw std::invalid_argument("covariance span must be nonnegative");
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  if (tau == 0.0 || noise_cov_.isZero(0.0)) return cov;
  const std::size_t steps = step_count(tau, dt_quadrature_);
  const double h = tau / static_cast<double>(steps);
  for (std::size_t j = 0; j <= steps; ++j) {
    const double u = (j == steps) ? tau : h * static_cast<double>(j);
    const Eigen::MatrixXd s = geometry_.shift_matrix(u);
    const double w = (j == 0 || j == steps) ? 0.5 * h : h;
    cov.noalias() += w * (s * noise_cov_ * s.transpose());
  }
  return 0.5 * (cov + cov.transpose());
}

GaussianLaw ou_perp_covariance(const OUProcess& p, double s, double t) {
  if (!(s >= 0.0) || s > t) throw std::invalid_argument("need 0 <= s <= t");
  return GaussianLaw::centered(p.transported_covariance(t - s));
}

Decomposition decompose(const OUProcess& p, const Path& path_to_s, double s, double t) {
  if (t < s) throw std::invalid_argument("decomposition needs t >= s");
  if (path_to_s.tag != AlgebraTag::kGrid) throw std::invalid_argument("OU path must be a grid path");
  const Eigen::VectorXd& xs = path_to_s.at(s);
  return {AlgebraElement{AlgebraTag::kGrid, p.geometry().shift(t - s, xs)}, ou_perp_covariance(p, s, t)};
}

Path simulate_path(const OUProcess& p, const Eigen::VectorXd& x0, double t_end, double dt,
                   std::uint64_t seed) {
  if (x0.size() != static_cast<Eigen::Index>(p.geometry().size())) {
    throw std::invalid_argument("initial curve has wrong number of samples");
  }
  Path path;
  path.tag = AlgebraTag::kGrid;
  path.times = time_grid(t_end, dt);
  path.states.reserve(path.times.size());
  path.states.push_back(x0);

  std::map<double, std::pair<Eigen::MatrixXd, GaussianLaw>> steps;
  Rng rng = make_rng(seed, 0);
  for (std::size_t i = 1; i < path.times.size(); ++i) {
    const double h = path.times[i] - path.times[i - 1];
    auto it = steps.find(h);
    if (it == steps.end()) {
      it = steps.emplace(h, std::make_pair(p.geometry().shift_matrix(h), ou_perp_covariance(p, 0.0, h))).first;
    }
    const auto& [shift, law] = it->second;
    path.states.push_back(shift * path.states.back() + law.sample(rng));
  }
  return path;
}

// ---------------------------------------------------------------------------
// Matrix Levy

std::vector<double> MatrixLevyProcess::entry_moments(double dt) const {
  std::vector<double> m(6);
  for (unsigned n = 1; n <= 6; ++n) m[n - 1] = gaussian_raw_moment(mu * dt, sigma2 * dt, n);
  return m;
}

GaussianLaw MatrixLevyProcess::increment_law(double s, double t) const {
  if (t < s) throw std::invalid_argument("increment needs t >= s");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("entry variance must be nonnegative");
  const auto n = static_cast<Eigen::Index>(d * d);
  const double dt = t - s;
  return GaussianLaw(Eigen::VectorXd::Constant(n, mu * dt),
                     sigma2 * dt * Eigen::MatrixXd::Identity(n, n));
}

Decomposition decompose(const MatrixLevyProcess& p, const Path& path_to_s, double s, double t) {
  if (t < s) throw std::invalid_argument("decomposition needs t >= s");
  if (path_to_s.tag != AlgebraTag::kMatrix) throw std::invalid_argument("Levy path must be a matrix path");
  return {AlgebraElement{AlgebraTag::kMatrix, path_to_s.at(s)}, p.increment_law(s, t)};
}

Path simulate_path(const MatrixLevyProcess& p, const Eigen::VectorXd& x0, double t_end, double dt,
                   std::uint64_t seed) {
  if (x0.size() != static_cast<Eigen::Index>(p.d * p.d)) {
    throw std::invalid_argument("initial matrix has wrong number of entries");
  }
  Path path;
  path.tag = AlgebraTag::kMatrix;
  path.times = time_grid(t_end, dt);
  path.states.push_back(x0);
  Rng rng = make_rng(seed, 0);
  for (std::size_t i = 1; i < path.times.size(); ++i) {
    const GaussianLaw law = p.increment_law(path.times[i - 1], path.times[i]);
    path.states.push_back(path.states.back() + law.sample(rng));
  }
  return path;
}

AlgebraElement sample_perp(const Decomposition& d, Rng& rng) {
  return {d.parallel.tag, d.perp_law.sample(rng)};
}

AlgebraElement sample_perp(const GaussianLaw& law, AlgebraTag tag, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  return {tag, law.sample(rng)};
}

}  // namespace polyproc
