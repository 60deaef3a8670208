#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace polyproc::test {

/// Probabilists' Gauss-Hermite rule (Golub-Welsch): sum_i w_i f(x_i) = E f(Z),
/// exact for polynomials of degree <= 2n - 1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline QuadratureRule gauss_hermite(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadratureRule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    r.weights.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return r;
}

/// E f(Z) for Z ~ N(0, I_dim) by the tensor-product rule with n nodes per axis.
inline double gauss_hermite_expectation(int dim, int n, const std::function<double(const Eigen::VectorXd&)>& f) {
  const QuadratureRule rule = gauss_hermite(n);
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  Eigen::VectorXd z(dim);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      z(d) = rule.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
      w *= rule.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
    }
    total += w * f(z);
    int d = 0;
    while (d < dim && ++idx[static_cast<std::size_t>(d)] == n) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == dim) break;
  }
  return total;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Asymptotic Kolmogorov-Smirnov p-value with the Stephens small-sample correction.
inline double ks_pvalue(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    p += 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

/// E[X_{i1} ... X_{im}] for X ~ N(mean, cov): every split of the index list into
/// a mean part and a centered part, the centered part summed over explicit
/// perfect matchings.
inline double pairing_sum(const Eigen::MatrixXd& cov, std::vector<Eigen::Index> rest) {
  if (rest.empty()) return 1.0;
  if (rest.size() % 2 == 1) return 0.0;
  const Eigen::Index first = rest.front();
  double total = 0.0;
  for (std::size_t j = 1; j < rest.size(); ++j) {
    std::vector<Eigen::Index> sub;
    for (std::size_t i = 1; i < rest.size(); ++i) {
      if (i != j) sub.push_back(rest[i]);
    }
    total += cov(first, rest[j]) * pairing_sum(cov, sub);
  }
  return total;
}

inline double brute_force_gaussian_moment(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                          const std::vector<Eigen::Index>& idx) {
  const std::size_t m = idx.size();
  double total = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    double mean_part = 1.0;
    std::vector<Eigen::Index> rest;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (std::size_t{1} << i)) {
        mean_part *= mean(idx[i]);
      } else {
        rest.push_back(idx[i]);
      }
    }
    total += mean_part * pairing_sum(cov, rest);
  }
  return total;
}

inline Eigen::MatrixXd to_matrix(const Eigen::VectorXd& v, Eigen::Index d) {
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = v(i * d + j);
  }
  return m;
}

inline Eigen::VectorXd to_row_major(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  }
  return v;
}

}  // namespace polyproc::test
