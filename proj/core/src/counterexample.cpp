#include "polyproc/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "polyproc/process.hpp"

namespace polyproc {

namespace {

void require_square(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument(std::string(what) + " must be square");
}

Eigen::VectorXd row_major(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  }
  return v;
}

Eigen::MatrixXd sample_entries(Rng& rng, Eigen::Index d, double mu, double sd) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = mu + sd * z(rng);
  }
  return out;
}

}  // namespace

EntryMoments EntryMoments::gaussian(double mu, double var) {
  if (!(var >= 0.0)) throw std::invalid_argument("variance must be nonnegative");
  return {gaussian_raw_moment(mu, var, 1), gaussian_raw_moment(mu, var, 2), gaussian_raw_moment(mu, var, 3)};
}

void EntryMoments::validate() const {
  if (m2 < m1 * m1 - 1e-12 * std::max(1.0, m2)) {
    throw std::invalid_argument("entry moments violate m2 >= m1^2");
  }
}

Eigen::MatrixXd unit_matrix(std::size_t d, std::size_t i, std::size_t j) {
  if (i == 0 || j == 0 || i > d || j > d) throw std::out_of_range("unit matrix index out of range");
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  e(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) = 1.0;
  return e;
}

Eigen::MatrixXd operator_L(const Eigen::MatrixXd& h, const EntryMoments& em) {
  require_square(h, "h");
  em.validate();
  const Eigen::Index d = h.rows();
  const double m1sq = em.m1 * em.m1;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double v = 0.0;
      for (Eigen::Index p = 0; p < d; ++p) {
        for (Eigen::Index q = 0; q < d; ++q) {
          const bool same = (i == q) && (p == j);
          v += (same ? em.m2 : m1sq) * h(p, q);
        }
      }
      out(i, j) = v;
    }
  }
  return out;
}

Eigen::MatrixXd triple_sandwich(const Eigen::MatrixXd& h1, const Eigen::MatrixXd& h2, const EntryMoments& em) {
  require_square(h1, "h1");
  require_square(h2, "h2");
  if (h1.rows() != h2.rows()) throw std::invalid_argument("h1 and h2 differ in dimension");
  em.validate();
  const Eigen::Index d = h1.rows();
  auto expect3 = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c) {
    if (a == b && b == c) return em.m3;
    if (a == b || b == c || a == c) return em.m2 * em.m1;
    return em.m1 * em.m1 * em.m1;
  };
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double v = 0.0;
      for (Eigen::Index p = 0; p < d; ++p) {
        for (Eigen::Index q = 0; q < d; ++q) {
          if (h1(p, q) == 0.0) continue;
          for (Eigen::Index r = 0; r < d; ++r) {
            for (Eigen::Index s = 0; s < d; ++s) {
              if (h2(r, s) == 0.0) continue;
              v += expect3(i * d + p, q * d + r, s * d + j) * h1(p, q) * h2(r, s);
            }
          }
        }
      }
      out(i, j) = v;
    }
  }
  return out;
}

LeftMultiplierVerdict assert_no_left_multiplier(const Eigen::MatrixXd& h, const Eigen::MatrixXd& g) {
  require_square(h, "h");
  require_square(g, "g");
  if (h.rows() != g.rows()) throw std::invalid_argument("h and g differ in dimension");
  const Eigen::Index d = h.rows();
  // Row i of a h = g reads h^T a_i^T = g_i^T; stack the d blocks.
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i) system.block(i * d, i * d, d, d) = h.transpose();
  const Eigen::VectorXd rhs = row_major(g);
  const Eigen::VectorXd sol = system.completeOrthogonalDecomposition().solve(rhs);

  LeftMultiplierVerdict v;
  v.a.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) v.a(i, j) = sol(i * d + j);
  }
  v.residual = (v.a * h - g).norm();
  v.consistent = v.residual <= 1e-10 * (1.0 + g.norm());
  return v;
}

D2Verdict d2_mismatch(const EntryMoments& em) {
  const Eigen::MatrixXd h1 = unit_matrix(2, 1, 1);
  const Eigen::MatrixXd h2 = unit_matrix(2, 2, 2);
  D2Verdict v;
  v.lhs = triple_sandwich(h1, h2, em) + triple_sandwich(h2, h1, em);
  v.rhs_is_zero = (h1 * h2).isZero(0.0) && (h2 * h1).isZero(0.0);
  v.contradiction = v.rhs_is_zero && v.lhs.cwiseAbs().maxCoeff() > 0.0;
  return v;
}

MCEstimate operator_L_mc(const Eigen::MatrixXd& h, double mu, double var, std::size_t n, std::uint64_t seed) {
  require_square(h, "h");
  const Eigen::Index d = h.rows();
  const double sd = std::sqrt(var);
  MCConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  return monte_carlo(cfg, d * d, [&](Rng& rng) {
    const Eigen::MatrixXd delta = sample_entries(rng, d, mu, sd);
    return row_major(delta * h * delta);
  });
}

MCEstimate d2_finite_difference_mc(const Eigen::MatrixXd& y, const Eigen::MatrixXd& h1,
                                   const Eigen::MatrixXd& h2, double mu, double var, double step,
                                   std::size_t n, std::uint64_t seed) {
  require_square(y, "y");
  if (h1.rows() != y.rows() || h2.rows() != y.rows()) throw std::invalid_argument("dimension mismatch");
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  const Eigen::Index d = y.rows();
  const double sd = std::sqrt(var);
  MCConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  return monte_carlo(cfg, d * d, [&](Rng& rng) {
    const Eigen::MatrixXd delta = sample_entries(rng, d, mu, sd);
    auto f = [&](const Eigen::MatrixXd& at) -> Eigen::MatrixXd { return delta * at * delta * at * delta; };
    const Eigen::MatrixXd a = step * h1;
    const Eigen::MatrixXd b = step * h2;
    const Eigen::MatrixXd mixed = f(y + a + b) - f(y + a - b) - f(y - a + b) + f(y - a - b);
    return row_major(mixed / (4.0 * step * step));
  });
}

}  // namespace polyproc
