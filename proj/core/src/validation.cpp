#include "polyproc/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>

#include "polyproc/counterexample.hpp"
#include "polyproc/moments.hpp"
#include "polyproc/multilinear.hpp"
#include "polyproc/pricing.hpp"
#include "polyproc/process.hpp"

namespace polyproc {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

GateResult gate(std::string group, std::string name, bool pass, std::string detail, Clock::time_point t0,
                nlohmann::json data = nlohmann::json::object()) {
  return {std::move(name), std::move(group), pass, std::move(detail), since(t0), std::move(data)};
}

GateResult mc_gate(const std::string& group, const std::string& name, const GateVerdict& v, std::size_t n,
                   Clock::time_point t0) {
  return gate(group, name, v.pass, "max |z| = " + fmt(v.max_z) + " at index " + std::to_string(v.worst), t0,
              {{"max_z", v.max_z}, {"worst", v.worst}, {"n", n}});
}

MCEstimate slice(const MCEstimate& e, Eigen::Index start, Eigen::Index len) {
  return {e.mean.segment(start, len), e.se.segment(start, len), e.n};
}

Eigen::VectorXd row_major(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  }
  return v;
}

Eigen::MatrixXd as_matrix(const Eigen::VectorXd& v, Eigen::Index d) {
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = v(i * d + j);
  }
  return m;
}

Eigen::VectorXd random_normal(Rng& rng, Eigen::Index n, double scale = 1.0) {
  return scale * standard_normal(rng, n);
}

Eigen::VectorXd random_ints(Rng& rng, Eigen::Index n, int lo, int hi) {
  std::uniform_int_distribution<int> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

double binomial(std::size_t n, std::size_t k) {
  double b = 1.0;
  for (std::size_t i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  return b;
}

struct OuScenario {
  OUProcess process;
  FrozenScenario frozen;
  Decomposition decomposition;
};

OuScenario ou_scenario(const RunConfig& c, std::uint64_t seed, double t) {
  OUProcess p = c.ou_process();
  FrozenScenario sc = freeze(p, c.initial_curve(), c.scenario.s, c.scenario.path_dt, seed);
  Decomposition d = decompose(p, sc.path_to_s, sc.s, t);
  return {std::move(p), std::move(sc), std::move(d)};
}

struct LevyScenario {
  MatrixLevyProcess process;
  FrozenScenario frozen;
  Decomposition decomposition;
};

LevyScenario levy_scenario(const RunConfig& c, std::uint64_t seed, double mu, double sigma2) {
  MatrixLevyProcess p{2, mu, sigma2};
  const Eigen::VectorXd x0 = row_major(Eigen::MatrixXd::Identity(2, 2));
  FrozenScenario sc = freeze(p, x0, c.scenario.s, c.scenario.path_dt, seed);
  Decomposition d = decompose(p, sc.path_to_s, sc.s, c.scenario.t);
  return {p, std::move(sc), std::move(d)};
}

Functional pointwise_powers(std::size_t k_max) {
  return [k_max](const AlgebraElement& x) {
    const Eigen::Index dim = x.coords.size();
    Eigen::VectorXd out(dim * static_cast<Eigen::Index>(k_max));
    Eigen::VectorXd pw = x.coords;
    for (std::size_t k = 0; k < k_max; ++k) {
      out.segment(static_cast<Eigen::Index>(k) * dim, dim) = pw;
      pw = pw.cwiseProduct(x.coords);
    }
    return out;
  };
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<GateResult> gates_conditional_moments(const RunConfig& c) {
  const std::string group = "conditional_moments";
  constexpr std::size_t kMax = 4;
  std::vector<GateResult> out;
  const auto t0 = Clock::now();
  const OuScenario sc = ou_scenario(c, derive_seed(c.mc.seed, 1), c.scenario.t);
  const Algebra alg = sc.process.algebra();
  const auto dim = static_cast<Eigen::Index>(alg.dimension());
  const MCEstimate est = conditional_mc(sc.decomposition, pointwise_powers(kMax), c.mc.n_paths,
                                        derive_seed(sc.frozen.seed_base, 0));
  for (std::size_t k = 1; k <= kMax; ++k) {
    const ConditionalMomentResult r = cond_moment_commutative(k, alg, sc.decomposition);
    const GateVerdict v =
        tolerance_gate(slice(est, static_cast<Eigen::Index>(k - 1) * dim, dim), r.value.coords, c.mc.k_sigma);
    out.push_back(mc_gate(group, "k=" + std::to_string(k) + " binomial formula vs frozen-path MC", v,
                          c.mc.n_paths, t0));
  }
  return out;
}

std::vector<GateResult> gates_word_expansion(const RunConfig& c) {
  const std::string group = "word_expansion";
  std::vector<GateResult> out;
  const std::uint64_t seed = derive_seed(c.mc.seed, 2);

  {
    const OuScenario sc = ou_scenario(c, derive_seed(seed, 0), c.scenario.t);
    const Algebra alg = sc.process.algebra();
    for (std::size_t k = 1; k <= 4; ++k) {
      const auto t1 = Clock::now();
      const KLinearMap map = KLinearMap::product(alg, k);
      WordExpansionOptions opts;
      opts.n_mc = c.mc.n_paths;
      opts.seed = derive_seed(seed, 10 + k);
      const ConditionalMomentResult words = cond_expectation_words(map, sc.decomposition, opts);
      const ConditionalMomentResult closed = cond_moment_commutative(k, alg, sc.decomposition);
      const MCEstimate est{words.value.coords, *words.se, c.mc.n_paths};
      out.push_back(mc_gate(group, "k=" + std::to_string(k) + " grid product words vs binomial formula",
                            tolerance_gate(est, closed.value.coords, c.mc.k_sigma), c.mc.n_paths, t1));
    }
  }

  {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail = "counts match binomial coefficients for k <= 5";
    for (std::size_t k = 0; k <= 5 && ok; ++k) {
      const auto words = enumerate_words(k);
      std::vector<std::size_t> count(k + 1, 0);
      for (const auto& w : words) ++count[w.par_count()];
      for (std::size_t n = 0; n <= k; ++n) {
        if (static_cast<double>(count[n]) != binomial(k, n)) {
          ok = false;
          detail = "k=" + std::to_string(k) + ", n=" + std::to_string(n) + ": " + std::to_string(count[n]) +
                   " words";
        }
      }
      if (words.size() != (std::size_t{1} << k)) ok = false;
    }
    out.push_back(gate(group, "word count with n parallel letters = binom(k, n)", ok, detail, t0));
  }

  {
    const auto t0 = Clock::now();
    const LevyScenario sc = levy_scenario(c, derive_seed(seed, 1), 0.5, 1.0);
    const Algebra alg = sc.process.algebra();
    const KLinearMap dense = KLinearMap::dense(alg, 3, KLinearMap::product(alg, 3).to_dense().coeffs, 1.0);
    const ConditionalMomentResult exact = cond_expectation_words(dense, sc.decomposition);
    WordExpansionOptions opts;
    opts.n_mc = c.mc.n_paths;
    opts.seed = derive_seed(seed, 20);
    opts.force_mc = true;
    const ConditionalMomentResult mc = cond_expectation_words(dense, sc.decomposition, opts);
    out.push_back(mc_gate(group, "matrix k=3 exact words vs MC words",
                          tolerance_gate(MCEstimate{mc.value.coords, *mc.se, c.mc.n_paths}, exact.value.coords,
                                         c.mc.k_sigma),
                          c.mc.n_paths, t0));
  }

  {
    const auto t0 = Clock::now();
    const Algebra alg = Algebra::lattice(4);
    Rng rng = make_rng(seed, 3);
    const Eigen::VectorXd mean = random_normal(rng, 5, 0.3);
    const Eigen::MatrixXd a = as_matrix(random_normal(rng, 25, 0.3), 5);
    const Decomposition d{alg.element(random_normal(rng, 5)), GaussianLaw(mean, a * a.transpose())};
    double worst = 0.0;
    for (std::size_t k = 1; k <= 4; ++k) {
      const KLinearMap dense = KLinearMap::dense(alg, k, KLinearMap::product(alg, k).to_dense().coeffs, 1.0);
      const auto words = cond_expectation_words(dense, d);
      const auto closed = cond_moment_commutative(k, alg, d);
      worst = std::max(worst, (words.value.coords - closed.value.coords).cwiseAbs().maxCoeff() /
                                  (1.0 + closed.value.coords.cwiseAbs().maxCoeff()));
    }
    out.push_back(gate(group, "lattice exact words = binomial formula (k <= 4)", worst <= 1e-10,
                       "max relative difference " + fmt(worst), t0, {{"max_rel_diff", worst}}));
  }
  return out;
}

std::vector<GateResult> gates_ou_homomorphism(const RunConfig& c) {
  const std::string group = "ou_homomorphism";
  std::vector<GateResult> out;
  const auto t0 = Clock::now();
  const FilipovicGeometry geo(c.grid);
  const double t = c.scenario.s + 2.0 * geo.grid().dx();
  const OuScenario sc = ou_scenario(c, derive_seed(c.mc.seed, 3), t);
  const Algebra alg = sc.process.algebra();
  const Eigen::VectorXd& f_s = sc.frozen.path_to_s.at(sc.frozen.s);
  double worst = 0.0;
  for (std::size_t k = 1; k <= 5; ++k) {
    const auto ou = cond_moment_ou(k, f_s, sc.frozen.s, t, sc.process);
    const auto comm = cond_moment_commutative(k, alg, sc.decomposition);
    worst = std::max(worst, (ou.value.coords - comm.value.coords).cwiseAbs().maxCoeff());
  }
  out.push_back(gate(group, "shifted-power formula = binomial formula (k <= 5, grid-multiple t-s)",
                     geo.is_grid_multiple(t - c.scenario.s) && worst <= 1e-10, "max difference " + fmt(worst), t0,
                     {{"max_abs_diff", worst}, {"t_minus_s", t - c.scenario.s}}));
  return out;
}

std::vector<GateResult> gates_left_multiplier(const RunConfig& c) {
  const std::string group = "left_multiplier";
  std::vector<GateResult> out;
  const std::uint64_t seed = derive_seed(c.mc.seed, 4);
  const Eigen::MatrixXd e12 = unit_matrix(2, 1, 2);
  const Eigen::MatrixXd e21 = unit_matrix(2, 2, 1);

  {
    const auto t0 = Clock::now();
    const Eigen::MatrixXd l = operator_L(e12, EntryMoments{0.0, 1.0, 0.0});
    out.push_back(gate(group, "L(e12) = e21 for centered unit-variance entries", l == e21,
                       "L(e12) = [[" + fmt(l(0, 0)) + "," + fmt(l(0, 1)) + "],[" + fmt(l(1, 0)) + "," +
                           fmt(l(1, 1)) + "]]",
                       t0));
  }
  {
    const auto t0 = Clock::now();
    const LeftMultiplierVerdict v = assert_no_left_multiplier(e12, e21);
    out.push_back(gate(group, "a e12 = e21 has no solution (residual >= 1)", !v.consistent && v.residual >= 1.0,
                       std::string(v.consistent ? "CONSISTENT" : "INCONSISTENT") + ", residual " + fmt(v.residual),
                       t0, {{"residual", v.residual}}));
  }
  {
    const auto t0 = Clock::now();
    Rng rng = make_rng(seed, 0);
    Eigen::MatrixXd h = as_matrix(random_normal(rng, 9), 3);
    h += 3.0 * Eigen::MatrixXd::Identity(3, 3);
    const LeftMultiplierVerdict v = assert_no_left_multiplier(h, h);
    const double err = (v.a - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff();
    out.push_back(gate(group, "control: a h = h is solved by a = I", v.consistent && err <= 1e-10,
                       "max |a - I| = " + fmt(err), t0));
  }
  {
    const auto t0 = Clock::now();
    const MCEstimate est = operator_L_mc(e12, 0.0, 1.0, c.mc.n_paths, derive_seed(seed, 1));
    out.push_back(mc_gate(group, "E[D e12 D] by MC = e21", tolerance_gate(est, row_major(e21), c.mc.k_sigma),
                          c.mc.n_paths, t0));
  }
  {
    const auto t0 = Clock::now();
    Rng rng = make_rng(seed, 2);
    const Eigen::MatrixXd h = as_matrix(random_normal(rng, 9), 3);
    const double mu = 0.5;
    const double var = 2.0;
    const MCEstimate est = operator_L_mc(h, mu, var, c.mc.n_paths, derive_seed(seed, 3));
    const Eigen::MatrixXd l = operator_L(h, EntryMoments::gaussian(mu, var));
    out.push_back(mc_gate(group, "L(h) vs MC for a random 3x3 h, mu=0.5",
                          tolerance_gate(est, row_major(l), c.mc.k_sigma), c.mc.n_paths, t0));
  }
  return out;
}

std::vector<GateResult> gates_second_derivative(const RunConfig& c) {
  const std::string group = "second_derivative";
  std::vector<GateResult> out;
  const std::uint64_t seed = derive_seed(c.mc.seed, 5);
  const Eigen::MatrixXd h1 = unit_matrix(2, 1, 1);
  const Eigen::MatrixXd h2 = unit_matrix(2, 2, 2);
  const D2Verdict v = d2_mismatch(EntryMoments::gaussian(1.0, 1.0));

  {
    const auto t0 = Clock::now();
    Eigen::MatrixXd expected(2, 2);
    expected << 2.0, 3.0, 3.0, 2.0;
    out.push_back(gate(group, "D2 f(y)(e11, e22) = [[2,3],[3,2]] for mu=1, var=1", v.lhs == expected,
                       "lhs = [[" + fmt(v.lhs(0, 0)) + "," + fmt(v.lhs(0, 1)) + "],[" + fmt(v.lhs(1, 0)) + "," +
                           fmt(v.lhs(1, 1)) + "]]",
                       t0));
  }
  {
    const auto t0 = Clock::now();
    Rng rng = make_rng(seed, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::MatrixXd l2 = as_matrix(random_normal(rng, 16), 4);
      const Eigen::VectorXd d2 = l2 * row_major(h1 * h2 + h2 * h1);
      worst = std::max(worst, d2.cwiseAbs().maxCoeff());
    }
    const bool ok = worst == 0.0 && v.rhs_is_zero && v.contradiction;
    out.push_back(gate(group, "generalized quadratic D2 at (e11, e22) = 0: CONTRADICTION", ok,
                       std::string(v.contradiction ? "CONTRADICTION" : "no contradiction") +
                           ", max |L2(h1 h2 + h2 h1)| = " + fmt(worst),
                       t0));
  }
  {
    const auto t0 = Clock::now();
    Rng rng = make_rng(seed, 1);
    const Eigen::MatrixXd y = as_matrix(random_normal(rng, 4), 2);
    const MCEstimate est = d2_finite_difference_mc(y, h1, h2, 1.0, 1.0, 0.5, c.mc.n_paths, derive_seed(seed, 2));
    out.push_back(mc_gate(group, "D2 by sampled finite differences vs closed form",
                          tolerance_gate(est, row_major(v.lhs), c.mc.k_sigma), c.mc.n_paths, t0));
  }
  return out;
}

std::vector<GateResult> gates_frechet(const RunConfig& c) {
  const std::string group = "frechet";
  std::vector<GateResult> out;
  const std::uint64_t seed = derive_seed(c.mc.seed, 6);

  {
    const auto t0 = Clock::now();
    Rng rng = make_rng(seed, 0);
    const Algebra grid = Algebra::grid(c.grid);
    const Algebra mat = Algebra::matrix(2);
    const Eigen::VectorXd coeffs = random_normal(rng, 4 * 4 * 4 * 4 * 4, 0.5);
    const std::vector<std::pair<std::string, Monomial>> cases = {
        {"grid product", Monomial{KLinearMap::product(grid, 4)}},
        {"matrix dense", Monomial{KLinearMap::dense(mat, 4, coeffs, 1.0)}}};
    bool ok = true;
    nlohmann::json data = nlohmann::json::array();
    for (const auto& [label, m] : cases) {
      const Algebra& alg = m.base.algebra();
      const auto dim = static_cast<Eigen::Index>(alg.dimension());
      const AlgebraElement u = alg.element(Eigen::VectorXd::Ones(dim) + random_normal(rng, dim, 0.3));
      const std::vector<AlgebraElement> dirs = {alg.element(random_normal(rng, dim)),
                                                alg.element(random_normal(rng, dim))};
      for (std::size_t n = 1; n <= 2; ++n) {
        const AlgebraElement exact = frechet_derivative(m, u, n, std::span(dirs.data(), n));
        std::vector<double> err;
        for (const double h : {1e-2, 5e-3, 2.5e-3}) {
          const AlgebraElement fd = finite_difference_derivative(m, u, n, std::span(dirs.data(), n), h);
          err.push_back((fd.coords - exact.coords).cwiseAbs().maxCoeff());
        }
        const double r1 = err[0] / err[1];
        const double r2 = err[1] / err[2];
        const bool second_order = r1 > 3.5 && r1 < 4.5 && r2 > 3.5 && r2 < 4.5;
        ok = ok && second_order;
        data.push_back({{"case", label}, {"n", n}, {"errors", err}, {"ratios", {r1, r2}}});
      }
    }
    out.push_back(gate(group, "closed-form derivative vs finite differences: O(h^2) ladder", ok,
                       ok ? "error ratios within [3.5, 4.5]" : "error ratios off: " + data.dump(), t0, {{"ladder", data}}));
  }

  {
    const auto t0 = Clock::now();
    Rng rng = make_rng(seed, 1);
    bool ok = true;
    constexpr std::size_t k = 4;
    for (const Algebra& alg : {Algebra::grid(c.grid), Algebra::lattice(6)}) {
      const auto dim = static_cast<Eigen::Index>(alg.dimension());
      const Monomial m{KLinearMap::product(alg, k)};
      const AlgebraElement u = alg.element(random_ints(rng, dim, -3, 3));
      const AlgebraElement h = alg.element(random_ints(rng, dim, -2, 2));
      for (std::size_t n = 1; n <= k; ++n) {
        const std::vector<AlgebraElement> dirs(n, h);
        const AlgebraElement d = frechet_derivative(m, u, n, dirs);
        AlgebraElement expect = alg.one();
        for (std::size_t i = 0; i < k - n; ++i) expect = alg.mul(expect, u);
        for (std::size_t i = 0; i < n; ++i) expect = alg.mul(expect, h);
        double falling = 1.0;
        for (std::size_t i = 0; i < n; ++i) falling *= static_cast<double>(k - i);
        ok = ok && d.coords == falling * expect.coords;
      }
    }
    out.push_back(gate(group, "commutative D^n M_k(u)(h,..,h) = k!/(k-n)! u^(k-n) h^n", ok,
                       ok ? "exact on grid and lattice" : "mismatch", t0));
  }

  {
    const auto t0 = Clock::now();
    Rng rng = make_rng(seed, 2);
    bool ok = true;
    const Algebra mat = Algebra::matrix(2);
    for (std::size_t k = 1; k <= 4; ++k) {
      const Monomial dense{KLinearMap::dense(mat, k, random_normal(rng, static_cast<Eigen::Index>(std::pow(4, k + 1))), 1.0)};
      const Monomial prod{KLinearMap::product(Algebra::grid(c.grid), k)};
      for (const Monomial* m : {&dense, &prod}) {
        const Algebra& alg = m->base.algebra();
        const auto dim = static_cast<Eigen::Index>(alg.dimension());
        std::vector<AlgebraElement> dirs;
        for (std::size_t i = 0; i <= k; ++i) dirs.push_back(alg.element(random_normal(rng, dim)));
        const AlgebraElement d = frechet_derivative(*m, alg.element(random_normal(rng, dim)), k + 1, dirs);
        ok = ok && d.coords.isZero(0.0);
      }
    }
    out.push_back(gate(group, "D^(k+1) M_k = 0", ok, ok ? "exactly zero for k <= 4" : "nonzero", t0));
  }

  {
    const auto t0 = Clock::now();
    Rng rng = make_rng(seed, 3);
    const Algebra mat = Algebra::matrix(2);
    constexpr std::size_t k = 3;
    const Monomial m{KLinearMap::dense(mat, k, random_ints(rng, 4 * 4 * 4 * 4, -3, 3), 1.0)};
    const AlgebraElement u = mat.element(random_ints(rng, 4, -2, 2));
    bool ok = true;
    for (std::size_t n = 2; n <= k; ++n) {
      std::vector<AlgebraElement> dirs;
      for (std::size_t i = 0; i < n; ++i) dirs.push_back(mat.element(random_ints(rng, 4, -2, 2)));
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      const AlgebraElement ref = frechet_derivative(m, u, n, dirs);
      while (std::next_permutation(perm.begin(), perm.end())) {
        std::vector<AlgebraElement> permuted;
        for (const auto i : perm) permuted.push_back(dirs[i]);
        ok = ok && frechet_derivative(m, u, n, permuted).coords == ref.coords;
      }
    }
    out.push_back(gate(group, "derivative symmetric under direction permutations (dense)", ok,
                       ok ? "exact for n = 2, 3" : "asymmetric", t0));
  }
  return out;
}

std::vector<GateResult> gates_norm_moments(const RunConfig& c) {
  const std::string group = "norm_moments";
  std::vector<GateResult> out;
  const std::uint64_t seed = derive_seed(c.mc.seed, 7);
  const OuScenario sc = ou_scenario(c, derive_seed(seed, 0), c.scenario.t);
  const FilipovicGeometry& geo = sc.process.geometry();
  const Decomposition& d = sc.decomposition;

  {
    const auto t0 = Clock::now();
    const GaussianLaw centered = GaussianLaw::centered(d.perp_law.cov());
    const Eigen::MatrixXd l = geo.gram().llt().matrixL();
    const Eigen::MatrixXd cy = l.transpose() * centered.cov() * l;
    const double expect = cy.trace() * cy.trace() + 2.0 * cy.cwiseProduct(cy).sum();
    const double got = norm_even_moment(2, centered, geo);
    const double rel = std::abs(got - expect) / expect;
    out.push_back(gate(group, "E||X||^4 = (E||X||^2)^2 + 2 sum C_ij^2 (centered)", rel <= 1e-10,
                       "relative difference " + fmt(rel), t0, {{"value", got}, {"identity", expect}}));
  }

  {
    const auto t0 = Clock::now();
    const GaussianLaw law(d.parallel.coords, d.perp_law.cov());
    const MCEstimate est = conditional_mc(
        d,
        [&](const AlgebraElement& x) {
          const double r2 = std::pow(geo.hilbert_norm(x.coords), 2);
          Eigen::VectorXd v(4);
          v << r2, r2 * r2, r2 * r2 * r2, r2 * r2 * r2 * r2;
          return v;
        },
        c.mc.n_paths, derive_seed(seed, 1));
    Eigen::VectorXd claim(4);
    for (std::size_t k = 1; k <= 4; ++k) claim(static_cast<Eigen::Index>(k - 1)) = norm_even_moment(k, law, geo);
    out.push_back(mc_gate(group, "even norm moments k <= 4 vs MC (conditional law)",
                          tolerance_gate(est, claim, c.mc.k_sigma), c.mc.n_paths, t0));
  }

  {
    const auto t0 = Clock::now();
    const double got = norm_odd_moment(0, [](double x) { return 1.0 / std::sqrt(1.0 + 2.0 * x); });
    const double expect = std::sqrt(2.0 / std::numbers::pi);
    out.push_back(gate(group, "E|N(0,1)| from the Laplace transform = sqrt(2/pi)",
                       std::abs(got - expect) <= 1e-4, "value " + fmt(got) + ", error " + fmt(got - expect), t0,
                       {{"value", got}}));
  }

  for (std::size_t k = 0; k <= 1; ++k) {
    const auto t0 = Clock::now();
    const unsigned power = static_cast<unsigned>(2 * k + 2);
    const auto norm = [&](const AlgebraElement& x) { return geo.hilbert_norm(x.coords); };
    const LaplaceEstimator phi = laplace_estimator(d, norm, power, c.mc.n_paths, derive_seed(seed, 10 + k));
    const double value = norm_odd_moment_from_complement(k, [&](double x) { return phi.complement(x); });
    const double alpha = (2.0 * k + 1.0) / (2.0 * k + 2.0);
    MomentAccumulator acc(1);
    for (const double r : phi.samples()) acc.add(Eigen::VectorXd::Constant(1, std::pow(r, alpha)));
    MCEstimate laplace = acc.estimate();
    laplace.mean(0) = value;
    const MCEstimate direct = conditional_mc(
        d, [&](const AlgebraElement& x) { return Eigen::VectorXd::Constant(1, std::pow(norm(x), 2.0 * k + 1.0)); },
        c.mc.n_paths, derive_seed(seed, 20 + k));
    out.push_back(mc_gate(group, "E||X||^" + std::to_string(2 * k + 1) + " via Laplace integral vs direct MC",
                          tolerance_gate(laplace, direct, c.mc.k_sigma), c.mc.n_paths, t0));
  }
  return out;
}

std::vector<GateResult> gates_pricing(const RunConfig& c) {
  const std::string group = "pricing";
  std::vector<GateResult> out;
  const std::uint64_t seed = derive_seed(c.mc.seed, 8);
  const auto& pd = c.pricing;
  const OUProcess p = c.ou_process();
  const auto call = vanilla_payoff(PayoffKind::kCall, pd.strike);
  const PayoffPolynomial poly = bernstein_expand(call, pd.degree, pd.domain_M);
  const PricingRequest req{poly, pd.s, pd.t, pd.x, c.initial_curve()};

  {
    const auto t0 = Clock::now();
    const PriceResult cf = price_option(req, p);
    const PriceResult mc = price_mc(req, call, p, c.mc.n_paths, seed);
    const double diff = std::abs(cf.price - mc.price);
    const double tol = std::max(c.mc.k_sigma * mc.se.value_or(0.0), poly.sup_error);
    const bool ok = diff <= tol;
    out.push_back(gate(group, "call: polynomial price vs exact-payoff MC", ok,
                       "closed " + fmt(cf.price) + ", MC " + fmt(mc.price) + " +- " + fmt(mc.se.value_or(0.0)) +
                           ", |diff| " + fmt(diff) + " <= " + fmt(tol),
                       t0,
                       {{"closed_form", cf.price},
                        {"mc", mc.price},
                        {"se", mc.se.value_or(0.0)},
                        {"sup_error", poly.sup_error},
                        {"domain_exit_prob", mc.diagnostics.domain_exit_prob}}));
  }

  {
    const auto t0 = Clock::now();
    const OUProcess quiet = OUProcess::exponential_kernel(FilipovicGeometry(c.grid), 0.0, c.noise.gamma, c.dt_quadrature);
    const auto fwd = vanilla_payoff(PayoffKind::kForward, pd.strike);
    const PricingRequest lin{bernstein_expand(fwd, 1, pd.domain_M), pd.s, pd.t, pd.x, c.initial_curve()};
    const PriceResult lin_cf = price_option(lin, quiet);
    const double f = lin_cf.diagnostics.forward;
    const PriceResult call_cf = price_option(req, quiet);
    const PriceResult call_mc = price_mc(req, call, quiet, c.mc.n_paths, seed);
    const bool ok = lin_cf.price == f - pd.strike &&
                    std::abs(call_cf.price - poly.eval_bernstein(f)) <= 1e-9 * (1.0 + std::abs(call_cf.price)) &&
                    call_mc.price == call(f) && call_mc.se == 0.0;
    out.push_back(gate(group, "zero noise: linear payoff exact, call = intrinsic", ok,
                       "forward " + fmt(f) + ", linear " + fmt(lin_cf.price) + ", call " + fmt(call_cf.price) +
                           ", MC call " + fmt(call_mc.price),
                       t0));
  }

  {
    const auto t0 = Clock::now();
    const PricingRequest lin{bernstein_expand([](double z) { return z; }, 1, pd.domain_M), pd.s, pd.t, pd.x,
                             c.initial_curve()};
    const PriceResult cf = price_option(lin, p);
    const PriceResult mc = price_mc(lin, [](double z) { return z; }, p, c.mc.n_paths, derive_seed(seed, 1));
    const bool exact = cf.price == cf.diagnostics.forward;
    const bool unbiased = std::abs(mc.price - cf.price) <= c.mc.k_sigma * mc.se.value_or(0.0);
    out.push_back(gate(group, "payoff h(z) = z prices to the forward", exact && unbiased,
                       "closed " + fmt(cf.price) + ", forward " + fmt(cf.diagnostics.forward) + ", MC " +
                           fmt(mc.price),
                       t0));
  }
  return out;
}

std::vector<GateResult> gates_conditional_laws(const RunConfig& c) {
  const std::string group = "conditional_laws";
  std::vector<GateResult> out;
  const std::uint64_t seed = derive_seed(c.mc.seed, 9);
  const std::size_t n = c.mc.n_paths;
  const double k_sigma = c.mc.k_sigma;

  {
    const auto t0 = Clock::now();
    const OuScenario sc = ou_scenario(c, derive_seed(seed, 0), c.scenario.t);
    Rng rng = make_rng(seed, 1);
    const auto dim = sc.decomposition.parallel.coords.size();
    const Eigen::MatrixXd a = as_matrix(random_normal(rng, dim * dim, 1.0 / std::sqrt(dim)), dim);
    const MCEstimate est = conditional_mc(
        sc.decomposition, [&](const AlgebraElement& x) -> Eigen::VectorXd { return a * x.coords; }, n,
        derive_seed(sc.frozen.seed_base, 0));
    out.push_back(mc_gate(group, "operator exchange: E[A X | F_s] = A E[X | F_s]",
                          tolerance_gate(est, a * sc.decomposition.parallel.coords, k_sigma), n, t0));
  }

  const double mu = 0.5;
  const double sigma2 = 1.0;
  const LevyScenario sc = levy_scenario(c, derive_seed(seed, 2), mu, sigma2);
  const Algebra mat = sc.process.algebra();
  const Eigen::VectorXd cond_mean = sc.decomposition.parallel.coords + sc.decomposition.perp_law.mean();
  const Eigen::MatrixXd y = as_matrix(sc.decomposition.parallel.coords, 2);

  {
    const auto t0 = Clock::now();
    const double s = c.scenario.s;
    const double t = c.scenario.t;
    const MCEstimate frozen = conditional_mc(
        Decomposition{mat.zero(), sc.decomposition.perp_law}, [](const AlgebraElement& x) { return x.coords; }, n,
        derive_seed(sc.frozen.seed_base, 1));
    MCConfig cfg;
    cfg.n = n;
    cfg.seed = derive_seed(seed, 3);
    const MCEstimate fresh = monte_carlo(cfg, 4, [&](Rng& rng) {
      const Path path = simulate_path(sc.process, row_major(Eigen::MatrixXd::Identity(2, 2)), t, c.scenario.path_dt, rng());
      return Eigen::VectorXd(path.at(t) - path.at(s));
    });
    out.push_back(mc_gate(group, "independence: increment law given frozen path = unconditional law",
                          tolerance_gate(frozen, fresh, k_sigma), n, t0));
  }

  {
    const auto t0 = Clock::now();
    Rng rng = make_rng(seed, 4);
    const Eigen::MatrixXd g = as_matrix(random_normal(rng, 4), 2);
    const MCEstimate est = conditional_mc(
        sc.decomposition, [&](const AlgebraElement& x) { return row_major(g * as_matrix(x.coords, 2)); }, n,
        derive_seed(sc.frozen.seed_base, 2));
    out.push_back(mc_gate(group, "Bochner factorization: E[g X] = g E[X]",
                          tolerance_gate(est, row_major(g * as_matrix(cond_mean, 2)), k_sigma), n, t0));
  }

  {
    const auto t0 = Clock::now();
    const MCEstimate est = conditional_mc(
        sc.decomposition,
        [&](const AlgebraElement& x) {
          const Eigen::MatrixXd m = as_matrix(x.coords, 2);
          Eigen::VectorXd v(8);
          v << row_major(y * m), row_major(m * y);
          return v;
        },
        n, derive_seed(sc.frozen.seed_base, 3));
    const Eigen::MatrixXd mean = as_matrix(cond_mean, 2);
    const GateVerdict left = tolerance_gate(slice(est, 0, 4), row_major(y * mean), k_sigma);
    const GateVerdict right = tolerance_gate(slice(est, 4, 4), row_major(mean * y), k_sigma);
    out.push_back(mc_gate(group, "left factorization: E[Y X | F_s] = Y E[X | F_s]", left, n, t0));
    out.push_back(mc_gate(group, "right factorization: E[X Y | F_s] = E[X | F_s] Y", right, n, t0));
  }

  {
    const auto t0 = Clock::now();
    const double dt = c.scenario.t - c.scenario.s;
    const MCEstimate est = conditional_mc(
        Decomposition{mat.zero(), sc.decomposition.perp_law},
        [&](const AlgebraElement& x) {
          const Eigen::MatrixXd m = as_matrix(x.coords, 2);
          return row_major(m * y * m);
        },
        n, derive_seed(sc.frozen.seed_base, 4));
    const Eigen::MatrixXd frozen_value = operator_L(y, EntryMoments::gaussian(mu * dt, sigma2 * dt));
    out.push_back(mc_gate(group, "freezing: E[f(X, Y) | F_s] = E[f(X, y)] at y = Y, f = x y x",
                          tolerance_gate(est, row_major(frozen_value), k_sigma), n, t0));
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<GateGroup>& gate_groups() {
  static const std::vector<GateGroup> groups = {
      {"conditional_moments", gates_conditional_moments}, {"word_expansion", gates_word_expansion},
      {"ou_homomorphism", gates_ou_homomorphism},         {"left_multiplier", gates_left_multiplier},
      {"second_derivative", gates_second_derivative},     {"frechet", gates_frechet},
      {"norm_moments", gates_norm_moments},               {"pricing", gates_pricing},
      {"conditional_laws", gates_conditional_laws}};
  return groups;
}

bool SuiteReport::pass() const {
  return !gates.empty() && std::all_of(gates.begin(), gates.end(), [](const GateResult& g) { return g.pass; });
}

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json j = gate_report_json(gates);
  j["config_hash"] = config_hash;
  j["seconds"] = seconds;
  return j;
}

std::string SuiteReport::summary_table() const {
  std::ostringstream os;
  char line[512];
  std::snprintf(line, sizeof line, "%-20s %-68s %-6s %8s\n", "group", "gate", "result", "seconds");
  os << line;
  for (const auto& g : gates) {
    std::snprintf(line, sizeof line, "%-20s %-68s %-6s %8.2f\n", g.group.c_str(), g.name.c_str(),
                  g.pass ? "PASS" : "FAIL", g.seconds);
    os << line;
  }
  const auto failed = std::count_if(gates.begin(), gates.end(), [](const GateResult& g) { return !g.pass; });
  os << gates.size() << " gates, " << failed << " failed, " << fmt(seconds) << " s, config " << config_hash << '\n';
  return os.str();
}

SuiteReport run_groups(const RunConfig& c, const std::vector<GateGroup>& groups) {
  const auto t0 = Clock::now();
  SuiteReport report;
  report.config_hash = config_hash(c);
  for (const auto& g : groups) {
    const auto t1 = Clock::now();
    try {
      auto gates = g.run(c);
      report.gates.insert(report.gates.end(), gates.begin(), gates.end());
    } catch (const std::exception& e) {
      report.gates.push_back(gate(g.name, "group raised an exception", false, e.what(), t1));
    }
  }
  report.seconds = since(t0);
  return report;
}

SuiteReport run_validation(const RunConfig& c) { return run_groups(c, gate_groups()); }

}  // namespace polyproc
