#include "polyproc_cli/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "polyproc/config.hpp"
#include "polyproc/counterexample.hpp"
#include "polyproc/io.hpp"
#include "polyproc/moments.hpp"
#include "polyproc/oracle.hpp"
#include "polyproc/pricing.hpp"
#include "polyproc/process.hpp"
#include "polyproc/validation.hpp"

namespace polyproc::cli {

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool validate = false;
  std::string out_path;
  std::string format = "json";
};

RunConfig resolve(const Common& common) {
  RunConfig c = common.config_path.empty() ? RunConfig{} : load_config(common.config_path);
  if (common.seed) c.mc.seed = *common.seed;
  c.validate();
  return c;
}

void write_text(const Common& common, const std::string& text, std::ostream& out) {
  if (common.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(common.out_path);
  if (!f) throw InputError(common.out_path + ": cannot open output file");
  f << text;
}

void emit(const Common& common, const nlohmann::json& j, const std::string& csv, std::ostream& out) {
  if (common.format == "csv") {
    if (csv.empty()) throw InputError("--format csv is not available for this command");
    write_text(common, csv, out);
  } else {
    write_text(common, j.dump(2) + "\n", out);
  }
}

std::string matrix_text(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os << '[';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << (i ? ",[" : "[");
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
    os << ']';
  }
  os << ']';
  return os.str();
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

nlohmann::json gate_json(const GateVerdict& v, std::size_t n) {
  return {{"verdict", v.pass ? "PASS" : "FAIL"}, {"max_z", v.max_z}, {"worst", v.worst}, {"n", n}};
}

// ---------------------------------------------------------------------------

struct MomentsArgs {
  std::size_t k = 1;
  std::optional<double> s;
  std::optional<double> t;
  std::string curve;
  bool norm = false;
};

int cmd_moments(const Common& common, const MomentsArgs& a, std::ostream& out) {
  const RunConfig c = resolve(common);
  const double s = a.s.value_or(c.scenario.s);
  const double t = a.t.value_or(c.scenario.t);
  if (a.k < 1 || a.k > kMaxMomentOrder) throw InputError("--k must be in 1..8");
  if (!(s >= 0.0) || t < s) throw InputError("need 0 <= s <= t");
  const OUProcess p = c.ou_process();
  const Algebra alg = p.algebra();

  Eigen::VectorXd f_s;
  std::string source;
  if (!a.curve.empty()) {
    f_s = curve_on_grid(read_curve_csv_file(a.curve), c.grid);
    source = a.curve;
  } else {
    const FrozenScenario sc = freeze(p, c.initial_curve(), s, c.scenario.path_dt, c.mc.seed);
    f_s = sc.path_to_s.at(s);
    source = "simulated";
  }
  const Decomposition d{alg.element(p.geometry().shift(t - s, f_s)), ou_perp_covariance(p, s, t)};
  const ConditionalMomentResult r = cond_moment_commutative(a.k, alg, d);

  nlohmann::json j = result_to_json(r, alg);
  j["s"] = s;
  j["t"] = t;
  j["curve"] = source;
  j["shift_is_exact_homomorphism"] = p.geometry().is_grid_multiple(t - s);
  j["config_hash"] = config_hash(c);

  const auto norm = [&](const AlgebraElement& x) { return p.geometry().hilbert_norm(x.coords); };
  if (a.norm) {
    const GaussianLaw law(d.parallel.coords, d.perp_law.cov());
    if (a.k % 2 == 0) {
      j["norm_moment"] = {{"power", a.k}, {"value", norm_even_moment(a.k / 2, law, p.geometry())}, {"method", "exact"}};
    } else {
      const std::size_t half = (a.k - 1) / 2;
      const auto phi = laplace_estimator(d, norm, static_cast<unsigned>(2 * half + 2), c.mc.n_paths,
                                         derive_seed(c.mc.seed, 7));
      j["norm_moment"] = {{"power", a.k}, {"value", norm_odd_moment_from_complement(half, [&](double x) { return phi.complement(x); })}, {"method", "laplace"}};
    }
  }

  bool pass = true;
  if (common.validate) {
    const std::size_t k = a.k;
    const MCEstimate est = conditional_mc(
        d, [k](const AlgebraElement& x) { return Eigen::VectorXd(x.coords.array().pow(static_cast<double>(k))); },
        c.mc.n_paths, derive_seed(c.mc.seed, 3));
    const GateVerdict v = tolerance_gate(est, r.value.coords, c.mc.k_sigma);
    j["validation"] = gate_json(v, c.mc.n_paths);
    pass = v.pass;
  }
  emit(common, j, grid_function_csv(p.geometry(), r.value.coords), out);
  return pass ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------

struct PriceArgs {
  std::string request;
};

template <class T>
T field(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("request: bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw InputError(where + ": unknown key '" + key + "'");
  }
}

int cmd_price(const Common& common, const PriceArgs& a, std::ostream& out) {
  const RunConfig c = resolve(common);
  std::ifstream in(a.request);
  if (!in) throw InputError(a.request + ": cannot open request file");
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(a.request + ": " + e.what());
  }
  reject_unknown(req, {"payoff", "s", "t", "x", "curve_file"}, "request");
  const nlohmann::json payoff = req.value("payoff", nlohmann::json::object());
  reject_unknown(payoff, {"kind", "strike", "degree", "domain_M", "bernstein"}, "request.payoff");

  const std::string kind = field<std::string>(payoff, "kind", "call");
  const double strike = field(payoff, "strike", c.pricing.strike);
  const double M = field(payoff, "domain_M", c.pricing.domain_M);
  std::function<double(double)> exact;
  PayoffPolynomial poly;
  try {
    if (kind == "custom") {
      const auto b = field<std::vector<double>>(payoff, "bernstein", {});
      if (b.size() < 2) throw InputError("request.payoff: custom payoffs need at least two Bernstein coefficients");
      poly = from_bernstein(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())), M);
      exact = [poly](double z) { return poly.eval_bernstein(z); };
    } else {
      PayoffKind pk = PayoffKind::kCall;
      if (kind == "put") {
        pk = PayoffKind::kPut;
      } else if (kind == "forward") {
        pk = PayoffKind::kForward;
      } else if (kind != "call") {
        throw InputError("request.payoff: unknown kind '" + kind + "'");
      }
      exact = vanilla_payoff(pk, strike);
      poly = bernstein_expand(exact, field(payoff, "degree", c.pricing.degree), M);
    }
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("request.payoff: ") + e.what());
  }

  Eigen::VectorXd curve = c.initial_curve();
  std::string curve_source = "config";
  if (req.contains("curve_file")) {
    std::filesystem::path cf = field<std::string>(req, "curve_file", "");
    if (cf.is_relative()) cf = std::filesystem::path(a.request).parent_path() / cf;
    curve = curve_on_grid(read_curve_csv_file(cf.string()), c.grid);
    curve_source = cf.string();
  }
  const PricingRequest pr{poly, field(req, "s", c.pricing.s), field(req, "t", c.pricing.t), field(req, "x", c.pricing.x),
                          curve};
  const OUProcess p = c.ou_process();
  PriceResult r;
  try {
    r = price_option(pr, p);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("request: ") + e.what());
  }
  nlohmann::json j = price_to_json(r);
  j["curve"] = curve_source;
  j["config_hash"] = config_hash(c);

  bool pass = true;
  if (common.validate) {
    const PriceResult mc = price_mc(pr, exact, p, c.mc.n_paths, derive_seed(c.mc.seed, 8));
    const double diff = std::abs(mc.price - r.price);
    const double tol = std::max(c.mc.k_sigma * mc.se.value_or(0.0), poly.sup_error);
    pass = diff <= tol;
    j["validation"] = {{"verdict", pass ? "PASS" : "FAIL"},
                       {"mc_price", mc.price},
                       {"mc_se", mc.se.value_or(0.0)},
                       {"abs_diff", diff},
                       {"tolerance", tol}};
  }
  std::ostringstream csv;
  csv << std::setprecision(17) << "price,se\n" << r.price << ',' << (r.se ? std::to_string(*r.se) : "") << '\n';
  emit(common, j, csv.str(), out);
  return pass ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------

struct CounterexampleArgs {
  double mu = 1.0;
  double var = 1.0;
};

int cmd_counterexample(const Common& common, const CounterexampleArgs& a, std::ostream& out) {
  const RunConfig c = resolve(common);
  if (!(a.var >= 0.0)) throw InputError("--var must be >= 0");
  const Eigen::MatrixXd e12 = unit_matrix(2, 1, 2);
  const Eigen::MatrixXd e21 = unit_matrix(2, 2, 1);

  const Eigen::MatrixXd l = operator_L(e12, EntryMoments{0.0, 1.0, 0.0});
  const LeftMultiplierVerdict lm = assert_no_left_multiplier(e12, e21);
  const bool part1_ok = l == e21 && !lm.consistent;

  const D2Verdict d2 = d2_mismatch(EntryMoments::gaussian(a.mu, a.var));
  const bool expect_contradiction = a.mu != 0.0;
  const bool part2_ok = d2.contradiction == expect_contradiction;

  nlohmann::json j;
  j["left_multiplier"] = {{"L_e12", matrix_json(l)},
                          {"verdict", lm.consistent ? "CONSISTENT" : "INCONSISTENT"},
                          {"residual", lm.residual},
                          {"least_squares_a", matrix_json(lm.a)},
                          {"expected", "INCONSISTENT"},
                          {"pass", part1_ok}};
  j["second_derivative"] = {{"mu", a.mu},
                            {"var", a.var},
                            {"lhs", matrix_json(d2.lhs)},
                            {"generalized_quadratic_rhs", matrix_json(Eigen::MatrixXd::Zero(2, 2))},
                            {"verdict", d2.contradiction ? "CONTRADICTION" : "NO CONTRADICTION"},
                            {"expected", expect_contradiction ? "CONTRADICTION" : "NO CONTRADICTION"},
                            {"pass", part2_ok}};
  bool pass = part1_ok && part2_ok;
  if (common.validate) {
    const MCEstimate lmc = operator_L_mc(e12, 0.0, 1.0, c.mc.n_paths, derive_seed(c.mc.seed, 4));
    Eigen::VectorXd e21v(4);
    e21v << 0.0, 0.0, 1.0, 0.0;
    const GateVerdict v1 = tolerance_gate(lmc, e21v, c.mc.k_sigma);
    const MCEstimate dmc = d2_finite_difference_mc(Eigen::MatrixXd::Identity(2, 2), unit_matrix(2, 1, 1),
                                                   unit_matrix(2, 2, 2), a.mu, a.var, 0.5, c.mc.n_paths,
                                                   derive_seed(c.mc.seed, 5));
    Eigen::VectorXd lhs(4);
    lhs << d2.lhs(0, 0), d2.lhs(0, 1), d2.lhs(1, 0), d2.lhs(1, 1);
    const GateVerdict v2 = tolerance_gate(dmc, lhs, c.mc.k_sigma);
    j["validation"] = {{"L_e12_mc", gate_json(v1, c.mc.n_paths)}, {"d2_mc", gate_json(v2, c.mc.n_paths)}};
    pass = pass && v1.pass && v2.pass;
  }
  j["config_hash"] = config_hash(c);

  std::ostringstream csv;
  csv << "check,verdict,certificate\n"
      << "left_multiplier," << (lm.consistent ? "CONSISTENT" : "INCONSISTENT") << ",residual=" << lm.residual << '\n'
      << "second_derivative," << (d2.contradiction ? "CONTRADICTION" : "NO CONTRADICTION")
      << ",lhs=" << matrix_text(d2.lhs) << '\n';
  emit(common, j, csv.str(), out);
  return pass ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::optional<double> t_end;
  std::optional<double> dt;
};

int cmd_simulate(const Common& common, const SimulateArgs& a, std::ostream& out) {
  const RunConfig c = resolve(common);
  const double t_end = a.t_end.value_or(c.scenario.t);
  const double dt = a.dt.value_or(c.scenario.path_dt);
  if (!(t_end >= 0.0) || !(dt > 0.0)) throw InputError("need t_end >= 0 and dt > 0");
  const OUProcess p = c.ou_process();
  const Path path = simulate_path(p, c.initial_curve(), t_end, dt, c.mc.seed);
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : path.states) states.push_back(std::vector<double>(s.begin(), s.end()));
  const nlohmann::json j = {{"grid", grid_to_json(c.grid)},
                            {"times", path.times},
                            {"states", states},
                            {"config_hash", config_hash(c)}};
  emit(common, j, path_csv(path), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Common& common, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve(common);
  const SuiteReport report = run_validation(c);
  nlohmann::json j = report.to_json();
  j["config"] = config_to_json(c);
  if (!c.outputs.junit.empty()) {
    std::ofstream f(c.outputs.junit);
    if (!f) throw InputError(c.outputs.junit + ": cannot open JUnit output");
    f << gate_report_junit(report.gates, "polyproc");
  }
  if (!c.outputs.report.empty()) {
    std::ofstream f(c.outputs.report);
    if (!f) throw InputError(c.outputs.report + ": cannot open report output");
    f << j.dump(2) << '\n';
  }
  std::ostringstream csv;
  csv << "group,gate,verdict,seconds\n";
  for (const auto& g : report.gates) {
    csv << g.group << ",\"" << g.name << "\"," << (g.pass ? "PASS" : "FAIL") << ',' << g.seconds << '\n';
  }
  if (common.out_path.empty() && common.format == "json") {
    err << report.summary_table();
  } else {
    out << report.summary_table();
  }
  emit(common, j, csv.str(), out);
  return report.pass() ? kExitOk : kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"polyproc: conditional moments, pricing and validation for polynomial processes"};
  app.name(args.empty() ? "polyproc" : args.front());
  app.require_subcommand(1);

  Common common;
  app.add_option("--config", common.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "Override mc.seed");
  app.add_flag("--validate", common.validate, "Cross-check against the Monte Carlo oracle");
  app.add_option("--out", common.out_path, "Write the report to this file");
  app.add_option("--format", common.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  MomentsArgs ma;
  auto* moments = app.add_subcommand("moments", "Conditional moment E[X(t)^k | F_s] of the grid OU model");
  moments->add_option("--k", ma.k, "Moment order")->required();
  moments->add_option("--s", ma.s, "Conditioning time");
  moments->add_option("--t", ma.t, "Target time");
  moments->add_option("--curve", ma.curve, "Observed curve at s (CSV maturity,price)");
  moments->add_flag("--norm", ma.norm, "Also report E[||X(t)||^k | F_s]");

  PriceArgs pa;
  auto* price = app.add_subcommand("price", "Price a European option on the forward curve");
  price->add_option("--request", pa.request, "Pricing request JSON")->required();

  CounterexampleArgs ca;
  auto* counter = app.add_subcommand("counterexample", "Matrix-algebra counterexample report");
  counter->add_option("--mu", ca.mu, "Entry mean of the increment");
  counter->add_option("--var", ca.var, "Entry variance of the increment");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Simulate an OU forward-curve path");
  simulate->add_option("--t-end", sa.t_end, "End time");
  simulate->add_option("--dt", sa.dt, "Time step");

  auto* validate = app.add_subcommand("validate", "Run every oracle gate");

  for (auto* sub : {moments, price, counter, simulate, validate}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (moments->parsed()) return cmd_moments(common, ma, out);
    if (price->parsed()) return cmd_price(common, pa, out);
    if (counter->parsed()) return cmd_counterexample(common, ca, out);
    if (simulate->parsed()) return cmd_simulate(common, sa, out);
    if (validate->parsed()) return cmd_validate(common, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitInput;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace polyproc::cli
