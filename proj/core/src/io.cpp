#include "polyproc/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace polyproc {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& field, const std::string& where) {
  const std::string f = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
    throw InputError(where + ": not a finite number: '" + f + "'");
  }
  return v;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

}  // namespace

std::vector<CurvePoint> read_curve_csv(std::istream& in, const std::string& source) {
  std::vector<CurvePoint> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header) {
      if (t != "maturity,price") throw InputError(where + ": expected header 'maturity,price'");
      header = true;
      continue;
    }
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
      throw InputError(where + ": expected two comma-separated fields");
    }
    CurvePoint p{parse_double(t.substr(0, comma), where), parse_double(t.substr(comma + 1), where)};
    if (p.maturity < 0.0) throw InputError(where + ": maturity must be >= 0");
    if (!out.empty() && p.maturity <= out.back().maturity) {
      throw InputError(where + ": maturities must be strictly ascending");
    }
    out.push_back(p);
  }
  if (!header) throw InputError(source + ": empty curve file");
  if (out.empty()) throw InputError(source + ": curve has no data rows");
  return out;
}

std::vector<CurvePoint> read_curve_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open curve file");
  return read_curve_csv(in, path);
}

Eigen::VectorXd curve_on_grid(const std::vector<CurvePoint>& curve, const GridSpec& grid) {
  if (curve.empty()) throw InputError("curve has no points");
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.n_points));
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    const double x = grid.node(i);
    double v = 0.0;
    if (x <= curve.front().maturity) {
      v = curve.front().price;
    } else if (x >= curve.back().maturity) {
      v = curve.back().price;
    } else {
      const auto hi = std::upper_bound(curve.begin(), curve.end(), x,
                                       [](double a, const CurvePoint& p) { return a < p.maturity; });
      const auto lo = hi - 1;
      const double w = (x - lo->maturity) / (hi->maturity - lo->maturity);
      v = (1.0 - w) * lo->price + w * hi->price;
    }
    out(static_cast<Eigen::Index>(i)) = v;
  }
  return out;
}

nlohmann::json grid_to_json(const GridSpec& grid) {
  return {{"x_max", grid.x_max}, {"n_points", grid.n_points}, {"alpha", grid.alpha}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec g;
  for (const auto& [key, value] : j.items()) {
    if (key == "x_max") {
      g.x_max = value.get<double>();
    } else if (key == "n_points") {
      g.n_points = value.get<std::size_t>();
    } else if (key == "alpha") {
      g.alpha = value.get<double>();
    } else {
      throw InputError("grid: unknown key '" + key + "'");
    }
  }
  g.validate();
  return g;
}

nlohmann::json element_to_json(const AlgebraElement& e, const Algebra& algebra) {
  nlohmann::json j;
  j["algebra"] = std::string(to_string(e.tag));
  switch (e.tag) {
    case AlgebraTag::kGrid:
      j["grid"] = grid_to_json(algebra.geometry().grid());
      j["values"] = vector_json(e.coords);
      break;
    case AlgebraTag::kMatrix: {
      const auto d = static_cast<Eigen::Index>(algebra.matrix_dim());
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < d; ++i) rows.push_back(vector_json(e.coords.segment(i * d, d)));
      j["values"] = rows;
      break;
    }
    case AlgebraTag::kLattice:
      j["values"] = vector_json(e.coords);
      break;
  }
  return j;
}

nlohmann::json tensor_to_json(const DenseTensor& t) {
  return {{"dim", t.dim}, {"shape", t.shape}, {"data", vector_json(t.coeffs)}};
}

DenseTensor tensor_from_json(const nlohmann::json& j) {
  DenseTensor t;
  t.shape = j.at("shape").get<std::vector<std::size_t>>();
  t.dim = t.shape.empty() ? 0 : t.shape.front();
  if (j.contains("dim")) t.dim = j.at("dim").get<std::size_t>();
  std::size_t total = 1;
  for (const auto s : t.shape) {
    if (s != t.dim) throw InputError("tensor: all modes must have the algebra dimension");
    total *= s;
  }
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != total) throw InputError("tensor: data length does not match shape");
  t.coeffs = Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
  return t;
}

nlohmann::json law_to_json(const GaussianLaw& law) {
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index i = 0; i < law.dim(); ++i) cov.push_back(vector_json(law.cov().row(i).transpose()));
  return {{"mean", vector_json(law.mean())}, {"cov", cov}};
}

nlohmann::json result_to_json(const ConditionalMomentResult& r, const Algebra& algebra) {
  nlohmann::json j;
  j["order_k"] = r.order_k;
  j["algebra"] = std::string(to_string(r.value.tag));
  j["value"] = element_to_json(r.value, algebra)["values"];
  j["contributions"] = nlohmann::json::array();
  for (const auto& c : r.contributions) {
    j["contributions"].push_back({{"j", c.order}, {"value", element_to_json(c.value, algebra)["values"]}});
  }
  j["method"] = std::string(to_string(r.method));
  j["se"] = r.se ? vector_json(*r.se) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json price_to_json(const PriceResult& r) {
  const auto& d = r.diagnostics;
  return {{"price", r.price},
          {"se", r.se ? nlohmann::json(*r.se) : nlohmann::json(nullptr)},
          {"diagnostics",
           {{"forward", d.forward},
            {"perp_variance", d.perp_variance},
            {"bernstein_sup_error", d.bernstein_sup_error},
            {"basis_residual", d.basis_residual},
            {"domain_exit_prob", d.domain_exit_prob},
            {"extrapolated", d.extrapolated},
            {"method", d.method}}}};
}

std::string grid_function_csv(const FilipovicGeometry& geometry, const Eigen::VectorXd& values) {
  if (values.size() != static_cast<Eigen::Index>(geometry.size())) {
    throw std::invalid_argument("values do not match the grid");
  }
  std::ostringstream os;
  os << "x,value\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) os << fmt(geometry.nodes()(i)) << ',' << fmt(values(i)) << '\n';
  return os.str();
}

std::string path_csv(const Path& path) {
  std::ostringstream os;
  os << 't';
  const Eigen::Index n = path.states.empty() ? 0 : path.states.front().size();
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
  os << '\n';
  for (std::size_t r = 0; r < path.times.size(); ++r) {
    os << fmt(path.times[r]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << fmt(path.states[r](i));
    os << '\n';
  }
  return os.str();
}

}  // namespace polyproc
