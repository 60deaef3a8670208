#pragma once

#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "polyproc/algebra.hpp"
#include "polyproc/moments.hpp"
#include "polyproc/multilinear.hpp"
#include "polyproc/pricing.hpp"
#include "polyproc/process.hpp"

namespace polyproc {

/// Malformed input; the message carries the source and line when known.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CurvePoint {
  double maturity = 0.0;
  double price = 0.0;
};

/// Reads `maturity,price` CSV (header required, maturities strictly ascending, >= 0).
std::vector<CurvePoint> read_curve_csv(std::istream& in, const std::string& source = "<curve>");
std::vector<CurvePoint> read_curve_csv_file(const std::string& path);

/// Samples a curve on the grid nodes: linear between points, constant outside.
Eigen::VectorXd curve_on_grid(const std::vector<CurvePoint>& curve, const GridSpec& grid);

nlohmann::json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);

nlohmann::json element_to_json(const AlgebraElement& e, const Algebra& algebra);
nlohmann::json tensor_to_json(const DenseTensor& t);
DenseTensor tensor_from_json(const nlohmann::json& j);
nlohmann::json law_to_json(const GaussianLaw& law);

nlohmann::json result_to_json(const ConditionalMomentResult& r, const Algebra& algebra);
nlohmann::json price_to_json(const PriceResult& r);

/// Header `x,value`, one row per node.
std::string grid_function_csv(const FilipovicGeometry& geometry, const Eigen::VectorXd& values);
/// Header `t,x0,...,x{n-1}`.
std::string path_csv(const Path& path);

}  // namespace polyproc
