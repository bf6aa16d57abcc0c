#pragma once

#include "capra/norms.hpp"
#include "capra/set_function.hpp"
#include "capra/solver.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace capra {

using Json = nlohmann::json;

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Norm configs:
///   "l2", "l1.5", "linf"                      inline lp names
///   {"type":"lp","p":2} or {"type":"lp","p":"inf"}
///   {"type":"weighted-lp","p":2,"weights":[...]}
///   {"type":"custom-table","combine":"sum"|"max","rows":[[...],...]}
/// Table norms accept "declared": {"om":bool,"osm":bool,"dual_osm":bool}.
Json norm_to_json(const NormSpec& n);
NormSpec norm_from_json(const Json& j);
NormSpec parse_norm_name(const std::string& name);

/// Set function configs:
///   {"d":2,"values":[0,1,1,2]}               bitmask order, "inf"/"-inf" allowed
///   {"name":"cardinality","d":3}             also "sqrt-cardinality", "affine" with "a","b"
///   "cardinality"                            inline name; d comes from `d_hint`
Json set_function_to_json(const SetFunction& F);
SetFunction set_function_from_json(const Json& j, int d_hint = 0);

Json ext_to_json(const ExtReal& v);
ExtReal ext_from_json(const Json& j);
/// +-inf become "inf"/"-inf" so the record stays valid JSON.
Json real_to_json(double v);

Json vector_to_json(const Vector& x);
Vector vector_from_json(const Json& j);
/// A JSON array of arrays, all of the same length.
std::vector<Vector> points_from_json(const Json& j);
Json decomposition_to_json(const Decomposition& z);

/// {"norm":..., "set_function":..., "x":[...], "alpha":...}
struct Problem {
  NormSpec norm;
  SetFunction F;
  Vector x;
  std::optional<double> alpha;
};
Problem problem_from_json(const Json& j);

Json read_json_file(const std::string& path);
/// A path to an existing file is read as JSON; otherwise the text is parsed as JSON,
/// falling back to a bare string.
Json load_config(const std::string& file_or_inline);

}  // namespace capra
