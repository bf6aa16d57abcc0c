#include "capra/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace capra {

namespace {

double p_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError("norm: p must be a number or \"inf\", got \"" + s + "\"");
  }
  if (!j.is_number()) throw ConfigError("norm: p must be a number or \"inf\"");
  return j.get<double>();
}

Json p_to_json(double p) { return std::isinf(p) ? Json("inf") : Json(p); }

Tri tri_from(const Json& j, const char* key) {
  if (!j.contains(key)) return Tri::unknown;
  if (!j.at(key).is_boolean()) throw ConfigError(std::string("declared.") + key + " must be a boolean");
  return j.at(key).get<bool>() ? Tri::yes : Tri::no;
}

Json matrix_to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) rows.push_back(vector_to_json(M.row(i).transpose()));
  return rows;
}

template <typename Fn>
auto wrap(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

NormSpec parse_norm_name(const std::string& name) {
  if (name.size() < 2 || name[0] != 'l') throw ConfigError("unknown norm name: " + name);
  const std::string rest = name.substr(1);
  if (rest == "inf") return NormSpec::lp(std::numeric_limits<double>::infinity());
  std::size_t used = 0;
  double p = 0.0;
  try {
    p = std::stod(rest, &used);
  } catch (const std::exception&) {
    throw ConfigError("unknown norm name: " + name);
  }
  if (used != rest.size()) throw ConfigError("unknown norm name: " + name);
  return wrap("norm", [p] { return NormSpec::lp(p); });
}

Json norm_to_json(const NormSpec& n) {
  Json j;
  switch (n.kind()) {
    case NormSpec::Kind::lp:
      j["type"] = "lp";
      j["p"] = p_to_json(n.p());
      break;
    case NormSpec::Kind::weighted_lp:
      j["type"] = "weighted-lp";
      j["p"] = p_to_json(n.p());
      j["weights"] = vector_to_json(n.weights());
      break;
    default: {
      if (!n.is_table()) throw ConfigError("function-backed custom norms cannot be serialized");
      j["type"] = "custom-table";
      j["combine"] = n.table_combine() == TableCombine::sum ? "sum" : "max";
      j["rows"] = matrix_to_json(n.table_rows());
      const auto& f = n.declared_flags();
      Json dec = Json::object();
      auto put = [&dec](const char* k, Tri t) {
        if (t != Tri::unknown) dec[k] = t == Tri::yes;
      };
      put("om", f.orthant_monotonic);
      put("osm", f.orthant_strictly_monotonic);
      put("dual_osm", f.dual_osm);
      if (!dec.empty()) j["declared"] = dec;
    }
  }
  return j;
}

NormSpec norm_from_json(const Json& j) {
  if (j.is_string()) return parse_norm_name(j.get<std::string>());
  if (!j.is_object() || !j.contains("type")) throw ConfigError("norm: expected a name or an object with \"type\"");
  const auto type = j.at("type").get<std::string>();
  if (type == "lp") {
    if (!j.contains("p")) throw ConfigError("norm: lp needs \"p\"");
    const double p = p_from_json(j.at("p"));
    return wrap("norm", [p] { return NormSpec::lp(p); });
  }
  if (type == "weighted-lp") {
    if (!j.contains("p") || !j.contains("weights")) throw ConfigError("norm: weighted-lp needs \"p\" and \"weights\"");
    const double p = p_from_json(j.at("p"));
    const Vector w = vector_from_json(j.at("weights"));
    return wrap("norm", [p, &w] { return NormSpec::weighted_lp(p, w); });
  }
  if (type == "custom-table") {
    if (!j.contains("rows")) throw ConfigError("norm: custom-table needs \"rows\"");
    const auto rows = points_from_json(j.at("rows"));
    Matrix M(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    const std::string comb = j.value("combine", std::string("sum"));
    if (comb != "sum" && comb != "max") throw ConfigError("norm: combine must be \"sum\" or \"max\"");
    DeclaredFlags flags;
    if (j.contains("declared")) {
      const auto& dec = j.at("declared");
      flags.orthant_monotonic = tri_from(dec, "om");
      flags.orthant_strictly_monotonic = tri_from(dec, "osm");
      flags.dual_osm = tri_from(dec, "dual_osm");
    }
    return wrap("norm", [&] {
      return NormSpec::custom_table(M, comb == "sum" ? TableCombine::sum : TableCombine::max, flags);
    });
  }
  throw ConfigError("norm: unknown type \"" + type + "\"");
}

Json ext_to_json(const ExtReal& v) {
  if (v.is_pos_inf()) return "inf";
  if (v.is_neg_inf()) return "-inf";
  return v.value();
}

ExtReal ext_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return ExtReal::pos_inf();
    if (s == "-inf") return ExtReal::neg_inf();
    throw ConfigError("expected a number, \"inf\" or \"-inf\", got \"" + s + "\"");
  }
  if (!j.is_number()) throw ConfigError("expected a number, \"inf\" or \"-inf\"");
  return ExtReal(j.get<double>());
}

Json real_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  return ext_to_json(ExtReal(v));
}

Json set_function_to_json(const SetFunction& F) {
  Json vals = Json::array();
  for (const auto& v : F.values()) vals.push_back(ext_to_json(v));
  Json j{{"d", F.dim()}, {"values", vals}};
  if (F.label() != "table") j["label"] = F.label();
  return j;
}

SetFunction set_function_from_json(const Json& j, int d_hint) {
  if (j.is_string()) {
    if (d_hint < 1) throw ConfigError("set function \"" + j.get<std::string>() + "\" needs a dimension (--d)");
    const auto name = j.get<std::string>();
    return wrap("set_function", [&] { return SetFunction::named(d_hint, name); });
  }
  if (!j.is_object()) throw ConfigError("set_function: expected a name or an object");
  int d = d_hint;
  if (j.contains("d")) {
    if (!j.at("d").is_number_integer()) throw ConfigError("set_function: \"d\" must be an integer");
    d = j.at("d").get<int>();
    if (d_hint > 0 && d != d_hint) throw ConfigError("set_function: d disagrees with the other inputs");
  }
  if (j.contains("name")) {
    if (d < 1) throw ConfigError("set_function: named form needs \"d\"");
    const auto name = j.at("name").get<std::string>();
    const double a = j.value("a", 0.0), b = j.value("b", 1.0);
    return wrap("set_function", [&] { return SetFunction::named(d, name, a, b); });
  }
  if (!j.contains("values") || !j.at("values").is_array())
    throw ConfigError("set_function: expected \"values\" or \"name\"");
  std::vector<ExtReal> vals;
  for (const auto& v : j.at("values")) vals.push_back(ext_from_json(v));
  if (d < 1) {
    const auto n = vals.size();
    d = 0;
    while ((std::size_t{1} << d) < n && d <= kMaxDim) ++d;
  }
  return wrap("set_function", [&] { return SetFunction(d, std::move(vals)); });
}

Json vector_to_json(const Vector& x) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x(i));
  return a;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a nonempty array of numbers");
  Vector x(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("expected a nonempty array of numbers");
    x(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  if (!x.allFinite()) throw ConfigError("vector entries must be finite");
  return x;
}

std::vector<Vector> points_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("points: expected an array of arrays");
  std::vector<Vector> out;
  for (const auto& p : j) {
    out.push_back(vector_from_json(p));
    if (out.back().size() != out.front().size()) throw ConfigError("points: inconsistent lengths");
  }
  return out;
}

Json decomposition_to_json(const Decomposition& z) {
  Json blocks = Json::array();
  for (const auto& K : z.nonzero_blocks())
    blocks.push_back({{"K", K.to_string()}, {"z", vector_to_json(z[K])}});
  return blocks;
}

Problem problem_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("problem: expected an object");
  for (const char* key : {"norm", "set_function", "x"})
    if (!j.contains(key)) throw ConfigError(std::string("problem: missing \"") + key + "\"");
  const Vector x = vector_from_json(j.at("x"));
  const int d = static_cast<int>(x.size());
  NormSpec n = norm_from_json(j.at("norm"));
  if (n.dim() != 0 && n.dim() != d) throw ConfigError("problem: norm dimension disagrees with x");
  Problem p{std::move(n), set_function_from_json(j.at("set_function"), d), x, std::nullopt};
  if (j.contains("alpha")) {
    if (!j.at("alpha").is_number()) throw ConfigError("problem: \"alpha\" must be a number");
    p.alpha = j.at("alpha").get<double>();
  }
  return p;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json load_config(const std::string& file_or_inline) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(file_or_inline, ec)) return read_json_file(file_or_inline);
  auto j = Json::parse(file_or_inline, nullptr, false);
  if (!j.is_discarded()) return j;
  return Json(file_or_inline);
}

}  // namespace capra
