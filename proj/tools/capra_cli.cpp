// capra: evaluate the Capra calculus of support-mapping functions, run verification
// suites and summarize their records.
//
// Exit codes: 0 success, 1 failed claim, 2 configuration error, 3 solver failure.

#include "capra/capra.hpp"
#include "capra/io.hpp"
#include "capra/oracle.hpp"
#include "capra/variational.hpp"
#include "capra/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace capra;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfig = 2;
constexpr int kSolver = 3;

struct RunConfig {
  std::string quantity;
  std::string norm = "l2";
  std::string set_function;
  std::string points;
  std::string dual_points;
  std::string problem;
  int d = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  double tol = -1.0;
  long samples = 100000;
  int threads = 0;
  std::string out;
  std::string csv;
  std::vector<std::string> inputs;
  std::string ray;
  std::string scale = "0.1:2";
  int steps = 20;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

std::string csv_path_for(const RunConfig& cfg) {
  if (!cfg.csv.empty()) return cfg.csv;
  if (cfg.out.empty() || cfg.out == "-") return {};
  const auto dot = cfg.out.rfind('.');
  const auto slash = cfg.out.rfind('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? cfg.out.substr(0, dot) : cfg.out) + ".csv";
}

std::string cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : " ") + cell(e);
    return s;
  }
  return v.dump();
}

std::string to_csv(const std::vector<std::string>& columns, const Json& records) {
  std::ostringstream os;
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << "\n";
  for (const auto& r : records) {
    for (std::size_t c = 0; c < columns.size(); ++c)
      os << (c ? "," : "") << (r.contains(columns[c]) ? cell(r.at(columns[c])) : "");
    os << "\n";
  }
  return os.str();
}

NormSpec load_norm(const std::string& s) { return norm_from_json(load_config(s)); }

// --------------------------------------------------------------------------- eval

Json eval_point(const std::string& q, const CapraContext& ctx, const SetFunction& F, const Vector& x,
                const Vector* y) {
  Json r{{"x", vector_to_json(x)}};
  if (q == "conjugate") {
    r["operation"] = "capra_conjugate_fsm";
    const auto a = capra_conjugate_fsm_argmax(ctx, F, x);
    r["value"] = ext_to_json(capra_conjugate_fsm(ctx, F, x));
    r["argmax"] = a.argmax.to_string();
    r["top_k_value"] = ext_to_json(capra_conjugate_fsm_top_k(ctx, F, x));
  } else if (q == "biconjugate") {
    r["operation"] = "capra_biconjugate_fsm";
    const auto b = capra_biconjugate_fsm(ctx, F, x);
    r["value"] = ext_to_json(b.value);
    r["lower"] = real_to_json(b.lower);
    r["upper"] = real_to_json(b.upper);
    r["F_supp_x"] = ext_to_json(F.of_support(x));
    r["theorem_applies"] = b.theorem_applies;
  } else if (q == "L0F") {
    r["operation"] = "eval_L0F";
    const auto e = eval_L0F(ctx, F, x);
    r["value"] = real_to_json(e.value);
    r["lower"] = real_to_json(e.lower);
    r["upper"] = real_to_json(e.upper);
    r["certified"] = e.certified;
    r["formulation"] = e.formulation;
    r["dual_point"] = vector_to_json(e.dual_point);
    r["certificate"] = decomposition_to_json(e.state.z);
    r["residuals"] = Json{{"equality", e.state.residuals.equality},
                          {"norm_sum", e.state.residuals.norm_sum},
                          {"budget_violation", e.state.residuals.budget_violation},
                          {"gap", real_to_json(e.state.residuals.gap)}};
  } else if (q == "bounds") {
    r["operation"] = "bounds";
    const auto b = bounds(ctx, F, x);
    r["lower"] = b.lower;
    r["value"] = b.value;
    r["upper"] = b.upper;
    r["upper_variant"] = to_string(b.upper_variant);
    r["upper_all_k"] = b.upper_all_k;
    r["upper_containing_support"] = b.upper_containing_support;
    r["lower_dual"] = b.lower_dual;
    r["upper_guaranteed"] = b.upper_guaranteed;
  } else if (q == "subdiff-membership") {
    r["operation"] = "subdiff_membership";
    r["y"] = vector_to_json(*y);
    const auto m = subdiff_membership(ctx, F, x, *y);
    r["value"] = m.member;
    r["reason"] = m.reason;
    Json cert = Json::array();
    for (const auto& c : m.certificate)
      cert.push_back({{"name", c.name}, {"lhs", real_to_json(c.lhs)}, {"rhs", real_to_json(c.rhs)},
                      {"residual", real_to_json(c.residual)}, {"tolerance", c.tolerance}, {"ok", c.ok}});
    r["certificate"] = cert;
  } else if (q == "aggregate-norm") {
    r["operation"] = "aggregate_support_dual_norm";
    const AggregateNormSpec agg(ctx.fam(), F);
    const auto a = aggregate_support_dual_norm(agg, x);
    r["value"] = a.value;
    r["lower"] = a.lower;
    r["converged"] = a.converged;
    r["top_dual_norm"] = aggregate_top_dual_norm(agg, x);
    r["certificate"] = decomposition_to_json(a.z);
  } else if (q == "variational") {
    r["operation"] = "variational_value";
    const auto v = variational_value(ctx, F, x);
    r["value"] = v.value;
    r["F_supp_x"] = ext_to_json(F.of_support(x));
    r["canonical_feasible"] = v.canonical_feasible;
    r["equality_holds"] = v.equality_holds;
    r["certificate"] = decomposition_to_json(v.certificate);
  } else {
    throw ConfigError("unknown quantity: " + q);
  }
  return r;
}

const std::vector<std::string>& eval_quantities() {
  static const std::vector<std::string> q{"conjugate", "biconjugate", "L0F", "bounds",
                                          "subdiff-membership", "aggregate-norm", "variational"};
  return q;
}

std::vector<std::string> csv_columns(const std::string& q) {
  if (q == "bounds") return {"index", "x", "lower", "value", "upper", "upper_all_k"};
  if (q == "conjugate") return {"index", "x", "value", "argmax"};
  if (q == "subdiff-membership") return {"index", "x", "y", "value", "reason"};
  if (q == "variational") return {"index", "x", "value", "F_supp_x", "equality_holds"};
  return {"index", "x", "value", "lower", "upper"};
}

int cmd_eval(const RunConfig& cfg) {
  std::vector<Vector> pts;
  NormSpec norm = NormSpec::lp(2.0);
  std::optional<SetFunction> F;
  if (!cfg.problem.empty()) {
    auto p = problem_from_json(read_json_file(cfg.problem));
    norm = p.norm;
    F = p.F;
    pts.push_back(p.x);
  } else {
    norm = load_norm(cfg.norm);
  }
  if (!cfg.points.empty()) pts = points_from_json(load_config(cfg.points));
  if (pts.empty()) throw ConfigError("no points given (--points or --problem)");
  const int d = static_cast<int>(pts.front().size());
  if (cfg.d > 0 && cfg.d != d) throw ConfigError("--d disagrees with the points");
  if (norm.dim() != 0 && norm.dim() != d) throw ConfigError("norm dimension disagrees with the points");
  if (!F) {
    if (cfg.set_function.empty()) throw ConfigError("--set-function is required");
    F = set_function_from_json(load_config(cfg.set_function), d);
  }
  if (F->dim() != d) throw ConfigError("set function dimension disagrees with the points");
  std::vector<Vector> ys;
  if (cfg.quantity == "subdiff-membership") {
    if (cfg.dual_points.empty()) throw ConfigError("subdiff-membership needs --dual-points");
    ys = points_from_json(load_config(cfg.dual_points));
    if (ys.size() != pts.size()) throw ConfigError("--dual-points must match --points in length");
    if (ys.front().size() != d) throw ConfigError("--dual-points dimension disagrees with the points");
  }
  if (std::find(eval_quantities().begin(), eval_quantities().end(), cfg.quantity) == eval_quantities().end())
    throw ConfigError("unknown quantity: " + cfg.quantity);

  const CapraContext ctx(norm, DualizationOptions{}, 500, cfg.seed);
  Json records = Json::array();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Json r = eval_point(cfg.quantity, ctx, *F, pts[i], ys.empty() ? nullptr : &ys[i]);
    r["index"] = i;
    records.push_back(std::move(r));
  }
  const Json doc{{"command", "eval"},
                 {"quantity", cfg.quantity},
                 {"inputs", {{"norm", norm_to_json(norm)}, {"set_function", set_function_to_json(*F)}, {"d", d}}},
                 {"records", records},
                 {"timestamp", utc_now()}};
  write_text(cfg.out, doc.dump(2) + "\n");
  const auto csv = to_csv(csv_columns(cfg.quantity), records);
  const auto cpath = csv_path_for(cfg);
  if (!cpath.empty()) write_text(cpath, csv);
  else if (!cfg.out.empty()) std::cout << csv;
  return kOk;
}

// --------------------------------------------------------------------------- verify

int cmd_verify(const RunConfig& cfg) {
  VerifyConfig vc;
  vc.norm = load_norm(cfg.norm);
  vc.d = cfg.d > 0 ? cfg.d : (vc.norm.dim() > 0 ? vc.norm.dim() : 3);
  vc.trials = cfg.trials;
  vc.seed = cfg.seed;
  vc.tol = cfg.tol;
  vc.samples = cfg.samples;
  vc.threads = cfg.threads;
  if (!cfg.set_function.empty()) vc.F = set_function_from_json(load_config(cfg.set_function), vc.d);
  auto reports = run_suite(cfg.quantity, vc);
  bool all = true;
  Json arr = Json::array();
  const auto now = utc_now();
  for (auto& r : reports) {
    r.timestamp = now;
    all = all && r.passed;
    arr.push_back(r.to_json());
  }
  const Json doc{{"command", "verify"}, {"suite", cfg.quantity}, {"passed", all}, {"reports", arr}};
  write_text(cfg.out, doc.dump(2) + "\n");
  for (const auto& r : reports)
    std::cerr << (r.passed ? "PASS " : "FAIL ") << r.suite << ": " << r.claim << " (" << r.failures << "/"
              << r.trials << " failures, max residual " << r.max_residual << ")\n";
  return all ? kOk : kFailed;
}

// --------------------------------------------------------------------------- report

std::pair<double, double> parse_scale(const std::string& s) {
  const auto c = s.find(':');
  if (c == std::string::npos) throw ConfigError("--scale expects lo:hi");
  try {
    return {std::stod(s.substr(0, c)), std::stod(s.substr(c + 1))};
  } catch (const std::exception&) {
    throw ConfigError("--scale expects lo:hi");
  }
}

Vector parse_ray(const std::string& s) {
  auto j = load_config(s);
  if (j.is_string()) {
    std::string t = j.get<std::string>();
    for (auto& ch : t)
      if (ch == '(' || ch == ')') ch = ' ';
    j = Json::parse("[" + t + "]", nullptr, false);
    if (j.is_discarded()) throw ConfigError("--ray expects a point such as 1,1");
  }
  return vector_from_json(j);
}

int cmd_report(const RunConfig& cfg) {
  if (cfg.inputs.empty() && cfg.ray.empty()) throw ConfigError("report needs input files or --ray");
  std::ostringstream table;
  if (!cfg.inputs.empty()) {
    struct Row {
      std::string group, claim;
      long trials = 0, failures = 0;
      double max_residual = 0.0;
      int runs = 0;
    };
    std::vector<Row> rows;
    auto row_for = [&rows](const std::string& g, const std::string& c) -> Row& {
      for (auto& r : rows)
        if (r.group == g && r.claim == c) return r;
      rows.push_back({g, c});
      return rows.back();
    };
    for (const auto& path : cfg.inputs) {
      const Json doc = read_json_file(path);
      const std::string cmd = doc.value("command", std::string());
      if (cmd == "verify") {
        for (const auto& r : doc.at("reports")) {
          auto& row = row_for(r.at("suite").get<std::string>(), r.at("claim").get<std::string>());
          row.trials += r.at("trials").get<long>();
          row.failures += r.at("failures").get<long>();
          const auto& m = r.at("max_residual");
          row.max_residual = std::max(row.max_residual, m.is_number() ? m.get<double>() : HUGE_VAL);
          ++row.runs;
        }
      } else if (cmd == "eval") {
        auto& row = row_for("eval", doc.at("quantity").get<std::string>());
        row.trials += static_cast<long>(doc.at("records").size());
        ++row.runs;
      } else {
        throw ConfigError(path + ": not a capra record");
      }
    }
    table << std::left << std::setw(18) << "suite" << std::setw(58) << "claim" << std::right << std::setw(6)
          << "runs" << std::setw(9) << "trials" << std::setw(10) << "failures" << std::setw(14) << "max_residual"
          << "  status\n";
    for (const auto& r : rows) {
      std::ostringstream mr;
      mr << std::setprecision(3) << r.max_residual;
      table << std::left << std::setw(18) << r.group << std::setw(58) << r.claim << std::right << std::setw(6)
            << r.runs << std::setw(9) << r.trials << std::setw(10) << r.failures << std::setw(14) << mr.str()
            << "  " << (r.group == "eval" ? "-" : (r.failures == 0 ? "pass" : "FAIL")) << "\n";
    }
    write_text(cfg.out, table.str());
  }
  if (!cfg.ray.empty()) {
    if (cfg.set_function.empty()) throw ConfigError("--ray needs --set-function");
    if (cfg.steps < 2) throw ConfigError("--steps must be at least 2");
    const Vector x0 = parse_ray(cfg.ray);
    const int d = static_cast<int>(x0.size());
    const NormSpec norm = load_norm(cfg.norm);
    if (norm.dim() != 0 && norm.dim() != d) throw ConfigError("norm dimension disagrees with --ray");
    const SetFunction F = set_function_from_json(load_config(cfg.set_function), d);
    if (F.dim() != d) throw ConfigError("set function dimension disagrees with --ray");
    const auto [lo, hi] = parse_scale(cfg.scale);
    const CapraContext ctx(norm, DualizationOptions{}, 500, cfg.seed);
    std::ostringstream csv;
    csv << "scale,x,value,lower,upper\n";
    for (int i = 0; i < cfg.steps; ++i) {
      const double s = lo + (hi - lo) * i / (cfg.steps - 1);
      const Vector x = s * x0;
      const auto e = eval_L0F(ctx, F, x);
      csv << cell(real_to_json(s)) << "," << cell(vector_to_json(x)) << "," << cell(real_to_json(e.value)) << ","
          << cell(real_to_json(e.lower)) << "," << cell(real_to_json(e.upper)) << "\n";
    }
    const std::string path = !cfg.csv.empty() ? cfg.csv : (cfg.inputs.empty() ? csv_path_for(cfg) : std::string());
    write_text(path, csv.str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capra conjugacy calculus for functions of the support mapping"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto common = [&cfg](CLI::App* c) {
    c->add_option("--norm", cfg.norm, "Source norm: file, inline JSON or name (l2, l1.5, linf)");
    c->add_option("--set-function", cfg.set_function, "Set function: file, inline JSON or name");
    c->add_option("--d", cfg.d, "Dimension");
    c->add_option("--seed", cfg.seed, "Seed for every random draw");
    c->add_option("--out", cfg.out, "Output path (stdout when absent)");
    c->add_option("--csv", cfg.csv, "CSV output path");
  };

  auto* ev = app.add_subcommand("eval", "Evaluate a quantity at the given points");
  ev->add_option("quantity", cfg.quantity,
                 "conjugate | biconjugate | L0F | bounds | subdiff-membership | aggregate-norm | variational")
      ->required();
  common(ev);
  ev->add_option("--points", cfg.points, "JSON array of points (file or inline)");
  ev->add_option("--dual-points", cfg.dual_points, "Dual points y for subdiff-membership");
  ev->add_option("--problem", cfg.problem, "Problem file with norm, set_function and x");

  auto* ve = app.add_subcommand("verify", "Run a verification suite");
  ve->add_option("suite", cfg.quantity, "theorem1 | theorem2 | appendixB | hidden-convexity | subdiff | bounds | conjugate")
      ->required();
  common(ve);
  ve->add_option("--trials", cfg.trials, "Number of random instances (suite default when absent)");
  ve->add_option("--tol", cfg.tol, "Tolerance override");
  ve->add_option("--samples", cfg.samples, "Samples for the sampling oracles");
  ve->add_option("--threads", cfg.threads, "Worker threads (results do not depend on it)");

  auto* re = app.add_subcommand("report", "Summarize records, or tabulate L0F along a ray");
  re->add_option("inputs", cfg.inputs, "JSON records written by eval or verify");
  common(re);
  re->add_option("--ray", cfg.ray, "Ray direction x0, e.g. 1,1");
  re->add_option("--scale", cfg.scale, "Scale range lo:hi along the ray");
  re->add_option("--steps", cfg.steps, "Number of ray points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (ev->parsed()) return cmd_eval(cfg);
    if (ve->parsed()) return cmd_verify(cfg);
    return cmd_report(cfg);
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  }
}
