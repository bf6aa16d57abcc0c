#include "capra/variational.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace capra {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Block norms N_K with their duals D_K (the support functions of the N_K unit balls).
struct BlockFamily {
  BlockNorm norm;
  std::function<SupportPoint(const Vector&, const SubsetMask&)> dual;
};

BlockFamily coordinate_family(const LocalNormFamily& fam) {
  BlockFamily b;
  b.norm.eval = [&fam](const Vector& z, const SubsetMask& K) { return coordinate_norm(fam, z, K); };
  b.norm.subgrad = [&fam](const Vector& z, const SubsetMask& K) {
    const Vector zK = project(z, K);
    if (zK.isZero(0.0)) return Vector(Vector::Zero(z.size()));
    return Vector(project(norm_subgradient(fam.source(), zK), K));
  };
  b.dual = [&fam](const Vector& y, const SubsetMask& K) { return dual_coordinate_support(fam, y, K); };
  return b;
}

BlockFamily k_support_family(const LocalNormFamily& fam) {
  BlockFamily b;
  b.norm.eval = [&fam](const Vector& z, const SubsetMask& K) { return k_support_dual_norm(fam, z, K); };
  b.norm.subgrad = [&fam](const Vector& z, const SubsetMask& K) {
    return k_support_dual_subgradient(fam, z, K);
  };
  b.dual = [&fam](const Vector& y, const SubsetMask& K) { return top_k_dual_support(fam, y, K); };
  return b;
}

/// min base + r + sum_K (c_K - r) N_K(z_K) s.t. sum_K N_K(z_K) <= 1, sum_K z_K = x,
/// with c_K = F(K) - F(empty) and r = leftover_rate <= min c_K.
struct UnitProgram {
  const CapraContext* ctx;
  BlockFamily fam;
  BlockProgram prog;
};

UnitProgram make_unit_program(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                              BlockFamily fam, bool leftover_to_min) {
  const int d = F.dim();
  UnitProgram u{&ctx, std::move(fam), {}};
  auto& p = u.prog;
  p.x = x;
  p.base = F.at(0).value();
  p.cost.assign(std::size_t{1} << d, 0.0);
  double cmin = 0.0;
  for (std::uint32_t k = 1; k < p.cost.size(); ++k) {
    p.cost[k] = F.at(k).value() - p.base;
    cmin = std::min(cmin, p.cost[k]);
  }
  p.norm = u.fam.norm;
  p.budget = 1.0;
  p.leftover_rate = leftover_to_min ? cmin : 0.0;
  return u;
}

struct DualEval {
  double value;
  double nu;
  Vector grad;
  SubsetMask arg;
};

/// h(y) = base + r + <x,y> - max(0, max_K (D_K(y) - c_K + r)).
DualEval dual_objective(const UnitProgram& u, const Vector& y) {
  const auto& p = u.prog;
  const int d = static_cast<int>(p.x.size());
  DualEval e{0.0, 0.0, p.x, SubsetMask::empty(d)};
  Vector best_u = Vector::Zero(d);
  for (std::uint32_t k = 1; k < p.cost.size(); ++k) {
    const SubsetMask K(k, d);
    const auto sp = u.fam.dual(y, K);
    const double t = sp.value - p.cost[k] + p.leftover_rate;
    if (t > e.nu) {
      e.nu = t;
      e.arg = K;
      best_u = sp.argmax;
    }
  }
  e.value = p.base + p.leftover_rate + p.x.dot(y) - e.nu;
  e.grad = p.x - best_u;
  return e;
}

struct ProgramResult {
  double lower = -kInf;
  double upper = kInf;
  Vector y;
  double nu = 0.0;
  Decomposition z;
  BlockEvaluation eval;
  double penalty = 0.0;
  std::vector<double> run_values;
};

void consider_primal(const UnitProgram& u, const Decomposition& z, double penalty, ProgramResult& r) {
  const auto e = evaluate_blocks(u.prog, z, penalty);
  if (e.penalized < r.upper) {
    r.upper = e.penalized;
    r.z = z;
    r.eval = e;
  }
}

/// Blends a slightly infeasible primal point toward the canonical decomposition, which
/// keeps sum_K z_K = x and, by convexity, brings the norm sum under the budget whenever
/// the canonical point lies strictly inside it.
void restore_feasibility(const UnitProgram& u, ProgramResult& r) {
  const auto& p = u.prog;
  if (!(r.eval.violation > 0.0) || !p.budget) return;
  const SubsetMask L = support(p.x);
  if (L.is_empty() || !std::isfinite(p.cost[L.bits()])) return;
  Decomposition canon(static_cast<int>(p.x.size()));
  canon[L] = p.x;
  const double nc = p.norm.eval(p.x, L);
  const double S = r.eval.norm_sum;
  if (!(nc <= *p.budget) || !(S > nc)) return;
  const double theta = std::min(1.0, (S - *p.budget) / (S - nc) * (1.0 + 1e-12));
  Decomposition z = r.z;
  for (std::size_t k = 0; k < z.blocks.size(); ++k) {
    z.blocks[k] *= 1.0 - theta;
    z.blocks[k] += theta * canon.blocks[k];
  }
  const auto e = evaluate_blocks(p, z, r.penalty);
  if (e.violation < r.eval.violation) {
    r.z = z;
    r.eval = e;
    r.upper = std::max(std::min(r.upper, e.penalized), r.lower);
  }
}

ProgramResult solve_unit_program_raw(const UnitProgram& u, const L0FOptions& opt) {
  const auto& p = u.prog;
  const auto& source = u.ctx->source();
  const int d = static_cast<int>(p.x.size());
  const SubsetMask V = SubsetMask::full(d);
  ProgramResult r;
  r.z = Decomposition(d);
  r.y = Vector::Zero(d);

  // Dual warm starts: the origin and the ray through the aligned dual vector. h is
  // concave along the ray, so the scan stops at the first non-increase; going further
  // would only pick up rounding noise of size lambda * eps.
  auto take_dual = [&](const Vector& y) {
    const auto e = dual_objective(u, y);
    if (e.value > r.lower) {
      r.lower = e.value;
      r.y = y;
      r.nu = e.nu;
    }
    return e.value;
  };
  take_dual(Vector::Zero(d));
  const Vector v = norm_subgradient(source, p.x);
  if (!v.isZero(0.0)) {
    // Evaluating h at lambda v cancels two terms of size lambda, so increases below a
    // few ulps of lambda are noise.
    const double unit = p.x.norm() * v.norm();
    double prev = -kInf;
    for (int k = -10; k <= 40; ++k) {
      const double lambda = std::ldexp(1.0, k);
      const auto e = dual_objective(u, lambda * v);
      const double noise = 1e-13 * (1.0 + std::abs(prev)) + 64 * kEps * lambda * (1.0 + unit);
      if (k > -10 && e.value <= prev + noise) break;
      prev = e.value;
      take_dual(lambda * v);
    }
  }

  double cmax = 0.0;
  for (std::uint32_t k = 1; k < p.cost.size(); ++k) cmax = std::max(cmax, std::abs(p.cost[k]));
  auto penalty_now = [&] {
    return opt.solver.penalty > 0 ? opt.solver.penalty : 2.0 * (1.0 + r.nu + cmax);
  };

  std::vector<Decomposition> starts;
  auto add_primal_starts = [&] {
    starts.clear();
    Decomposition canon(d);
    canon[support(p.x)] = p.x;
    starts.push_back(canon);
    Decomposition split(d);
    for (int i = 0; i < d; ++i)
      if (p.x(i) != 0.0) split[SubsetMask(1u << i, d)](i) = p.x(i);
    starts.push_back(split);
    double M = 0.0;
    std::vector<std::pair<double, SupportPoint>> terms(p.cost.size());
    for (std::uint32_t k = 1; k < p.cost.size(); ++k) {
      auto sp = u.fam.dual(r.y, SubsetMask(k, d));
      const double t = sp.value - p.cost[k] + p.leftover_rate;
      M = std::max(M, t);
      terms[k] = {t, std::move(sp)};
    }
    const double scale = 1.0 + std::abs(M) + r.y.norm();
    for (double delta : {1e-10, 1e-7, 1e-4}) {
      std::vector<SubsetMask> masks;
      std::vector<Vector> atoms;
      for (std::uint32_t k = 1; k < p.cost.size(); ++k)
        if (terms[k].first >= M - delta * scale) {
          masks.emplace_back(k, d);
          atoms.push_back(terms[k].second.argmax);
        }
      starts.push_back(recover_from_atoms(p.x, masks, atoms, true, V));
    }
  };
  add_primal_starts();
  r.penalty = penalty_now();
  for (const auto& z : starts) consider_primal(u, z, r.penalty, r);

  auto gap_ok = [&] { return r.upper - r.lower <= opt.certify_tol * (1.0 + std::abs(r.lower)); };
  if (gap_ok()) return r;

  // Ellipsoid on the dual. Inside the unit ball the superlevel set {h >= h(0)} lies in a
  // ball whose radius follows from D_V(y) >= ||y||_* and <x,y> <= N_V(x) D_V(y).
  const double floor = dual_norm_euclidean_floor(source, d);
  const double range = p.cost[V.bits()] - p.leftover_rate;
  const double nx = p.norm.eval(p.x, V);
  const bool interior = nx < 1.0 - 1e-9;
  double R = interior ? std::max(1.0, 1.05 * range / ((1.0 - nx) * floor) + 1e-9)
                      : 1e3 * (1.0 + range) / floor;
  if (interior) R = std::min(R, 1e8 * (1.0 + range) / floor);
  ConcaveOracle h = [&u](const Vector& y, Vector& s) {
    auto e = dual_objective(u, y);
    s = e.grad;
    return e.value;
  };
  std::vector<Vector> ell_warm{r.y};
  const auto ell = ellipsoid_maximize(h, nullptr, Vector::Zero(d), R, ell_warm, opt.ellipsoid);
  if (ell.value > r.lower) {
    r.lower = ell.value;
    r.y = ell.y;
    r.nu = dual_objective(u, r.y).nu;
    add_primal_starts();
    r.penalty = penalty_now();
    r.upper = kInf;
    for (const auto& z : starts) consider_primal(u, z, r.penalty, r);
  }
  const bool exact_dual = interior && source.is_catalog() &&
                          R < 1e8 * (1.0 + range) / floor;
  if (exact_dual && ell.upper < r.upper) r.upper = std::max(ell.upper, r.lower);
  if (gap_ok() || !opt.run_primal) return r;

  BlockSolverOptions so = opt.solver;
  so.penalty = r.penalty;
  auto sol = solve_blocks(p, starts, so);
  r.run_values = sol.run_values;
  const auto e = evaluate_blocks(p, sol.z, sol.penalty);
  if (e.penalized < r.upper) {
    r.upper = e.penalized;
    r.z = sol.z;
    r.eval = e;
    r.penalty = sol.penalty;
  }
  return r;
}

ProgramResult solve_unit_program(const UnitProgram& u, const L0FOptions& opt) {
  auto r = solve_unit_program_raw(u, opt);
  restore_feasibility(u, r);
  return r;
}

SolverState make_state(const UnitProgram& u, const ProgramResult& r, double objective) {
  const auto& p = u.prog;
  const int d = static_cast<int>(p.x.size());
  SolverState s;
  s.z = r.z;
  s.objective = objective;
  s.lambda.assign(std::size_t{1} << d, 0.0);
  double used = 0.0;
  for (std::uint32_t k = 1; k < s.lambda.size(); ++k) {
    if (r.z.blocks[k].isZero(0.0)) continue;
    s.lambda[k] = p.norm.eval(r.z.blocks[k], SubsetMask(k, d));
    used += s.lambda[k];
  }
  const double left = std::max(0.0, 1.0 - used);
  std::uint32_t sink = 0;
  if (p.leftover_rate < 0)
    for (std::uint32_t k = 1; k < p.cost.size(); ++k)
      if (p.cost[k] == p.leftover_rate) {
        sink = k;
        break;
      }
  s.lambda[sink] += left;
  s.residuals.equality = r.eval.equality_residual;
  s.residuals.norm_sum = r.eval.norm_sum;
  s.residuals.budget_violation = r.eval.violation;
  s.residuals.penalty = r.penalty;
  s.residuals.gap = std::max(0.0, r.upper - r.lower);
  return s;
}

void require_finite_valued(const SetFunction& F, const char* where) {
  if (!F.finite_valued()) throw std::invalid_argument(std::string(where) + ": F must be finite-valued");
}

double min_value(const SetFunction& F, std::uint32_t* arg = nullptr) {
  double best = kInf;
  for (std::uint32_t k = 0; k < F.values().size(); ++k)
    if (F.at(k).value() < best) {
      best = F.at(k).value();
      if (arg) *arg = k;
    }
  return best;
}

}  // namespace

L0FResult eval_L0F(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                   const L0FOptions& opt) {
  const int d = F.dim();
  require_same_dim(static_cast<int>(x.size()), d, "eval_L0F");
  require_finite(x, "eval_L0F");
  require_finite_valued(F, "eval_L0F");
  L0FResult out;
  out.dual_point = Vector::Zero(d);
  out.state.z = Decomposition(d);
  out.state.lambda.assign(std::size_t{1} << d, 0.0);
  const bool zform = F.normalized() && F.nondecreasing();
  out.formulation = zform ? "z-decomposition" : "lambda-balls";
  if (norm_eval(ctx.source(), x) > 1.0 + 1e-12) {
    out.value = out.lower = out.upper = kInf;
    out.state.objective = kInf;
    return out;
  }
  if (x.isZero(0.0)) {
    std::uint32_t arg = 0;
    out.value = out.lower = out.upper = min_value(F, &arg);
    out.state.lambda[arg] = 1.0;
    out.state.objective = out.value;
    out.certified = true;
    return out;
  }
  const auto u = make_unit_program(ctx, F, x, coordinate_family(ctx.fam()), !zform);
  const auto r = solve_unit_program(u, opt);
  out.lower = out.value = r.lower;
  out.upper = r.upper;
  out.dual_point = r.y;
  out.certified = r.upper - r.lower <= opt.certify_tol * (1.0 + std::abs(r.lower));
  out.state = make_state(u, r, r.upper);
  return out;
}

SolverState solve_lambda_form(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                              GammaKind kind, const L0FOptions& opt) {
  const int d = F.dim();
  require_same_dim(static_cast<int>(x.size()), d, "solve_lambda_form");
  require_finite(x, "solve_lambda_form");
  require_finite_valued(F, "solve_lambda_form");
  SolverState s;
  s.z = Decomposition(d);
  s.lambda.assign(std::size_t{1} << d, 0.0);
  if (x.isZero(0.0)) {
    std::uint32_t arg = 0;
    if (kind == GammaKind::balls) min_value(F, &arg);
    s.lambda[arg] = 1.0;
    s.objective = F.at(arg).value();
    return s;
  }
  if (ctx.source_om() && norm_eval(ctx.source(), x) > 1.0 + 1e-12) {
    s.objective = kInf;
    s.residuals.budget_violation = norm_eval(ctx.source(), x) - 1.0;
    return s;
  }
  const auto u = make_unit_program(ctx, F, x, k_support_family(ctx.fam()), kind == GammaKind::balls);
  const auto r = solve_unit_program(u, opt);
  s = make_state(u, r, r.upper);
  if (r.eval.violation > 1e-7) s.objective = kInf;
  return s;
}

namespace {

void require_theorem2_inputs(const SetFunction& F, const char* where) {
  require_finite_valued(F, where);
  if (!F.normalized() || !F.nondecreasing())
    throw std::invalid_argument(std::string(where) + ": F must be nondecreasing with F(empty) = 0");
}

}  // namespace

VariationalResult variational_value(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                                    const BlockSolverOptions& opt, double tol) {
  const int d = F.dim();
  require_same_dim(static_cast<int>(x.size()), d, "variational_value");
  require_finite(x, "variational_value");
  require_theorem2_inputs(F, "variational_value");
  if (x.isZero(0.0)) throw std::invalid_argument("variational_value: x must be nonzero");
  const auto& fam = ctx.fam();
  const double nx = norm_eval(ctx.source(), x);
  const SubsetMask L = support(x);
  const double FL = F.finite(L);

  BlockProgram prog;
  prog.x = x;
  prog.cost.assign(std::size_t{1} << d, 0.0);
  double cmax = 0.0;
  for (std::uint32_t k = 1; k < prog.cost.size(); ++k) {
    prog.cost[k] = F.at(k).value();
    cmax = std::max(cmax, prog.cost[k]);
  }
  const auto family = k_support_family(fam);
  prog.norm = family.norm;
  prog.budget = nx;

  VariationalResult out;
  out.hypotheses = ctx.osm_hypotheses();
  Decomposition canon(d);
  canon[L] = x;
  const auto ce = evaluate_blocks(prog, canon, 0.0);
  out.canonical_feasible = ce.violation <= 1e-12 * std::max(1.0, nx);
  out.canonical_objective = ce.objective / nx;

  // Dual certificate y = lambda v: nu = max_K (lambda top_k(v,K) - F(K))^+ gives the
  // lower bound lambda - nu and an exact-penalty weight above nu.
  const Vector v = norm_subgradient(ctx.source(), x);
  double best_dual = -kInf, nu_best = 0.0;
  for (int e = 0; e <= 40; ++e) {
    const double lambda = std::ldexp(1.0, e);
    double nu = 0.0;
    for (std::uint32_t k = 1; k < prog.cost.size(); ++k)
      nu = std::max(nu, lambda * top_k_dual_norm(fam, v, SubsetMask(k, d)) - prog.cost[k]);
    if (e > 0 && !(lambda - nu > best_dual + 1e-13 * (1.0 + std::abs(best_dual)) + 64 * kEps * lambda)) break;
    best_dual = lambda - nu;
    nu_best = nu;
  }
  BlockSolverOptions so = opt;
  if (so.penalty <= 0) so.penalty = 2.0 * (1.0 + nu_best + cmax);
  BlockSolution sol;
  if (fam.closed_form_available()) {
    sol = solve_blocks(prog, {canon}, so);
  } else {
    // sampled norms make every block step a nested dualization; keep the canonical
    // decomposition and let the dual certificate report the gap
    sol.z = canon;
    sol.penalty = so.penalty;
    sol.eval = evaluate_blocks(prog, canon, so.penalty);
    sol.run_values = {sol.eval.penalized};
  }
  for (double rv : sol.run_values) out.restart_values.push_back(rv / nx);
  const auto se = evaluate_blocks(prog, sol.z, sol.penalty);
  double value = se.penalized / nx;
  out.certificate = sol.z;
  if (out.canonical_feasible && out.canonical_objective <= value) {
    value = out.canonical_objective;
    out.certificate = canon;
  }
  out.value = value;
  out.equality_holds = out.hypotheses && std::abs(value - FL) <= tol;
  out.state.z = out.certificate;
  out.state.objective = value;
  out.state.lambda.assign(std::size_t{1} << d, 0.0);
  double used = 0.0;
  for (std::uint32_t k = 1; k < out.state.lambda.size(); ++k) {
    if (out.certificate.blocks[k].isZero(0.0)) continue;
    out.state.lambda[k] = prog.norm.eval(out.certificate.blocks[k], SubsetMask(k, d)) / nx;
    used += out.state.lambda[k];
  }
  out.state.lambda[0] = std::max(0.0, 1.0 - used);
  const auto fe = evaluate_blocks(prog, out.certificate, sol.penalty);
  out.state.residuals.equality = fe.equality_residual;
  out.state.residuals.norm_sum = fe.norm_sum;
  out.state.residuals.budget_violation = fe.violation;
  out.state.residuals.penalty = sol.penalty;
  out.state.residuals.gap = std::max(0.0, value - best_dual);
  return out;
}

std::string to_string(UpperVariant v) {
  return v == UpperVariant::all_k ? "all-K" : "K-containing-support";
}

BoundsReport bounds(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                    UpperVariant variant) {
  const int d = F.dim();
  require_same_dim(static_cast<int>(x.size()), d, "bounds");
  require_finite(x, "bounds");
  if (x.isZero(0.0)) throw std::invalid_argument("bounds: x must be nonzero");
  if (!F.nondecreasing()) throw std::invalid_argument("bounds: F must be nondecreasing");
  AggregateNormSpec agg(ctx.fam(), F);
  const double nx = norm_eval(ctx.source(), x);
  const SubsetMask L = support(x);
  BoundsReport b;
  b.upper_variant = variant;
  b.upper_guaranteed = ctx.source_om();
  const auto a = aggregate_support_dual_norm(agg, x);
  b.lower = a.value / nx;
  b.lower_dual = a.lower / nx;
  b.value = F.finite(L);
  b.upper_all_k = b.upper_containing_support = kInf;
  for (auto K : enumerate_subsets(d)) {
    if (K.is_empty()) continue;
    const double u = F.finite(K) * k_support_dual_norm(ctx.fam(), x, K) / nx;
    b.upper_all_k = std::min(b.upper_all_k, u);
    if (L.is_subset_of(K)) b.upper_containing_support = std::min(b.upper_containing_support, u);
  }
  b.upper = variant == UpperVariant::all_k ? b.upper_all_k : b.upper_containing_support;
  return b;
}

SparseMinResult sparse_min_over_set(const CapraContext& ctx, const SetFunction& F,
                                    const std::vector<Vector>& C, double tol) {
  if (C.empty()) throw std::invalid_argument("sparse_min_over_set: C is empty");
  SparseMinResult out;
  out.value = kInf;
  for (const auto& x : C) {
    require_same_dim(static_cast<int>(x.size()), F.dim(), "sparse_min_over_set");
    if (x.isZero(0.0)) throw std::invalid_argument("sparse_min_over_set: 0 must not belong to C");
    const double direct = F.finite(support(x));
    const double var = variational_value(ctx, F, x).value;
    out.direct.push_back(direct);
    out.variational.push_back(var);
    if (std::abs(direct - var) > tol) out.agree = false;
    if (direct < out.value) {
      out.value = direct;
      out.argmin = x;
    }
  }
  return out;
}

namespace {

Vector fd_gradient(const RealFn& f, const Vector& x, const SubsetMask& K) {
  Vector g = Vector::Zero(x.size());
  Vector e = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!K.contains(static_cast<int>(i))) continue;
    const double h = 1e-6 * (1.0 + std::abs(x(i)));
    e(i) = x(i) + h;
    const double fp = f(e);
    e(i) = x(i) - h;
    const double fm = f(e);
    e(i) = x(i);
    g(i) = (fp - fm) / (2 * h);
  }
  return g;
}

/// Gradient descent with backtracking on the coordinate subspace of K.
Vector polish_on_subspace(const RealFn& f, Vector x, const SubsetMask& K, int iterations) {
  x = project(x, K);
  double fx = f(x);
  double step = 1.0;
  for (int t = 0; t < iterations; ++t) {
    const Vector g = fd_gradient(f, x, K);
    const double gg = g.squaredNorm();
    if (!(gg > 1e-30)) break;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vector xn = x - step * g;
      const double fn = f(xn);
      if (fn <= fx - 1e-4 * step * gg) {
        x = xn;
        fx = fn;
        moved = true;
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return x;
}

}  // namespace

SparseConstrainedResult sparse_constrained_min(const CapraContext& ctx, const SetFunction& F,
                                               const RealFn& f0, double alpha,
                                               const SolverBudget& budget) {
  const int d = F.dim();
  require_theorem2_inputs(F, "sparse_constrained_min");
  if (!(alpha >= 0)) throw std::invalid_argument("sparse_constrained_min: alpha must be >= 0");
  if (budget.iterations < 1 || budget.restarts < 0)
    throw std::invalid_argument("sparse_constrained_min: invalid budget");
  const auto& fam = ctx.fam();
  const SubsetMask V = SubsetMask::full(d);

  // Lifted program: minimize f0(sum z) + mu [budget violations] by subgradient steps.
  auto violations = [&](const Decomposition& z, double& nsum, double& fsum) {
    const Vector s = z.sum();
    const double ns = norm_eval(ctx.source(), s);
    nsum = fsum = 0.0;
    for (std::uint32_t k = 1; k < z.blocks.size(); ++k) {
      if (z.blocks[k].isZero(0.0)) continue;
      const double n = k_support_dual_norm(fam, z.blocks[k], SubsetMask(k, d));
      nsum += n;
      fsum += F.at(k).value() * n;
    }
    return std::make_pair(std::max(0.0, nsum - ns), std::max(0.0, fsum - alpha * ns));
  };

  std::vector<Vector> candidates{Vector::Zero(d)};
  std::mt19937_64 rng(budget.seed);
  std::normal_distribution<double> N01;
  const double mu = 10.0 * (1.0 + F.finite(V));
  for (int rs = 0; rs < budget.restarts; ++rs) {
    Decomposition z(d);
    for (std::uint32_t k = 1; k < z.blocks.size(); ++k) {
      const SubsetMask K(k, d);
      if (F.at(k).value() > alpha) continue;
      for (int i = 0; i < d; ++i)
        if (K.contains(i)) z.blocks[k](i) = N01(rng);
    }
    Vector best_x = z.sum();
    double best_f = kInf;
    for (int t = 1; t <= budget.iterations; ++t) {
      double nsum, fsum;
      const auto [v1, v2] = violations(z, nsum, fsum);
      const Vector s = z.sum();
      const double obj = f0(s) + mu * (v1 + v2);
      if (obj < best_f) {
        best_f = obj;
        best_x = s;
      }
      const Vector gs = fd_gradient(f0, s, V);
      const Vector ns_grad = norm_subgradient(ctx.source(), s);
      double G = 0.0;
      std::vector<Vector> g(z.blocks.size(), Vector::Zero(d));
      for (std::uint32_t k = 1; k < z.blocks.size(); ++k) {
        const SubsetMask K(k, d);
        const Vector sk = k_support_dual_subgradient(fam, z.blocks[k], K);
        Vector gk = gs;
        if (v1 > 0) gk += mu * (sk - ns_grad);
        if (v2 > 0) gk += mu * (F.at(k).value() * sk - alpha * ns_grad);
        g[k] = project(gk, K);
        G += g[k].squaredNorm();
      }
      G = std::sqrt(G);
      if (!(G > 0)) break;
      const double step = 0.3 * (1.0 + s.norm()) / std::sqrt(static_cast<double>(t)) / G;
      for (std::uint32_t k = 1; k < z.blocks.size(); ++k) z.blocks[k] -= step * g[k];
    }
    candidates.push_back(best_x);
  }

  // Snap each candidate onto the support it suggests, then polish on every admissible support.
  std::vector<SubsetMask> supports;
  for (auto K : enumerate_subsets(d))
    if (F.finite(K) <= alpha) supports.push_back(K);
  SparseConstrainedResult out;
  out.value = kInf;
  auto take = [&](const Vector& x) {
    const SubsetMask L = support(x);
    if (F.finite(L) > alpha) return;
    const double fx = f0(x);
    if (fx < out.value) {
      out.value = fx;
      out.x = x;
    }
  };
  for (const auto& c : candidates) {
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    const Vector snapped = project(c, support_with_tol(c, budget.tol * scale));
    take(snapped);
    for (const auto& K : supports)
      if (support(snapped).is_subset_of(K)) take(polish_on_subspace(f0, snapped, K, budget.iterations));
  }
  for (const auto& K : supports) take(polish_on_subspace(f0, Vector::Zero(d), K, budget.iterations));
  if (!std::isfinite(out.value))
    throw SolverError("sparse_constrained_min: no feasible point found", kInf);
  out.z = Decomposition(d);
  out.z[support(out.x)] = out.x;
  return out;
}

}  // namespace capra
