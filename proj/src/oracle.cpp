#include "capra/oracle.hpp"

#include <cmath>
#include <random>

namespace capra {

double direct_capra_conjugate(const CapraContext& ctx, const ExtFn& f, const Vector& y,
                              const OracleBudget& budget) {
  budget.validate();
  const int d = static_cast<int>(y.size());
  require_dim(d);
  if (ctx.source().dim() != 0) require_same_dim(d, ctx.source().dim(), "direct_capra_conjugate");
  ExtReal best = lower_add(ExtReal(0.0), -f(Vector::Zero(d)));
  std::mt19937_64 rng(budget.seed);
  std::uniform_int_distribution<std::uint32_t> pick(1, (1u << d) - 1);
  std::normal_distribution<double> N01;
  Vector u(d);
  for (long s = 0; s < budget.samples; ++s) {
    const SubsetMask K(pick(rng), d);
    u.setZero();
    while (u.isZero(0.0))
      for (int i = 0; i < d; ++i)
        if (K.contains(i)) u(i) = N01(rng);
    u /= norm_eval(ctx.source(), u);
    best = max(best, lower_add(ExtReal(u.dot(y)), -f(u)));
  }
  return best.to_double();
}

namespace {

struct GridProblem {
  const CapraContext& ctx;
  const SetFunction& F;
  const Vector& x;
  DecompositionObjective objective;
  double nx;
  std::vector<std::pair<std::uint32_t, int>> coords;  // (block bits, coordinate)
};

/// Objective at a decomposition, or +inf if infeasible.
double grid_value(const GridProblem& g, Decomposition& z) {
  const int d = static_cast<int>(g.x.size());
  const SubsetMask V = SubsetMask::full(d);
  z[V].setZero();
  z[V] = g.x - z.sum();
  double nsum = 0.0, obj = 0.0;
  for (std::uint32_t k = 1; k < z.blocks.size(); ++k) {
    if (z.blocks[k].isZero(0.0)) continue;
    const double n = k_support_dual_norm(g.ctx.fam(), z.blocks[k], SubsetMask(k, d));
    nsum += n;
    obj += g.F.at(k).value() * n;
  }
  if (g.objective == DecompositionObjective::aggregate) return obj;
  if (nsum > g.nx * (1.0 + 1e-12)) return std::numeric_limits<double>::infinity();
  return obj / g.nx;
}

/// Visits the product of the per-coordinate value lists and keeps the best point.
double grid_pass(const GridProblem& g, const std::vector<std::vector<double>>& values,
                 std::vector<double>& best_point) {
  const int d = static_cast<int>(g.x.size());
  const std::size_t m = g.coords.size();
  std::vector<std::size_t> idx(m, 0);
  Decomposition z(d);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (auto& b : z.blocks) b.setZero();
    for (std::size_t c = 0; c < m; ++c) z.blocks[g.coords[c].first](g.coords[c].second) = values[c][idx[c]];
    const double v = grid_value(g, z);
    if (v < best) {
      best = v;
      for (std::size_t c = 0; c < m; ++c) best_point[c] = values[c][idx[c]];
    }
    std::size_t c = 0;
    while (c < m && ++idx[c] == values[c].size()) idx[c++] = 0;
    if (c == m) break;
  }
  return best;
}

}  // namespace

double grid_decomposition_min(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                              const OracleBudget& budget, DecompositionObjective objective) {
  budget.validate();
  const int d = F.dim();
  require_same_dim(static_cast<int>(x.size()), d, "grid_decomposition_min");
  if (d > 3) throw DimensionError("grid_decomposition_min: d must be at most 3");
  if (!F.finite_valued()) throw std::invalid_argument("grid_decomposition_min: F must be finite-valued");
  if (x.isZero(0.0)) return 0.0;
  GridProblem g{ctx, F, x, objective, norm_eval(ctx.source(), x), {}};
  const std::uint32_t full = (1u << d) - 1;
  for (std::uint32_t k = 1; k < full; ++k)
    for (int i = 0; i < d; ++i)
      if (k & (1u << i)) g.coords.emplace_back(k, i);
  const std::size_t m = g.coords.size();
  if (m == 0) {
    Decomposition z(d);
    return grid_value(g, z);
  }

  const double B = x.cwiseAbs().maxCoeff();
  const double per = std::floor(std::pow(static_cast<double>(budget.samples), 1.0 / m));
  long half = static_cast<long>(std::floor(B / budget.grid_resolution));
  half = std::max(1L, std::min(half, static_cast<long>((per - 2) / 2)));
  const double h = B / static_cast<double>(half);
  std::vector<std::vector<double>> values(m);
  for (std::size_t c = 0; c < m; ++c) {
    for (long k = -half; k <= half; ++k) values[c].push_back(static_cast<double>(k) * h);
    const double xi = x(g.coords[c].second);
    if (std::abs(xi) > 0 && std::fmod(std::abs(xi), h) != 0.0) values[c].push_back(xi);
  }
  std::vector<double> point(m, 0.0);
  double best = grid_pass(g, values, point);
  if (!std::isfinite(best)) return best;

  // Refine around the incumbent with a tenth of the step.
  long r = std::max(1L, std::min(10L, static_cast<long>((per - 1) / 2)));
  for (std::size_t c = 0; c < m; ++c) {
    values[c].clear();
    for (long k = -r; k <= r; ++k) values[c].push_back(point[c] + static_cast<double>(k) * h / 10.0);
  }
  std::vector<double> refined(m, 0.0);
  best = std::min(best, grid_pass(g, values, refined));
  return best;
}

}  // namespace capra
