#pragma once

#include "capra/context.hpp"
#include "capra/sampling.hpp"

namespace capra {

/// Lower estimate of sup_x ¢(x,y) + (-f(x)) (lower addition). Samples 0, then unit-sphere
/// points of the source norm drawn by picking a nonempty support uniformly and a Gaussian
/// direction on it. Returns -inf when every sample has f = +inf.
double direct_capra_conjugate(const CapraContext& ctx, const ExtFn& f, const Vector& y,
                              const OracleBudget& budget = {});

enum class DecompositionObjective {
  /// (1/||x||) min sum_K F(K) N_K(z_K) s.t. sum_K N_K(z_K) <= ||x||, sum_K z_K = x.
  theorem2,
  /// min sum_K F(K) N_K(z_K) s.t. sum_K z_K = x (the aggregate norm).
  aggregate,
};

/// Exhaustive grid search over decompositions into K-support dual norm blocks, d <= 3.
/// Free block coordinates range over multiples of the grid step in [-|x|_inf, |x|_inf]
/// plus x_i itself; the full block is eliminated. The step is coarsened so at most
/// budget.samples points are visited, and a second pass refines around the incumbent.
/// Only exactly feasible points count, so the result is an upper bound.
double grid_decomposition_min(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                              const OracleBudget& budget = {},
                              DecompositionObjective objective = DecompositionObjective::theorem2);

}  // namespace capra
