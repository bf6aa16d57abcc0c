#pragma once

#include "capra/context.hpp"
#include "capra/solver.hpp"

#include <functional>
#include <string>
#include <vector>

namespace capra {

struct Residuals {
  double equality = 0.0;         // ||sum_K z_K - x||
  double norm_sum = 0.0;         // sum_K N_K(z_K)
  double budget_violation = 0.0; // max(0, norm_sum - budget)
  double penalty = 0.0;          // exact-penalty weight used by the primal solver
  double gap = 0.0;              // primal upper minus dual lower
};

/// lambda is indexed by subset bits; lambda[0] is the weight left on the empty set.
struct SolverState {
  std::vector<double> lambda;
  Decomposition z;
  double objective = 0.0;
  Residuals residuals;
};

struct L0FOptions {
  BlockSolverOptions solver;
  EllipsoidOptions ellipsoid;
  /// Skip the subgradient phase when primal and dual already agree to this relative gap.
  double certify_tol = 1e-9;
  bool run_primal = true;
};

struct L0FResult {
  /// Dual value: sup_y <x,y> - F^c(y) restricted to the search ball; a lower estimate.
  double value = 0.0;
  double lower = 0.0;
  /// Best penalized primal objective; an upper estimate.
  double upper = 0.0;
  bool certified = false;
  Vector dual_point;
  std::string formulation;
  SolverState state;
};

/// L0^F(x): +inf outside the unit ball of the source norm. Uses the z-decomposition
/// program when F(empty) = 0 and F is nondecreasing, else the lambda form with balls.
/// Requires F finite-valued.
L0FResult eval_L0F(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                   const L0FOptions& opt = {});

struct VariationalResult {
  double value = 0.0;
  Decomposition certificate;
  bool canonical_feasible = false;
  double canonical_objective = 0.0;
  /// Best value of each solver run (canonical warm start first), divided by ||x||.
  std::vector<double> restart_values;
  bool hypotheses = false;
  /// |value - F(supp x)| within tolerance; only meaningful when hypotheses hold.
  bool equality_holds = false;
  SolverState state;
};

/// (1/||x||) min sum_K F(K) N_K(z_K) s.t. sum_K N_K(z_K) <= ||x||, sum_K z_K = x, with
/// N_K the K-support dual norms. Requires x != 0 and F finite, nondecreasing, F(empty) = 0.
/// Without a closed form for the local norms only the canonical decomposition is
/// evaluated; residuals.gap measures it against the dual certificate.
VariationalResult variational_value(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                                    const BlockSolverOptions& opt = {}, double tol = 1e-4);

enum class GammaKind { balls, spheres };

/// min sum_K lambda_K F(K) over the simplex with x in sum_K lambda_K Gamma_K, where
/// Gamma_K is the unit ball or sphere of the K-support dual norm. Infeasible inputs
/// give objective +inf.
SolverState solve_lambda_form(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                              GammaKind kind, const L0FOptions& opt = {});

enum class UpperVariant { all_k, k_containing_support };
std::string to_string(UpperVariant v);

struct BoundsReport {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  UpperVariant upper_variant = UpperVariant::k_containing_support;
  double upper_all_k = 0.0;
  double upper_containing_support = 0.0;
  /// Dual estimate of the aggregate norm divided by ||x||.
  double lower_dual = 0.0;
  /// Source norm orthant-monotonic. value <= upper (K containing supp x) is only
  /// guaranteed then; other norms can put upper below value.
  bool upper_guaranteed = false;
};

BoundsReport bounds(const CapraContext& ctx, const SetFunction& F, const Vector& x,
                    UpperVariant variant = UpperVariant::k_containing_support);

struct SparseMinResult {
  double value = 0.0;
  Vector argmin;
  std::vector<double> direct;
  std::vector<double> variational;
  bool agree = true;
};

SparseMinResult sparse_min_over_set(const CapraContext& ctx, const SetFunction& F,
                                    const std::vector<Vector>& C, double tol = 1e-4);

struct SolverBudget {
  int iterations = 2000;
  int restarts = 10;
  std::uint64_t seed = 1;
  double tol = 1e-6;
};

struct SparseConstrainedResult {
  double value = 0.0;
  Vector x;
  Decomposition z;
};

/// min f0(sum_K z_K) over decompositions with sum_K N_K(z_K) <= ||sum z|| and
/// sum_K F(K) N_K(z_K) <= alpha ||sum z||. Throws SolverError if nothing feasible is found.
SparseConstrainedResult sparse_constrained_min(const CapraContext& ctx, const SetFunction& F,
                                               const RealFn& f0, double alpha,
                                               const SolverBudget& budget = {});

}  // namespace capra
