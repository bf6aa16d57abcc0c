#pragma once

#include "capra/subsets.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace capra {

/// Blocks z_(K) indexed by the bits of K; block 0 (the empty set) stays zero.
struct Decomposition {
  int d = 1;
  std::vector<Vector> blocks;

  Decomposition() = default;
  explicit Decomposition(int dim);

  Vector& operator[](const SubsetMask& K) { return blocks[K.bits()]; }
  const Vector& operator[](const SubsetMask& K) const { return blocks[K.bits()]; }
  Vector sum() const;
  /// Masks of blocks that are not identically zero.
  std::vector<SubsetMask> nonzero_blocks() const;
  /// supp(z_(K)) ⊆ K for every block.
  bool well_formed() const;
};

/// Maximize a concave function h over R^d, optionally subject to g(y) <= 0.
/// Oracles return the value and write a supergradient of h (subgradient of g).
using ConcaveOracle = std::function<double(const Vector&, Vector&)>;
using ConvexOracle = std::function<double(const Vector&, Vector&)>;

struct EllipsoidOptions {
  int max_iter = 20000;
  double tol = 1e-10;
};

struct EllipsoidResult {
  Vector y;
  double value = -std::numeric_limits<double>::infinity();
  /// Certified: no feasible point in the initial ball exceeds `upper`.
  double upper = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool feasible_found = false;
};

/// Central-cut ellipsoid method started from the ball of the given center and radius.
/// Warm points are evaluated first and only contribute to the incumbent.
EllipsoidResult ellipsoid_maximize(const ConcaveOracle& h, const ConvexOracle* g,
                                   const Vector& center, double radius,
                                   const std::vector<Vector>& warm, const EllipsoidOptions& opt);

/// Lawson-Hanson non-negative least squares: argmin ||A t - b|| over t >= 0.
Vector nnls(const Matrix& A, const Vector& b, int max_iter = 500);

/// Block norm N_K on the coordinate subspace of K with a subgradient oracle.
struct BlockNorm {
  std::function<double(const Vector&, const SubsetMask&)> eval;
  /// An element of the subdifferential of N_K at z, supported in K.
  std::function<Vector(const Vector&, const SubsetMask&)> subgrad;
};

/// minimize base + sum_K c_K N_K(z_K) [+ leftover_rate (budget - sum_K N_K)]
/// subject to sum_K z_K = x and, if a budget is set, sum_K N_K(z_K) <= budget.
/// Blocks with infinite cost are disabled.
struct BlockProgram {
  Vector x;
  std::vector<double> cost;
  BlockNorm norm;
  std::optional<double> budget;
  double leftover_rate = 0.0;
  double base = 0.0;
};

struct BlockSolverOptions {
  int iterations = 1500;
  int restarts = 10;
  std::uint64_t seed = 1;
  /// Exact-penalty weight on budget violation; 0 picks a default from the costs.
  double penalty = 0.0;
  double feasibility_tol = 1e-9;
};

struct BlockEvaluation {
  double objective = 0.0;  // unpenalized
  double penalized = 0.0;
  double norm_sum = 0.0;
  double violation = 0.0;  // max(0, norm_sum - budget)
  double equality_residual = 0.0;
};

struct BlockSolution {
  Decomposition z;
  BlockEvaluation eval;
  double penalty = 0.0;
  /// Best penalized value reached by each warm start, then each random restart.
  std::vector<double> run_values;
  int iterations = 0;
};

BlockEvaluation evaluate_blocks(const BlockProgram& prog, const Decomposition& z, double penalty);

/// Exact-penalty projected subgradient descent with step c/sqrt(t). The last block
/// (the full set, or the largest enabled block containing supp(x)) is eliminated so
/// that sum_K z_K = x holds exactly at every iterate.
BlockSolution solve_blocks(const BlockProgram& prog, const std::vector<Decomposition>& warm,
                           const BlockSolverOptions& opt);

/// Recover a primal decomposition from dual atoms: z_K = t_K u_K with t >= 0 solving
/// sum t_K u_K = x, plus sum t_K <= 1 when `simplex` is set. The residual is
/// folded into `sink` so the equality is exact.
Decomposition recover_from_atoms(const Vector& x, const std::vector<SubsetMask>& masks,
                                 const std::vector<Vector>& atoms, bool simplex,
                                 const SubsetMask& sink);

}  // namespace capra
