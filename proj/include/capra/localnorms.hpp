#pragma once

#include "capra/norms.hpp"
#include "capra/set_function.hpp"
#include "capra/solver.hpp"

#include <memory>

namespace capra {

/// `closed_form` uses the orthant-monotonic collapse and is only valid for catalog
/// norms; `numeric` dualizes by direction sampling plus pattern search;
/// `automatic` picks closed_form for catalog norms.
enum class Backend { automatic, closed_form, numeric };

/// Directions and refinement used by the numeric dualization engine.
struct DualizationOptions {
  long directions = 400;
  int refine_iters = 300;
  std::uint64_t seed = 17;
};

/// The local norm families of a source norm. Every function below uses the
/// seminorm extension: only the coordinates in K are read.
class LocalNormFamily {
 public:
  explicit LocalNormFamily(NormSpec source, DualizationOptions opt = {});

  const NormSpec& source() const { return source_; }
  const DualizationOptions& options() const { return opt_; }
  /// True when the closed-form collapse applies (catalog norms, all orthant-monotonic).
  bool closed_form_available() const { return source_.is_catalog(); }
  bool use_closed_form(Backend b) const;

  /// Sampled directions of the coordinate subspace of K, memoized per K. Thread-safe.
  std::shared_ptr<const Matrix> directions(const SubsetMask& K) const;
  /// directions(K) rescaled onto the unit sphere of N, memoized per (tag, K). N must
  /// not depend on anything but K for a given tag.
  std::shared_ptr<const Matrix> unit_directions(int tag, const SubsetMask& K, const RealFn& N) const;
  std::size_t memo_size() const;

 private:
  struct Memo;
  NormSpec source_;
  DualizationOptions opt_;
  std::shared_ptr<Memo> memo_;
};

/// sup over J ⊆ K of the restrict-then-dualize norm of y_J. Zero at K = empty set.
double dual_coordinate_norm(const LocalNormFamily& fam, const Vector& y, const SubsetMask& K,
                            Backend b = Backend::automatic);
/// Same value together with a maximizer u (unit ball of the source norm, supp(u) ⊆ K).
/// The maximizer is a subgradient of y -> dual_coordinate_norm(y, K).
SupportPoint dual_coordinate_support(const LocalNormFamily& fam, const Vector& y,
                                     const SubsetMask& K);

/// Dual on the subspace of K of the dual local-coordinate norm. On that subspace it
/// coincides with the source norm, so the closed form is ||x_K||; the numeric
/// backend dualizes dual_coordinate_norm directly.
double coordinate_norm(const LocalNormFamily& fam, const Vector& x, const SubsetMask& K,
                       Backend b = Backend::automatic);

/// sup over J ⊆ K of ||y_J||_*. Zero at K = empty set.
double top_k_dual_norm(const LocalNormFamily& fam, const Vector& y, const SubsetMask& K,
                       Backend b = Backend::automatic);
/// Maximizing J and a dual-norm maximizer of y_J.
SupportPoint top_k_dual_support(const LocalNormFamily& fam, const Vector& y, const SubsetMask& K);

/// Dual on the subspace of K of top_k_dual_norm.
double k_support_dual_norm(const LocalNormFamily& fam, const Vector& x, const SubsetMask& K,
                           Backend b = Backend::automatic);
/// Subgradient of z -> k_support_dual_norm(z, K), supported in K.
Vector k_support_dual_subgradient(const LocalNormFamily& fam, const Vector& z, const SubsetMask& K);

/// Lower estimate of sup { <x,y> : y on the subspace of K, N(y) <= 1 } for a seminorm N
/// that is a norm on that subspace.
double numeric_dual_on_subspace(const RealFn& N, const Vector& x, const SubsetMask& K,
                                const Matrix& directions, int refine_iters);
/// Same, with directions already on the unit sphere of N.
double numeric_dual_on_unit_sphere(const RealFn& N, const Vector& x, const SubsetMask& K,
                                   const Matrix& unit, int refine_iters);

/// Source norm plus a set function with F(empty) = 0 and F(K) > 0 otherwise.
class AggregateNormSpec {
 public:
  AggregateNormSpec(LocalNormFamily fam, SetFunction F);
  const LocalNormFamily& family() const { return fam_; }
  const SetFunction& F() const { return F_; }

 private:
  LocalNormFamily fam_;
  SetFunction F_;
};

/// max over nonempty K of top_k_dual_norm(y, K) / F(K).
double aggregate_top_dual_norm(const AggregateNormSpec& agg, const Vector& y);

struct AggregateSupportResult {
  /// Best decomposition objective found (an upper estimate of the inf-convolution).
  double value = 0.0;
  /// Dual lower estimate from maximizing <x,y> over the unit ball of the top norm.
  double lower = 0.0;
  Decomposition z;
  bool converged = false;
};

struct AggregateOptions {
  BlockSolverOptions solver;
  double gap_tol = 1e-9;
};

/// inf over x = sum_K z_K of sum_K F(K) k_support_dual_norm(z_K, K).
/// Without a closed form the primal side is limited to decompositions recovered from
/// the dual certificate (no block solver) and the gap target is 1e-3 relative.
AggregateSupportResult aggregate_support_dual_norm(const AggregateNormSpec& agg, const Vector& x,
                                                   const AggregateOptions& opt = {});

/// sup { <x,y> : aggregate_top_dual_norm(y) <= 1 } by the ellipsoid method.
double aggregate_support_dual_norm_via_dual(const AggregateNormSpec& agg, const Vector& x);

/// min over the 2-norm unit sphere of the dual norm, used to turn dual-norm radii into
/// Euclidean radii. Exact for catalog norms, sampled (and halved) otherwise.
double dual_norm_euclidean_floor(const NormSpec& n, int d);

}  // namespace capra
