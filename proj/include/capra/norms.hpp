#pragma once

#include "capra/sampling.hpp"
#include "capra/subsets.hpp"

#include <memory>
#include <optional>
#include <string>

namespace capra {

enum class Tri { unknown, yes, no };

struct DeclaredFlags {
  Tri orthant_monotonic = Tri::unknown;
  Tri orthant_strictly_monotonic = Tri::unknown;
  Tri dual_osm = Tri::unknown;
};

/// Settings for norms evaluated through sampling (custom norms only).
struct NumericOptions {
  long samples = 100000;
  double rel_tol = 1e-3;
  std::uint64_t seed = 0x5eedULL;
  int refine_iters = 400;
};

enum class TableCombine { sum, max };

/// Source norm. Catalog entries (lp, weighted lp) have closed-form duals;
/// custom norms get their dual by sphere sampling.
///
/// weighted-lp is x -> ||w o x||_p, whose dual is y -> ||y / w||_q.
class NormSpec {
 public:
  enum class Kind { lp, weighted_lp, custom };

  /// p in [1, inf]; pass std::numeric_limits<double>::infinity() for l-infinity.
  static NormSpec lp(double p);
  static NormSpec weighted_lp(double p, Vector weights);
  /// Black-box norm on R^dim. `dual_eval` is optional.
  static NormSpec custom(int dim, RealFn eval, RealFn dual_eval = {}, DeclaredFlags flags = {});
  /// x -> sum_i |<a_i, x>| or max_i |<a_i, x>| over the rows a_i; rows must have full column rank.
  static NormSpec custom_table(Matrix rows, TableCombine combine, DeclaredFlags flags = {});

  Kind kind() const;
  bool is_catalog() const { return kind() != Kind::custom; }
  bool is_table() const;
  double p() const;
  /// Conjugate exponent q with 1/p + 1/q = 1.
  double q() const;
  const Vector& weights() const;
  const Matrix& table_rows() const;
  TableCombine table_combine() const;
  /// Fixed dimension, or 0 for lp which accepts any dimension.
  int dim() const;
  const DeclaredFlags& declared_flags() const;
  const NumericOptions& numeric() const;
  NormSpec with_numeric(NumericOptions opts) const;

  /// Closed-form dual for catalog norms; nullopt for custom norms.
  std::optional<NormSpec> dual() const;

  /// Short label such as "l2", "l1.5", "linf", "weighted-l2", "custom-table".
  std::string name() const;
  /// Stable for configs that serialize; identity-based for function-backed norms.
  std::size_t hash() const;

  // Internal: raw evaluators, without dimension checks.
  double eval_raw(const Vector& x) const;
  const RealFn& eval_fn() const;
  /// Supplied dual oracle of a custom norm; empty when absent.
  const RealFn& dual_eval_fn() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  explicit NormSpec(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
};

double norm_eval(const NormSpec& n, const Vector& x);
double dual_norm_eval(const NormSpec& n, const Vector& y);

/// sup { <u,y> : ||u|| <= 1, supp(u) ⊆ K } and a maximizer u with supp(u) ⊆ K.
/// Only y_K matters. Exact for catalog norms, a sampled lower estimate otherwise.
SupportPoint dual_support(const NormSpec& n, const Vector& y, const SubsetMask& K);

/// A dual vector v with <x,v> = ||x|| and ||v||_* = 1. For lp/weighted lp it is the
/// gradient of the norm, with supp(v) = supp(x) whenever the norm is strictly monotonic.
/// Table norms use a signed combination of the active rows, exact on both counts.
/// Other custom norms use a central-difference gradient of the norm restricted to supp(x).
Vector norm_subgradient(const NormSpec& n, const Vector& x);

/// The K-restriction norm; requires supp(x) ⊆ K.
double restriction_norm(const NormSpec& n, const Vector& x, const SubsetMask& K);
/// Restrict first, then dualize: the support function of the unit ball intersected with
/// the coordinate subspace of K. Requires supp(y) ⊆ K.
double set_star_norm(const NormSpec& n, const Vector& y, const SubsetMask& K);
/// Dualize first, then restrict. Requires supp(y) ⊆ K.
double star_set_norm(const NormSpec& n, const Vector& y, const SubsetMask& K);

enum class Verdict { true_analytic, true_sampled, false_with_witness };
enum class MonotonicityProperty {
  orthant_monotonic,
  coordinate_subspace,
  orthant_strictly_monotonic,
  dual_alignment,
};

/// For the alignment property, x is the vector u without an aligned dual vector and
/// x_prime is the best candidate found.
struct MonotonicityWitness {
  Vector x;
  Vector x_prime;
  MonotonicityProperty violated;
};

struct MonotonicityResult {
  Verdict verdict = Verdict::true_sampled;
  std::optional<MonotonicityWitness> witness;
  bool holds() const { return verdict != Verdict::false_with_witness; }
};

std::string to_string(Verdict v);
std::string to_string(MonotonicityProperty p);

MonotonicityResult check_orthant_monotonic(const NormSpec& n, int trials, std::uint64_t seed);
MonotonicityResult check_orthant_strictly_monotonic(const NormSpec& n, int trials,
                                                    std::uint64_t seed);
/// Strict monotonicity of the dual norm: analytic for catalog norms, sampled on the
/// numeric dual otherwise.
MonotonicityResult check_dual_strictly_monotonic(const NormSpec& n, int trials,
                                                 std::uint64_t seed);

}  // namespace capra
