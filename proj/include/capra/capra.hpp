#pragma once

#include "capra/context.hpp"
#include "capra/sampling.hpp"
#include "capra/variational.hpp"

#include <string>
#include <vector>

namespace capra {

/// Fenchel conjugate of F o supp: sup(-F(empty), delta_{0}(y) + (-inf_{K nonempty} F(K)))
/// with lower addition. It is +inf at every y != 0 unless F is +inf off the empty set.
ExtReal fenchel_conjugate_fsm(const SetFunction& F, const Vector& y);

struct ConjugateArgmax {
  ExtReal value;
  SubsetMask argmax;
};

/// Capra conjugate of F o supp: sup_K [dual_coordinate_norm(y,K) - F(K)] under lower
/// addition. For orthant-monotonic sources the top-K form is computed too and the two
/// must agree (a disagreement throws std::logic_error).
ExtReal capra_conjugate_fsm(const CapraContext& ctx, const SetFunction& F, const Vector& y);
ConjugateArgmax capra_conjugate_fsm_argmax(const CapraContext& ctx, const SetFunction& F,
                                           const Vector& y);
/// sup_K [top_k_dual_norm(y,K) - F(K)].
ExtReal capra_conjugate_fsm_top_k(const CapraContext& ctx, const SetFunction& F, const Vector& y);

struct ReverseConjugateResult {
  ExtReal value;
  bool approximate = false;
  /// Linear growth of the grid sup with the box radius, reported as +inf.
  bool unbounded_growth = false;
};

/// Fenchel conjugate of g_conj evaluated at normalize(x). Uses `closed_form` when given,
/// otherwise the grid oracle at radii R and R/2 to detect unbounded growth.
ReverseConjugateResult capra_reverse_conjugate(const CapraContext& ctx, const ExtFn& g_conj,
                                               const Vector& x, const OracleBudget& budget = {},
                                               const ExtFn& closed_form = {});

struct BiconjugateResult {
  ExtReal value;
  double lower = 0.0;
  double upper = 0.0;
  bool theorem_applies = false;
  L0FResult detail;
};

/// L0^F(normalize(x)). `theorem_applies` is set when the source norm and its dual are
/// orthant-strictly monotonic and F is nondecreasing and finite-valued.
BiconjugateResult capra_biconjugate_fsm(const CapraContext& ctx, const SetFunction& F,
                                        const Vector& x, const L0FOptions& opt = {});

struct CertificateCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool ok = false;
};

struct SubdiffQueryResult {
  bool member = false;
  std::string reason;
  std::vector<CertificateCheck> certificate;
};

/// Membership in the Capra subdifferential of F o supp at 0: for every K,
/// dual_coordinate_norm(y,K) <= F(K) + (-F(empty)) under upper addition.
/// A negative or -inf bound is the empty set; +inf is the whole space.
SubdiffQueryResult subdiff_at_zero_membership(const CapraContext& ctx, const SetFunction& F,
                                              const Vector& y);

/// Membership at x != 0 (x = 0 is delegated to the at-zero test). Equalities are checked
/// at 1e-6 after scaling by max(1, magnitudes); argmax ties are allowed within 1e-9 on the
/// scale of F plus rounding in the dual norms.
SubdiffQueryResult subdiff_membership(const CapraContext& ctx, const SetFunction& F,
                                      const Vector& x, const Vector& y);

class SubgradientSearchError : public SolverError {
 public:
  SubgradientSearchError(const std::string& what, SubdiffQueryResult last)
      : SolverError(what, 0.0), last_(std::move(last)) {}
  const SubdiffQueryResult& last_certificate() const { return last_; }

 private:
  SubdiffQueryResult last_;
};

/// lambda v with v the dual-aligned unit vector of x and lambda the first power of two
/// in [1, 2^40] accepted by subdiff_membership. Returns 0 at x = 0.
Vector construct_subgradient(const CapraContext& ctx, const SetFunction& F, const Vector& x);

/// inf over lambda > 0 of f(lambda x) for x on the unit sphere or x = 0; +inf otherwise.
/// Log-spaced lambda in [1e-6, 1e6] followed by golden-section refinement.
ExtReal conditional_infimum(const CapraContext& ctx, const ExtFn& f, const Vector& x,
                            int ray_samples = 200);

/// max over u in `points` of <normalize(u), y>.
double conjugate_of_indicator(const CapraContext& ctx, const std::vector<Vector>& points,
                              const Vector& y);

}  // namespace capra
