#pragma once

#include "capra/localnorms.hpp"

#include <memory>
#include <string>

namespace capra {

/// Whether a monotonicity hypothesis holds and on what basis:
/// "analytic", "sampled", "declared" or "witness".
struct HypothesisStatus {
  bool holds = false;
  std::string basis;
  std::optional<MonotonicityWitness> witness;
};

struct HypothesisFlags {
  HypothesisStatus source_om;
  HypothesisStatus source_osm;
  HypothesisStatus dual_osm;
  bool osm_pair() const { return source_osm.holds && dual_osm.holds; }
};

/// Source norm with its local norm family. Hypothesis flags are computed on first use
/// (analytically for catalog norms, from declared flags or sampling otherwise).
class CapraContext {
 public:
  explicit CapraContext(NormSpec source, DualizationOptions opt = {}, int check_trials = 500,
                        std::uint64_t check_seed = 0);

  const NormSpec& source() const { return fam_.source(); }
  const LocalNormFamily& fam() const { return fam_; }
  const HypothesisFlags& flags() const;
  bool source_om() const { return flags().source_om.holds; }
  bool osm_hypotheses() const { return flags().osm_pair(); }

 private:
  struct Lazy;
  LocalNormFamily fam_;
  int check_trials_;
  std::uint64_t check_seed_;
  std::shared_ptr<Lazy> lazy_;
};

/// <x,y>/||x|| for x != 0, and 0 at x = 0.
double capra_coupling(const CapraContext& ctx, const Vector& x, const Vector& y);
/// x/||x|| for x != 0, and 0 at x = 0.
Vector normalize(const CapraContext& ctx, const Vector& x);

}  // namespace capra
