#pragma once

#include "capra/subsets.hpp"

#include <functional>
#include <memory>

namespace capra {

/// Budget shared by all brute-force references.
struct OracleBudget {
  long samples = 100000;
  double grid_resolution = 1e-2;
  double box_radius = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

using Membership = std::function<bool(const Vector&)>;
using RealFn = std::function<double(const Vector&)>;
using ExtFn = std::function<ExtReal(const Vector&)>;

/// Lower estimate of sup_{x in S} <x,y>. The box center is tried first, then uniform
/// points of [-R,R]^d. Samples form one stream per seed, so a larger budget extends
/// the smaller one and never lowers the estimate.
double sampled_support_function(const Membership& S, const Vector& y, const OracleBudget& budget);

/// max over grid points x of <x,y> + (-f(x)) under lower addition. The grid is
/// {k h} in every coordinate with |k h| <= R, so it contains 0. When the grid
/// would exceed 4e7 points it is replaced by `samples` uniform points plus 0.
ExtReal grid_fenchel_conjugate(const ExtFn& f, const Vector& y, const OracleBudget& budget);

/// Unit-sphere points of `norm` restricted to the coordinate subspace of K, as columns.
Matrix sample_sphere_on(const RealFn& norm, const SubsetMask& K, long n, std::uint64_t seed);

struct SupportPoint {
  double value = 0.0;
  Vector argmax;
};

/// Lower estimate of sup <u,y> over u in the unit ball of `norm` intersected with the
/// coordinate subspace of K: best sampled column followed by a pattern search that
/// stops after `refine_iters` steps or once the step falls below `min_step`. A move
/// counts only if it gains more than `min_gain * (1 + |value|)`.
SupportPoint sphere_support(const RealFn& norm, const Matrix& samples, const Vector& y,
                            const SubsetMask& K, int refine_iters, double min_step = 1e-12,
                            double min_gain = 0.0);

/// Process-wide memo of sphere samples keyed by (norm hash, K, count, seed).
/// Safe for concurrent readers and writers.
std::shared_ptr<const Matrix> cached_sphere_samples(std::size_t norm_hash, const RealFn& norm,
                                                    const SubsetMask& K, long n,
                                                    std::uint64_t seed);
void clear_sphere_cache();
std::size_t sphere_cache_size();

}  // namespace capra
