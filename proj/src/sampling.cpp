#include "capra/sampling.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <tuple>

namespace capra {

void OracleBudget::validate() const {
  if (samples < 1) throw std::invalid_argument("OracleBudget: samples < 1");
  if (!(grid_resolution > 0)) throw std::invalid_argument("OracleBudget: grid_resolution <= 0");
  if (!(box_radius > 0)) throw std::invalid_argument("OracleBudget: box_radius <= 0");
}

double sampled_support_function(const Membership& S, const Vector& y, const OracleBudget& budget) {
  budget.validate();
  const int d = static_cast<int>(y.size());
  require_dim(d);
  std::mt19937_64 rng(budget.seed);
  std::uniform_real_distribution<double> U(-budget.box_radius, budget.box_radius);
  bool any = false;
  double best = -std::numeric_limits<double>::infinity();
  Vector x = Vector::Zero(d);
  for (long s = 0; s < budget.samples; ++s) {
    if (s > 0)
      for (int i = 0; i < d; ++i) x(i) = U(rng);
    if (!S(x)) continue;
    any = true;
    best = std::max(best, x.dot(y));
  }
  if (!any) throw std::runtime_error("sampled_support_function: no accepted samples");
  return best;
}

namespace {

ExtReal conj_term(const ExtFn& f, const Vector& x, const Vector& y) {
  return lower_add(ExtReal(x.dot(y)), -f(x));
}

}  // namespace

ExtReal grid_fenchel_conjugate(const ExtFn& f, const Vector& y, const OracleBudget& budget) {
  budget.validate();
  const int d = static_cast<int>(y.size());
  require_dim(d);
  const long half = static_cast<long>(std::floor(budget.box_radius / budget.grid_resolution));
  const long n = 2 * half + 1;
  const double total = std::pow(static_cast<double>(n), d);

  ExtReal best = ExtReal::neg_inf();
  Vector x = Vector::Zero(d);
  if (total > 4e7) {
    best = max(best, conj_term(f, x, y));
    std::mt19937_64 rng(budget.seed);
    std::uniform_real_distribution<double> U(-budget.box_radius, budget.box_radius);
    for (long s = 0; s < budget.samples; ++s) {
      for (int i = 0; i < d; ++i) x(i) = U(rng);
      best = max(best, conj_term(f, x, y));
    }
    return best;
  }
  std::vector<long> k(d, -half);
  while (true) {
    for (int i = 0; i < d; ++i) x(i) = static_cast<double>(k[i]) * budget.grid_resolution;
    best = max(best, conj_term(f, x, y));
    int i = 0;
    while (i < d && ++k[i] > half) k[i++] = -half;
    if (i == d) break;
  }
  return best;
}

Matrix sample_sphere_on(const RealFn& norm, const SubsetMask& K, long n, std::uint64_t seed) {
  const int d = K.dim();
  Matrix out = Matrix::Zero(d, n);
  if (K.is_empty()) return out;
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (K.bits() + 1)));
  std::normal_distribution<double> N01;
  Vector g(d);
  for (long s = 0; s < n; ++s) {
    double nv = 0.0;
    do {
      g.setZero();
      for (int i = 0; i < d; ++i)
        if (K.contains(i)) g(i) = N01(rng);
      nv = norm(g);
    } while (!(nv > 0));
    out.col(s) = g / nv;
  }
  return out;
}

SupportPoint sphere_support(const RealFn& norm, const Matrix& samples, const Vector& y,
                            const SubsetMask& K, int refine_iters, double min_step,
                            double min_gain) {
  const int d = K.dim();
  SupportPoint res;
  res.argmax = Vector::Zero(d);
  if (K.is_empty() || samples.cols() == 0) return res;
  const Vector yK = project(y, K);
  Eigen::Index best = 0;
  (samples.transpose() * yK).maxCoeff(&best);
  Vector w = samples.col(best);
  double val = w.dot(yK);
  if (yK.isZero(0.0)) {
    res.argmax = w;
    res.value = 0.0;
    return res;
  }
  auto score = [&](const Vector& v, Vector& unit) {
    const double nv = norm(v);
    if (!(nv > 0)) return -std::numeric_limits<double>::infinity();
    unit = v / nv;
    return unit.dot(yK);
  };
  std::mt19937_64 rng(0xC0FFEEULL + K.bits());
  std::normal_distribution<double> N01;
  double step = 0.05;
  Vector cand(d), unit(d), dir(d);
  int it = 0;
  while (step > min_step && it < refine_iters) {
    bool improved = false;
    for (int i = 0; i < d && !improved; ++i) {
      if (!K.contains(i)) continue;
      for (double sgn : {1.0, -1.0}) {
        cand = w;
        cand(i) += sgn * step;
        const double v = score(cand, unit);
        if (v > val + min_gain * (1.0 + std::abs(val))) {
          val = v;
          w = unit;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      for (int r = 0; r < 2 * K.size() && !improved; ++r) {
        dir.setZero();
        for (int i = 0; i < d; ++i)
          if (K.contains(i)) dir(i) = N01(rng);
        cand = w + step * dir / dir.norm();
        const double v = score(cand, unit);
        if (v > val + min_gain * (1.0 + std::abs(val))) {
          val = v;
          w = unit;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
    ++it;
  }
  res.value = val;
  res.argmax = w;
  return res;
}

namespace {

using CacheKey = std::tuple<std::size_t, std::uint32_t, int, long, std::uint64_t>;

struct SphereCache {
  std::shared_mutex mu;
  std::map<CacheKey, std::shared_ptr<const Matrix>> entries;
};

SphereCache& sphere_cache() {
  static SphereCache c;
  return c;
}

}  // namespace

std::shared_ptr<const Matrix> cached_sphere_samples(std::size_t norm_hash, const RealFn& norm,
                                                    const SubsetMask& K, long n,
                                                    std::uint64_t seed) {
  auto& c = sphere_cache();
  const CacheKey key{norm_hash, K.bits(), K.dim(), n, seed};
  {
    std::shared_lock lk(c.mu);
    auto it = c.entries.find(key);
    if (it != c.entries.end()) return it->second;
  }
  auto m = std::make_shared<const Matrix>(sample_sphere_on(norm, K, n, seed));
  std::unique_lock lk(c.mu);
  auto [it, inserted] = c.entries.emplace(key, m);
  return it->second;
}

void clear_sphere_cache() {
  auto& c = sphere_cache();
  std::unique_lock lk(c.mu);
  c.entries.clear();
}

std::size_t sphere_cache_size() {
  auto& c = sphere_cache();
  std::shared_lock lk(c.mu);
  return c.entries.size();
}

}  // namespace capra
