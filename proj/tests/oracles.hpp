#pragma once

// Brute-force references used only by the tests. They share no code with the library
// beyond the vector type.

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace oracle {

using Vec = Eigen::VectorXd;
using Fn = std::function<double(const Vec&)>;

/// sup of <u,y> over the unit ball of `norm` restricted to coordinates where mask is set,
/// by random directions followed by coordinate-pair rotations.
inline double support_of_ball(const Fn& norm, const Vec& y, unsigned mask, int samples,
                              unsigned seed = 1) {
  const int d = static_cast<int>(y.size());
  std::mt19937 rng(seed);
  std::normal_distribution<double> N;
  double best = 0.0;
  Vec bu = Vec::Zero(d);
  for (int s = 0; s < samples; ++s) {
    Vec u = Vec::Zero(d);
    for (int i = 0; i < d; ++i)
      if (mask >> i & 1u) u(i) = N(rng);
    const double n = norm(u);
    if (!(n > 0)) continue;
    u /= n;
    if (u.dot(y) > best) {
      best = u.dot(y);
      bu = u;
    }
  }
  if (best <= 0) return best;
  for (double h = 0.1; h > 1e-9; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int i = 0; i < d; ++i)
        for (double sgn : {-1.0, 1.0}) {
          if (!(mask >> i & 1u)) continue;
          Vec u = bu;
          u(i) += sgn * h;
          const double n = norm(u);
          if (!(n > 0)) continue;
          u /= n;
          if (u.dot(y) > best + 1e-15) {
            best = u.dot(y);
            bu = u;
            moved = true;
          }
        }
    }
  }
  return best;
}

inline double lp(const Vec& x, double p) {
  if (std::isinf(p)) return x.cwiseAbs().maxCoeff();
  double s = 0;
  for (int i = 0; i < x.size(); ++i) s += std::pow(std::abs(x(i)), p);
  return std::pow(s, 1.0 / p);
}

inline int popcount(unsigned m) {
  int c = 0;
  for (; m; m &= m - 1) ++c;
  return c;
}

}  // namespace oracle
