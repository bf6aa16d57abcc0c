#include "capra/solver.hpp"

#include <Eigen/QR>

#include <cmath>
#include <random>

namespace capra {

Decomposition::Decomposition(int dim) : d(dim) {
  require_dim(dim);
  blocks.assign(std::size_t{1} << dim, Vector::Zero(dim));
}

Vector Decomposition::sum() const {
  Vector s = Vector::Zero(d);
  for (const auto& b : blocks) s += b;
  return s;
}

std::vector<SubsetMask> Decomposition::nonzero_blocks() const {
  std::vector<SubsetMask> out;
  for (std::uint32_t k = 1; k < blocks.size(); ++k)
    if (!blocks[k].isZero(0.0)) out.emplace_back(k, d);
  return out;
}

bool Decomposition::well_formed() const {
  if (!blocks.empty() && !blocks[0].isZero(0.0)) return false;
  for (std::uint32_t k = 1; k < blocks.size(); ++k)
    if (!support(blocks[k]).is_subset_of(SubsetMask(k, d))) return false;
  return true;
}

EllipsoidResult ellipsoid_maximize(const ConcaveOracle& h, const ConvexOracle* g,
                                   const Vector& center, double radius,
                                   const std::vector<Vector>& warm, const EllipsoidOptions& opt) {
  const int n = static_cast<int>(center.size());
  EllipsoidResult res;
  res.y = center;
  Vector s(n), a(n);
  auto consider = [&](const Vector& y, double v) {
    if (v > res.value || !res.feasible_found) {
      res.value = v;
      res.y = y;
    }
    res.feasible_found = true;
  };
  for (const auto& w : warm) {
    if (g && (*g)(w, a) > 0) continue;
    consider(w, h(w, s));
  }
  Vector c = center;
  Matrix P = Matrix::Identity(n, n) * radius * radius;
  double U = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    bool feasible = true;
    if (g) {
      const double gv = (*g)(c, a);
      if (gv > 0) feasible = false;
    }
    if (feasible) {
      const double v = h(c, s);
      consider(c, v);
      if (s.isZero(0.0)) {
        U = std::min(U, res.value);
        break;
      }
      const double width = std::sqrt(std::max(0.0, s.dot(P * s)));
      // In exact arithmetic the ellipsoid keeps every maximizer, so v + width >= value.
      // A violation means P has lost its shape to rounding; stop before it certifies.
      if (v + width < res.value - 1e-12 * (1.0 + std::abs(res.value))) break;
      U = std::min(U, std::max(res.value, v + width));
      if (U - res.value <= opt.tol * (1.0 + std::abs(res.value))) break;
      a = -s;
    }
    const Vector Pa = P * a;
    const double aPa = a.dot(Pa);
    if (!(aPa > 1e-300)) break;
    const Vector b = Pa / std::sqrt(aPa);
    if (n == 1) {
      c -= b / 2.0;
      P /= 4.0;
    } else {
      const double nn = n;
      c -= b / (nn + 1.0);
      P = (nn * nn / (nn * nn - 1.0)) * (P - (2.0 / (nn + 1.0)) * (b * b.transpose()));
      P = 0.5 * (P + P.transpose()).eval();
    }
  }
  res.iterations = it;
  res.upper = res.feasible_found ? std::max(U, res.value) : U;
  return res;
}

Vector nnls(const Matrix& A, const Vector& b, int max_iter) {
  const int m = static_cast<int>(A.cols());
  Vector x = Vector::Zero(m);
  if (m == 0) return x;
  std::vector<bool> passive(m, false);
  const double tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()) * std::max(1.0, b.norm());
  auto solve_passive = [&](Vector& s) {
    std::vector<int> idx;
    for (int j = 0; j < m; ++j)
      if (passive[j]) idx.push_back(j);
    Matrix Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(k) = A.col(idx[k]);
    const Vector sp = Ap.completeOrthogonalDecomposition().solve(b);
    s.setZero(m);
    for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sp(k);
  };
  Vector w = A.transpose() * (b - A * x);
  Vector s(m);
  for (int outer = 0; outer < max_iter; ++outer) {
    int j = -1;
    double best = tol;
    for (int i = 0; i < m; ++i)
      if (!passive[i] && w(i) > best) {
        best = w(i);
        j = i;
      }
    if (j < 0) break;
    passive[j] = true;
    for (int inner = 0; inner < 4 * m + 4; ++inner) {
      solve_passive(s);
      bool all_pos = true;
      for (int i = 0; i < m; ++i)
        if (passive[i] && s(i) <= 0) all_pos = false;
      if (all_pos) {
        x = s;
        break;
      }
      double alpha = 1.0;
      for (int i = 0; i < m; ++i)
        if (passive[i] && s(i) <= 0) alpha = std::min(alpha, x(i) / (x(i) - s(i)));
      x += alpha * (s - x);
      for (int i = 0; i < m; ++i)
        if (passive[i] && x(i) <= 1e-15) {
          passive[i] = false;
          x(i) = 0.0;
        }
    }
    w = A.transpose() * (b - A * x);
  }
  return x.cwiseMax(0.0);
}

Decomposition recover_from_atoms(const Vector& x, const std::vector<SubsetMask>& masks,
                                 const std::vector<Vector>& atoms, bool simplex,
                                 const SubsetMask& sink) {
  const int d = static_cast<int>(x.size());
  const int m = static_cast<int>(atoms.size());
  Decomposition z(d);
  if (m > 0) {
    const int rows = d + (simplex ? 1 : 0);
    const int cols = m + (simplex ? 1 : 0);
    Matrix A = Matrix::Zero(rows, cols);
    Vector b = Vector::Zero(rows);
    for (int k = 0; k < m; ++k) A.col(k).head(d) = atoms[k];
    b.head(d) = x;
    if (simplex) {
      A.row(d).head(m).setOnes();
      A(d, m) = 1.0;
      b(d) = 1.0;
    }
    const Vector t = nnls(A, b);
    for (int k = 0; k < m; ++k) z[masks[k]] += t(k) * project(atoms[k], masks[k]);
  }
  const Vector r = x - z.sum();
  z[sink] += project(r, sink);
  return z;
}

namespace {

struct BlockLayout {
  std::vector<SubsetMask> free;
  SubsetMask elim;
};

BlockLayout layout(const BlockProgram& prog) {
  const int d = static_cast<int>(prog.x.size());
  if (prog.cost.size() != (std::size_t{1} << d))
    throw std::invalid_argument("BlockProgram: cost table must have 2^d entries");
  BlockLayout L;
  const SubsetMask V = SubsetMask::full(d);
  if (!std::isfinite(prog.cost[V.bits()]))
    throw std::invalid_argument("BlockProgram: the full block must be enabled");
  L.elim = V;
  for (std::uint32_t k = 1; k < V.bits(); ++k)
    if (std::isfinite(prog.cost[k])) L.free.emplace_back(k, d);
  return L;
}

}  // namespace

BlockEvaluation evaluate_blocks(const BlockProgram& prog, const Decomposition& z, double penalty) {
  BlockEvaluation e;
  double f = prog.base;
  for (std::uint32_t k = 1; k < z.blocks.size(); ++k) {
    const Vector& b = z.blocks[k];
    if (b.isZero(0.0)) continue;
    const SubsetMask K(k, z.d);
    const double nk = prog.norm.eval(b, K);
    e.norm_sum += nk;
    const double c = prog.cost[k];
    if (!std::isfinite(c)) {
      f = std::numeric_limits<double>::infinity();
      continue;
    }
    f += c * nk;
  }
  if (prog.budget) {
    e.violation = std::max(0.0, e.norm_sum - *prog.budget);
    f += prog.leftover_rate * std::max(0.0, *prog.budget - e.norm_sum);
  }
  e.objective = f;
  e.penalized = f + penalty * e.violation;
  e.equality_residual = (z.sum() - prog.x).norm();
  return e;
}

BlockSolution solve_blocks(const BlockProgram& prog, const std::vector<Decomposition>& warm,
                           const BlockSolverOptions& opt) {
  const int d = static_cast<int>(prog.x.size());
  const BlockLayout L = layout(prog);
  double cmax = 0.0;
  for (std::uint32_t k = 1; k < prog.cost.size(); ++k)
    if (std::isfinite(prog.cost[k])) cmax = std::max(cmax, std::abs(prog.cost[k]));
  double mu = opt.penalty > 0 ? opt.penalty : 10.0 * (1.0 + cmax);

  auto complete = [&](Decomposition z) {
    for (std::uint32_t k = 0; k < z.blocks.size(); ++k) {
      const SubsetMask K(k, d);
      if (k == 0 || !std::isfinite(prog.cost[k])) z.blocks[k].setZero();
      else z.blocks[k] = project(z.blocks[k], K);
    }
    z[L.elim].setZero();
    z[L.elim] = prog.x - z.sum();
    return z;
  };

  const double scale = std::max(prog.x.norm(), 1e-12);
  BlockSolution best;
  best.eval.penalized = std::numeric_limits<double>::infinity();
  best.z = complete(Decomposition(d));

  auto run = [&](Decomposition z, int iters) {
    z = complete(z);
    auto ev = evaluate_blocks(prog, z, mu);
    Decomposition zbest = z;
    BlockEvaluation ebest = ev;
    std::vector<Vector> g(L.free.size());
    for (int t = 1; t <= iters; ++t) {
      double wt;
      if (prog.budget && ev.violation > 0) wt = mu;
      else if (prog.budget && ev.norm_sum < *prog.budget) wt = -prog.leftover_rate;
      else wt = 0.0;
      const Vector sE = prog.norm.subgrad(z[L.elim], L.elim);
      const double wE = prog.cost[L.elim.bits()] + wt;
      double G = 0.0;
      for (std::size_t i = 0; i < L.free.size(); ++i) {
        const SubsetMask& K = L.free[i];
        const Vector sK = prog.norm.subgrad(z[K], K);
        g[i] = project(Vector((prog.cost[K.bits()] + wt) * sK - wE * sE), K);
        G += g[i].squaredNorm();
      }
      G = std::sqrt(G);
      if (!(G > 0)) break;
      const double step = 0.3 * scale / std::sqrt(static_cast<double>(t)) / G;
      for (std::size_t i = 0; i < L.free.size(); ++i) z[L.free[i]] -= step * g[i];
      z[L.elim].setZero();
      z[L.elim] = prog.x - z.sum();
      ev = evaluate_blocks(prog, z, mu);
      if (ev.penalized < ebest.penalized) {
        ebest = ev;
        zbest = z;
      }
      ++best.iterations;
    }
    return std::make_pair(zbest, ebest);
  };

  auto absorb = [&](const Decomposition& z, const BlockEvaluation& e) {
    if (e.penalized < best.eval.penalized) {
      best.z = z;
      best.eval = e;
    }
  };

  for (const auto& w : warm) {
    auto [z, e] = run(w, opt.iterations);
    best.run_values.push_back(e.penalized);
    absorb(z, e);
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> N01;
  const double spread = scale / std::sqrt(static_cast<double>(L.free.size() + 1));
  for (int r = 0; r < opt.restarts; ++r) {
    Decomposition z(d);
    for (const auto& K : L.free)
      for (int i = 0; i < d; ++i)
        if (K.contains(i)) z[K](i) = spread * N01(rng);
    auto [zr, e] = run(z, opt.iterations);
    best.run_values.push_back(e.penalized);
    absorb(zr, e);
  }
  if (warm.empty() && opt.restarts <= 0) absorb(best.z, evaluate_blocks(prog, best.z, mu));

  const double ftol = opt.feasibility_tol * std::max(1.0, prog.budget.value_or(1.0));
  for (int round = 0; round < 6 && prog.budget && best.eval.violation > ftol; ++round) {
    mu *= 4.0;
    auto [z, e] = run(best.z, opt.iterations);
    best.z = z;
    best.eval = e;
  }
  best.penalty = mu;
  best.eval = evaluate_blocks(prog, best.z, mu);
  return best;
}

}  // namespace capra
