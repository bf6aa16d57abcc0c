#include "capra/localnorms.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>

namespace capra {

struct LocalNormFamily::Memo {
  mutable std::shared_mutex mu;
  std::map<std::uint32_t, std::shared_ptr<const Matrix>> directions;
  std::map<std::pair<int, std::uint32_t>, std::shared_ptr<const Matrix>> units;
};

LocalNormFamily::LocalNormFamily(NormSpec source, DualizationOptions opt)
    : source_(std::move(source)), opt_(opt), memo_(std::make_shared<Memo>()) {
  if (opt_.directions < 1) throw std::invalid_argument("DualizationOptions: directions < 1");
}

bool LocalNormFamily::use_closed_form(Backend b) const {
  switch (b) {
    case Backend::closed_form:
      if (!closed_form_available())
        throw std::invalid_argument("closed-form local norms need an orthant-monotonic catalog norm");
      return true;
    case Backend::numeric: return false;
    default: return closed_form_available();
  }
}

std::shared_ptr<const Matrix> LocalNormFamily::directions(const SubsetMask& K) const {
  {
    std::shared_lock lk(memo_->mu);
    auto it = memo_->directions.find(K.bits());
    if (it != memo_->directions.end() && it->second->rows() == K.dim()) return it->second;
  }
  const int d = K.dim();
  auto M = std::make_shared<Matrix>(Matrix::Zero(d, opt_.directions));
  std::mt19937_64 rng(opt_.seed * 0x100000001B3ULL + K.bits());
  std::normal_distribution<double> N01;
  if (!K.is_empty()) {
    for (long s = 0; s < opt_.directions; ++s) {
      Vector g = Vector::Zero(d);
      do {
        for (int i = 0; i < d; ++i)
          if (K.contains(i)) g(i) = N01(rng);
      } while (g.isZero(0.0));
      M->col(s) = g / g.norm();
    }
  }
  std::unique_lock lk(memo_->mu);
  memo_->directions[K.bits()] = M;
  return M;
}

std::size_t LocalNormFamily::memo_size() const {
  std::shared_lock lk(memo_->mu);
  return memo_->directions.size();
}

namespace {

void check_local(const LocalNormFamily& fam, const Vector& v, const SubsetMask& K, const char* where) {
  require_same_dim(static_cast<int>(v.size()), K.dim(), where);
  if (fam.source().dim() != 0) require_same_dim(static_cast<int>(v.size()), fam.source().dim(), where);
}

}  // namespace

SupportPoint dual_coordinate_support(const LocalNormFamily& fam, const Vector& y,
                                     const SubsetMask& K) {
  check_local(fam, y, K, "dual_coordinate_support");
  if (K.is_empty()) return {0.0, Vector::Zero(y.size())};
  if (fam.closed_form_available()) return dual_support(fam.source(), y, K);
  SupportPoint best{0.0, Vector::Zero(y.size())};
  for_each_subset_of(K, [&](const SubsetMask& J) {
    if (J.is_empty()) return;
    auto sp = dual_support(fam.source(), project(y, J), J);
    if (sp.value > best.value) best = sp;
  });
  return best;
}

double dual_coordinate_norm(const LocalNormFamily& fam, const Vector& y, const SubsetMask& K,
                            Backend b) {
  check_local(fam, y, K, "dual_coordinate_norm");
  if (K.is_empty()) return 0.0;
  if (fam.use_closed_form(b)) return dual_support(fam.source(), y, K).value;
  double best = 0.0;
  for_each_subset_of(K, [&](const SubsetMask& J) {
    if (J.is_empty()) return;
    best = std::max(best, dual_support(fam.source(), project(y, J), J).value);
  });
  return best;
}

namespace {

Matrix rescale_to_unit(const RealFn& N, const Matrix& directions) {
  Matrix unit(directions.rows(), directions.cols());
  Eigen::Index kept = 0;
  for (Eigen::Index s = 0; s < directions.cols(); ++s) {
    const double nv = N(directions.col(s));
    if (nv > 0) unit.col(kept++) = directions.col(s) / nv;
  }
  unit.conservativeResize(Eigen::NoChange, kept);
  return unit;
}

enum : int { kCoordinateTag = 0, kSupportTag = 1 };
constexpr double kNumericGapTol = 1e-3;
constexpr double kNestedMinStep = 1e-5;
constexpr double kNestedMinGain = 1e-8;

}  // namespace

std::shared_ptr<const Matrix> LocalNormFamily::unit_directions(int tag, const SubsetMask& K,
                                                               const RealFn& N) const {
  const auto key = std::make_pair(tag, K.bits());
  {
    std::shared_lock lk(memo_->mu);
    auto it = memo_->units.find(key);
    if (it != memo_->units.end() && it->second->rows() == K.dim()) return it->second;
  }
  auto M = std::make_shared<const Matrix>(rescale_to_unit(N, *directions(K)));
  std::unique_lock lk(memo_->mu);
  memo_->units[key] = M;
  return M;
}

double numeric_dual_on_unit_sphere(const RealFn& N, const Vector& x, const SubsetMask& K,
                                   const Matrix& unit, int refine_iters) {
  const Vector xK = project(x, K);
  if (K.is_empty() || xK.isZero(0.0)) return 0.0;
  // N is itself sampled, so refining past its own accuracy only burns evaluations
  return sphere_support(N, unit, xK, K, refine_iters, kNestedMinStep, kNestedMinGain).value;
}

double numeric_dual_on_subspace(const RealFn& N, const Vector& x, const SubsetMask& K,
                                const Matrix& directions, int refine_iters) {
  if (K.is_empty() || project(x, K).isZero(0.0)) return 0.0;
  return numeric_dual_on_unit_sphere(N, x, K, rescale_to_unit(N, directions), refine_iters);
}

double coordinate_norm(const LocalNormFamily& fam, const Vector& x, const SubsetMask& K,
                       Backend b) {
  check_local(fam, x, K, "coordinate_norm");
  if (K.is_empty()) return 0.0;
  if (b != Backend::numeric) return norm_eval(fam.source(), project(x, K));
  RealFn N = [&fam, K](const Vector& y) { return dual_coordinate_norm(fam, y, K, Backend::numeric); };
  if (project(x, K).isZero(0.0)) return 0.0;
  return numeric_dual_on_unit_sphere(N, x, K, *fam.unit_directions(kCoordinateTag, K, N),
                                     fam.options().refine_iters);
}

double top_k_dual_norm(const LocalNormFamily& fam, const Vector& y, const SubsetMask& K,
                       Backend b) {
  check_local(fam, y, K, "top_k_dual_norm");
  if (K.is_empty()) return 0.0;
  if (fam.use_closed_form(b)) return dual_norm_eval(fam.source(), project(y, K));
  double best = 0.0;
  for_each_subset_of(K, [&](const SubsetMask& J) {
    if (J.is_empty()) return;
    best = std::max(best, dual_norm_eval(fam.source(), project(y, J)));
  });
  return best;
}

SupportPoint top_k_dual_support(const LocalNormFamily& fam, const Vector& y, const SubsetMask& K) {
  check_local(fam, y, K, "top_k_dual_support");
  const int d = static_cast<int>(y.size());
  if (K.is_empty()) return {0.0, Vector::Zero(d)};
  const SubsetMask V = SubsetMask::full(d);
  if (fam.closed_form_available()) return dual_support(fam.source(), project(y, K), V);
  SupportPoint best{0.0, Vector::Zero(d)};
  SubsetMask bestJ = SubsetMask::empty(d);
  for_each_subset_of(K, [&](const SubsetMask& J) {
    if (J.is_empty()) return;
    const double v = dual_norm_eval(fam.source(), project(y, J));
    if (v > best.value) {
      best.value = v;
      bestJ = J;
    }
  });
  if (!bestJ.is_empty()) best.argmax = dual_support(fam.source(), project(y, bestJ), V).argmax;
  return best;
}

double k_support_dual_norm(const LocalNormFamily& fam, const Vector& x, const SubsetMask& K,
                           Backend b) {
  check_local(fam, x, K, "k_support_dual_norm");
  if (K.is_empty()) return 0.0;
  if (fam.use_closed_form(b)) return norm_eval(fam.source(), project(x, K));
  RealFn N = [&fam, K](const Vector& y) { return top_k_dual_norm(fam, y, K, Backend::numeric); };
  if (project(x, K).isZero(0.0)) return 0.0;
  return numeric_dual_on_unit_sphere(N, x, K, *fam.unit_directions(kSupportTag, K, N),
                                     fam.options().refine_iters);
}

Vector k_support_dual_subgradient(const LocalNormFamily& fam, const Vector& z, const SubsetMask& K) {
  check_local(fam, z, K, "k_support_dual_subgradient");
  const int d = static_cast<int>(z.size());
  const Vector zK = project(z, K);
  if (K.is_empty() || zK.isZero(0.0)) return Vector::Zero(d);
  if (fam.closed_form_available()) return project(norm_subgradient(fam.source(), zK), K);
  const double h = 1e-6 * zK.cwiseAbs().maxCoeff();
  Vector g = Vector::Zero(d), e = zK;
  for (int i = 0; i < d; ++i) {
    if (!K.contains(i)) continue;
    e(i) = zK(i) + h;
    const double fp = k_support_dual_norm(fam, e, K);
    e(i) = zK(i) - h;
    const double fm = k_support_dual_norm(fam, e, K);
    e(i) = zK(i);
    g(i) = (fp - fm) / (2 * h);
  }
  return g;
}

double dual_norm_euclidean_floor(const NormSpec& n, int d) {
  if (n.is_catalog()) {
    const double q = n.q();
    double f = 1.0;
    if (q > 2.0) f = std::isinf(q) ? std::pow(d, -0.5) : std::pow(d, 1.0 / q - 0.5);
    if (n.kind() == NormSpec::Kind::weighted_lp) f *= n.weights().cwiseInverse().minCoeff();
    return f;
  }
  std::mt19937_64 rng(99);
  std::normal_distribution<double> N01;
  double best = std::numeric_limits<double>::infinity();
  Vector g(d);
  for (int s = 0; s < 2000; ++s) {
    for (int i = 0; i < d; ++i) g(i) = N01(rng);
    g /= g.norm();
    best = std::min(best, dual_norm_eval(n, g));
  }
  for (int i = 0; i < d; ++i) {
    g.setZero();
    g(i) = 1.0;
    best = std::min(best, dual_norm_eval(n, g));
  }
  return 0.5 * best;
}

AggregateNormSpec::AggregateNormSpec(LocalNormFamily fam, SetFunction F)
    : fam_(std::move(fam)), F_(std::move(F)) {
  if (fam_.source().dim() != 0) require_same_dim(fam_.source().dim(), F_.dim(), "AggregateNormSpec");
  if (!(F_.at(0) == ExtReal(0.0)))
    throw std::invalid_argument("AggregateNormSpec: F(empty) must be 0");
  for (std::uint32_t k = 1; k < F_.values().size(); ++k)
    if (!F_.at(k).is_finite() || !(F_.at(k).value() > 0))
      throw std::invalid_argument("AggregateNormSpec: F(K) must be finite and > 0 for K nonempty");
}

double aggregate_top_dual_norm(const AggregateNormSpec& agg, const Vector& y) {
  const int d = agg.F().dim();
  require_same_dim(static_cast<int>(y.size()), d, "aggregate_top_dual_norm");
  double best = 0.0;
  for (auto K : enumerate_subsets(d)) {
    if (K.is_empty()) continue;
    best = std::max(best, top_k_dual_norm(agg.family(), y, K) / agg.F().finite(K));
  }
  return best;
}

namespace {

EllipsoidResult aggregate_dual(const AggregateNormSpec& agg, const Vector& x) {
  const int d = agg.F().dim();
  const auto& fam = agg.family();
  ConcaveOracle h = [&x](const Vector& y, Vector& s) {
    s = x;
    return x.dot(y);
  };
  ConvexOracle g = [&agg, &fam, d](const Vector& y, Vector& s) {
    double best = -1.0;
    s = Vector::Zero(d);
    for (auto K : enumerate_subsets(d)) {
      if (K.is_empty()) continue;
      const double FK = agg.F().finite(K);
      auto sp = top_k_dual_support(fam, y, K);
      if (sp.value / FK > best) {
        best = sp.value / FK;
        s = sp.argmax / FK;
      }
    }
    return best - 1.0;
  };
  const double FV = agg.F().finite(SubsetMask::full(d));
  const double R = 1.05 * FV / dual_norm_euclidean_floor(fam.source(), d) + 1e-9;
  std::vector<Vector> warm{Vector::Zero(d)};
  for (const Vector& v : {Vector(norm_subgradient(fam.source(), x)), Vector(x)}) {
    const double t = aggregate_top_dual_norm(agg, v);
    if (t > 0) warm.push_back(v / t);
  }
  EllipsoidOptions opt;
  opt.tol = 1e-11;
  return ellipsoid_maximize(h, &g, Vector::Zero(d), R, warm, opt);
}

}  // namespace

double aggregate_support_dual_norm_via_dual(const AggregateNormSpec& agg, const Vector& x) {
  require_same_dim(static_cast<int>(x.size()), agg.F().dim(), "aggregate_support_dual_norm_via_dual");
  if (x.isZero(0.0)) return 0.0;
  return aggregate_dual(agg, x).value;
}

AggregateSupportResult aggregate_support_dual_norm(const AggregateNormSpec& agg, const Vector& x,
                                                   const AggregateOptions& opt) {
  const int d = agg.F().dim();
  require_same_dim(static_cast<int>(x.size()), d, "aggregate_support_dual_norm");
  require_finite(x, "aggregate_support_dual_norm");
  const auto& fam = agg.family();
  AggregateSupportResult out;
  out.z = Decomposition(d);
  if (x.isZero(0.0)) {
    out.converged = true;
    return out;
  }
  BlockProgram prog;
  prog.x = x;
  prog.cost.assign(std::size_t{1} << d, 0.0);
  for (std::uint32_t k = 1; k < prog.cost.size(); ++k) prog.cost[k] = agg.F().at(k).value();
  prog.norm.eval = [&fam](const Vector& z, const SubsetMask& K) { return k_support_dual_norm(fam, z, K); };
  prog.norm.subgrad = [&fam](const Vector& z, const SubsetMask& K) {
    return k_support_dual_subgradient(fam, z, K);
  };

  const auto dual = aggregate_dual(agg, x);
  out.lower = dual.value;

  const SubsetMask V = SubsetMask::full(d);
  std::vector<Decomposition> warm;
  Decomposition canon(d);
  canon[support(x)] = x;
  warm.push_back(canon);
  Decomposition split(d);
  for (int i = 0; i < d; ++i)
    if (x(i) != 0.0) split[SubsetMask(1u << i, d)](i) = x(i);
  warm.push_back(split);
  for (double delta : {1e-10, 1e-7, 1e-4}) {
    std::vector<SubsetMask> masks;
    std::vector<Vector> atoms;
    for (auto K : enumerate_subsets(d)) {
      if (K.is_empty()) continue;
      const double FK = agg.F().finite(K);
      auto sp = fam.closed_form_available() ? dual_support(fam.source(), dual.y, K)
                                            : top_k_dual_support(fam, dual.y, K);
      if (sp.value >= FK * (1 - delta)) {
        masks.push_back(K);
        atoms.push_back(sp.argmax);
      }
    }
    warm.push_back(recover_from_atoms(x, masks, atoms, false, V));
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& z : warm) {
    const auto e = evaluate_blocks(prog, z, 0.0);
    if (e.objective < best) {
      best = e.objective;
      out.z = z;
    }
  }
  double tol = opt.gap_tol * (1.0 + std::abs(out.lower));
  // sampled norms: every block evaluation is a nested sampled dualization, so the
  // block solver is out of budget and the gap target is the sampling tolerance
  const bool numeric = !fam.closed_form_available();
  if (numeric) tol = std::max(tol, kNumericGapTol * (1.0 + std::abs(out.lower)));
  if (!numeric && best - out.lower > tol) {
    auto sol = solve_blocks(prog, warm, opt.solver);
    if (sol.eval.objective < best) {
      best = sol.eval.objective;
      out.z = sol.z;
    }
  }
  out.value = best;
  out.converged = out.value - out.lower <= std::max(tol, 1e-6 * (1.0 + out.value));
  return out;
}

}  // namespace capra
