#include "capra/norms.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace capra {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lp_value(const Vector& x, double p) {
  if (x.size() == 0) return 0.0;
  if (p == 1.0) return x.lpNorm<1>();
  if (std::isinf(p)) return x.lpNorm<Eigen::Infinity>();
  if (p == 2.0) return x.norm();
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  return m * std::pow((x.cwiseAbs() / m).array().pow(p).sum(), 1.0 / p);
}

double conjugate_exponent(double p) {
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

/// Maximizer of <u, y> over the unit lp ball, restricted to supp(u) ⊆ supp(y).
Vector lp_aligned(const Vector& y, double p) {
  const int d = static_cast<int>(y.size());
  Vector u = Vector::Zero(d);
  if (y.isZero(0.0)) return u;
  if (p == 1.0) {
    Eigen::Index j = 0;
    y.cwiseAbs().maxCoeff(&j);
    u(j) = y(j) > 0 ? 1.0 : -1.0;
    return u;
  }
  if (std::isinf(p)) {
    for (int i = 0; i < d; ++i) u(i) = (y(i) > 0) - (y(i) < 0);
    return u;
  }
  const double q = conjugate_exponent(p);
  const double nq = lp_value(y, q);
  for (int i = 0; i < d; ++i) {
    if (y(i) == 0.0) continue;
    const double s = y(i) > 0 ? 1.0 : -1.0;
    u(i) = s * std::pow(std::abs(y(i)) / nq, q - 1.0);
  }
  return u;
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

struct NormSpec::Impl {
  Kind kind = Kind::lp;
  double p = 2.0;
  Vector weights;
  bool table = false;
  Matrix rows;
  TableCombine combine = TableCombine::sum;
  int dim = 0;
  RealFn eval;
  RealFn dual_eval;
  DeclaredFlags flags;
  NumericOptions numeric;
  std::size_t hash = 0;
};

NormSpec NormSpec::lp(double p) {
  if (std::isnan(p) || p < 1.0) throw std::invalid_argument("lp norm requires p in [1, inf]");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::lp;
  impl->p = p;
  impl->eval = [p](const Vector& x) { return lp_value(x, p); };
  impl->hash = std::hash<std::string>{}("lp|" + fmt_double(p));
  return NormSpec(std::move(impl));
}

NormSpec NormSpec::weighted_lp(double p, Vector weights) {
  if (std::isnan(p) || p < 1.0)
    throw std::invalid_argument("weighted-lp norm requires p in [1, inf]");
  if (weights.size() < 1) throw std::invalid_argument("weighted-lp norm requires weights");
  require_dim(static_cast<int>(weights.size()));
  for (int i = 0; i < weights.size(); ++i)
    if (!(weights(i) > 0) || !std::isfinite(weights(i)))
      throw std::invalid_argument("weighted-lp weights must be finite and strictly positive");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::weighted_lp;
  impl->p = p;
  impl->weights = weights;
  impl->dim = static_cast<int>(weights.size());
  impl->eval = [p, weights](const Vector& x) { return lp_value(weights.cwiseProduct(x), p); };
  std::string key = "wlp|" + fmt_double(p);
  for (int i = 0; i < weights.size(); ++i) key += "|" + fmt_double(weights(i));
  impl->hash = std::hash<std::string>{}(key);
  return NormSpec(std::move(impl));
}

NormSpec NormSpec::custom(int dim, RealFn eval, RealFn dual_eval, DeclaredFlags flags) {
  require_dim(dim);
  if (!eval) throw std::invalid_argument("custom norm requires an evaluation oracle");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::custom;
  impl->dim = dim;
  impl->eval = std::move(eval);
  impl->dual_eval = std::move(dual_eval);
  impl->flags = flags;
  impl->hash = std::hash<const void*>{}(impl.get()) ^ 0xA5A5A5A5ULL;
  return NormSpec(std::move(impl));
}

NormSpec NormSpec::custom_table(Matrix rows, TableCombine combine, DeclaredFlags flags) {
  if (rows.rows() < 1 || rows.cols() < 1) throw std::invalid_argument("custom-table: empty rows");
  require_dim(static_cast<int>(rows.cols()));
  if (!rows.allFinite()) throw std::invalid_argument("custom-table: non-finite entry");
  Eigen::FullPivLU<Matrix> lu(rows);
  if (lu.rank() < rows.cols())
    throw std::invalid_argument("custom-table: rows must have full column rank to define a norm");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::custom;
  impl->table = true;
  impl->rows = rows;
  impl->combine = combine;
  impl->dim = static_cast<int>(rows.cols());
  impl->flags = flags;
  impl->eval = [rows, combine](const Vector& x) {
    const Vector a = (rows * x).cwiseAbs();
    return combine == TableCombine::sum ? a.sum() : a.maxCoeff();
  };
  std::string key = combine == TableCombine::sum ? "tbl|sum" : "tbl|max";
  for (int i = 0; i < rows.rows(); ++i)
    for (int j = 0; j < rows.cols(); ++j) key += "|" + fmt_double(rows(i, j));
  impl->hash = std::hash<std::string>{}(key);
  return NormSpec(std::move(impl));
}

NormSpec::Kind NormSpec::kind() const { return impl_->kind; }
bool NormSpec::is_table() const { return impl_->table; }
double NormSpec::p() const { return impl_->p; }
double NormSpec::q() const { return conjugate_exponent(impl_->p); }
const Vector& NormSpec::weights() const { return impl_->weights; }
const Matrix& NormSpec::table_rows() const { return impl_->rows; }
TableCombine NormSpec::table_combine() const { return impl_->combine; }
int NormSpec::dim() const { return impl_->dim; }
const DeclaredFlags& NormSpec::declared_flags() const { return impl_->flags; }
const NumericOptions& NormSpec::numeric() const { return impl_->numeric; }
std::size_t NormSpec::hash() const { return impl_->hash; }
double NormSpec::eval_raw(const Vector& x) const { return impl_->eval(x); }
const RealFn& NormSpec::eval_fn() const { return impl_->eval; }
const RealFn& NormSpec::dual_eval_fn() const { return impl_->dual_eval; }

NormSpec NormSpec::with_numeric(NumericOptions opts) const {
  if (opts.samples < 1) throw std::invalid_argument("NumericOptions: samples < 1");
  auto impl = std::make_shared<Impl>(*impl_);
  impl->numeric = opts;
  return NormSpec(std::move(impl));
}

std::optional<NormSpec> NormSpec::dual() const {
  switch (kind()) {
    case Kind::lp: return NormSpec::lp(q());
    case Kind::weighted_lp: return NormSpec::weighted_lp(q(), weights().cwiseInverse());
    default: return std::nullopt;
  }
}

std::string NormSpec::name() const {
  auto pname = [](double p) {
    if (std::isinf(p)) return std::string("inf");
    std::ostringstream os;
    os << p;
    return os.str();
  };
  switch (kind()) {
    case Kind::lp: return "l" + pname(p());
    case Kind::weighted_lp: return "weighted-l" + pname(p());
    default: return is_table() ? "custom-table" : "custom";
  }
}

namespace {

void check_dim(const NormSpec& n, const Vector& x, const char* where) {
  require_dim(static_cast<int>(x.size()));
  if (n.dim() != 0) require_same_dim(static_cast<int>(x.size()), n.dim(), where);
}

double checked_custom(const NormSpec& n, const Vector& x) {
  const double v = n.eval_raw(x);
  if (std::isnan(v) || v < 0) throw std::domain_error("custom norm oracle returned a negative or NaN value");
  return v;
}

SupportPoint numeric_support(const NormSpec& n, const Vector& y, const SubsetMask& K) {
  const auto& opt = n.numeric();
  RealFn f = [&n](const Vector& x) { return n.eval_raw(x); };
  auto samples = cached_sphere_samples(n.hash(), f, K, opt.samples, opt.seed);
  return sphere_support(f, *samples, y, K, opt.refine_iters);
}

}  // namespace

double norm_eval(const NormSpec& n, const Vector& x) {
  check_dim(n, x, "norm_eval");
  if (n.kind() == NormSpec::Kind::custom) return checked_custom(n, x);
  return n.eval_raw(x);
}

double dual_norm_eval(const NormSpec& n, const Vector& y) {
  check_dim(n, y, "dual_norm_eval");
  switch (n.kind()) {
    case NormSpec::Kind::lp: return lp_value(y, n.q());
    case NormSpec::Kind::weighted_lp: return lp_value(y.cwiseQuotient(n.weights()), n.q());
    default: break;
  }
  if (y.isZero(0.0)) return 0.0;
  if (n.dual_eval_fn()) {
    const double v = n.dual_eval_fn()(y);
    if (std::isnan(v) || v < 0) throw std::domain_error("custom dual oracle returned a negative or NaN value");
    return v;
  }
  return numeric_support(n, y, SubsetMask::full(static_cast<int>(y.size()))).value;
}

SupportPoint dual_support(const NormSpec& n, const Vector& y, const SubsetMask& K) {
  check_dim(n, y, "dual_support");
  require_same_dim(static_cast<int>(y.size()), K.dim(), "dual_support");
  const Vector yK = project(y, K);
  SupportPoint out;
  switch (n.kind()) {
    case NormSpec::Kind::lp:
      out.value = lp_value(yK, n.q());
      out.argmax = lp_aligned(yK, n.p());
      return out;
    case NormSpec::Kind::weighted_lp: {
      const Vector& w = n.weights();
      const Vector s = yK.cwiseQuotient(w);
      out.value = lp_value(s, n.q());
      out.argmax = lp_aligned(s, n.p()).cwiseQuotient(w);
      return out;
    }
    default: break;
  }
  if (yK.isZero(0.0)) {
    out.argmax = Vector::Zero(y.size());
    return out;
  }
  return numeric_support(n, yK, K);
}

Vector norm_subgradient(const NormSpec& n, const Vector& x) {
  check_dim(n, x, "norm_subgradient");
  const int d = static_cast<int>(x.size());
  Vector v = Vector::Zero(d);
  if (x.isZero(0.0)) return v;
  if (n.is_catalog()) {
    const bool weighted = n.kind() == NormSpec::Kind::weighted_lp;
    const Vector w = weighted ? n.weights() : Vector::Ones(d);
    const Vector s = w.cwiseProduct(x);
    const double p = n.p();
    if (p == 1.0) {
      for (int i = 0; i < d; ++i) v(i) = w(i) * ((s(i) > 0) - (s(i) < 0));
    } else if (std::isinf(p)) {
      Eigen::Index j = 0;
      s.cwiseAbs().maxCoeff(&j);
      v(j) = w(j) * (s(j) > 0 ? 1.0 : -1.0);
    } else {
      const double nx = lp_value(s, p);
      for (int i = 0; i < d; ++i) {
        if (s(i) == 0.0) continue;
        v(i) = w(i) * (s(i) > 0 ? 1.0 : -1.0) * std::pow(std::abs(s(i)) / nx, p - 1.0);
      }
    }
    return v;
  }
  if (n.is_table()) {
    const Matrix& R = n.table_rows();
    const Vector r = R * x;
    if (n.table_combine() == TableCombine::sum) {
      for (Eigen::Index i = 0; i < R.rows(); ++i) v += ((r(i) > 0) - (r(i) < 0)) * R.row(i).transpose();
    } else {
      Eigen::Index j = 0;
      r.cwiseAbs().maxCoeff(&j);
      v = (r(j) > 0 ? 1.0 : -1.0) * R.row(j).transpose();
    }
    return v;
  }
  const SubsetMask L = support(x);
  const double h = 1e-6 * x.cwiseAbs().maxCoeff();
  Vector e = x;
  for (int i = 0; i < d; ++i) {
    if (!L.contains(i)) continue;
    e(i) = x(i) + h;
    const double fp = n.eval_raw(e);
    e(i) = x(i) - h;
    const double fm = n.eval_raw(e);
    e(i) = x(i);
    v(i) = (fp - fm) / (2 * h);
  }
  const double dn = dual_norm_eval(n, v);
  if (dn > 0) v /= dn;
  return v;
}

double restriction_norm(const NormSpec& n, const Vector& x, const SubsetMask& K) {
  if (!level_set_membership(x, K))
    throw std::invalid_argument("restriction_norm: supp(x) is not contained in K");
  return norm_eval(n, x);
}

double set_star_norm(const NormSpec& n, const Vector& y, const SubsetMask& K) {
  if (!level_set_membership(y, K))
    throw std::invalid_argument("set_star_norm: supp(y) is not contained in K");
  return dual_support(n, y, K).value;
}

double star_set_norm(const NormSpec& n, const Vector& y, const SubsetMask& K) {
  if (!level_set_membership(y, K))
    throw std::invalid_argument("star_set_norm: supp(y) is not contained in K");
  return dual_norm_eval(n, y);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::true_analytic: return "true-analytic";
    case Verdict::true_sampled: return "true-sampled";
    default: return "false";
  }
}

std::string to_string(MonotonicityProperty p) {
  switch (p) {
    case MonotonicityProperty::orthant_monotonic: return "orthant-monotonic";
    case MonotonicityProperty::coordinate_subspace: return "coordinate-subspace";
    case MonotonicityProperty::orthant_strictly_monotonic: return "orthant-strictly-monotonic";
    default: return "dual-alignment";
  }
}

namespace {

int sample_dim(const NormSpec& n) { return n.dim() != 0 ? n.dim() : 3; }

/// Random vector with a random zero pattern; never zero.
Vector random_point(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> N01;
  std::bernoulli_distribution zero(0.25);
  Vector x(d);
  do {
    for (int i = 0; i < d; ++i) x(i) = zero(rng) ? 0.0 : N01(rng);
  } while (x.isZero(0.0));
  return x;
}

/// x = t o x' with t_j in {0, 1, uniform}; `strict` forces some t_j < 1 on supp(x').
Vector dominated(std::mt19937_64& rng, const Vector& xp, bool strict) {
  std::uniform_real_distribution<double> U(0.0, strict ? 0.9 : 1.0);
  std::uniform_int_distribution<int> pick(0, 5);
  const int d = static_cast<int>(xp.size());
  Vector x = xp;
  bool reduced = false;
  for (int i = 0; i < d; ++i) {
    const int c = pick(rng);
    double t = c == 0 ? 0.0 : (c <= 2 ? 1.0 : U(rng));
    x(i) = t * xp(i);
    if (xp(i) != 0.0 && t < 1.0) reduced = true;
  }
  if (strict && !reduced) {
    std::vector<int> idx;
    for (int i = 0; i < d; ++i)
      if (xp(i) != 0.0) idx.push_back(i);
    std::uniform_int_distribution<std::size_t> k(0, idx.size() - 1);
    const int j = idx[k(rng)];
    x(j) = U(rng) * xp(j);
  }
  return x;
}

MonotonicityResult sampled_om(const NormSpec& n, int trials, std::uint64_t seed) {
  const int d = sample_dim(n);
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    const Vector xp = random_point(rng, d);
    const Vector x = dominated(rng, xp, false);
    const double a = n.eval_raw(x), b = n.eval_raw(xp);
    if (a > b * (1 + 1e-12) + 1e-300)
      return {Verdict::false_with_witness,
              MonotonicityWitness{x, xp, MonotonicityProperty::orthant_monotonic}};
    const SubsetMask K = support(xp);
    SubsetMask J(static_cast<std::uint32_t>(rng()) & K.bits(), d);
    const Vector xJ = project(xp, J);
    if (n.eval_raw(xJ) > b * (1 + 1e-12) + 1e-300)
      return {Verdict::false_with_witness,
              MonotonicityWitness{xJ, xp, MonotonicityProperty::coordinate_subspace}};
  }
  return {Verdict::true_sampled, std::nullopt};
}

MonotonicityResult sampled_osm(const NormSpec& n, int trials, std::uint64_t seed) {
  auto om = sampled_om(n, trials, seed);
  if (!om.holds()) return om;
  const int d = sample_dim(n);
  std::mt19937_64 rng(seed ^ 0x51ED270BULL);
  for (int t = 0; t < trials; ++t) {
    const Vector xp = random_point(rng, d);
    const Vector x = dominated(rng, xp, true);
    if (n.eval_raw(x) >= n.eval_raw(xp) * (1 - 1e-12))
      return {Verdict::false_with_witness,
              MonotonicityWitness{x, xp, MonotonicityProperty::orthant_strictly_monotonic}};
  }
  const int align_trials = std::min(trials, 25);
  for (int t = 0; t < align_trials; ++t) {
    const Vector u = random_point(rng, d);
    const Vector v = norm_subgradient(n, u);
    const double vmax = v.cwiseAbs().maxCoeff();
    bool ok = vmax > 0;
    for (int i = 0; i < d && ok; ++i) {
      if (u(i) == 0.0) continue;
      if (!(std::abs(v(i)) > 1e-9 * vmax) || u(i) * v(i) < 0) ok = false;
    }
    if (ok) {
      const double ratio = u.dot(v) / (n.eval_raw(u) * dual_norm_eval(n, v));
      ok = ratio >= 1 - n.numeric().rel_tol;
    }
    if (!ok)
      return {Verdict::false_with_witness,
              MonotonicityWitness{u, v, MonotonicityProperty::dual_alignment}};
  }
  return {Verdict::true_sampled, std::nullopt};
}

}  // namespace

MonotonicityResult check_orthant_monotonic(const NormSpec& n, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("check_orthant_monotonic: trials < 1");
  if (n.is_catalog()) return {Verdict::true_analytic, std::nullopt};
  return sampled_om(n, trials, seed);
}

MonotonicityResult check_orthant_strictly_monotonic(const NormSpec& n, int trials,
                                                    std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("check_orthant_strictly_monotonic: trials < 1");
  if (n.is_catalog()) {
    if (!std::isinf(n.p())) return {Verdict::true_analytic, std::nullopt};
    const int d = std::max(2, n.dim());
    const Vector w = n.kind() == NormSpec::Kind::weighted_lp ? n.weights() : Vector::Ones(d);
    Vector xp = w.cwiseInverse();
    Vector x = Vector::Zero(d);
    x(0) = xp(0);
    return {Verdict::false_with_witness,
            MonotonicityWitness{x, xp, MonotonicityProperty::orthant_strictly_monotonic}};
  }
  return sampled_osm(n, trials, seed);
}

MonotonicityResult check_dual_strictly_monotonic(const NormSpec& n, int trials,
                                                 std::uint64_t seed) {
  if (auto dn = n.dual()) return check_orthant_strictly_monotonic(*dn, trials, seed);
  const NormSpec src = n;
  NormSpec dual = NormSpec::custom(
      n.dim(), [src](const Vector& y) { return dual_norm_eval(src, y); },
      [src](const Vector& x) { return norm_eval(src, x); });
  return check_orthant_strictly_monotonic(dual.with_numeric(n.numeric()), trials, seed);
}

}  // namespace capra
