#include "capra/capra.hpp"

#include <cmath>
#include <mutex>

namespace capra {

struct CapraContext::Lazy {
  std::once_flag once;
  HypothesisFlags flags;
};

CapraContext::CapraContext(NormSpec source, DualizationOptions opt, int check_trials,
                           std::uint64_t check_seed)
    : fam_(std::move(source), opt),
      check_trials_(check_trials),
      check_seed_(check_seed),
      lazy_(std::make_shared<Lazy>()) {
  if (check_trials < 1) throw std::invalid_argument("CapraContext: check_trials < 1");
}

namespace {

HypothesisStatus from_check(const MonotonicityResult& r) {
  HypothesisStatus s;
  s.holds = r.holds();
  s.basis = r.verdict == Verdict::true_analytic ? "analytic"
            : r.verdict == Verdict::true_sampled ? "sampled"
                                                 : "witness";
  s.witness = r.witness;
  return s;
}

template <typename Check>
HypothesisStatus resolve(Tri declared, Check&& check) {
  if (declared == Tri::yes) return {true, "declared", std::nullopt};
  if (declared == Tri::no) return {false, "declared", std::nullopt};
  return from_check(check());
}

}  // namespace

const HypothesisFlags& CapraContext::flags() const {
  std::call_once(lazy_->once, [this] {
    const auto& n = source();
    const auto& dec = n.declared_flags();
    auto& f = lazy_->flags;
    f.source_om = resolve(dec.orthant_monotonic,
                          [&] { return check_orthant_monotonic(n, check_trials_, check_seed_); });
    f.source_osm = resolve(dec.orthant_strictly_monotonic, [&] {
      return check_orthant_strictly_monotonic(n, check_trials_, check_seed_);
    });
    f.dual_osm = resolve(dec.dual_osm, [&] {
      return check_dual_strictly_monotonic(n, std::min(check_trials_, 200), check_seed_);
    });
  });
  return lazy_->flags;
}

double capra_coupling(const CapraContext& ctx, const Vector& x, const Vector& y) {
  require_same_dim(static_cast<int>(x.size()), static_cast<int>(y.size()), "capra_coupling");
  if (x.isZero(0.0)) return 0.0;
  return x.dot(y) / norm_eval(ctx.source(), x);
}

Vector normalize(const CapraContext& ctx, const Vector& x) {
  if (x.isZero(0.0)) return Vector::Zero(x.size());
  return x / norm_eval(ctx.source(), x);
}

ExtReal fenchel_conjugate_fsm(const SetFunction& F, const Vector& y) {
  require_same_dim(static_cast<int>(y.size()), F.dim(), "fenchel_conjugate_fsm");
  ExtReal inf_nonempty = ExtReal::pos_inf();
  for (std::uint32_t k = 1; k < F.values().size(); ++k) inf_nonempty = min(inf_nonempty, F.at(k));
  const ExtReal delta = y.isZero(0.0) ? ExtReal(0.0) : ExtReal::pos_inf();
  return max(-F.at(0), lower_add(delta, -inf_nonempty));
}

ConjugateArgmax capra_conjugate_fsm_argmax(const CapraContext& ctx, const SetFunction& F,
                                           const Vector& y) {
  require_same_dim(static_cast<int>(y.size()), F.dim(), "capra_conjugate_fsm");
  ConjugateArgmax out{ExtReal::neg_inf(), SubsetMask::empty(F.dim())};
  bool first = true;
  for (auto K : enumerate_subsets(F.dim())) {
    const ExtReal v = lower_add(ExtReal(dual_coordinate_norm(ctx.fam(), y, K)), -F(K));
    if (first || v > out.value) {
      out.value = v;
      out.argmax = K;
      first = false;
    }
  }
  return out;
}

ExtReal capra_conjugate_fsm_top_k(const CapraContext& ctx, const SetFunction& F, const Vector& y) {
  require_same_dim(static_cast<int>(y.size()), F.dim(), "capra_conjugate_fsm_top_k");
  ExtReal best = ExtReal::neg_inf();
  for (auto K : enumerate_subsets(F.dim()))
    best = max(best, lower_add(ExtReal(top_k_dual_norm(ctx.fam(), y, K)), -F(K)));
  return best;
}

ExtReal capra_conjugate_fsm(const CapraContext& ctx, const SetFunction& F, const Vector& y) {
  const ExtReal v = capra_conjugate_fsm_argmax(ctx, F, y).value;
  if (ctx.source().is_catalog()) {
    const ExtReal w = capra_conjugate_fsm_top_k(ctx, F, y);
    const bool same = v.is_finite() && w.is_finite()
                          ? std::abs(v.value() - w.value()) <= 1e-9 * std::max(1.0, std::abs(v.value()))
                          : v == w;
    if (!same)
      throw std::logic_error("capra_conjugate_fsm: dual-coordinate and top-K forms disagree (" +
                             v.to_string() + " vs " + w.to_string() + ")");
  }
  return v;
}

ReverseConjugateResult capra_reverse_conjugate(const CapraContext& ctx, const ExtFn& g_conj,
                                               const Vector& x, const OracleBudget& budget,
                                               const ExtFn& closed_form) {
  const Vector u = normalize(ctx, x);
  ReverseConjugateResult out;
  if (closed_form) {
    out.value = closed_form(u);
    return out;
  }
  out.approximate = true;
  const ExtReal full = grid_fenchel_conjugate(g_conj, u, budget);
  OracleBudget half = budget;
  half.box_radius = budget.box_radius / 2;
  const ExtReal part = grid_fenchel_conjugate(g_conj, u, half);
  if (full.is_pos_inf()) {
    out.value = full;
    out.unbounded_growth = true;
    return out;
  }
  if (full.is_finite() && part.is_finite() &&
      full.value() - part.value() > 1e-2 * budget.box_radius) {
    out.value = ExtReal::pos_inf();
    out.unbounded_growth = true;
    return out;
  }
  out.value = full;
  return out;
}

BiconjugateResult capra_biconjugate_fsm(const CapraContext& ctx, const SetFunction& F,
                                        const Vector& x, const L0FOptions& opt) {
  require_same_dim(static_cast<int>(x.size()), F.dim(), "capra_biconjugate_fsm");
  BiconjugateResult out;
  out.theorem_applies = F.nondecreasing() && F.finite_valued() && ctx.osm_hypotheses();
  if (!F.finite_valued()) {
    // -inf anywhere makes the conjugate +inf, so the biconjugate is -inf.
    for (const auto& v : F.values())
      if (v.is_neg_inf()) {
        out.value = ExtReal::neg_inf();
        out.lower = out.upper = -std::numeric_limits<double>::infinity();
        return out;
      }
    throw std::invalid_argument("capra_biconjugate_fsm: +inf entries are not supported by the solver");
  }
  out.detail = eval_L0F(ctx, F, normalize(ctx, x), opt);
  out.value = ExtReal(out.detail.value);
  out.lower = out.detail.lower;
  out.upper = out.detail.upper;
  return out;
}

namespace {

CertificateCheck make_check(std::string name, double lhs, double rhs, double residual, double tol) {
  return {std::move(name), lhs, rhs, residual, tol, residual <= tol};
}

}  // namespace

SubdiffQueryResult subdiff_at_zero_membership(const CapraContext& ctx, const SetFunction& F,
                                              const Vector& y) {
  require_same_dim(static_cast<int>(y.size()), F.dim(), "subdiff_at_zero_membership");
  SubdiffQueryResult out;
  out.member = true;
  out.reason = "ball intersection";
  for (auto K : enumerate_subsets(F.dim())) {
    const ExtReal bound = upper_add(F(K), -F.at(0));
    const double dc = dual_coordinate_norm(ctx.fam(), y, K);
    const std::string name = "dual_coordinate_norm(y," + K.to_string() + ") <= F(K) - F(empty)";
    CertificateCheck c;
    if (bound.is_pos_inf()) {
      c = make_check(name, dc, bound.to_double(), 0.0, 0.0);
    } else if (bound.is_neg_inf()) {
      c = make_check(name, dc, bound.to_double(), std::numeric_limits<double>::infinity(), 0.0);
    } else if (bound.value() < 0) {
      c = make_check(name, dc, bound.value(), dc - bound.value(), 0.0);
    } else {
      c = make_check(name, dc, bound.value(), dc - bound.value(), 0.0);
    }
    out.member = out.member && c.ok;
    out.certificate.push_back(std::move(c));
  }
  return out;
}

SubdiffQueryResult subdiff_membership(const CapraContext& ctx, const SetFunction& F,
                                      const Vector& x, const Vector& y) {
  require_same_dim(static_cast<int>(x.size()), F.dim(), "subdiff_membership");
  require_same_dim(static_cast<int>(y.size()), F.dim(), "subdiff_membership");
  if (x.isZero(0.0)) return subdiff_at_zero_membership(ctx, F, y);
  SubdiffQueryResult out;
  const SubsetMask L = support(x);
  const ExtReal FL = F(L);
  bool all_pos_inf = true;
  for (const auto& v : F.values()) all_pos_inf = all_pos_inf && v.is_pos_inf();
  if (FL.is_neg_inf() || all_pos_inf) {
    out.member = true;
    out.reason = FL.is_neg_inf() ? "F(supp x) = -inf: whole space" : "F = +inf: whole space";
    return out;
  }
  if (FL.is_pos_inf()) {
    out.member = false;
    out.reason = "F(supp x) = +inf with F finite somewhere: empty";
    out.certificate.push_back(make_check("F(supp x) finite", FL.to_double(), 0.0,
                                         std::numeric_limits<double>::infinity(), 0.0));
    return out;
  }
  out.reason = "finite case";
  const double lhs = x.dot(y);
  const double dcL = dual_coordinate_norm(ctx.fam(), y, L);
  const double rhs = coordinate_norm(ctx.fam(), x, L) * dcL;
  const double scale_a = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  out.certificate.push_back(make_check("<x,y> = coordinate_norm(x,L) dual_coordinate_norm(y,L)", lhs,
                                       rhs, std::abs(lhs - rhs) / scale_a, 1e-6));
  const ExtReal atL = lower_add(ExtReal(dcL), -FL);
  const auto best = capra_conjugate_fsm_argmax(ctx, F, y);
  // Both sides carry dual-norm terms of size |y|, so the tie tolerance is 1e-9 on the scale
  // of F plus a rounding allowance in |y|; a plain relative test would accept any gap once
  // y is large.
  double res_b = std::numeric_limits<double>::infinity(), tol_b = 1e-9;
  if (!best.value.is_pos_inf()) {
    const double a = atL.value(), b = best.value.value();
    const double FK = F(best.argmax).to_double();
    const double dcK = dual_coordinate_norm(ctx.fam(), y, best.argmax);
    res_b = std::max(0.0, b - a);
    tol_b = 1e-9 * std::max({1.0, std::abs(FL.value()), std::isfinite(FK) ? std::abs(FK) : 0.0}) +
            64 * std::numeric_limits<double>::epsilon() * std::max({1.0, dcL, dcK});
  }
  out.certificate.push_back(make_check("supp(x) attains sup_K [dual_coordinate_norm(y,K) - F(K)]",
                                       atL.to_double(), best.value.to_double(), res_b, tol_b));
  out.member = true;
  for (const auto& c : out.certificate) out.member = out.member && c.ok;
  return out;
}

Vector construct_subgradient(const CapraContext& ctx, const SetFunction& F, const Vector& x) {
  require_same_dim(static_cast<int>(x.size()), F.dim(), "construct_subgradient");
  if (x.isZero(0.0)) return Vector::Zero(x.size());
  const Vector v = norm_subgradient(ctx.source(), x);
  SubdiffQueryResult last;
  for (int e = 0; e <= 40; ++e) {
    const double lambda = std::ldexp(1.0, e);
    const Vector y = lambda * v;
    last = subdiff_membership(ctx, F, x, y);
    if (last.member) return y;
  }
  throw SubgradientSearchError("construct_subgradient: no power of two up to 2^40 passed membership",
                               last);
}

ExtReal conditional_infimum(const CapraContext& ctx, const ExtFn& f, const Vector& x,
                            int ray_samples) {
  if (ray_samples < 2) throw std::invalid_argument("conditional_infimum: ray_samples < 2");
  if (x.isZero(0.0)) return f(x);
  if (std::abs(norm_eval(ctx.source(), x) - 1.0) > 1e-9) return ExtReal::pos_inf();
  auto at = [&](double logl) { return f(std::pow(10.0, logl) * x); };
  const double lo = -6.0, hi = 6.0;
  const double h = (hi - lo) / (ray_samples - 1);
  ExtReal best = ExtReal::pos_inf();
  int ib = 0;
  for (int i = 0; i < ray_samples; ++i) {
    const ExtReal v = at(lo + i * h);
    if (v < best) {
      best = v;
      ib = i;
    }
  }
  double a = lo + std::max(0, ib - 1) * h, b = lo + std::min(ray_samples - 1, ib + 1) * h;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  ExtReal fc = at(c), fd = at(d);
  for (int it = 0; it < 80; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = at(d);
    }
    best = min(best, min(fc, fd));
  }
  return best;
}

double conjugate_of_indicator(const CapraContext& ctx, const std::vector<Vector>& points,
                              const Vector& y) {
  if (points.empty()) throw std::invalid_argument("conjugate_of_indicator: empty point set");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& u : points) {
    require_same_dim(static_cast<int>(u.size()), static_cast<int>(y.size()), "conjugate_of_indicator");
    best = std::max(best, normalize(ctx, u).dot(y));
  }
  return best;
}

}  // namespace capra
