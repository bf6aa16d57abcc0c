#include "capra/capra.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <limits>
#include <random>

using namespace capra;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

Vector gaussian(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> N;
  Vector x(d);
  for (int i = 0; i < d; ++i) x(i) = N(rng);
  return x;
}

SetFunction random_nondecreasing(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<ExtReal> v(std::size_t{1} << d, 0.0);
  for (std::uint32_t k = 1; k < v.size(); ++k) {
    double lo = 0.0;
    for (int i = 0; i < d; ++i)
      if (k >> i & 1u) lo = std::max(lo, v[k & ~(1u << i)].value());
    v[k] = lo + U(rng);
  }
  return SetFunction(d, v);
}

// max over K of ||y_K||_q - F(K), by enumeration.
double conjugate_ref(double q, const SetFunction& F, const Vector& y) {
  double best = -kInf;
  for (auto K : enumerate_subsets(F.dim())) best = std::max(best, oracle::lp(project(y, K), q) - F.finite(K));
  return best;
}

// sup of <n(x),y> - F^c(y) over y = r (cos t, sin t) on a polar grid with log-spaced
// radii, F^c computed by `conjugate_ref`. A lower bound that tightens as the grid grows.
double biconjugate_ref_2d(const SetFunction& F, const Vector& x, int angles, int radii) {
  const Vector u = x / x.norm();
  double best = -F.finite(SubsetMask::empty(2));
  for (int a = 0; a < angles; ++a) {
    const double t = 2 * M_PI * a / angles;
    for (int k = 0; k <= radii; ++k) {
      const Vector y = std::pow(10.0, -2.0 + 7.0 * k / radii) * vec({std::cos(t), std::sin(t)});
      best = std::max(best, u.dot(y) - conjugate_ref(2.0, F, y));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("coupling and normalization") {
  const CapraContext l2(NormSpec::lp(2)), l1(NormSpec::lp(1));
  CHECK(capra_coupling(l2, vec({0, 0}), vec({5, 7})) == 0.0);
  CHECK(capra_coupling(l2, vec({3, 4}), vec({1, 0})) == doctest::Approx(0.6));
  CHECK(capra_coupling(l2, vec({2, 0}), vec({5, 7})) == doctest::Approx(5));
  CHECK(normalize(l2, vec({0, 0})) == vec({0, 0}));
  CHECK(normalize(l2, vec({3, 4})).isApprox(vec({0.6, 0.8})));
  CHECK(normalize(l1, vec({2, -2})).isApprox(vec({0.5, -0.5})));
}

TEST_CASE("context flags") {
  const CapraContext l2(NormSpec::lp(2)), l1(NormSpec::lp(1)), linf(NormSpec::lp(kInf));
  CHECK(l2.osm_hypotheses());
  CHECK(l2.flags().source_osm.basis == "analytic");
  CHECK_FALSE(l1.osm_hypotheses());
  CHECK_FALSE(linf.osm_hypotheses());
  CHECK(linf.source_om());
}

TEST_CASE("Fenchel conjugate of F o supp") {
  const auto card = SetFunction::cardinality(2);
  CHECK(fenchel_conjugate_fsm(card, vec({0, 0})) == ExtReal(0.0));
  CHECK(fenchel_conjugate_fsm(card, vec({1, 1})).is_pos_inf());
  const SetFunction zero(2, {0, 0, 0, 0});
  CHECK(fenchel_conjugate_fsm(zero, vec({0, 0})) == ExtReal(0.0));
  CHECK(fenchel_conjugate_fsm(zero, vec({0.3, 0})).is_pos_inf());
  const SetFunction only0(2, {1.0, ExtReal::pos_inf(), ExtReal::pos_inf(), ExtReal::pos_inf()});
  CHECK(fenchel_conjugate_fsm(only0, vec({3, 1})) == ExtReal(-1.0));
}

TEST_CASE("Fenchel conjugate agrees with a grid sup") {
  const auto card = SetFunction::cardinality(2);
  OracleBudget b;
  b.box_radius = 10;
  b.grid_resolution = 0.5;
  const ExtFn f = [&](const Vector& x) { return card.of_support(x); };
  CHECK(grid_fenchel_conjugate(f, vec({0, 0}), b) == fenchel_conjugate_fsm(card, vec({0, 0})));
  // The grid sup grows with the box radius, matching +inf off the origin.
  const double g10 = grid_fenchel_conjugate(f, vec({1, 1}), b).value();
  b.box_radius = 20;
  CHECK(grid_fenchel_conjugate(f, vec({1, 1}), b).value() > g10 + 15);
}

TEST_CASE("Capra conjugate values") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  CHECK(capra_conjugate_fsm(ctx, card, vec({3, 4})) == ExtReal(3.0));
  CHECK(capra_conjugate_fsm(ctx, card, vec({0, 0})) == ExtReal(0.0));
  const auto sq = SetFunction::from_generator(2, [](const SubsetMask& K) { return ExtReal(K.size() * K.size()); });
  CHECK(capra_conjugate_fsm(ctx, sq, vec({3, 4})) == ExtReal(3.0));
  // {2} and {1,2} tie at 3.
  const auto am = capra_conjugate_fsm_argmax(ctx, card, vec({3, 4}));
  CHECK(am.value == ExtReal(3.0));
  CHECK(project(vec({3, 4}), am.argmax).norm() - card.finite(am.argmax) == doctest::Approx(3));
  const SetFunction shifted(2, {2.0, 3.0, 3.0, 4.0});
  CHECK(capra_conjugate_fsm(ctx, shifted, vec({0, 0})) == ExtReal(-2.0));
}

TEST_CASE("Capra conjugate matches enumeration and lies above direct sampling") {
  std::mt19937_64 rng(14);
  for (double p : {1.5, 2.0, 3.0}) {
    const CapraContext ctx(NormSpec::lp(p));
    const double q = NormSpec::lp(p).q();
    for (int t = 0; t < 20; ++t) {
      const auto F = random_nondecreasing(rng, 3);
      const Vector y = 3.0 * gaussian(rng, 3);
      const double ref = conjugate_ref(q, F, y);
      CHECK(capra_conjugate_fsm(ctx, F, y).value() == doctest::Approx(ref));
      CHECK(capra_conjugate_fsm_top_k(ctx, F, y).value() == doctest::Approx(ref));
      // sup over unit-sphere points x of <x,y> - F(supp x); never above the formula.
      std::uniform_int_distribution<std::uint32_t> pick(1, 7);
      double sampled = -F.finite(SubsetMask::empty(3));
      for (int s = 0; s < 20000; ++s) {
        const SubsetMask K(pick(rng), 3);
        Vector x = project(gaussian(rng, 3), K);
        x /= oracle::lp(x, p);
        sampled = std::max(sampled, x.dot(y) - F.finite(support(x)));
      }
      CHECK(sampled <= ref + 1e-9);
      CHECK(sampled >= ref - 0.02 * (1 + std::abs(ref)));
    }
  }
}

TEST_CASE("Capra-Fenchel inequality") {
  std::mt19937_64 rng(15);
  const CapraContext ctx(NormSpec::lp(2));
  for (int t = 0; t < 300; ++t) {
    const auto F = random_nondecreasing(rng, 3);
    Vector x = gaussian(rng, 3);
    if (t % 3 == 0) x(t % 2) = 0.0;
    const Vector y = 2.0 * gaussian(rng, 3);
    const double lhs = capra_coupling(ctx, x, y);
    const double rhs = capra_conjugate_fsm(ctx, F, y).value() + F.of_support(x).value();
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("biconjugate values") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card2 = SetFunction::cardinality(2);
  const auto card3 = SetFunction::cardinality(3);
  const auto r = capra_biconjugate_fsm(ctx, card2, vec({0, 2}));
  CHECK(r.theorem_applies);
  CHECK(r.value.value() == doctest::Approx(1).epsilon(1e-9));
  CHECK(capra_biconjugate_fsm(ctx, card2, vec({0, 0})).value.value() == doctest::Approx(0).scale(1));
  CHECK(capra_biconjugate_fsm(ctx, card3, vec({1, 1, 1})).value.value() == doctest::Approx(3).epsilon(1e-9));
  CHECK(capra_biconjugate_fsm(ctx, card2, vec({1, 1})).value.value() == doctest::Approx(2).epsilon(1e-9));
  const SetFunction neg(2, {0.0, ExtReal::neg_inf(), 1.0, 1.0});
  CHECK(capra_biconjugate_fsm(ctx, neg, vec({1, 0})).value.is_neg_inf());
}

TEST_CASE("biconjugate matches a grid sup over the dual plane") {
  std::mt19937_64 rng(16);
  const CapraContext ctx(NormSpec::lp(2));
  for (int t = 0; t < 4; ++t) {
    const auto F = random_nondecreasing(rng, 2);
    const Vector x = gaussian(rng, 2);
    Vector xs = x;
    if (t == 3) xs(0) = 0.0;
    const double coarse = biconjugate_ref_2d(F, xs, 360, 200);
    const double ref = biconjugate_ref_2d(F, xs, 3600, 700);
    const double v = capra_biconjugate_fsm(ctx, F, xs).value.value();
    CHECK(coarse <= ref + 1e-12);
    CHECK(v >= ref - 1e-9);
    CHECK(v <= ref + 2e-3);
    CHECK(v == doctest::Approx(F.of_support(xs).value()).epsilon(1e-6));
  }
}

TEST_CASE("biconjugate equals F o supp on random OSM instances") {
  std::mt19937_64 rng(17);
  for (double p : {1.5, 2.0, 3.0}) {
    const CapraContext ctx(NormSpec::lp(p));
    for (int t = 0; t < 30; ++t) {
      const auto F = random_nondecreasing(rng, 3);
      Vector x = gaussian(rng, 3);
      if (t % 2) x(t % 3) = 0.0;
      const auto r = capra_biconjugate_fsm(ctx, F, x);
      CHECK(r.value.value() == doctest::Approx(F.of_support(x).value()).epsilon(1e-6));
      CHECK(r.lower <= r.upper + 1e-9 * (1 + std::abs(r.upper)));
    }
  }
}

TEST_CASE("biconjugate stays below F o supp without the hypotheses") {
  std::mt19937_64 rng(18);
  const CapraContext ctx(NormSpec::lp(kInf));
  for (int t = 0; t < 30; ++t) {
    const auto F = random_nondecreasing(rng, 2);
    const Vector x = gaussian(rng, 2);
    const auto r = capra_biconjugate_fsm(ctx, F, x);
    CHECK_FALSE(r.theorem_applies);
    CHECK(r.lower <= F.of_support(x).value() + 1e-9);
  }
}

TEST_CASE("subdifferential at zero") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  CHECK(subdiff_at_zero_membership(ctx, card, vec({1, 1})).member);
  CHECK_FALSE(subdiff_at_zero_membership(ctx, card, vec({2, 0})).member);
  CHECK(subdiff_at_zero_membership(ctx, card, vec({0, 0})).member);
  const SetFunction neg0(2, {1.0, 1.0, 1.0, 1.0});
  CHECK(subdiff_at_zero_membership(ctx, neg0, vec({0, 0})).member);
  const SetFunction dip(2, {1.0, 0.5, 2.0, 2.0});
  CHECK_FALSE(subdiff_at_zero_membership(ctx, dip, vec({0, 0})).member);
}

TEST_CASE("subdifferential away from zero") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  CHECK(subdiff_membership(ctx, card, vec({0, 2}), vec({0, 1})).member);
  CHECK_FALSE(subdiff_membership(ctx, card, vec({0, 2}), vec({1, 0})).member);
  CHECK_FALSE(subdiff_membership(ctx, card, vec({0, 2}), vec({0, 0.5})).member);
  CHECK(subdiff_membership(ctx, card, vec({0, 0}), vec({1, 1})).member);
}

TEST_CASE("constructed subgradients satisfy the global inequality") {
  std::mt19937_64 rng(19);
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  CHECK(construct_subgradient(ctx, card, vec({0, 2})).isApprox(vec({0, 1})));
  CHECK(construct_subgradient(ctx, card, vec({0, 0})).isZero(0.0));
  const Vector g = construct_subgradient(ctx, card, vec({3, 4}));
  const double lambda = g.norm();
  CHECK(g.isApprox(lambda * vec({0.6, 0.8})));
  CHECK(std::abs(std::log2(lambda) - std::round(std::log2(lambda))) < 1e-12);
  CHECK_FALSE(subdiff_membership(ctx, card, vec({3, 4}), lambda / 2 * vec({0.6, 0.8})).member);

  for (int t = 0; t < 40; ++t) {
    const auto F = random_nondecreasing(rng, 3);
    Vector x = gaussian(rng, 3);
    if (t % 2) x(t % 3) = 0.0;
    const Vector y = construct_subgradient(ctx, F, x);
    CHECK(subdiff_membership(ctx, F, x, y).member);
    for (int s = 0; s < 50; ++s) {
      Vector xp = gaussian(rng, 3);
      if (s % 3 == 0) xp(s % 3) = 0.0;
      const double lhs = F.of_support(xp).value();
      const double rhs = F.of_support(x).value() + capra_coupling(ctx, xp, y) - capra_coupling(ctx, x, y);
      CHECK(lhs >= rhs - 1e-9);
    }
  }
}

TEST_CASE("subgradient search fails without the hypotheses") {
  // With l-infinity the biconjugate at (1, 0.5) is 3 < F({1,2}) = 5, so no subgradient exists.
  const CapraContext ctx(NormSpec::lp(kInf));
  const SetFunction F(2, {0.0, 1.0, 1.0, 5.0});
  CHECK(capra_biconjugate_fsm(ctx, F, vec({1, 0.5})).value.value() == doctest::Approx(3).epsilon(1e-9));
  CHECK_THROWS_AS(construct_subgradient(ctx, F, vec({1, 0.5})), SubgradientSearchError);
}

TEST_CASE("conditional infimum") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  const ExtFn fsm = [&](const Vector& x) { return card.of_support(x); };
  CHECK(conditional_infimum(ctx, fsm, vec({0, 1})) == ExtReal(1.0));
  CHECK(conditional_infimum(ctx, fsm, vec({0, 3})).is_pos_inf());
  const ExtFn sq = [](const Vector& x) { return ExtReal(x.squaredNorm()); };
  CHECK(conditional_infimum(ctx, sq, vec({1, 0})).value() < 1e-6);
}

TEST_CASE("conjugate of indicators") {
  const CapraContext ctx(NormSpec::lp(2));
  CHECK(conjugate_of_indicator(ctx, {vec({3, 4})}, vec({1, 0})) == doctest::Approx(0.6));
  CHECK(conjugate_of_indicator(ctx, {vec({0, 0})}, vec({5, -2})) == 0.0);
  CHECK(conjugate_of_indicator(ctx, {vec({1, 0}), vec({0, 1})}, vec({2, 3})) == doctest::Approx(3));
}

TEST_CASE("reverse conjugate") {
  const CapraContext ctx(NormSpec::lp(2));
  OracleBudget b;
  b.box_radius = 8;
  b.grid_resolution = 0.25;
  const ExtFn zero = [](const Vector&) { return ExtReal(0.0); };
  const auto r0 = capra_reverse_conjugate(ctx, zero, vec({3, 4}), b);
  CHECK(r0.value.is_pos_inf());
  CHECK(r0.unbounded_growth);
  const ExtFn dual = [](const Vector& y) { return ExtReal(y.norm()); };
  CHECK(capra_reverse_conjugate(ctx, dual, vec({0.6, 0.8}), b).value.value() == doctest::Approx(0).scale(1));
  CHECK(capra_reverse_conjugate(ctx, dual, vec({0, 0}), b).value.value() == doctest::Approx(0).scale(1));
  const ExtFn closed = [](const Vector&) { return ExtReal(7.0); };
  CHECK(capra_reverse_conjugate(ctx, dual, vec({1, 0}), b, closed).value == ExtReal(7.0));
}
