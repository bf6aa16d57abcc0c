#include "capra/capra.hpp"
#include "capra/variational.hpp"
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

// min of l0 F(empty) + l1 F({1}) + l2 F({2}) + l12 F({1,2}) over the simplex (grid step h)
// with x in l1 B1 + l2 B2 + l12 B12, B the l2 balls of the coordinate subspaces. Feasible
// iff the distance from x to the box [-l1,l1] x [-l2,l2] is at most l12.
double lambda_ball_ref_2d(const SetFunction& F, const Vector& x, int steps) {
  double best = kInf;
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; a + b <= steps; ++b)
      for (int c = 0; a + b + c <= steps; ++c) {
        const double l1 = double(a) / steps, l2 = double(b) / steps, l12 = double(c) / steps;
        const double l0 = 1.0 - l1 - l2 - l12;
        const double r0 = std::max(0.0, std::abs(x(0)) - l1), r1 = std::max(0.0, std::abs(x(1)) - l2);
        if (std::hypot(r0, r1) > l12 + 1e-12) continue;
        best = std::min(best, l0 * F.at(0).value() + l1 * F.at(1).value() + l2 * F.at(2).value() +
                                  l12 * F.at(3).value());
      }
  return best;
}

}  // namespace

TEST_CASE("L0F values") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  CHECK(eval_L0F(ctx, card, vec({0, 1})).value == doctest::Approx(1).epsilon(1e-9));
  CHECK(eval_L0F(ctx, card, vec({0, 0.5})).value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(eval_L0F(ctx, card, vec({0.5, 0})).value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(eval_L0F(ctx, card, vec({0.3, 0.4})).value == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(eval_L0F(ctx, card, vec({0, 0})).value == 0.0);
  CHECK(std::isinf(eval_L0F(ctx, card, vec({3, 4})).value));
  CHECK_THROWS(eval_L0F(ctx, SetFunction(2, {0.0, ExtReal::pos_inf(), 1.0, 1.0}), vec({0.1, 0.1})));
}

TEST_CASE("L0F matches a brute-force lambda grid at d = 2") {
  std::mt19937_64 rng(31);
  const CapraContext ctx(NormSpec::lp(2));
  std::uniform_real_distribution<double> U(0.05, 0.95);
  for (int t = 0; t < 6; ++t) {
    auto F = random_nondecreasing(rng, 2);
    if (t % 2) {
      // Not normalized and not monotone: exercises the lambda-ball formulation.
      auto v = F.values();
      v[0] = 0.4;
      v[1] = 1.6;
      F = SetFunction(2, v);
    }
    Vector x = gaussian(rng, 2);
    x *= U(rng) / x.norm();
    const double ref = lambda_ball_ref_2d(F, x, 300);
    const auto r = eval_L0F(ctx, F, x);
    CHECK(r.value <= ref + 1e-9);
    CHECK(r.value >= ref - 2e-2);
    CHECK(r.lower <= r.upper + 1e-9);
  }
}

TEST_CASE("hidden convexity: midpoint inequality and sphere coincidence") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> U(0, 1);
  for (double p : {1.5, 2.0, 3.0}) {
    const CapraContext ctx(NormSpec::lp(p));
    for (int t = 0; t < 15; ++t) {
      const auto F = random_nondecreasing(rng, 3);
      Vector a = gaussian(rng, 3), b = gaussian(rng, 3);
      if (t % 3 == 0) a(0) = 0.0;
      a *= U(rng) / oracle::lp(a, p);
      b *= U(rng) / oracle::lp(b, p);
      const double la = eval_L0F(ctx, F, a).value, lb = eval_L0F(ctx, F, b).value;
      const double lm = eval_L0F(ctx, F, (0.5 * (a + b)).eval()).value;
      CHECK(lm <= 0.5 * (la + lb) + 1e-7);
      Vector s = gaussian(rng, 3);
      if (t % 2) s(t % 3) = 0.0;
      s /= oracle::lp(s, p);
      CHECK(eval_L0F(ctx, F, s).value == doctest::Approx(F.of_support(s).value()).epsilon(1e-6));
      // Inside the ball, L0F sits below the segment from F(empty) to F(supp x).
      CHECK(la <= oracle::lp(a, p) * F.of_support(a).value() + 1e-7);
    }
  }
}

TEST_CASE("lambda forms") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  const auto s = solve_lambda_form(ctx, card, vec({0, 1}), GammaKind::balls);
  CHECK(s.objective == doctest::Approx(1).epsilon(1e-9));
  CHECK(s.lambda[2] == doctest::Approx(1).epsilon(1e-9));
  const auto h = solve_lambda_form(ctx, card, vec({0.5, 0}), GammaKind::balls);
  CHECK(h.objective == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(h.lambda[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(h.lambda[0] == doctest::Approx(0.5).epsilon(1e-9));
  const auto z = solve_lambda_form(ctx, card, vec({0, 0}), GammaKind::spheres);
  CHECK(z.lambda[0] == 1.0);
  CHECK(z.objective == 0.0);
  CHECK(std::isinf(solve_lambda_form(ctx, card, vec({1, 1}), GammaKind::balls).objective));
}

TEST_CASE("the three formulations agree") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> U(0.05, 1.0);
  const CapraContext ctx(NormSpec::lp(2));
  for (int t = 0; t < 10; ++t) {
    const auto F = random_nondecreasing(rng, 3);
    Vector x = gaussian(rng, 3);
    x *= U(rng) / x.norm();
    const double zf = eval_L0F(ctx, F, x).value;
    const auto balls = solve_lambda_form(ctx, F, x, GammaKind::balls);
    const auto spheres = solve_lambda_form(ctx, F, x, GammaKind::spheres);
    CHECK(balls.objective == doctest::Approx(zf).epsilon(2e-6));
    CHECK(spheres.objective == doctest::Approx(zf).epsilon(2e-6));
    CHECK(balls.residuals.equality < 1e-9);
    CHECK(balls.residuals.budget_violation <= 1e-7);
  }
}

TEST_CASE("variational formula with its canonical certificate") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  const auto r = variational_value(ctx, card, vec({0, 2}));
  CHECK(r.value == doctest::Approx(1));
  CHECK(r.certificate[SubsetMask::from_indices(2, {1})] == vec({0, 2}));
  CHECK(r.equality_holds);
  CHECK(variational_value(ctx, card, vec({1, 1})).value == doctest::Approx(2));
  const auto cap = SetFunction::from_generator(2, [](const SubsetMask& K) { return ExtReal(std::min(K.size(), 1)); });
  CHECK(variational_value(ctx, cap, vec({3, 4})).value == doctest::Approx(1));
  CHECK_THROWS(variational_value(ctx, card, vec({0, 0})));
  CHECK_THROWS(variational_value(ctx, SetFunction(2, {0.0, 2.0, 1.0, 1.5}), vec({1, 0})));
}

TEST_CASE("no solver restart beats the canonical certificate") {
  std::mt19937_64 rng(34);
  for (double p : {1.5, 2.0}) {
    const CapraContext ctx(NormSpec::lp(p));
    for (int t = 0; t < 10; ++t) {
      const auto F = random_nondecreasing(rng, 3);
      Vector x = gaussian(rng, 3);
      if (t % 2) x(t % 3) = 0.0;
      const auto r = variational_value(ctx, F, x);
      const double FL = F.of_support(x).value();
      CHECK(r.canonical_feasible);
      CHECK(r.canonical_objective == doctest::Approx(FL));
      for (double v : r.restart_values) CHECK(v >= FL - 1e-6);
      CHECK(r.value == doctest::Approx(FL).epsilon(1e-6));
    }
  }
}

TEST_CASE("bounds") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  const auto b = bounds(ctx, card, vec({1, 1}));
  CHECK(b.lower == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(b.value == 2.0);
  CHECK(b.upper == doctest::Approx(2.0));
  CHECK(b.upper_all_k == doctest::Approx(std::sqrt(0.5)));
  CHECK(b.upper_guaranteed);
  const auto c = bounds(ctx, card, vec({3, 0}));
  CHECK(c.lower == doctest::Approx(1).epsilon(1e-6));
  CHECK(c.upper == doctest::Approx(1));
  const auto e = bounds(ctx, SetFunction::cardinality(3), vec({5, 0, 0}));
  CHECK(e.lower == doctest::Approx(1).epsilon(1e-6));
  CHECK(e.value == 1.0);
  CHECK(e.upper == doctest::Approx(1));
  CHECK(to_string(UpperVariant::all_k) == "all-K");
  CHECK_THROWS(bounds(ctx, SetFunction(2, {0.0, 2.0, 1.0, 1.5}), vec({1, 0})));
  CHECK_THROWS(bounds(ctx, card, vec({0, 0})));
}

TEST_CASE("bounds on a norm that is not orthant-monotonic") {
  // N(x) = max(|x1 - x2|, |x2|): splitting (1,1) costs 1/2 + 1, the full block 2 N(1,1).
  Matrix rows(2, 2);
  rows << 1, -1, 0, 1;
  const CapraContext ctx(NormSpec::custom_table(rows, TableCombine::max));
  const auto b = bounds(ctx, SetFunction::cardinality(2), vec({1, 1}));
  CHECK_FALSE(b.upper_guaranteed);
  CHECK(b.lower == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(b.upper == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("bounds sandwich on random instances") {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> U(0.1, 1.0);
  for (double p : {1.5, 2.0, 3.0}) {
    const CapraContext ctx(NormSpec::lp(p));
    for (int t = 0; t < 15; ++t) {
      auto v = random_nondecreasing(rng, 3).values();
      const double shift = 0.1 * U(rng);
      for (std::uint32_t k = 1; k < 8; ++k) v[k] = v[k].value() + shift;
      const SetFunction F(3, v);
      Vector x = gaussian(rng, 3);
      if (t % 2) x(t % 3) = 0.0;
      const auto b = bounds(ctx, F, x);
      CHECK(b.lower <= b.value + 1e-6);
      CHECK(b.value <= b.upper + 1e-12);
      CHECK(b.lower == doctest::Approx(b.lower_dual).epsilon(1e-3));
    }
  }
}

TEST_CASE("sparse minimization over a finite set") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card2 = SetFunction::cardinality(2), card3 = SetFunction::cardinality(3);
  const auto r = sparse_min_over_set(ctx, card2, {vec({1, 1}), vec({0, 3})});
  CHECK(r.value == doctest::Approx(1));
  CHECK(r.argmin == vec({0, 3}));
  CHECK(r.agree);
  CHECK(sparse_min_over_set(ctx, card2, {vec({2, 0})}).value == doctest::Approx(1));
  CHECK(sparse_min_over_set(ctx, card3, {vec({1, 1, 1}), vec({0, 2, 0}), vec({1, 0, 1})}).value ==
        doctest::Approx(1));
  CHECK_THROWS(sparse_min_over_set(ctx, card2, {vec({0, 0})}));
  CHECK_THROWS(sparse_min_over_set(ctx, card2, {}));
}

TEST_CASE("sparse constrained minimization") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  const RealFn f0 = [](const Vector& x) { return (x - vec({0, 3})).squaredNorm(); };
  const auto r = sparse_constrained_min(ctx, card, f0, 1.0);
  CHECK(r.value == doctest::Approx(0).scale(1).epsilon(1e-4));
  CHECK((r.x - vec({0, 3})).norm() < 1e-2);
  CHECK(card.of_support(r.x).value() <= 1.0);

  const RealFn g0 = [](const Vector& x) { return (x - vec({1, 2})).squaredNorm(); };
  const auto s = sparse_constrained_min(ctx, card, g0, 2.0);
  CHECK(s.value == doctest::Approx(0).scale(1).epsilon(1e-4));
  // With alpha = 1 the best 1-sparse point is (0,2), at squared distance 1.
  const auto u = sparse_constrained_min(ctx, card, g0, 1.0);
  CHECK(u.value == doctest::Approx(1).epsilon(1e-3));

  const auto z = sparse_constrained_min(ctx, card, g0, 0.0);
  CHECK(z.x.isZero(0.0));
  CHECK(z.value == doctest::Approx(5));
  CHECK_THROWS(sparse_constrained_min(ctx, card, g0, -1.0));
}
