#include "capra/capra.hpp"
#include "capra/oracle.hpp"
#include "capra/sampling.hpp"

#include <doctest.h>

#include <limits>

using namespace capra;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

}  // namespace

TEST_CASE("sampled support function") {
  OracleBudget b;
  b.box_radius = 1.0;
  const Membership ball = [](const Vector& x) { return x.norm() <= 1.0; };
  const double s = sampled_support_function(ball, vec({3, 4}), b);
  CHECK(s >= 5 - 0.05);
  CHECK(s <= 5 + 1e-12);
  CHECK(sampled_support_function(ball, vec({0, 0}), b) == 0.0);
  const Membership origin = [](const Vector& x) { return x.isZero(0.0); };
  CHECK(sampled_support_function(origin, vec({2, -1}), b) == 0.0);
  const Membership none = [](const Vector&) { return false; };
  CHECK_THROWS(sampled_support_function(none, vec({1, 1}), b));
}

TEST_CASE("a larger sample budget never lowers the estimate") {
  const Membership ball = [](const Vector& x) { return x.lpNorm<1>() <= 1.0; };
  OracleBudget small, large;
  small.box_radius = large.box_radius = 1.0;
  small.samples = 200;
  large.samples = 20000;
  for (const auto& y : {vec({1, 2, 3}), vec({-1, 0.5, 0}), vec({0.1, -0.2, 0.3})}) {
    const double a = sampled_support_function(ball, y, small);
    const double b = sampled_support_function(ball, y, large);
    CHECK(a <= b);
    CHECK(b <= y.cwiseAbs().maxCoeff() + 1e-12);
  }
}

TEST_CASE("grid Fenchel conjugate") {
  OracleBudget b;
  b.box_radius = 2.0;
  b.grid_resolution = 0.1;
  const ExtFn delta0 = [](const Vector& x) { return x.isZero(0.0) ? ExtReal(0.0) : ExtReal::pos_inf(); };
  CHECK(grid_fenchel_conjugate(delta0, vec({3, -2}), b) == ExtReal(0.0));
  const ExtFn l2 = [](const Vector& x) { return ExtReal(x.norm()); };
  CHECK(grid_fenchel_conjugate(l2, vec({0.6, 0.8}), b).value() == doctest::Approx(0).scale(1).epsilon(1e-9));
  const auto card = SetFunction::cardinality(2);
  const ExtFn fsm = [&](const Vector& x) { return card.of_support(x); };
  CHECK(grid_fenchel_conjugate(fsm, vec({0, 0}), b) == ExtReal(0.0));
  b.grid_resolution = 0.0;
  CHECK_THROWS(b.validate());
}

TEST_CASE("direct Capra conjugate approaches the formula from below") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  const ExtFn fsm = [&](const Vector& x) { return card.of_support(x); };
  double prev = -std::numeric_limits<double>::infinity();
  for (long n : {10L, 100L, 1000L, 10000L}) {
    OracleBudget b;
    b.samples = n;
    const double v = direct_capra_conjugate(ctx, fsm, vec({3, 4}), b);
    CHECK(v <= 3.0 + 1e-12);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev >= 3.0 - 1e-3);
  CHECK(direct_capra_conjugate(ctx, fsm, vec({0, 0})) == doctest::Approx(0).scale(1));
  const ExtFn inf = [](const Vector&) { return ExtReal::pos_inf(); };
  CHECK(std::isinf(direct_capra_conjugate(ctx, inf, vec({1, 1}))));
  CHECK(direct_capra_conjugate(ctx, inf, vec({1, 1})) < 0);
}

TEST_CASE("grid decomposition oracle") {
  const CapraContext ctx(NormSpec::lp(2));
  const auto card = SetFunction::cardinality(2);
  OracleBudget b;
  b.samples = 200000;
  CHECK(grid_decomposition_min(ctx, card, vec({0, 2}), b) == doctest::Approx(1).epsilon(1e-2));
  CHECK(grid_decomposition_min(ctx, card, vec({0, 0}), b) == 0.0);
  CHECK(grid_decomposition_min(ctx, card, vec({1, 1}), b) == doctest::Approx(2).epsilon(1e-2));
  CHECK(grid_decomposition_min(ctx, card, vec({1, 1}), b, DecompositionObjective::aggregate) ==
        doctest::Approx(2).epsilon(1e-2));
  CHECK(grid_decomposition_min(ctx, card, vec({3, 0}), b, DecompositionObjective::aggregate) ==
        doctest::Approx(3).epsilon(1e-2));
  CHECK_THROWS_AS(grid_decomposition_min(ctx, SetFunction::cardinality(4), vec({1, 1, 1, 1}), b),
                  DimensionError);
}

TEST_CASE("grid decomposition oracle bounds the solver from above") {
  const CapraContext ctx(NormSpec::lp(2));
  const SetFunction F(3, {0.0, 0.3, 0.5, 0.6, 0.2, 0.4, 0.9, 1.0});
  const AggregateNormSpec agg(ctx.fam(), F);
  OracleBudget b;
  b.samples = 300000;
  for (const auto& x : {vec({0.5, -0.2, 0.1}), vec({1, 0, 1}), vec({0, 0.3, -0.7})}) {
    const double grid = grid_decomposition_min(ctx, F, x, b, DecompositionObjective::aggregate);
    const double solver = aggregate_support_dual_norm(agg, x).value;
    CHECK(solver <= grid + 1e-9);
    CHECK(grid <= solver + 5e-2 * (1 + solver));
  }
}
