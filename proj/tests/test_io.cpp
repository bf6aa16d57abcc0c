#include "capra/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <limits>

using namespace capra;

TEST_CASE("norm configs round-trip") {
  for (const char* name : {"l2", "l1.5", "linf", "l1"}) {
    const auto n = parse_norm_name(name);
    CHECK(n.name() == name);
    const auto back = norm_from_json(norm_to_json(n));
    CHECK(back.name() == name);
    CHECK(back.hash() == n.hash());
  }
  CHECK(norm_to_json(parse_norm_name("linf"))["p"] == "inf");
  const auto w = norm_from_json(Json::parse(R"({"type":"weighted-lp","p":2,"weights":[1,2]})"));
  CHECK(w.kind() == NormSpec::Kind::weighted_lp);
  CHECK(norm_from_json(norm_to_json(w)).hash() == w.hash());
  const auto t = norm_from_json(
      Json::parse(R"({"type":"custom-table","combine":"max","rows":[[1,0],[0,1]],"declared":{"om":true}})"));
  CHECK(t.is_table());
  CHECK(t.declared_flags().orthant_monotonic == Tri::yes);
  CHECK(t.declared_flags().dual_osm == Tri::unknown);
  const auto tj = norm_to_json(t);
  CHECK(tj["combine"] == "max");
  CHECK(tj["declared"]["om"] == true);
  CHECK_FALSE(tj["declared"].contains("osm"));
}

TEST_CASE("malformed norm configs are config errors") {
  CHECK_THROWS_AS(parse_norm_name("l"), ConfigError);
  CHECK_THROWS_AS(parse_norm_name("lfoo"), ConfigError);
  CHECK_THROWS_AS(parse_norm_name("l0.5"), ConfigError);
  CHECK_THROWS_AS(parse_norm_name("m2"), ConfigError);
  CHECK_THROWS_AS(norm_from_json(Json::parse(R"({"type":"lp"})")), ConfigError);
  CHECK_THROWS_AS(norm_from_json(Json::parse(R"({"type":"lp","p":"two"})")), ConfigError);
  CHECK_THROWS_AS(norm_from_json(Json::parse(R"({"type":"weighted-lp","p":2,"weights":[1,-1]})")), ConfigError);
  CHECK_THROWS_AS(norm_from_json(Json::parse(R"({"type":"custom-table","rows":[[1,1]]})")), ConfigError);
  CHECK_THROWS_AS(norm_from_json(Json::parse(R"({"type":"nope"})")), ConfigError);
  CHECK_THROWS_AS(norm_from_json(Json::parse("42")), ConfigError);
}

TEST_CASE("set function configs") {
  const auto F = set_function_from_json(Json::parse(R"({"d":2,"values":[0,1,"inf",2]})"));
  CHECK(F.dim() == 2);
  CHECK(F.at(2).is_pos_inf());
  const auto back = set_function_from_json(set_function_to_json(F));
  CHECK(back.values() == F.values());
  CHECK(set_function_from_json(Json::parse(R"({"values":[0,1,1,2,1,2,2,3]})")).dim() == 3);
  const auto card = set_function_from_json(Json("cardinality"), 3);
  CHECK(card.finite(SubsetMask::full(3)) == 3.0);
  CHECK(set_function_to_json(card)["label"] == "cardinality");
  const auto aff = set_function_from_json(Json::parse(R"({"name":"affine","d":2,"a":1,"b":2})"));
  CHECK(aff.finite(SubsetMask::full(2)) == 5.0);
  CHECK_THROWS_AS(set_function_from_json(Json("cardinality")), ConfigError);
  CHECK_THROWS_AS(set_function_from_json(Json::parse(R"({"d":2,"values":[0,1,2]})")), ConfigError);
  CHECK_THROWS_AS(set_function_from_json(Json::parse(R"({"d":2,"values":[0,1,"x",2]})")), ConfigError);
  CHECK_THROWS_AS(set_function_from_json(Json::parse(R"({"d":2,"values":[0,1,1,2]})"), 3), ConfigError);
}

TEST_CASE("extended reals and vectors in JSON") {
  CHECK(ext_to_json(ExtReal::pos_inf()) == "inf");
  CHECK(ext_to_json(ExtReal::neg_inf()) == "-inf");
  CHECK(ext_from_json(Json("-inf")).is_neg_inf());
  CHECK(ext_from_json(Json(1.5)) == ExtReal(1.5));
  CHECK(real_to_json(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(real_to_json(std::nan("")).is_null());
  const Vector x = vector_from_json(Json::parse("[1, -2.5, 0]"));
  CHECK(vector_to_json(x) == Json::parse("[1.0, -2.5, 0.0]"));
  CHECK_THROWS_AS(vector_from_json(Json::parse("[]")), ConfigError);
  CHECK_THROWS_AS(vector_from_json(Json::parse(R"([1, "a"])")), ConfigError);
  CHECK_THROWS_AS(points_from_json(Json::parse("[[1,2],[3]]")), ConfigError);
  CHECK(points_from_json(Json::parse("[]")).empty());
}

TEST_CASE("problem files") {
  const auto p = problem_from_json(
      Json::parse(R"({"norm":"l2","set_function":"cardinality","x":[1,0,2],"alpha":1.5})"));
  CHECK(p.F.dim() == 3);
  CHECK(*p.alpha == 1.5);
  CHECK_THROWS_AS(problem_from_json(Json::parse(R"({"norm":"l2","x":[1]})")), ConfigError);
  CHECK_THROWS_AS(
      problem_from_json(Json::parse(R"({"norm":"l2","set_function":{"d":2,"values":[0,1,1,2]},"x":[1,2,3]})")),
      ConfigError);

  const std::string path = "capra_io_test_problem.json";
  {
    std::ofstream f(path);
    f << R"({"norm":{"type":"lp","p":"inf"},"set_function":"sqrt-cardinality","x":[0,1]})";
  }
  const auto loaded = problem_from_json(load_config(path));
  CHECK(loaded.norm.name() == "linf");
  std::remove(path.c_str());
  CHECK(load_config(R"({"a":1})")["a"] == 1);
  CHECK(load_config("l2") == Json("l2"));
  CHECK_THROWS_AS(read_json_file("does/not/exist.json"), ConfigError);
}

TEST_CASE("decompositions serialize their nonzero blocks") {
  Decomposition z(2);
  z[SubsetMask::from_indices(2, {1})] = Vector::Unit(2, 1) * 2.0;
  const auto j = decomposition_to_json(z);
  REQUIRE(j.size() == 1);
  CHECK(j[0]["K"] == "{2}");
  CHECK(j[0]["z"] == Json::parse("[0.0, 2.0]"));
}
