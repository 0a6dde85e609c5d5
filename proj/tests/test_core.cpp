#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "dynaball/core.hpp"
#include "dynaball/rng.hpp"

using namespace dynaball;

TEST_CASE("apply_placement returns the landing height and bumps counters") {
  LoadState st(3);
  REQUIRE(apply_placement(st, 1) == 0);
  REQUIRE(st.loads == std::vector<std::uint32_t>{0, 1, 0});
  REQUIRE(st.balls_placed == 1);
  REQUIRE(apply_placement(st, 1) == 1);
  REQUIRE(st.loads[1] == 2);
  REQUIRE_THROWS_AS(apply_placement(st, 3), ContractError);
}

TEST_CASE("max_load") {
  LoadState st(4);
  REQUIRE(max_load(st) == 0);
  st.loads = {0, 3, 1, 0};
  REQUIRE(max_load(st) == 3);
}

TEST_CASE("load_histogram") {
  LoadState st(5);
  auto h = load_histogram(st);
  REQUIRE(h.size() == 1);
  REQUIRE(h[0] == 5);
  st.loads = {2, 2, 0, 1, 0};
  h = load_histogram(st);
  REQUIRE(h[0] == 2);
  REQUIRE(h[1] == 1);
  REQUIRE(h[2] == 2);
}

TEST_CASE("conservation: histogram weighted sum equals balls placed") {
  LoadState st(16);
  RandomStream rng(99);
  for (int i = 0; i < 500; ++i) apply_placement(st, static_cast<BinId>(rng.below(16)));
  std::uint64_t total = 0;
  for (auto [load, bins] : load_histogram(st)) total += std::uint64_t{load} * bins;
  REQUIRE(total == st.balls_placed);
  REQUIRE(st.balls_placed == 500);
}

TEST_CASE("summary_json shape") {
  LoadState st(3);
  apply_placement(st, 0);
  apply_placement(st, 0);
  apply_placement(st, 2);
  auto j = summary_json(st);
  REQUIRE(j["n"] == 3);
  REQUIRE(j["balls_placed"] == 3);
  REQUIRE(j["max_load"] == 2);
  REQUIRE(j["histogram"]["0"] == 1);
  REQUIRE(j["histogram"]["1"] == 1);
  REQUIRE(j["histogram"]["2"] == 1);
}

TEST_CASE("validate_bins rejects malformed sets") {
  REQUIRE_NOTHROW(validate_bins({0, 2, 5}, 6, "t"));
  REQUIRE_THROWS_AS(validate_bins({}, 6, "t"), ContractError);
  REQUIRE_THROWS_AS(validate_bins({2, 1}, 6, "t"), ContractError);
  REQUIRE_THROWS_AS(validate_bins({1, 1}, 6, "t"), ContractError);
  REQUIRE_THROWS_AS(validate_bins({0, 6}, 6, "t"), ContractError);
}

static AllocationTrace tiny_trace() {
  AllocationTrace t;
  t.n = 4;
  t.d = 2;
  t.model_id = "toy";
  t.records = {
      {1, {0, 1, 2}, {0, 1}, 0, 0},
      {2, {1, 2, 3}, {1, 2}, 2, 0},
      {3, {0, 1, 2}, {0, 2}, 0, 1},
  };
  return t;
}

TEST_CASE("replay reproduces loads and checks heights") {
  auto t = tiny_trace();
  auto st = t.replay();
  REQUIRE(st.loads == std::vector<std::uint32_t>{2, 0, 1, 0});
  REQUIRE(st.balls_placed == 3);

  SECTION("height mismatch is caught") {
    t.records[2].height = 0;
    REQUIRE_THROWS_AS(t.replay(), ContractError);
  }
  SECTION("choice must be inside the edge") {
    t.records[1].choice = {1, 3};
    REQUIRE_THROWS_AS(t.replay(), ContractError);
  }
  SECTION("destination must be inside the choice") {
    t.records[0].destination = 2;
    REQUIRE_THROWS_AS(t.replay(), ContractError);
  }
  SECTION("ball indices must be sequential from 1") {
    t.records[1].ball = 3;
    REQUIRE_THROWS_AS(t.replay(), ContractError);
  }
}

TEST_CASE("trace dump format is exact") {
  auto t = tiny_trace();
  std::string want =
      "# dynaball trace\n"
      "# n=4\n"
      "# d=2\n"
      "# model=toy\n"
      "1,1,0;1;2,0;1,0,0\n"
      "2,2,1;2;3,1;2,2,0\n"
      "3,3,0;1;2,0;2,0,1\n";
  REQUIRE(dump_trace(t) == want);
}

TEST_CASE("dump then parse round-trips byte-identically") {
  auto t = tiny_trace();
  auto text = dump_trace(t);
  auto back = parse_trace(text);
  REQUIRE(back.n == t.n);
  REQUIRE(back.d == t.d);
  REQUIRE(back.model_id == t.model_id);
  REQUIRE(dump_trace(back) == text);
  REQUIRE_NOTHROW(back.replay());
}

TEST_CASE("parse rejects malformed input") {
  REQUIRE_THROWS_AS(parse_trace(std::string("1,1,0;1,0,0,0\n")), ConfigError);  // no header
  REQUIRE_THROWS_AS(parse_trace(std::string("# n=4\n1,2,0;1,0,0,0\n")), ConfigError);  // ball!=round
  REQUIRE_THROWS_AS(parse_trace(std::string("# n=4\n1,1,0;1\n")), ConfigError);  // short line
}
