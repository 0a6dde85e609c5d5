#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include <dynaball/errors.hpp>
#include <dynaball/models.hpp>
#include <dynaball/rng.hpp>

using namespace dynaball;

namespace {

bool pair_in_some_edge(const DynamicModel& m, Round t, BinId a, BinId b) {
  for (const auto& e : m.edges(t))
    if (contains_bin(e, a) && contains_bin(e, b)) return true;
  return false;
}

void check_pair_visibility_against_enumeration(const DynamicModel& m, Round t) {
  for (BinId a = 0; a < m.n(); ++a)
    for (BinId b = a + 1; b < m.n(); ++b) {
      INFO("t=" << t << " a=" << a << " b=" << b);
      CHECK(m.pair_visible(t, a, b) == pair_in_some_edge(m, t, a, b));
    }
}

std::vector<std::pair<BinId, BinId>> brute_comm_edges(const MobileState& st) {
  std::vector<std::pair<BinId, BinId>> out;
  const auto k = static_cast<std::uint32_t>(st.positions.size());
  for (std::uint32_t a = 0; a < k; ++a)
    for (std::uint32_t b = a + 1; b < k; ++b)
      if (torus_distance(st.dims, st.side, st.positions[a], st.positions[b]) <= st.comm_radius)
        out.emplace_back(a, b);
  return out;
}

}  // namespace

TEST_CASE("cycle model shape") {
  CHECK_THROWS_AS(DynamicCycle(15), ConfigError);  // not a square
  CHECK_THROWS_AS(DynamicCycle(1), ConfigError);   // square but too small
  CHECK_THROWS_AS(DynamicCycle(0), ConfigError);

  DynamicCycle m(16);
  CHECK(m.n() == 16);
  CHECK(m.edge_size() == 2);
  CHECK(m.horizon() == 16);
  CHECK(m.visibility_bound() == 4.0);
  CHECK(m.id() == "cycle(n=16)");
  CHECK_FALSE(m.single_choice_allowed());
  CHECK_FALSE(m.defer_empty_rounds());

  // offset is ceil(t / 4)
  CHECK(m.offset(1) == 1);
  CHECK(m.offset(4) == 1);
  CHECK(m.offset(5) == 2);
  CHECK(m.offset(12) == 3);
  CHECK(m.offset(13) == 4);
  CHECK(m.offset(16) == 4);
  CHECK_THROWS_AS(m.edges(0), ContractError);
  CHECK_THROWS_AS(m.edges(17), ContractError);
}

TEST_CASE("cycle model edges") {
  DynamicCycle m(16);

  SECTION("offset 1 is the plain cycle") {
    const auto e = m.edges(1);
    REQUIRE(e.size() == 16);
    CHECK(m.edge_count(1) == 16);
    std::set<Hyperedge> seen(e.begin(), e.end());
    REQUIRE(seen.size() == 16);
    CHECK(seen.count({0, 1}) == 1);
    CHECK(seen.count({14, 15}) == 1);
    CHECK(seen.count({0, 15}) == 1);  // wrap-around pair
  }

  SECTION("offset 2 splits into two 8-cycles") {
    const auto e = m.edges(5);
    REQUIRE(e.size() == 16);
    for (const auto& edge : e) CHECK(edge[0] % 2 == edge[1] % 2);
  }

  SECTION("largest offset is sqrt(n), still n distinct edges") {
    const auto e = m.edges(16);  // offset 4 < n/2
    REQUIRE(e.size() == 16);
    CHECK(m.edge_count(16) == 16);
    std::set<Hyperedge> seen(e.begin(), e.end());
    CHECK(seen.size() == 16);
    for (const auto& edge : e) {
      const auto diff = edge[1] - edge[0];
      CHECK((diff == 4 || diff == 12));  // {i, i+4 mod 16} as a sorted pair
    }
  }

  SECTION("n=4 also hits the halving case") {
    DynamicCycle tiny(4);
    CHECK(tiny.edge_count(1) == 4);   // offset 1
    CHECK(tiny.edge_count(3) == 2);   // offset 2 = n/2
    const auto e = tiny.edges(4);
    REQUIRE(e.size() == 2);
    CHECK(e[0] == Hyperedge{0, 2});
    CHECK(e[1] == Hyperedge{1, 3});
  }
}

TEST_CASE("cycle pair visibility matches enumeration") {
  DynamicCycle m(16);
  for (Round t : {1u, 5u, 13u, 16u}) check_pair_visibility_against_enumeration(m, t);
  CHECK_FALSE(m.pair_visible(1, 3, 3));
}

TEST_CASE("cycle sampling is uniform over the round's edges") {
  DynamicCycle m(16);
  RandomStream rng(21, 0);
  std::map<Hyperedge, int> counts;
  const int draws = 16000;
  for (int i = 0; i < draws; ++i) ++counts[m.sample_edge(1, rng)];
  REQUIRE(counts.size() == 16);
  for (const auto& [edge, c] : counts) {
    INFO("edge {" << edge[0] << "," << edge[1] << "}");
    CHECK(std::abs(c - 1000) <= 160);  // 5 sigma
  }
}

TEST_CASE("d equal to edge size consumes no subset randomness") {
  DynamicCycle m(16);
  RandomStream a(3, 1), b(3, 1);
  Hyperedge e;
  DChoice c;
  m.sample_ball(7, 2, a, true, &e, &c);
  const auto direct = m.sample_edge(7, b);
  CHECK(e == direct);
  CHECK(c == direct);
  CHECK(a.next_u64() == b.next_u64());  // same draw count consumed

  RandomStream z(3, 1);
  DChoice c1;
  m.sample_ball(7, 1, z, false, nullptr, &c1);  // strict subset draws extra
  REQUIRE(c1.size() == 1);
  CHECK(contains_bin(direct, c1[0]));
  CHECK_THROWS_AS(m.sample_ball(7, 3, a, false, nullptr, &c), ConfigError);
  CHECK_THROWS_AS(m.sample_ball(7, 0, a, false, nullptr, &c), ConfigError);
}

TEST_CASE("modular model frozen examples at n=13, s=3") {
  ModularHypergraph m(13, 3);
  CHECK(m.n() == 13);
  CHECK(m.requested_n() == 13);
  CHECK(m.edge_size() == 3);
  CHECK(m.horizon() == 13);
  CHECK(m.id() == "modular(n=13,s=3)");

  // ceil(sqrt(13)) = 4; ceil(t / 13^(3/4)) is 1 up to t=6 and 2 from t=7
  CHECK(m.stride(1) == 5);
  CHECK(m.stride(6) == 5);
  CHECK(m.stride(7) == 6);
  CHECK(m.stride(13) == 6);

  CHECK(m.edge_for(1, 0) == Hyperedge{0, 5, 10});
  CHECK(m.edge_for(1, 1) == Hyperedge{1, 6, 11});
  CHECK(m.edge_for(1, 9) == Hyperedge{1, 6, 9});   // 9, 14=1, 19=6
  CHECK(m.edge_for(13, 0) == Hyperedge{0, 6, 12});
  CHECK(m.edge_for(13, 2) == Hyperedge{1, 2, 8});  // 2, 8, 14=1

  const auto all = m.edges(1);
  REQUIRE(all.size() == 13);
  CHECK(std::set<Hyperedge>(all.begin(), all.end()).size() == 13);

  // one edge per residue, so every bin sits in exactly s edges
  for (auto p : m.inclusion_probability(1)) CHECK(p == Catch::Approx(3.0 / 13.0));
}

TEST_CASE("modular pair visibility matches enumeration") {
  ModularHypergraph m(13, 3);
  for (Round t : {1u, 7u, 13u}) check_pair_visibility_against_enumeration(m, t);
  CHECK_FALSE(m.pair_visible(1, 4, 4));
}

TEST_CASE("modular sampling, bounds and labels") {
  ModularHypergraph m(13, 3);
  RandomStream a(9, 2), b(9, 2);
  const auto e = m.sample_edge(1, a);
  const auto alpha = static_cast<std::uint32_t>(b.below(13));
  CHECK(e == m.edge_for(1, alpha));
  CHECK(a.next_u64() == b.next_u64());

  CHECK(m.visibility_bound() == Catch::Approx(4.0 * std::pow(13.0, 0.75)));
  CHECK_FALSE(m.s_in_theory_range());  // the window is empty at desk scale
  CHECK(m.descriptor().at("out_of_range_s") == true);
  CHECK_THROWS_AS(m.stride(0), ContractError);
  CHECK_THROWS_AS(m.stride(14), ContractError);
}

TEST_CASE("modular prime substitution and rejections") {
  ModularHypergraph bumped(12, 3);
  CHECK(bumped.n() == 13);
  CHECK(bumped.requested_n() == 12);
  CHECK(bumped.descriptor().at("requested_n") == 12);
  CHECK(bumped.id() == "modular(n=13,s=3)");

  ModularHypergraph exact(13, 3);
  CHECK_FALSE(exact.descriptor().contains("requested_n"));

  CHECK_THROWS_AS(ModularHypergraph(13, 1), ConfigError);
  CHECK_THROWS_AS(ModularHypergraph(5, 5), ConfigError);   // s >= n
  CHECK_THROWS_AS(ModularHypergraph(3, 2), ConfigError);   // stride would wrap
}

TEST_CASE("complete baseline") {
  CHECK_THROWS_AS(CompleteBaseline(0), ConfigError);
  CompleteBaseline m(6);
  CHECK(m.n() == 6);
  CHECK(m.edge_size() == 6);
  CHECK(m.horizon() == 6);
  CHECK(m.single_choice_allowed());
  CHECK(m.id() == "baseline(n=6)");
  CHECK(m.edge_count(3) == 1);
  const auto all = m.edges(2);
  REQUIRE(all.size() == 1);
  CHECK(all[0] == Hyperedge{0, 1, 2, 3, 4, 5});
  for (auto p : m.inclusion_probability(1)) CHECK(p == 1.0);
  CHECK(m.pair_visible(1, 0, 5));
  CHECK_FALSE(m.pair_visible(1, 2, 2));

  RandomStream rng(4, 0);
  DChoice c;
  m.sample_ball(1, 2, rng, false, nullptr, &c);
  REQUIRE(c.size() == 2);
  CHECK(c[0] < c[1]);
  CHECK(c[1] < 6);
  Hyperedge e;
  m.sample_ball(1, 6, rng, true, &e, &c);
  CHECK(c == all[0]);
  CHECK(e == all[0]);
  CHECK_THROWS_AS(m.sample_ball(1, 7, rng, false, nullptr, &c), ConfigError);

  // d = 1 is a plain uniform bin
  std::vector<int> hits(6, 0);
  for (int i = 0; i < 6000; ++i) {
    m.sample_ball(1, 1, rng, false, nullptr, &c);
    ++hits[c[0]];
  }
  for (auto h : hits) CHECK(std::abs(h - 1000) <= 145);  // 5 sigma
}

TEST_CASE("torus distance") {
  CHECK(torus_distance(1, 5, 0, 4) == 1);  // wrap
  CHECK(torus_distance(1, 5, 1, 3) == 2);
  CHECK(torus_distance(1, 5, 2, 2) == 0);
  // R=2, side=4: linear index is x + 4*y
  CHECK(torus_distance(2, 4, 0, 15) == 2);   // (0,0) vs (3,3), both axes wrap
  CHECK(torus_distance(2, 4, 0, 6) == 3);    // (0,0) vs (2,1)
  CHECK(torus_distance(2, 4, 5, 5) == 0);
  CHECK(torus_distance(3, 3, 0, 26) == 3);   // (0,0,0) vs (2,2,2), wraps to 1 each
}

TEST_CASE("lazy walk steps") {
  MobileState st;
  st.dims = 2;
  st.side = 4;
  st.comm_radius = 1;
  st.positions = {0, 5, 9, 15, 3};

  SECTION("laziness 1 freezes everyone") {
    st.laziness = 1.0;
    RandomStream rng(1, 0);
    CHECK(mobile_step(st, rng).positions == st.positions);
  }

  SECTION("laziness 0 moves everyone by exactly one") {
    st.laziness = 0.0;
    RandomStream rng(2, 0);
    const auto next = mobile_step(st, rng);
    for (std::size_t i = 0; i < st.positions.size(); ++i)
      CHECK(torus_distance(2, 4, st.positions[i], next.positions[i]) == 1);
  }

  SECTION("uniform occupancy is preserved") {
    MobileState walk;
    walk.dims = 1;
    walk.side = 8;
    walk.laziness = 0.3;
    walk.positions.resize(20000);
    RandomStream init(31, 0);
    for (auto& p : walk.positions) p = static_cast<std::uint32_t>(init.below(8));
    for (std::uint64_t step = 1; step <= 30; ++step) {
      auto rng = RandomStream(31).for_ball(step);
      walk = mobile_step(walk, rng);
    }
    std::vector<int> occ(8, 0);
    for (auto p : walk.positions) ++occ[p];
    for (auto c : occ) CHECK(std::abs(c - 2500) <= 234);  // 5 sigma
  }
}

TEST_CASE("communication edges") {
  SECTION("hand-checked line of agents with wrap") {
    MobileState st;
    st.dims = 1;
    st.side = 10;
    st.comm_radius = 2;
    st.positions = {0, 1, 3, 9, 5};
    const std::vector<std::pair<BinId, BinId>> want = {{0, 1}, {0, 3}, {1, 2}, {1, 3}, {2, 4}};
    CHECK(communication_edges(st) == want);
  }
  SECTION("co-located agents are connected") {
    MobileState st;
    st.dims = 1;
    st.side = 10;
    st.comm_radius = 1;
    st.positions = {7, 7};
    CHECK(communication_edges(st) == std::vector<std::pair<BinId, BinId>>{{0, 1}});
  }
  SECTION("narrow torus falls back to the pair scan") {
    MobileState st;
    st.dims = 1;
    st.side = 3;  // < 2r+1
    st.comm_radius = 2;
    st.positions = {0, 1, 2};
    CHECK(communication_edges(st).size() == 3);
  }
  SECTION("bucketed path agrees with the brute scan") {
    MobileState st;
    st.dims = 2;
    st.side = 7;
    st.comm_radius = 2;
    st.positions.resize(40);
    RandomStream rng(8, 0);
    for (auto& p : st.positions) p = static_cast<std::uint32_t>(rng.below(49));
    auto got = communication_edges(st);
    auto want = brute_comm_edges(st);
    std::sort(want.begin(), want.end());
    CHECK(got == want);
  }
}

TEST_CASE("mobile network model") {
  CHECK_THROWS_AS(MobileNetwork(10, 2, 0.5, 1, 7), ConfigError);   // not a square
  CHECK_THROWS_AS(MobileNetwork(16, 5, 0.5, 1, 7), ConfigError);   // not a 5th power
  CHECK_THROWS_AS(MobileNetwork(16, 0, 0.5, 1, 7), ConfigError);
  CHECK_THROWS_AS(MobileNetwork(16, 2, 1.5, 1, 7), ConfigError);

  MobileNetwork m(16, 2, 0.3, 1, 77);
  CHECK(m.n() == 16);
  CHECK(m.side() == 4);
  CHECK(m.edge_size() == 2);
  CHECK(m.horizon() == 16);
  CHECK(m.defer_empty_rounds());
  CHECK(m.id() == "mobile(R=2,n=16,p=0.3,r=1,traj=77)");

  // replicate the trajectory with the public pieces
  MobileState st;
  st.dims = 2;
  st.side = 4;
  st.laziness = 0.3;
  st.comm_radius = 1;
  st.positions.resize(16);
  auto r0 = RandomStream(77).for_ball(0);
  for (auto& p : st.positions) p = static_cast<std::uint32_t>(r0.below(16));

  CHECK(m.state_at_round(1).positions == st.positions);
  auto expect_edges = [](const MobileState& s) {
    std::vector<Hyperedge> out;
    for (auto [a, b] : communication_edges(s)) out.push_back({a, b});
    return out;
  };
  CHECK(m.edges(1) == expect_edges(st));

  for (std::uint64_t step = 1; step <= 2; ++step) {
    auto rng = RandomStream(77).for_ball(step);
    st = mobile_step(st, rng);
  }
  CHECK(m.state_at_round(3).positions == st.positions);
  CHECK(m.edges(3) == expect_edges(st));

  // visibility agrees with the distance rule
  for (BinId a = 0; a < 16; ++a)
    for (BinId b = a + 1; b < 16; ++b)
      CHECK(m.pair_visible(2, a, b) ==
            (torus_distance(2, 4, m.state_at_round(2).positions[a],
                            m.state_at_round(2).positions[b]) <= 1));

  // rounds may run past the horizon while a deferred ball retries
  CHECK_NOTHROW(m.state_at_round(16 + MobileNetwork::kDeferSlack));
  CHECK_THROWS_AS(m.state_at_round(16 + MobileNetwork::kDeferSlack + 1), ContractError);
  CHECK_THROWS_AS(m.state_at_round(0), ContractError);
}

TEST_CASE("mobile visibility bound exponent") {
  // delta = min(1/4, 1/R): capped at 1/4 for R <= 4, else 1/R
  MobileNetwork r1(16, 1, 0.5, 1, 3);
  CHECK(r1.visibility_bound() == Catch::Approx(std::pow(16.0, 0.875)));
  MobileNetwork r2(16, 2, 0.5, 1, 3);
  CHECK(r2.visibility_bound() == Catch::Approx(std::pow(16.0, 0.875)));
  MobileNetwork r8(256, 8, 0.5, 1, 3);  // side 2, delta = 1/8
  CHECK(r8.visibility_bound() == Catch::Approx(std::pow(256.0, 1.0 - 1.0 / 16.0)));
  r2.set_bound_slack(2.0);
  CHECK(r2.visibility_bound() == Catch::Approx(2.0 * std::pow(16.0, 0.875)));
}

TEST_CASE("file model") {
  const std::string text =
      "# toy model\n"
      "n 5\n"
      "round\n"
      "2 0 1\n"
      "2 3 4\n"
      "round\n"
      "round\n"
      "1 2 4\n";
  auto m = FileModel::parse(text, "toy");
  CHECK(m.n() == 5);
  CHECK(m.edge_size() == 3);
  CHECK(m.horizon() == 3);
  CHECK(m.id() == "file(toy,n=5,rounds=3)");
  CHECK(m.edge_count(1) == 2);
  CHECK(m.edges(1)[0] == Hyperedge{0, 1, 2});  // input order was 2 0 1
  CHECK(m.edge_count(2) == 0);                 // empty rounds are legal
  CHECK(m.edges(3) == std::vector<Hyperedge>{{1, 2, 4}});
  CHECK_THROWS_AS(m.edges(4), ContractError);

  RandomStream rng(1, 0);
  CHECK_THROWS_AS(m.sample_edge(2, rng), RoundError);  // nothing to draw from

  CHECK_THROWS_AS(FileModel::parse("round\n0 1\n"), ConfigError);        // n missing
  CHECK_THROWS_AS(FileModel::parse("n 0\nround\n"), ConfigError);
  CHECK_THROWS_AS(FileModel::parse("n 5\n0 1\n"), ConfigError);          // edge before round
  CHECK_THROWS_AS(FileModel::parse("n 5\nround\n0 1\n0 1 2\n"), ConfigError);  // mixed sizes
  CHECK_THROWS_AS(FileModel::parse("n 5\nround\n0 5\n"), ConfigError);   // bin out of range
  CHECK_THROWS_AS(FileModel::parse("n 5\nround\n1 1 2\n"), ConfigError); // duplicate bin
  CHECK_THROWS_AS(FileModel::parse("n 5\nround\n0 x\n"), ConfigError);   // junk token
  CHECK_THROWS_AS(FileModel::parse("n 5\n"), ConfigError);               // no rounds
}

TEST_CASE("balancedness estimate") {
  RandomStream rng(13, 0);

  DynamicCycle cycle(16);
  auto rep = balancedness_estimate(cycle, 1, 20000, rng);
  REQUIRE(rep.exact.size() == 16);
  for (auto p : rep.exact) CHECK(p == Catch::Approx(2.0 / 16.0));
  CHECK(rep.max_exact == Catch::Approx(0.125));
  for (auto p : rep.empirical) CHECK(std::abs(p - 0.125) < 0.015);  // ~5 sigma
  CHECK(rep.max_empirical <= 0.125 + 0.015);

  CompleteBaseline base(4);
  auto brep = balancedness_estimate(base, 1, 50, rng);
  for (auto p : brep.exact) CHECK(p == 1.0);
  for (auto p : brep.empirical) CHECK(p == 1.0);
  CHECK(brep.max_empirical == 1.0);

  CHECK_THROWS_AS(balancedness_estimate(base, 1, 0, rng), ContractError);
}
