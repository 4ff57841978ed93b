#include <set>

#include "doctest.h"
#include "netgnn/error.hpp"
#include "netgnn/graph.hpp"
#include "oracles.hpp"

using namespace netgnn;

TEST_CASE("topology construction validates links") {
  CHECK_NOTHROW(Topology(2, {{0, 0, 1, 1.0}, {1, 1, 0, 1.0}}));
  CHECK_THROWS_AS(Topology(2, {{1, 0, 1, 1.0}}), GraphError);               // id out of order
  CHECK_THROWS_AS(Topology(2, {{0, 0, 2, 1.0}}), GraphError);               // endpoint out of range
  CHECK_THROWS_AS(Topology(2, {{0, 1, 1, 1.0}}), GraphError);               // self loop
  CHECK_THROWS_AS(Topology(2, {{0, 0, 1, 0.0}}), GraphError);               // capacity
  CHECK_THROWS_AS(Topology(2, {{0, 0, 1, 1.0}, {1, 0, 1, 1.0}}), GraphError);  // duplicate
  CHECK_THROWS_AS(Topology(3, {{0, 0, 1, 1.0}, {1, 1, 2, 2.0}}), GraphError);  // mixed capacities
  auto line = topologies::line(3, 1.0);
  CHECK(line.is_connected());
  CHECK_FALSE(Topology(3, {{0, 0, 1, 1.0}, {1, 1, 2, 1.0}}).is_connected());  // one-way chain
}

TEST_CASE("pair index enumerates ordered pairs lexicographically") {
  for (int n = 2; n <= 7; ++n) {
    int expected = 0;
    for (int s = 0; s < n; ++s) {
      for (int d = 0; d < n; ++d) {
        if (s == d) continue;
        CHECK(pair_index(s, d, n) == expected);
        CHECK(pair_at(expected, n) == Edge{s, d});
        ++expected;
      }
    }
    CHECK(expected == pair_count(n));
  }
}

TEST_CASE("named topologies") {
  auto nsf = topologies::nsfnet(1.0);
  CHECK(nsf.node_count() == 14);
  CHECK(nsf.link_count() == 42);
  auto t8 = topologies::testbed8(6.0);
  CHECK(t8.node_count() == 8);
  CHECK(t8.link_count() == 26);
  CHECK(t8.capacity() == 6.0);
  auto t10 = topologies::testbed10(6.0);
  CHECK(t10.node_count() == 10);
  CHECK(t10.link_count() == 36);
  for (const auto& t : {nsf, t8, t10, topologies::ring(5), topologies::star(4), topologies::line(4)}) {
    CHECK(t.is_connected());
    for (const Link& l : t.links()) CHECK(t.find_link(l.dst, l.src).has_value());
  }
  CHECK(topologies::by_name("ring6", 2.0).node_count() == 6);
  CHECK(topologies::by_name("star4", 2.0).node_count() == 5);
  CHECK_THROWS_AS(topologies::by_name("ring2", 1.0), ConfigError);
  CHECK_THROWS_AS(topologies::by_name("mesh", 1.0), ConfigError);
}

TEST_CASE("shortest-path routing equals brute-force enumeration") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    auto topo = topologies::random_connected(6, 3.0, seed, 1.0);
    Rng rng(seed);
    std::uniform_int_distribution<int> w(1, 4);  // small integers force ties
    std::vector<double> weights;
    for (int l = 0; l < topo.link_count(); ++l) weights.push_back(w(rng));
    auto routing = shortest_path_routing(topo, weights);
    routing.validate(topo);
    for (const Path& p : routing.paths()) CHECK(p.links == oracle::best_path(topo, p.src, p.dst, weights));
  }
}

TEST_CASE("hop-count routing on a ring picks the lexicographic tie") {
  auto ring = topologies::ring(4, 1.0);
  auto r = shortest_path_routing(ring);
  // 0 -> 2 has two 2-hop routes: via 1 and via 3; via 1 is smaller.
  const Path& p = r.paths()[static_cast<std::size_t>(pair_index(0, 2, 4))];
  CHECK(oracle::node_sequence(ring, 0, p.links) == std::vector<int>{0, 1, 2});
}

TEST_CASE("random routing variants are distinct, valid, and seeded") {
  auto t8 = topologies::testbed8(1.0);
  auto a = random_routing_variants(t8, 20, 5);
  auto b = random_routing_variants(t8, 20, 5);
  CHECK(a == b);
  std::set<std::string> keys;
  for (const auto& r : a) {
    r.validate(t8);
    keys.insert(routing_key(r));
  }
  CHECK(keys.size() == 20);
  CHECK_THROWS_AS(random_routing_variants(topologies::line(3), 2, 1), GraphError);  // trees have one routing
}

TEST_CASE("candidate routings start with hop-count shortest paths") {
  auto t8 = topologies::testbed8(1.0);
  auto c = candidate_routings(t8, 10, 3);
  CHECK(c.size() == 10);
  CHECK(c.front() == shortest_path_routing(t8));
  auto tree = candidate_routings(topologies::star(3), 5, 3);
  CHECK(tree.size() == 1);
}

TEST_CASE("routing validation catches broken paths") {
  auto line = topologies::line(3, 1.0);
  auto good = shortest_path_routing(line);
  std::vector<Path> paths = good.paths();
  paths[0].links = {paths[0].links.front(), paths[0].links.front()};
  CHECK_THROWS_AS(RoutingScheme(3, paths).validate(line), GraphError);
  paths = good.paths();
  std::swap(paths[0], paths[1]);
  CHECK_THROWS(RoutingScheme(3, paths));
}

TEST_CASE("edge failures keep the graph connected and fail both directions") {
  auto nsf = topologies::nsfnet(1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto failed = sample_edge_failures(nsf, 3, seed);
    REQUIRE(failed.size() == 6);
    for (int id : failed) {
      const Link& l = nsf.link(id);
      CHECK(std::count(failed.begin(), failed.end(), *nsf.find_link(l.dst, l.src)) == 1);
    }
    auto out = apply_link_failures(nsf, failed);
    CHECK(out.topology.link_count() == 36);
    CHECK(out.topology.is_connected());
    out.routing.validate(out.topology);
    for (int i = 0; i < out.topology.link_count(); ++i) {
      const Link& orig = nsf.link(out.original_link[static_cast<std::size_t>(i)]);
      CHECK(orig.src == out.topology.link(i).src);
      CHECK(orig.dst == out.topology.link(i).dst);
    }
  }
  CHECK(sample_edge_failures(nsf, 0, 1).empty());
  CHECK_THROWS_AS(sample_edge_failures(topologies::line(3), 1, 1), ConfigError);  // any cut disconnects
  CHECK_THROWS_AS(sample_edge_failures(nsf, 30, 1), ConfigError);
  auto line = topologies::line(3);
  std::vector<int> cut{0, 1};
  CHECK_THROWS_AS(apply_link_failures(line, cut), GraphError);
}

TEST_CASE("adding a link appends both directions") {
  auto star = topologies::star(3, 2.0);
  auto more = add_bidirectional_link(star, 1, 2);
  CHECK(more.link_count() == star.link_count() + 2);
  CHECK(more.find_link(1, 2).has_value());
  CHECK(more.find_link(2, 1).has_value());
  CHECK(more.capacity() == 2.0);
  CHECK_THROWS(add_bidirectional_link(more, 1, 2));
}
