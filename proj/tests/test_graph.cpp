#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "nplap/graph.hpp"

using namespace nplap;

namespace {
std::vector<std::string> names(const Domain& dom, const std::vector<NodeId>& ids) {
  std::vector<std::string> out;
  for (NodeId i : ids) out.push_back(dom.graph().node(i).name);
  std::sort(out.begin(), out.end());
  return out;
}
}  // namespace

TEST_CASE("open balls on the three node path", "[graph]") {
  Domain dom = fixtures::three_node_model();
  CHECK(names(dom, ball(dom, "b", 1.0)) == std::vector<std::string>{"b"});
  CHECK(names(dom, ball(dom, "b", 1.5)) ==
        std::vector<std::string>{"a", "b", "c"});
  CHECK(names(dom, ball(dom, "a", 1.0)) == std::vector<std::string>{"a"});
  CHECK(names(dom, ball(dom, "a", 2.5)) ==
        std::vector<std::string>{"a", "b", "c"});
  CHECK(dom.diameter() == 2.0);
  CHECK(dom.resolution() == 1.0);
  CHECK(dom.interior_mass() == 1.0);
  CHECK(dom.boundary_perimeter() == 2.0);
}

TEST_CASE("taxicab ball on a plain 5x5 lattice", "[graph]") {
  Domain dom = fixtures::lattice4(5);
  auto got = names(dom, ball(dom, fixtures::grid_name(0, 0), 2.5));
  std::vector<std::string> want = {
      fixtures::grid_name(0, 0), fixtures::grid_name(0, 1),
      fixtures::grid_name(0, 2), fixtures::grid_name(1, 0),
      fixtures::grid_name(1, 1), fixtures::grid_name(2, 0)};
  std::sort(want.begin(), want.end());
  CHECK(got == want);
  CHECK(dom.diameter() == 8.0);
}

TEST_CASE("distances honour edge lengths and the cap", "[graph]") {
  MetricGraph g;
  g.add_node("x", 1.0);
  g.add_node("y", 1.0);
  g.add_node("z", 1.0);
  g.add_edge("x", "y", 0.25);
  g.add_edge("y", "z", 4.0);
  g.add_edge("x", "z", 10.0);  // longer than the two-hop route
  auto d = g.distances(g.require("x"));
  CHECK(d[g.require("y")] == 0.25);
  CHECK(d[g.require("z")] == 4.25);
  auto capped = g.distances(g.require("x"), 1.0);
  CHECK(capped[g.require("z")] == kInf);
}

TEST_CASE("set diameter", "[graph]") {
  Domain dom = fixtures::path_domain(6);
  auto b = ball(dom, "2", 2.5);
  CHECK(set_diameter(dom, b) == 4.0);  // nodes 0..4
}

TEST_CASE("domain validation rejects malformed input", "[graph]") {
  auto base = [] {
    MetricGraph g;
    g.add_node("a", 0.0);
    g.add_node("b", 1.0);
    g.add_node("c", 0.0);
    g.add_edge("a", "b", 1.0);
    g.add_edge("b", "c", 1.0);
    return g;
  };

  SECTION("duplicate node id") {
    MetricGraph g;
    g.add_node("a", 0.0);
    CHECK_THROWS_AS(g.add_node("a", 1.0), UsageError);
  }
  SECTION("nonpositive edge length") {
    MetricGraph g = base();
    CHECK_THROWS_AS(g.add_edge("a", "c", 0.0), UsageError);
    CHECK_THROWS_AS(g.add_edge("a", "c", -1.0), UsageError);
  }
  SECTION("self loop") {
    MetricGraph g = base();
    CHECK_THROWS_AS(g.add_edge("a", "a", 1.0), UsageError);
  }
  SECTION("boundary node with mass") {
    MetricGraph g;
    g.add_node("a", 0.5);
    g.add_node("b", 1.0);
    g.add_edge("a", "b", 1.0);
    CHECK_THROWS_AS(
        Domain::create(std::move(g), {"b"}, {"a"}, {{"a", 1.0}}),
        UsageError);
  }
  SECTION("missing perimeter weight") {
    CHECK_THROWS_AS(Domain::create(base(), {"b"}, {"a", "c"}, {{"a", 1.0}}),
                    UsageError);
  }
  SECTION("perimeter weight on interior node") {
    CHECK_THROWS_AS(Domain::create(base(), {"b"}, {"a", "c"},
                                   {{"a", 1.0}, {"b", 1.0}, {"c", 1.0}}),
                    UsageError);
  }
  SECTION("node in both sets") {
    CHECK_THROWS_AS(Domain::create(base(), {"b", "a"}, {"a", "c"},
                                   {{"a", 1.0}, {"c", 1.0}}),
                    UsageError);
  }
  SECTION("strictly: uncovered node touching an edge") {
    CHECK_THROWS_AS(
        Domain::create(base(), {"b"}, {"a"}, {{"a", 1.0}}),
        UsageError);
  }
  SECTION("boundary node without interior neighbour") {
    MetricGraph g = base();
    g.add_node("d", 0.0);
    g.add_edge("c", "d", 1.0);
    CHECK_THROWS_AS(Domain::create(std::move(g), {"b"}, {"a", "c", "d"},
                                   {{"a", 1.0}, {"c", 1.0}, {"d", 1.0}}),
                    UsageError);
  }
  SECTION("disconnected interior") {
    MetricGraph g;
    g.add_node("a", 0.0);
    g.add_node("b", 1.0);
    g.add_node("u", 0.0);
    g.add_node("v", 1.0);
    g.add_edge("a", "b", 1.0);
    g.add_edge("u", "v", 1.0);
    CHECK_THROWS_AS(Domain::create(std::move(g), {"b", "v"}, {"a", "u"},
                                   {{"a", 1.0}, {"u", 1.0}}),
                    UsageError);
  }
  SECTION("interior without mass") {
    MetricGraph g;
    g.add_node("a", 0.0);
    g.add_node("b", 0.0);
    g.add_edge("a", "b", 1.0);
    CHECK_THROWS_AS(
        Domain::create(std::move(g), {"b"}, {"a"}, {{"a", 1.0}}),
        UsageError);
  }
  SECTION("the well formed model passes") {
    CHECK_NOTHROW(Domain::create(base(), {"b"}, {"a", "c"},
                                 {{"a", 1.0}, {"c", 1.0}}));
  }
}
