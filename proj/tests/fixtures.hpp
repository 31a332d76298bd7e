#pragma once

#include <string>
#include <vector>

#include "nplap/graph.hpp"

namespace fixtures {

// Path a - b - c with unit edges, one interior node of unit mass, unit
// perimeter weights at both ends. The smallest nontrivial domain.
inline nplap::Domain three_node_model() {
  nplap::MetricGraph g;
  g.add_node("a", 0.0);
  g.add_node("b", 1.0);
  g.add_node("c", 0.0);
  g.add_edge("a", "b", 1.0);
  g.add_edge("b", "c", 1.0);
  return nplap::Domain::create(std::move(g), {"b"}, {"a", "c"},
                               {{"a", 1.0}, {"c", 1.0}});
}

// Path 0 - 1 - ... - (n-1), unit edges, interior 1..n-2 of unit mass,
// endpoints boundary with unit perimeter.
inline nplap::Domain path_domain(int n) {
  nplap::MetricGraph g;
  for (int i = 0; i < n; ++i)
    g.add_node(std::to_string(i), (i == 0 || i == n - 1) ? 0.0 : 1.0,
               {double(i)});
  for (int i = 0; i + 1 < n; ++i)
    g.add_edge(i, i + 1, 1.0);
  std::vector<std::string> interior, boundary;
  for (int i = 1; i < n - 1; ++i) interior.push_back(std::to_string(i));
  boundary = {"0", std::to_string(n - 1)};
  return nplap::Domain::create(std::move(g), interior, boundary,
                               {{"0", 1.0}, {std::to_string(n - 1), 1.0}});
}

inline std::string grid_name(int i, int j) {
  return "n" + std::to_string(i) + "_" + std::to_string(j);
}

// Plain 4-neighbour n x n unit lattice. Ring nodes are boundary, inner nodes
// interior with unit mass. Corner nodes have no interior neighbour, so this
// only passes lenient validation; it exists to probe the taxicab metric.
inline nplap::Domain lattice4(int n) {
  nplap::MetricGraph g;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      bool ring = i == 0 || j == 0 || i == n - 1 || j == n - 1;
      g.add_node(grid_name(i, j), ring ? 0.0 : 1.0, {double(i), double(j)});
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i + 1 < n) g.add_edge(grid_name(i, j), grid_name(i + 1, j), 1.0);
      if (j + 1 < n) g.add_edge(grid_name(i, j), grid_name(i, j + 1), 1.0);
    }
  std::vector<std::string> interior, boundary;
  std::unordered_map<std::string, double> perim;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      bool ring = i == 0 || j == 0 || i == n - 1 || j == n - 1;
      if (ring) {
        boundary.push_back(grid_name(i, j));
        perim[grid_name(i, j)] = 1.0;
      } else {
        interior.push_back(grid_name(i, j));
      }
    }
  return nplap::Domain::create(std::move(g), interior, boundary, perim,
                               nplap::Validate::lenient);
}

}  // namespace fixtures
