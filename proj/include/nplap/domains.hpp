#pragma once

// Benchmark domain families with known lattice geometry, plus generators of
// compatible (zero-mean) boundary data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "calculus.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "log.hpp"
#include "rng.hpp"

namespace nplap {

struct DomainSpec {
  enum class Kind { path, grid, lshape, annulus_grid, sierpinski, file };
  enum class Measure { unit, cell_volume };
  enum class Perimeter { unit, face_area };

  Kind kind = Kind::grid;
  int n = 8;        // nodes per side (planar kinds) or along the path
  int level = 2;    // gasket subdivision depth
  double h = 1.0;   // lattice spacing; for the gasket, the finest edge length
  Measure measure = Measure::cell_volume;
  Perimeter perimeter = Perimeter::face_area;
  std::string path;  // source for Kind::file
};

namespace detail {

inline std::string lattice_name(int i, int j) {
  return "n" + std::to_string(i) + "_" + std::to_string(j);
}

// Nodes are the lattice points of `cells`; a node is interior when all four
// axis neighbours are present, otherwise it is boundary with measure zero.
// Boundary nodes whose axis neighbours are all boundary (outer corners) get
// diagonal edges to interior nodes so every boundary node touches the
// interior directly.
inline Domain build_planar_lattice(const std::set<std::pair<int, int>>& cells,
                                   const DomainSpec& spec, const char* what) {
  const double h = spec.h;
  auto in = [&](int i, int j) { return cells.count({i, j}) != 0; };
  auto interior_at = [&](int i, int j) {
    return in(i, j) && in(i - 1, j) && in(i + 1, j) && in(i, j - 1) &&
           in(i, j + 1);
  };
  const double mu_i =
      spec.measure == DomainSpec::Measure::cell_volume ? h * h : 1.0;
  const double per_b =
      spec.perimeter == DomainSpec::Perimeter::face_area ? h : 1.0;

  MetricGraph g;
  std::vector<std::string> interior, boundary;
  std::unordered_map<std::string, double> per;
  for (auto [i, j] : cells) {
    std::string name = lattice_name(i, j);
    const bool inner = interior_at(i, j);
    g.add_node(name, inner ? mu_i : 0.0, {h * i, h * j});
    (inner ? interior : boundary).push_back(name);
    if (!inner) per[name] = per_b;
  }
  if (interior.empty())
    throw UsageError(std::string(what) + ": no interior nodes at this size");

  for (auto [i, j] : cells) {
    if (in(i + 1, j)) g.add_edge(lattice_name(i, j), lattice_name(i + 1, j), h);
    if (in(i, j + 1)) g.add_edge(lattice_name(i, j), lattice_name(i, j + 1), h);
  }
  const double hd = h * std::sqrt(2.0);
  for (auto [i, j] : cells) {
    if (interior_at(i, j)) continue;
    if (interior_at(i - 1, j) || interior_at(i + 1, j) ||
        interior_at(i, j - 1) || interior_at(i, j + 1))
      continue;
    bool healed = false;
    for (int di : {-1, 1})
      for (int dj : {-1, 1})
        if (interior_at(i + di, j + dj)) {
          g.add_edge(lattice_name(i, j), lattice_name(i + di, j + dj), hd);
          healed = true;
        }
    if (!healed)
      throw UsageError(std::string(what) + ": boundary node " +
                       lattice_name(i, j) +
                       " cannot reach the interior; size too small");
  }
  return Domain::create(std::move(g), interior, boundary, per,
                        Validate::strict);
}

inline Domain make_path(const DomainSpec& spec) {
  const int n = spec.n;
  if (n < 3) throw UsageError("path: need n >= 3 so an interior exists");
  auto name = [&](int i) {
    // single letters up to z keep small instances easy to address by hand
    if (n <= 26) return std::string(1, static_cast<char>('a' + i));
    return "p" + std::to_string(i);
  };
  const double h = spec.h;
  const double mu_i =
      spec.measure == DomainSpec::Measure::cell_volume ? h : 1.0;
  MetricGraph g;
  for (int i = 0; i < n; ++i) {
    const bool inner = i > 0 && i < n - 1;
    g.add_node(name(i), inner ? mu_i : 0.0, {h * i});
  }
  for (int i = 0; i + 1 < n; ++i) g.add_edge(name(i), name(i + 1), h);
  std::vector<std::string> interior;
  for (int i = 1; i + 1 < n; ++i) interior.push_back(name(i));
  // an endpoint is a zero-dimensional face under either convention
  std::unordered_map<std::string, double> per{{name(0), 1.0},
                                              {name(n - 1), 1.0}};
  return Domain::create(std::move(g), interior, {name(0), name(n - 1)}, per,
                        Validate::strict);
}

inline Domain make_grid(const DomainSpec& spec) {
  if (spec.n < 3) throw UsageError("grid: need n >= 3 so an interior exists");
  std::set<std::pair<int, int>> cells;
  for (int i = 0; i < spec.n; ++i)
    for (int j = 0; j < spec.n; ++j) cells.insert({i, j});
  return build_planar_lattice(cells, spec, "grid");
}

inline Domain make_lshape(const DomainSpec& spec) {
  const int n = spec.n;
  if (n < 6)
    throw UsageError("lshape: need n >= 6 so both arms have an interior");
  const int m = n / 2;
  std::set<std::pair<int, int>> cells;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!(i >= m && j >= m)) cells.insert({i, j});
  return build_planar_lattice(cells, spec, "lshape");
}

inline Domain make_annulus_grid(const DomainSpec& spec) {
  const int n = spec.n;
  if (n < 9)
    throw UsageError(
        "annulus_grid: need n >= 9 so the wall around the hole has an "
        "interior");
  const int lo = n / 3;
  const int hi = n - n / 3;
  std::set<std::pair<int, int>> cells;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!(i >= lo && i < hi && j >= lo && j < hi)) cells.insert({i, j});
  return build_planar_lattice(cells, spec, "annulus_grid");
}

inline void gasket_rec(std::pair<int, int> a, std::pair<int, int> b,
                       std::pair<int, int> c, int lev,
                       std::set<std::pair<std::pair<int, int>,
                                          std::pair<int, int>>>& edges) {
  if (lev == 0) {
    edges.insert(std::minmax(a, b));
    edges.insert(std::minmax(b, c));
    edges.insert(std::minmax(a, c));
    return;
  }
  std::pair<int, int> ab{(a.first + b.first) / 2, (a.second + b.second) / 2};
  std::pair<int, int> bc{(b.first + c.first) / 2, (b.second + c.second) / 2};
  std::pair<int, int> ca{(c.first + a.first) / 2, (c.second + a.second) / 2};
  gasket_rec(a, ab, ca, lev - 1, edges);
  gasket_rec(ab, b, bc, lev - 1, edges);
  gasket_rec(ca, bc, c, lev - 1, edges);
}

inline Domain make_sierpinski(const DomainSpec& spec) {
  const int L = spec.level;
  if (L < 1)
    throw UsageError("sierpinski: need level >= 1 so an interior exists");
  if (L > 12) throw UsageError("sierpinski: level > 12 is not supported");
  const int top = 1 << L;
  const double h = spec.h;

  std::set<std::pair<std::pair<int, int>, std::pair<int, int>>> edge_set;
  gasket_rec({0, 0}, {top, 0}, {0, top}, L, edge_set);

  std::set<std::pair<int, int>> keys;
  for (const auto& e : edge_set) {
    keys.insert(e.first);
    keys.insert(e.second);
  }
  const std::set<std::pair<int, int>> corners{{0, 0}, {0, top}, {top, 0}};

  // keys live in triangular-lattice coordinates: position = i*e1 + j*e2 with
  // e1 = (1, 0) and e2 = (1/2, sqrt(3)/2), one lattice step per finest edge
  const double s3 = std::sqrt(3.0) / 2.0;
  const double mu_i = spec.measure == DomainSpec::Measure::cell_volume
                          ? std::pow(h, std::log2(3.0))
                          : 1.0;
  MetricGraph g;
  std::vector<std::string> interior, boundary;
  std::unordered_map<std::string, double> per;
  auto name = [](std::pair<int, int> k) {
    return "s" + std::to_string(k.first) + "_" + std::to_string(k.second);
  };
  for (const auto& k : keys) {
    const bool corner = corners.count(k) != 0;
    g.add_node(name(k), corner ? 0.0 : mu_i,
               {h * (k.first + 0.5 * k.second), h * s3 * k.second});
    if (corner) {
      boundary.push_back(name(k));
      per[name(k)] = 1.0;
    } else {
      interior.push_back(name(k));
    }
  }
  for (const auto& e : edge_set) g.add_edge(name(e.first), name(e.second), h);
  return Domain::create(std::move(g), interior, boundary, per,
                        Validate::strict);
}

}  // namespace detail

inline Domain generate(const DomainSpec& spec) {
  if (!(spec.h > 0.0) || !std::isfinite(spec.h))
    throw UsageError("domain spacing h must be finite and > 0");
  switch (spec.kind) {
    case DomainSpec::Kind::path:
      return detail::make_path(spec);
    case DomainSpec::Kind::grid:
      return detail::make_grid(spec);
    case DomainSpec::Kind::lshape:
      return detail::make_lshape(spec);
    case DomainSpec::Kind::annulus_grid:
      return detail::make_annulus_grid(spec);
    case DomainSpec::Kind::sierpinski:
      return detail::make_sierpinski(spec);
    case DomainSpec::Kind::file:
      if (spec.path.empty())
        throw UsageError("file domain kind needs a path");
      return load_domain(spec.path);
  }
  throw UsageError("unknown domain kind");
}

enum class DataKind { dipole, constant_sign_patch, random_compatible };

/// Boundary data with exactly zero perimeter-weighted mean. A single
/// boundary node forces f = 0 (returned with a warning).
inline NodeField make_boundary_data(const Domain& dom, DataKind kind,
                                    std::uint64_t seed = 0) {
  const std::vector<NodeId>& bdry = dom.boundary();
  NodeField f = NodeField::zeros(dom);
  if (bdry.size() < 2) {
    log_warn("make_boundary_data: a single boundary node admits only f = 0");
    return f;
  }
  const MetricGraph& g = dom.graph();
  auto farthest_from = [&](NodeId src) {
    const std::vector<double> d = g.distances(src);
    NodeId best = src;
    double bd = -1.0;
    for (NodeId b : bdry)
      if (std::isfinite(d[b]) && d[b] > bd) {
        bd = d[b];
        best = b;
      }
    return std::pair<NodeId, double>{best, bd};
  };

  // pivot: where the compatibility residue gets cancelled; must be a node
  // whose sign survives a perturbation of relative size ~1e-16
  NodeId pivot = -1;

  switch (kind) {
    case DataKind::dipole: {
      // two antipodal poles found by a double sweep; ties resolve to the
      // smaller node id, and the smaller of the pair carries the sink
      auto [x, dx] = farthest_from(bdry.front());
      auto [y, dy] = farthest_from(x);
      (void)dx;
      (void)dy;
      const NodeId lo = std::min(x, y), hi = std::max(x, y);
      f[lo] = -1.0;
      f[hi] = 1.0;
      pivot = dom.perimeter(lo) >= dom.perimeter(hi) ? lo : hi;
      // unequal pole weights leave a defect; spread it over the whole
      // boundary so the poles stay at (almost) unit strength
      const double defect =
          f[lo] * dom.perimeter(lo) + f[hi] * dom.perimeter(hi);
      if (defect != 0.0) {
        const double shift = defect / dom.boundary_perimeter();
        for (NodeId b : bdry) f[b] -= shift;
      }
      break;
    }
    case DataKind::constant_sign_patch: {
      // +1 on a ball around a seed-chosen centre, balancing negative mass on
      // a ball around the antipode; everything else stays exactly zero
      const NodeId center = bdry[seed % bdry.size()];
      const std::vector<double> dc = g.distances(center);
      auto [anti, ecc] = farthest_from(center);
      const std::vector<double> da = g.distances(anti);
      const double rad = ecc / 4.0;
      std::vector<NodeId> plus, minus;
      for (NodeId b : bdry) {
        if (dc[b] <= rad)
          plus.push_back(b);
        else if (da[b] <= rad)
          minus.push_back(b);
      }
      if (minus.empty()) minus.push_back(anti);
      double pp = 0.0, pm = 0.0;
      for (NodeId b : plus) pp += dom.perimeter(b);
      for (NodeId b : minus) pm += dom.perimeter(b);
      const double level = -pp / pm;
      for (NodeId b : plus) f[b] = 1.0;
      for (NodeId b : minus) f[b] = level;
      pivot = minus.front();
      for (NodeId b : minus)
        if (dom.perimeter(b) > dom.perimeter(pivot)) pivot = b;
      break;
    }
    case DataKind::random_compatible: {
      std::mt19937_64 rng = make_rng(seed, 0x6d626421ull);
      std::uniform_real_distribution<double> unif(-1.0, 1.0);
      for (NodeId b : bdry) f[b] = unif(rng);
      double mass = 0.0;
      for (NodeId b : bdry) mass += f[b] * dom.perimeter(b);
      const double shift = mass / dom.boundary_perimeter();
      for (NodeId b : bdry) f[b] -= shift;
      pivot = bdry.front();
      for (NodeId b : bdry)
        if (dom.perimeter(b) > dom.perimeter(pivot)) pivot = b;
      break;
    }
  }

  // kill the floating-point residue of the construction at the pivot node;
  // a couple of passes reach the rounding floor of the summation itself
  for (int pass = 0; pass < 4; ++pass) {
    double mass = 0.0, scale = 0.0;
    for (NodeId b : bdry) {
      mass += f[b] * dom.perimeter(b);
      scale += std::abs(f[b]) * dom.perimeter(b);
    }
    if (std::abs(mass) <= 1e-15 * scale) break;
    f[pivot] -= mass / dom.perimeter(pivot);
  }
  return f;
}

}  // namespace nplap
