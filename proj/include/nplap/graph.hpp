#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nplap/log.hpp"

namespace nplap {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input, bad arguments, violated preconditions.
struct UsageError : Error {
  using Error::Error;
};

// Boundary data fails the zero-mean solvability requirement.
struct CompatibilityError : Error {
  double defect = 0.0;
  CompatibilityError(const std::string& msg, double d) : Error(msg), defect(d) {}
};

// A check was asked to certify something whose hypothesis does not hold.
struct HypothesisError : Error {
  using Error::Error;
};

using NodeId = int;
using EdgeId = int;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  std::string name;
  double mu = 0.0;
  std::vector<double> coords;  // optional, purely informational
};

struct Edge {
  NodeId a = -1;
  NodeId b = -1;
  double len = 1.0;
};

/// Finite metric measure space: a connected weighted graph with the
/// shortest-path metric and a non-negative node measure.
class MetricGraph {
 public:
  NodeId add_node(std::string name, double mu, std::vector<double> coords = {}) {
    if (index_.count(name))
      throw UsageError("duplicate node id '" + name + "'");
    if (!(mu >= 0.0) || !std::isfinite(mu))
      throw UsageError("node '" + name + "': measure must be finite and >= 0");
    NodeId id = static_cast<NodeId>(nodes_.size());
    index_.emplace(name, id);
    nodes_.push_back(Node{std::move(name), mu, std::move(coords)});
    incident_.emplace_back();
    return id;
  }

  EdgeId add_edge(NodeId a, NodeId b, double len) {
    if (a < 0 || b < 0 || a >= node_count() || b >= node_count())
      throw UsageError("edge endpoint out of range");
    if (a == b)
      throw UsageError("self-loop at node '" + nodes_[a].name + "'");
    if (!(len > 0.0) || !std::isfinite(len))
      throw UsageError("edge {" + nodes_[a].name + "," + nodes_[b].name +
                       "}: length must be finite and > 0");
    EdgeId e = static_cast<EdgeId>(edges_.size());
    edges_.push_back(Edge{a, b, len});
    incident_[a].push_back(e);
    incident_[b].push_back(e);
    return e;
  }

  EdgeId add_edge(const std::string& a, const std::string& b, double len) {
    return add_edge(require(a), require(b), len);
  }

  NodeId node_count() const { return static_cast<NodeId>(nodes_.size()); }
  EdgeId edge_count() const { return static_cast<EdgeId>(edges_.size()); }
  const Node& node(NodeId i) const { return nodes_[i]; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<EdgeId>& incident(NodeId i) const { return incident_[i]; }

  std::optional<NodeId> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  NodeId require(const std::string& name) const {
    auto id = find(name);
    if (!id) throw UsageError("unknown node id '" + name + "'");
    return *id;
  }

  NodeId other_end(EdgeId e, NodeId i) const {
    const Edge& ed = edges_[e];
    return ed.a == i ? ed.b : ed.a;
  }

  /// Shortest-path distances from src. Nodes farther than cap are left at
  /// infinity (search stops once the frontier exceeds cap).
  std::vector<double> distances(NodeId src, double cap = kInf) const {
    std::vector<double> dist(nodes_.size(), kInf);
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (d > dist[v]) continue;
      if (d > cap) break;
      for (EdgeId e : incident_[v]) {
        NodeId w = other_end(e, v);
        double nd = d + edges_[e].len;
        if (nd < dist[w]) {
          dist[w] = nd;
          heap.emplace(nd, w);
        }
      }
    }
    if (cap < kInf)
      for (double& d : dist)
        if (d > cap) d = kInf;
    return dist;
  }

  double eccentricity(NodeId src) const {
    double m = 0.0;
    for (double d : distances(src))
      if (std::isfinite(d)) m = std::max(m, d);
    return m;
  }

  /// Largest shortest-path distance between any two connected nodes.
  double diameter() const {
    double m = 0.0;
    for (NodeId i = 0; i < node_count(); ++i) m = std::max(m, eccentricity(i));
    return m;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> incident_;
  std::unordered_map<std::string, NodeId> index_;
};

enum class NodeKind : unsigned char { exterior = 0, interior = 1, boundary = 2 };

enum class Validate { strict, lenient };

/// A bounded domain carved out of a MetricGraph: an interior node set with
/// positive measure, a boundary node set carrying a perimeter weight and zero
/// measure, and conductances on edges derived from the node measure.
///
/// Strict validation (used by loaders and generators) additionally requires
/// that interior and boundary together cover every node touched by an edge,
/// that each boundary node sees the interior directly, and that the interior
/// is connected through interior-or-boundary paths. Lenient validation keeps
/// only the local requirements so synthetic fixtures may carry exterior
/// nodes.
class Domain {
 public:
  static Domain create(MetricGraph graph, const std::vector<std::string>& interior,
                       const std::vector<std::string>& boundary,
                       const std::unordered_map<std::string, double>& perimeter,
                       Validate mode = Validate::strict) {
    Domain dom;
    dom.graph_ = std::move(graph);
    const MetricGraph& g = dom.graph_;
    NodeId n = g.node_count();
    dom.kind_.assign(n, NodeKind::exterior);
    dom.perimeter_.assign(n, 0.0);

    for (const auto& name : interior) {
      NodeId i = g.require(name);
      if (dom.kind_[i] != NodeKind::exterior)
        throw UsageError("node '" + name + "' listed twice in the domain");
      dom.kind_[i] = NodeKind::interior;
    }
    for (const auto& name : boundary) {
      NodeId i = g.require(name);
      if (dom.kind_[i] != NodeKind::exterior)
        throw UsageError("node '" + name + "' is both interior and boundary");
      dom.kind_[i] = NodeKind::boundary;
      auto it = perimeter.find(name);
      if (it == perimeter.end())
        throw UsageError("boundary node '" + name + "' has no perimeter weight");
      if (!(it->second > 0.0) || !std::isfinite(it->second))
        throw UsageError("boundary node '" + name +
                         "': perimeter weight must be finite and > 0");
      dom.perimeter_[i] = it->second;
    }
    for (const auto& [name, w] : perimeter) {
      NodeId i = g.require(name);
      if (dom.kind_[i] != NodeKind::boundary)
        throw UsageError("perimeter weight given for non-boundary node '" + name + "'");
      (void)w;
    }

    for (NodeId i = 0; i < n; ++i) {
      if (dom.kind_[i] == NodeKind::interior) dom.interior_.push_back(i);
      if (dom.kind_[i] == NodeKind::boundary) dom.boundary_.push_back(i);
    }
    if (dom.interior_.empty()) throw UsageError("domain has no interior nodes");
    if (dom.boundary_.empty()) throw UsageError("domain has no boundary nodes");

    double mass = 0.0;
    for (NodeId i : dom.interior_) mass += g.node(i).mu;
    if (!(mass > 0.0)) throw UsageError("interior carries no measure");
    dom.interior_mass_ = mass;
    for (NodeId i : dom.boundary_) {
      if (g.node(i).mu != 0.0)
        throw UsageError("boundary node '" + g.node(i).name +
                         "' must carry zero measure");
      dom.boundary_perimeter_ += dom.perimeter_[i];
    }

    dom.edge_weight_.resize(g.edge_count());
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      const Edge& ed = g.edge(e);
      dom.edge_weight_[e] = 0.5 * (g.node(ed.a).mu + g.node(ed.b).mu);
    }

    if (mode == Validate::strict) dom.validate_strict();
    dom.diameter_ = dom.graph_.diameter();
    return dom;
  }

  const MetricGraph& graph() const { return graph_; }
  NodeId node_count() const { return graph_.node_count(); }
  NodeKind kind(NodeId i) const { return kind_[i]; }
  bool is_interior(NodeId i) const { return kind_[i] == NodeKind::interior; }
  bool is_boundary(NodeId i) const { return kind_[i] == NodeKind::boundary; }
  bool is_exterior(NodeId i) const { return kind_[i] == NodeKind::exterior; }
  const std::vector<NodeId>& interior() const { return interior_; }
  const std::vector<NodeId>& boundary() const { return boundary_; }
  double mu(NodeId i) const { return graph_.node(i).mu; }
  double perimeter(NodeId i) const { return perimeter_[i]; }
  double interior_mass() const { return interior_mass_; }
  double boundary_perimeter() const { return boundary_perimeter_; }
  double edge_weight(EdgeId e) const { return edge_weight_[e]; }
  double diameter() const { return diameter_; }

  /// Shortest edge length; the resolution of the discretization.
  double resolution() const {
    double h = kInf;
    for (const Edge& e : graph_.edges()) h = std::min(h, e.len);
    return h;
  }

  double mu_ball(const std::vector<NodeId>& ball) const {
    double m = 0.0;
    for (NodeId i : ball) m += mu(i);
    return m;
  }

  double perimeter_ball(const std::vector<NodeId>& ball) const {
    double m = 0.0;
    for (NodeId i : ball) m += perimeter_[i];
    return m;
  }

 private:
  void validate_strict() const {
    const MetricGraph& g = graph_;
    for (const Edge& e : g.edges()) {
      for (NodeId i : {e.a, e.b})
        if (kind_[i] == NodeKind::exterior)
          throw UsageError("node '" + g.node(i).name +
                           "' touches an edge but is neither interior nor boundary");
    }
    for (NodeId i : boundary_) {
      bool linked = false;
      for (EdgeId e : g.incident(i))
        if (kind_[g.other_end(e, i)] == NodeKind::interior) linked = true;
      if (!linked)
        throw UsageError("boundary node '" + g.node(i).name +
                         "' has no edge into the interior");
    }
    // interior connectivity through interior-or-boundary nodes
    std::vector<char> seen(g.node_count(), 0);
    std::vector<NodeId> stack{interior_.front()};
    seen[interior_.front()] = 1;
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (EdgeId e : g.incident(v)) {
        NodeId w = g.other_end(e, v);
        if (!seen[w] && kind_[w] != NodeKind::exterior) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    for (NodeId i : interior_)
      if (!seen[i])
        throw UsageError("interior is disconnected: node '" + g.node(i).name +
                         "' unreachable");
  }

  MetricGraph graph_;
  std::vector<NodeKind> kind_;
  std::vector<double> perimeter_;
  std::vector<NodeId> interior_;
  std::vector<NodeId> boundary_;
  std::vector<double> edge_weight_;
  double interior_mass_ = 0.0;
  double boundary_perimeter_ = 0.0;
  double diameter_ = 0.0;
};

/// Open metric ball: node ids with d(center, .) < radius, ascending id order.
inline std::vector<NodeId> ball(const Domain& dom, NodeId center, double radius) {
  if (center < 0 || center >= dom.node_count())
    throw UsageError("ball: center node out of range");
  if (!(radius > 0.0)) throw UsageError("ball: radius must be > 0");
  auto dist = dom.graph().distances(center, radius);
  std::vector<NodeId> out;
  for (NodeId i = 0; i < dom.node_count(); ++i)
    if (dist[i] < radius) out.push_back(i);
  return out;
}

inline std::vector<NodeId> ball(const Domain& dom, const std::string& center,
                                double radius) {
  return ball(dom, dom.graph().require(center), radius);
}

/// Largest pairwise distance within a node set (metric of the ambient graph).
inline double set_diameter(const Domain& dom, const std::vector<NodeId>& set) {
  double m = 0.0;
  for (NodeId i : set) {
    auto dist = dom.graph().distances(i);
    for (NodeId j : set)
      if (std::isfinite(dist[j])) m = std::max(m, dist[j]);
  }
  return m;
}

}  // namespace nplap
