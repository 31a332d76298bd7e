#pragma once

// Domain files and report artifacts. All numeric output funnels through one
// fixed-format writer (17 significant digits) so repeated runs with the same
// inputs produce byte-identical files.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "graph.hpp"
#include "log.hpp"

namespace nplap {

using json = nlohmann::ordered_json;

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void json_escape_to(std::string& out, const std::string& s) {
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
}

inline void json_dump_to(std::string& out, const json& j, int depth) {
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::string pad(2 * (depth + 1), ' ');
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        out += '"';
        json_escape_to(out, it.key());
        out += "\": ";
        json_dump_to(out, it.value(), depth + 1);
      }
      out += '\n';
      out.append(2 * depth, ' ');
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      std::string pad(2 * (depth + 1), ' ');
      bool first = true;
      for (const json& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        json_dump_to(out, v, depth + 1);
      }
      out += '\n';
      out.append(2 * depth, ' ');
      out += ']';
      return;
    }
    case json::value_t::string:
      out += '"';
      json_escape_to(out, j.get_ref<const std::string&>());
      out += '"';
      return;
    case json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      return;
    case json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      return;
    case json::value_t::number_float: {
      double v = j.get<double>();
      // JSON has no literal for non-finite values
      out += std::isfinite(v) ? fmt_g17(v) : "null";
      return;
    }
    default:
      out += "null";
      return;
  }
}

}  // namespace detail

inline std::string dump_json(const json& j) {
  std::string out;
  detail::json_dump_to(out, j, 0);
  out += '\n';
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open '" + path + "' for writing");
  f << content;
  f.flush();
  if (!f) throw UsageError("write to '" + path + "' failed");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline json domain_to_json(const Domain& dom) {
  const MetricGraph& g = dom.graph();
  for (NodeId i = 0; i < g.node_count(); ++i)
    if (dom.is_exterior(i))
      throw UsageError("node '" + g.node(i).name +
                       "' is exterior; such domains have no file representation");
  json nodes = json::array();
  for (NodeId i = 0; i < g.node_count(); ++i) {
    const Node& nd = g.node(i);
    json n;
    n["id"] = nd.name;
    n["mu"] = nd.mu;
    if (!nd.coords.empty()) n["coords"] = nd.coords;
    n["boundary"] = dom.is_boundary(i);
    if (dom.is_boundary(i)) n["perimeter"] = dom.perimeter(i);
    nodes.push_back(std::move(n));
  }
  json edges = json::array();
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edge(e);
    json row;
    row["a"] = g.node(ed.a).name;
    row["b"] = g.node(ed.b).name;
    row["len"] = ed.len;
    edges.push_back(std::move(row));
  }
  json out;
  out["nodes"] = std::move(nodes);
  out["edges"] = std::move(edges);
  return out;
}

inline Domain domain_from_json(const json& j, const std::string& origin) {
  auto fail = [&](const std::string& msg) {
    return UsageError(origin + ": " + msg);
  };
  if (!j.is_object()) throw fail("top level must be an object");
  if (!j.contains("nodes") || !j["nodes"].is_array())
    throw fail("missing \"nodes\" array");
  if (!j.contains("edges") || !j["edges"].is_array())
    throw fail("missing \"edges\" array");

  MetricGraph g;
  std::vector<std::string> interior, boundary;
  std::unordered_map<std::string, double> per;

  const json& nodes = j["nodes"];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const json& n = nodes[i];
    std::string at = "nodes[" + std::to_string(i) + "]";
    if (!n.is_object()) throw fail(at + ": expected an object");
    if (!n.contains("id") || !n["id"].is_string())
      throw fail(at + ": missing string field \"id\"");
    const std::string id = n["id"].get<std::string>();
    at += " ('" + id + "')";
    if (!n.contains("mu") || !n["mu"].is_number())
      throw fail(at + ": missing numeric field \"mu\"");
    if (!n.contains("boundary") || !n["boundary"].is_boolean())
      throw fail(at + ": missing boolean field \"boundary\"");
    const bool bdry = n["boundary"].get<bool>();
    if (bdry != n.contains("perimeter"))
      throw fail(at + ": \"perimeter\" is required exactly on boundary nodes");
    std::vector<double> coords;
    if (n.contains("coords")) {
      if (!n["coords"].is_array())
        throw fail(at + ": \"coords\" must be an array of numbers");
      for (const json& c : n["coords"]) {
        if (!c.is_number())
          throw fail(at + ": \"coords\" must be an array of numbers");
        coords.push_back(c.get<double>());
      }
    }
    try {
      g.add_node(id, n["mu"].get<double>(), std::move(coords));
    } catch (const UsageError& e) {
      throw fail(at + ": " + e.what());
    }
    if (bdry) {
      if (!n["perimeter"].is_number())
        throw fail(at + ": \"perimeter\" must be a number");
      boundary.push_back(id);
      per[id] = n["perimeter"].get<double>();
    } else {
      interior.push_back(id);
    }
  }

  const json& edges = j["edges"];
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const json& e = edges[i];
    std::string at = "edges[" + std::to_string(i) + "]";
    if (!e.is_object()) throw fail(at + ": expected an object");
    if (!e.contains("a") || !e["a"].is_string() || !e.contains("b") ||
        !e["b"].is_string())
      throw fail(at + ": endpoints \"a\" and \"b\" must be node ids");
    if (!e.contains("len") || !e["len"].is_number())
      throw fail(at + ": missing numeric field \"len\"");
    try {
      g.add_edge(e["a"].get<std::string>(), e["b"].get<std::string>(),
                 e["len"].get<double>());
    } catch (const UsageError& ex) {
      throw fail(at + ": " + ex.what());
    }
  }

  try {
    return Domain::create(std::move(g), interior, boundary, per,
                          Validate::strict);
  } catch (const UsageError& e) {
    throw fail(e.what());
  }
}

inline Domain load_domain(const std::string& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // the parser reports line and column of the offending byte
    throw UsageError(path + ": " + e.what());
  }
  return domain_from_json(j, path);
}

inline void save_domain(const Domain& dom, const std::string& path) {
  write_text_file(path, dump_json(domain_to_json(dom)));
}

}  // namespace nplap
