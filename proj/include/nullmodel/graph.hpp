#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nullmodel/error.hpp"

namespace nullmodel {

using NodeIndex = std::size_t;
using Degree = std::int64_t;
using Edge = std::pair<NodeIndex, NodeIndex>;

/**
 * Immutable simple undirected graph.
 *
 * Nodes are dense indices 0..n-1 carrying their original string labels.
 * Neighbor lists are sorted and symmetric, there are no self-loops, and
 * degrees/total degree are kept as exact integers.
 */
class Graph {
 public:
  Graph(std::vector<std::string> labels, const std::vector<Edge>& edges)
      : labels_(std::move(labels)), adj_(labels_.size()) {
    const std::size_t n = labels_.size();
    for (const auto& [u, v] : edges) {
      if (u >= n || v >= n) {
        throw Error(ErrorKind::InvalidArgument, "edge endpoint out of range");
      }
      if (u == v) {
        throw Error(ErrorKind::SelfLoop, "self-loop on node '" + labels_[u] + "'");
      }
      adj_[u].push_back(v);
      adj_[v].push_back(u);
    }
    degrees_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& nb = adj_[i];
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      degrees_[i] = static_cast<Degree>(nb.size());
    }
    total_degree_ = std::accumulate(degrees_.begin(), degrees_.end(), Degree{0});
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(NodeIndex i) const { return labels_.at(i); }

  std::span<const NodeIndex> neighbors(NodeIndex i) const { return adj_.at(i); }
  Degree degree(NodeIndex i) const { return degrees_.at(i); }
  const std::vector<Degree>& degrees() const noexcept { return degrees_; }

  /// X_{++}: sum of degrees, twice the edge count.
  Degree total_degree() const noexcept { return total_degree_; }
  std::size_t edge_count() const noexcept { return static_cast<std::size_t>(total_degree_ / 2); }

  bool has_edge(NodeIndex i, NodeIndex j) const {
    const auto& nb = adj_.at(i);
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  Degree min_degree() const {
    return degrees_.empty() ? 0 : *std::min_element(degrees_.begin(), degrees_.end());
  }
  Degree max_degree() const {
    return degrees_.empty() ? 0 : *std::max_element(degrees_.begin(), degrees_.end());
  }

  /// Edges with i < j, in row-major order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (NodeIndex i = 0; i < size(); ++i) {
      for (NodeIndex j : adj_[i]) {
        if (j > i) out.emplace_back(i, j);
      }
    }
    return out;
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::vector<NodeIndex>> adj_;
  std::vector<Degree> degrees_;
  Degree total_degree_ = 0;
};

namespace detail {

inline std::string_view trim_left(std::string_view s) {
  const auto pos = s.find_first_not_of(" \t\r\n\v\f");
  return pos == std::string_view::npos ? std::string_view{} : s.substr(pos);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) tokens.push_back(s.substr(start, i - start));
  }
  return tokens;
}

}  // namespace detail

/**
 * Reads a whitespace-separated edge list.
 *
 * Blank lines and lines whose first non-blank character is '#' or '%' are
 * skipped. Labels get dense indices in order of first appearance; repeated
 * edges (in either orientation) are counted once.
 */
inline Graph parse_edge_list(std::istream& in) {
  std::vector<std::string> labels;
  std::unordered_map<std::string, NodeIndex> index;
  std::vector<Edge> edges;
  auto intern = [&](std::string_view token) {
    auto [it, inserted] = index.try_emplace(std::string(token), labels.size());
    if (inserted) labels.emplace_back(token);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim_left(line);
    if (body.empty() || body.front() == '#' || body.front() == '%') continue;
    const auto tokens = detail::split_ws(body);
    if (tokens.size() != 2) {
      throw Error(ErrorKind::MalformedLine,
                  "line " + std::to_string(line_no) + ": expected 2 tokens, got " +
                      std::to_string(tokens.size()));
    }
    if (tokens[0] == tokens[1]) {
      throw Error(ErrorKind::SelfLoop, "line " + std::to_string(line_no) + ": node '" +
                                           std::string(tokens[0]) + "' linked to itself");
    }
    const NodeIndex u = intern(tokens[0]);
    const NodeIndex v = intern(tokens[1]);
    edges.emplace_back(u, v);
  }
  if (edges.empty()) throw Error(ErrorKind::EmptyGraph, "edge list contains no edges");
  return Graph(std::move(labels), edges);
}

inline Graph parse_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_edge_list(in);
}

inline Graph read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return parse_edge_list(in);
}

/// One "u v" line per edge, labels as given, row-major order.
inline std::string serialize_edge_list(const Graph& g) {
  std::string out;
  for (const auto& [i, j] : g.edges()) {
    out += g.label(i);
    out += ' ';
    out += g.label(j);
    out += '\n';
  }
  return out;
}

/// Largest per-node ratio X_{i+}^2 / X_{++} admissible under sub-exponential constant c0.
inline double sparsity_threshold(double c0) {
  const double root = 15.0 * (c0 + 1.0);
  return 1.0 / (root * root);
}

struct SparsityStats {
  double eps0 = 0.0;
  std::vector<double> per_node_eps;
  Degree min_degree = 0;
  Degree max_degree = 0;
  Degree total_degree = 0;
  std::vector<Degree> degrees;

  /// Fraction of nodes with X_{i+}^2 / X_{++} <= sparsity_threshold(c0).
  double valid_fraction(double c0) const {
    if (degrees.empty()) return 0.0;
    // (15(c0+1))^2 d^2 <= X_{++}, exact for the built-in constants.
    const double scale = 15.0 * (c0 + 1.0);
    const double s2 = scale * scale;
    std::size_t valid = 0;
    for (Degree d : degrees) {
      const double dd = static_cast<double>(d * d);
      if (s2 * dd <= static_cast<double>(total_degree)) ++valid;
    }
    return static_cast<double>(valid) / static_cast<double>(degrees.size());
  }
};

inline SparsityStats sparsity_stats(const Graph& g) {
  if (g.total_degree() == 0) throw Error(ErrorKind::EmptyGraph, "graph has no edges");
  SparsityStats s;
  s.total_degree = g.total_degree();
  s.degrees = g.degrees();
  s.min_degree = g.min_degree();
  s.max_degree = g.max_degree();
  s.per_node_eps.reserve(g.size());
  const double total = static_cast<double>(g.total_degree());
  for (Degree d : g.degrees()) {
    s.per_node_eps.push_back(static_cast<double>(d * d) / total);
  }
  s.eps0 = static_cast<double>(s.max_degree * s.max_degree) / total;
  return s;
}

struct StrippedGraph {
  Graph graph;
  std::vector<std::string> removed;
};

/// Induced subgraph on nodes of degree >= 1; relative node order is kept.
inline StrippedGraph strip_isolated(const Graph& g) {
  std::vector<NodeIndex> remap(g.size(), g.size());
  std::vector<std::string> labels;
  std::vector<std::string> removed;
  for (NodeIndex i = 0; i < g.size(); ++i) {
    if (g.degree(i) == 0) {
      removed.push_back(g.label(i));
    } else {
      remap[i] = labels.size();
      labels.push_back(g.label(i));
    }
  }
  if (labels.empty()) throw Error(ErrorKind::EmptyGraph, "every node is isolated");
  if (removed.empty()) return {g, {}};
  std::vector<Edge> edges;
  for (const auto& [i, j] : g.edges()) edges.emplace_back(remap[i], remap[j]);
  return {Graph(std::move(labels), edges), std::move(removed)};
}

inline void require_no_isolated(const Graph& g) {
  for (NodeIndex i = 0; i < g.size(); ++i) {
    if (g.degree(i) == 0) {
      throw Error(ErrorKind::IsolatedNode, "node '" + g.label(i) + "' has degree 0");
    }
  }
}

}  // namespace nullmodel
