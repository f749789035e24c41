#pragma once

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "intentcap/errors.hpp"

namespace intentcap {

enum class NodeKind { input, task, output };

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::input: return "input";
    case NodeKind::task: return "task";
    case NodeKind::output: return "output";
  }
  return "?";
}

inline NodeKind parse_node_kind(std::string_view s) {
  if (s == "input") return NodeKind::input;
  if (s == "task") return NodeKind::task;
  if (s == "output") return NodeKind::output;
  throw ParseError("unknown node kind '" + std::string(s) + "'");
}

struct WorkflowNode {
  std::string id;
  NodeKind kind = NodeKind::task;
  std::string name;
  std::string description;
  std::vector<std::string> steps;  // task nodes only

  friend bool operator==(const WorkflowNode&, const WorkflowNode&) = default;
};

struct WorkflowEdge {
  std::string from;
  std::string to;

  friend bool operator==(const WorkflowEdge&, const WorkflowEdge&) = default;
  friend auto operator<=>(const WorkflowEdge&, const WorkflowEdge&) = default;
};

/// DAG of input/task/output nodes. Structural checks live in
/// validate_workflow() so that invalid model output can be reported as data.
struct Workflow {
  std::vector<WorkflowNode> nodes;
  std::vector<WorkflowEdge> edges;

  friend bool operator==(const Workflow&, const Workflow&) = default;
};

using WorkflowSet = std::vector<Workflow>;

namespace detail {

struct Graph {
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> out, in;
};

inline Graph build_graph(const Workflow& w) {
  Graph g;
  for (std::size_t i = 0; i < w.nodes.size(); ++i) g.index.emplace(w.nodes[i].id, i);
  g.out.resize(w.nodes.size());
  g.in.resize(w.nodes.size());
  for (const auto& e : w.edges) {
    auto f = g.index.find(e.from), t = g.index.find(e.to);
    if (f == g.index.end() || t == g.index.end()) continue;
    g.out[f->second].push_back(t->second);
    g.in[t->second].push_back(f->second);
  }
  return g;
}

inline std::vector<bool> reach(const std::vector<std::vector<std::size_t>>& adj,
                               const std::vector<std::size_t>& sources) {
  std::vector<bool> seen(adj.size(), false);
  std::vector<std::size_t> stack(sources);
  for (auto s : sources) seen[s] = true;
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    for (auto v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace detail

/// Every violated workflow invariant, one message per violation. Empty means
/// the workflow is a valid DAG.
inline std::vector<std::string> validate_workflow(const Workflow& w) {
  std::vector<std::string> report;
  if (w.nodes.empty()) report.emplace_back("workflow has no nodes");

  std::map<std::string, const WorkflowNode*> by_id;
  for (const auto& n : w.nodes) {
    if (n.id.empty()) report.emplace_back("node with empty id");
    if (!by_id.emplace(n.id, &n).second) report.push_back("duplicate node id '" + n.id + "'");
    if (n.name.empty()) report.push_back("node '" + n.id + "' has an empty name");
    if (n.kind == NodeKind::task && n.steps.empty()) {
      report.push_back("task node '" + n.id + "' has no steps");
    }
    if (n.kind != NodeKind::task && !n.steps.empty()) {
      report.push_back(std::string(to_string(n.kind)) + " node '" + n.id + "' must not have steps");
    }
  }

  for (const auto& e : w.edges) {
    auto f = by_id.find(e.from), t = by_id.find(e.to);
    if (f == by_id.end()) report.push_back("edge source '" + e.from + "' is not a node");
    if (t == by_id.end()) report.push_back("edge target '" + e.to + "' is not a node");
    if (t != by_id.end() && t->second->kind == NodeKind::input) {
      report.push_back("edge " + e.from + " -> " + e.to + " terminates at an input node");
    }
    if (f != by_id.end() && f->second->kind == NodeKind::output) {
      report.push_back("edge " + e.from + " -> " + e.to + " originates at an output node");
    }
  }

  const auto g = detail::build_graph(w);
  const std::size_t n = w.nodes.size();

  // Kahn: whatever never reaches in-degree 0 sits on or behind a cycle.
  std::vector<std::size_t> indeg(n);
  for (std::size_t i = 0; i < n; ++i) indeg[i] = g.in[i].size();
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push_back(i);
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto u = ready.back();
    ready.pop_back();
    ++visited;
    for (auto v : g.out[u])
      if (--indeg[v] == 0) ready.push_back(v);
  }
  if (visited != n) {
    std::string members;
    for (std::size_t i = 0; i < n; ++i) {
      if (indeg[i] > 0) members += (members.empty() ? "" : ", ") + w.nodes[i].id;
    }
    report.push_back("cycle detected among nodes: " + members);
  }

  std::vector<std::size_t> inputs, outputs;
  for (std::size_t i = 0; i < n; ++i) {
    if (w.nodes[i].kind == NodeKind::input) inputs.push_back(i);
    if (w.nodes[i].kind == NodeKind::output) outputs.push_back(i);
  }
  const auto from_input = detail::reach(g.out, inputs);
  const auto to_output = detail::reach(g.in, outputs);
  for (std::size_t i = 0; i < n; ++i) {
    if (w.nodes[i].kind != NodeKind::task) continue;
    if (!from_input[i]) {
      report.push_back("task node '" + w.nodes[i].id + "' is not reachable from an input (unreachable input)");
    }
    if (!to_output[i]) {
      report.push_back("task node '" + w.nodes[i].id + "' has no path to an output (unreachable output)");
    }
  }
  return report;
}

inline bool is_valid_workflow(const Workflow& w) { return validate_workflow(w).empty(); }

/// Nodes in topological order; ready nodes are taken by ascending (name, id).
inline std::vector<std::size_t> canonical_node_order(const Workflow& w) {
  const auto g = detail::build_graph(w);
  const std::size_t n = w.nodes.size();
  auto key = [&](std::size_t i) { return std::tie(w.nodes[i].name, w.nodes[i].id); };
  auto later = [&](std::size_t a, std::size_t b) { return key(a) > key(b); };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
  std::vector<std::size_t> indeg(n);
  for (std::size_t i = 0; i < n; ++i) {
    indeg[i] = g.in[i].size();
    if (indeg[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    auto u = ready.top();
    ready.pop();
    order.push_back(u);
    for (auto v : g.out[u])
      if (--indeg[v] == 0) ready.push(v);
  }
  return order;
}

namespace detail {
inline std::string one_line(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}
}  // namespace detail

/// Deterministic text form used by the text metrics:
///   KIND | name | description | step1; step2
///   from -> to
/// Node lines in canonical topological order, then edges ordered by the
/// positions of their endpoints. Throws ValidationError on invalid workflows.
inline std::string canonical_serialize(const Workflow& w) {
  if (auto report = validate_workflow(w); !report.empty()) {
    throw ValidationError("cannot serialize invalid workflow: " + report.front());
  }
  const auto order = canonical_node_order(w);
  std::map<std::string, std::size_t> position;
  for (std::size_t p = 0; p < order.size(); ++p) position[w.nodes[order[p]].id] = p;

  std::string out;
  for (auto i : order) {
    const auto& node = w.nodes[i];
    std::string kind(to_string(node.kind));
    std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) {
      return static_cast<char>(std::toupper(c));
    });
    out += kind + " | " + detail::one_line(node.name) + " | " +
           detail::one_line(node.description) + " |";
    for (std::size_t s = 0; s < node.steps.size(); ++s) {
      out += (s == 0 ? " " : "; ") + detail::one_line(node.steps[s]);
    }
    out += '\n';
  }

  std::vector<WorkflowEdge> edges = w.edges;
  std::sort(edges.begin(), edges.end(), [&](const WorkflowEdge& a, const WorkflowEdge& b) {
    return std::pair(position[a.from], position[a.to]) < std::pair(position[b.from], position[b.to]);
  });
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& e : edges) out += e.from + " -> " + e.to + '\n';
  return out;
}

}  // namespace intentcap
