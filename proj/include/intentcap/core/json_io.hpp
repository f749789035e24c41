#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "intentcap/core/elements.hpp"
#include "intentcap/core/sample.hpp"
#include "intentcap/core/workflow.hpp"
#include "intentcap/errors.hpp"

namespace intentcap::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline const json& require(const json& j, const char* key) {
  if (!j.is_object()) throw ParseError(std::string("expected object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

inline std::string require_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

inline std::vector<std::string> string_list(const json& v, const char* what) {
  if (!v.is_array()) throw ParseError(std::string("field '") + what + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw ParseError(std::string("field '") + what + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

inline std::vector<std::string> optional_string_list(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return string_list(*it, key);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Encoders. ordered_json keeps field order stable in files.

inline ordered_json encode(const ElementList& list) {
  ordered_json out = ordered_json::array();
  for (const auto& e : list) out.push_back(e.text());
  return out;
}

inline ordered_json encode(const SignalTriple& s) {
  ordered_json out;
  out["input"] = encode(s.input());
  out["process"] = encode(s.process());
  out["output"] = encode(s.output());
  return out;
}

inline ordered_json encode(const Intention& i) {
  ordered_json out;
  out["id"] = i.id;
  out["input"] = encode(i.signals.input());
  out["process"] = encode(i.signals.process());
  out["output"] = encode(i.signals.output());
  out["source_tags"] = i.source_tags;
  return out;
}

inline ordered_json encode(const IntentionSet& set) {
  ordered_json out = ordered_json::array();
  for (const auto& i : set) out.push_back(encode(i));
  return out;
}

inline ordered_json encode(const Elicitation& e) {
  ordered_json out;
  out["text"] = e.text();
  out["kind"] = std::string(to_string(e.kind()));
  out["source_intention_ids"] = e.source_intention_ids();
  return out;
}

inline ordered_json encode(const Workflow& w) {
  ordered_json out;
  ordered_json nodes = ordered_json::array();
  for (const auto& n : w.nodes) {
    ordered_json node;
    node["id"] = n.id;
    node["kind"] = std::string(to_string(n.kind));
    node["name"] = n.name;
    node["description"] = n.description;
    node["steps"] = n.steps;
    nodes.push_back(std::move(node));
  }
  ordered_json edges = ordered_json::array();
  for (const auto& e : w.edges) edges.push_back(ordered_json{{"from", e.from}, {"to", e.to}});
  out["nodes"] = std::move(nodes);
  out["edges"] = std::move(edges);
  return out;
}

inline ordered_json encode(const WorkflowSet& set) {
  ordered_json out = ordered_json::array();
  for (const auto& w : set) out.push_back(encode(w));
  return out;
}

inline ordered_json encode(const Sample& s) {
  ordered_json out;
  out["id"] = s.id;
  out["level"] = s.level;
  out["reference_intentions"] = encode(s.reference_intentions);
  ordered_json singulars = ordered_json::array();
  for (const auto& e : s.singular_elicitations) singulars.push_back(encode(e));
  out["singular_elicitations"] = std::move(singulars);
  out["reference_workflows"] = encode(s.reference_workflows);
  out["mixed_elicitation"] = encode(s.mixed_elicitation);
  return out;
}

inline ordered_json encode(const std::vector<PoolElement>& pool) {
  ordered_json out = ordered_json::array();
  for (const auto& e : pool) {
    ordered_json tags = ordered_json::array();
    for (const auto& t : e.tags) tags.push_back(ordered_json{{"industry", t.industry}, {"service", t.service}});
    out.push_back(ordered_json{{"text", e.element.text()}, {"tags", std::move(tags)}});
  }
  return out;
}

inline ordered_json encode(const Pools& p) {
  ordered_json out;
  out["input"] = encode(p.input_pool);
  out["process"] = encode(p.process_pool);
  out["output"] = encode(p.output_pool);
  return out;
}

// ---------------------------------------------------------------------------
// Decoders. Element-level failures surface as ParseError.

template <typename Fn>
auto rethrow_as_parse(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

inline ElementList decode_elements(const json& v, const char* what) {
  return rethrow_as_parse(what, [&] { return make_elements(detail::string_list(v, what)); });
}

inline SignalTriple decode_signals(const json& j) {
  return SignalTriple(decode_elements(detail::require(j, "input"), "input"),
                      decode_elements(detail::require(j, "process"), "process"),
                      decode_elements(detail::require(j, "output"), "output"));
}

inline Intention decode_intention(const json& j) {
  Intention i;
  i.id = detail::require_string(j, "id");
  i.signals = decode_signals(j);
  i.source_tags = detail::optional_string_list(j, "source_tags");
  return i;
}

inline IntentionSet decode_intention_set(const json& v) {
  if (!v.is_array()) throw ParseError("intention set must be an array");
  std::vector<Intention> items;
  for (const auto& j : v) items.push_back(decode_intention(j));
  return rethrow_as_parse("intention set", [&] { return IntentionSet(std::move(items)); });
}

inline Elicitation decode_elicitation(const json& j) {
  const auto kind = detail::require_string(j, "kind");
  if (kind != "singular" && kind != "mixed") throw ParseError("unknown elicitation kind '" + kind + "'");
  return rethrow_as_parse("elicitation", [&] {
    return Elicitation(detail::require_string(j, "text"),
                       kind == "singular" ? ElicitationKind::singular : ElicitationKind::mixed,
                       detail::string_list(detail::require(j, "source_intention_ids"),
                                           "source_intention_ids"));
  });
}

inline Workflow decode_workflow(const json& j) {
  Workflow w;
  const auto& nodes = detail::require(j, "nodes");
  if (!nodes.is_array()) throw ParseError("'nodes' must be an array");
  for (const auto& n : nodes) {
    WorkflowNode node;
    node.id = detail::require_string(n, "id");
    node.kind = parse_node_kind(detail::require_string(n, "kind"));
    node.name = detail::require_string(n, "name");
    auto d = n.find("description");
    if (d != n.end() && !d->is_null()) {
      if (!d->is_string()) throw ParseError("'description' must be a string");
      node.description = d->get<std::string>();
    }
    node.steps = detail::optional_string_list(n, "steps");
    w.nodes.push_back(std::move(node));
  }
  const auto& edges = detail::require(j, "edges");
  if (!edges.is_array()) throw ParseError("'edges' must be an array");
  for (const auto& e : edges) {
    if (e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_string()) {
      w.edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
    } else {
      w.edges.push_back({detail::require_string(e, "from"), detail::require_string(e, "to")});
    }
  }
  return w;
}

inline WorkflowSet decode_workflow_set(const json& v) {
  if (!v.is_array()) throw ParseError("workflow set must be an array");
  WorkflowSet out;
  for (const auto& j : v) out.push_back(decode_workflow(j));
  return out;
}

inline Sample decode_sample(const json& j) {
  Sample s;
  s.id = detail::require_string(j, "id");
  const auto& level = detail::require(j, "level");
  if (!level.is_number_integer()) throw ParseError("'level' must be an integer");
  s.level = level.get<int>();
  s.reference_intentions = decode_intention_set(detail::require(j, "reference_intentions"));
  for (const auto& e : detail::require(j, "singular_elicitations")) {
    s.singular_elicitations.push_back(decode_elicitation(e));
  }
  s.reference_workflows = decode_workflow_set(detail::require(j, "reference_workflows"));
  s.mixed_elicitation = decode_elicitation(detail::require(j, "mixed_elicitation"));
  return s;
}

inline std::vector<PoolElement> decode_pool(const json& v, const char* what) {
  if (!v.is_array()) throw ParseError(std::string("pool '") + what + "' must be an array");
  std::vector<PoolElement> out;
  for (const auto& e : v) {
    std::vector<ServiceTag> tags;
    for (const auto& t : detail::require(e, "tags")) {
      tags.push_back({detail::require_string(t, "industry"), detail::require_string(t, "service")});
    }
    out.push_back(rethrow_as_parse(what, [&] {
      return PoolElement{SemanticElement(detail::require_string(e, "text")), std::move(tags)};
    }));
  }
  return out;
}

inline Pools decode_pools(const json& j) {
  return Pools{decode_pool(detail::require(j, "input"), "input"),
               decode_pool(detail::require(j, "process"), "process"),
               decode_pool(detail::require(j, "output"), "output")};
}

// ---------------------------------------------------------------------------
// Files. Top-level documents carry schema_version.

inline ordered_json versioned(ordered_json body) {
  ordered_json out;
  out["schema_version"] = kSchemaVersion;
  for (auto it = body.begin(); it != body.end(); ++it) out[it.key()] = it.value();
  return out;
}

inline void check_version(const json& j, const std::string& where) {
  auto it = j.find("schema_version");
  if (it == j.end()) throw ParseError(where + ": missing schema_version");
  if (!it->is_number_integer() || it->get<int>() != kSchemaVersion) {
    throw ParseError(where + ": unsupported schema_version " + it->dump());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Write to a sibling temp file and rename into place.
inline void write_text_file_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

inline json load_json_file(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

inline void save_json_file(const std::filesystem::path& path, const ordered_json& body) {
  write_text_file_atomic(path, versioned(body).dump(2) + "\n");
}

template <typename Decode>
auto load_versioned(const std::filesystem::path& path, Decode&& decode) {
  const auto j = load_json_file(path);
  check_version(j, path.string());
  try {
    return decode(j);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline Workflow load_workflow(const std::filesystem::path& p) { return load_versioned(p, decode_workflow); }
inline Intention load_intention(const std::filesystem::path& p) { return load_versioned(p, decode_intention); }
inline Sample load_sample(const std::filesystem::path& p) { return load_versioned(p, decode_sample); }
inline Pools load_pools(const std::filesystem::path& p) { return load_versioned(p, decode_pools); }

}  // namespace intentcap::io
