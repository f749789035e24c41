#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "intentcap/core/elements.hpp"
#include "intentcap/core/json_io.hpp"
#include "intentcap/core/sample.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/rng.hpp"

namespace intentcap::benchgen {

/// One catalog line: a registered service and the transformation it offers.
struct CatalogEntry {
  std::string industry;
  std::string service;
  std::string process;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

/// Parses `industry | service | process | in1; in2 | out1; out2` lines.
/// Blank lines and lines starting with '#' are skipped.
inline std::vector<CatalogEntry> parse_catalog(const std::string& text, const std::string& where = "catalog") {
  std::vector<CatalogEntry> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto at = where + ":" + std::to_string(line_no) + ": ";
    const auto fields = detail::split(t, '|');
    if (fields.size() != 5) throw ParseError(at + "expected 5 '|'-separated fields, got " + std::to_string(fields.size()));
    CatalogEntry e{fields[0], fields[1], fields[2], {}, {}};
    if (e.industry.empty() || e.service.empty() || e.process.empty()) {
      throw ParseError(at + "industry, service and process must be non-empty");
    }
    for (auto& x : detail::split(fields[3], ';')) {
      if (!x.empty()) e.inputs.push_back(x);
    }
    for (auto& x : detail::split(fields[4], ';')) {
      if (!x.empty()) e.outputs.push_back(x);
    }
    if (e.inputs.empty() || e.outputs.empty()) throw ParseError(at + "each service needs at least one input and one output");
    if (!seen.insert({e.industry, e.service}).second) {
      throw ParseError(at + "duplicate service '" + e.industry + " | " + e.service + "'");
    }
    out.push_back(std::move(e));
  }
  if (out.empty()) throw ParseError(where + ": catalog has no services");
  return out;
}

inline std::vector<CatalogEntry> load_catalog(const std::filesystem::path& path) {
  return parse_catalog(io::read_text_file(path), path.string());
}

/// Element pools with service tags. Equal strings collapse into one entry
/// carrying every service that uses them; order is first appearance.
inline Pools build_pools(const std::vector<CatalogEntry>& catalog) {
  if (catalog.empty()) throw ValidationError("catalog is empty");
  Pools pools;
  std::array<std::map<std::string, std::size_t>, 3> index;
  auto add = [&](Component c, const std::string& text, const ServiceTag& tag) {
    auto& pool = c == Component::input ? pools.input_pool
                 : c == Component::process ? pools.process_pool
                                           : pools.output_pool;
    auto& idx = index[static_cast<std::size_t>(c)];
    auto it = idx.find(text);
    if (it == idx.end()) {
      idx.emplace(text, pool.size());
      pool.push_back({SemanticElement(text), {tag}});
    } else if (auto& tags = pool[it->second].tags; std::find(tags.begin(), tags.end(), tag) == tags.end()) {
      tags.push_back(tag);
    }
  };
  for (const auto& e : catalog) {
    const ServiceTag tag{e.industry, e.service};
    for (const auto& x : e.inputs) add(Component::input, x, tag);
    add(Component::process, e.process, tag);
    for (const auto& x : e.outputs) add(Component::output, x, tag);
  }
  return pools;
}

inline bool has_tag(const PoolElement& e, const ServiceTag& tag) {
  return std::find(e.tags.begin(), e.tags.end(), tag) != e.tags.end();
}

/// Draws one complete intention: a process element chosen uniformly among
/// those not in `exclude`, one of its services, and every input and output
/// tagged with that service. The id is left empty.
inline Intention draw_intention(const Pools& pools, Rng& rng, const std::set<std::string>& exclude = {}) {
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < pools.process_pool.size(); ++k) {
    if (!exclude.count(pools.process_pool[k].element.text())) candidates.push_back(k);
  }
  if (candidates.empty()) throw ValidationError("process pool has no element left to draw");
  const auto& process = pools.process_pool[candidates[uniform_index(rng, candidates.size())]];
  if (process.tags.empty()) throw ValidationError("process element '" + process.element.text() + "' has no tag");
  const auto& tag = process.tags[uniform_index(rng, process.tags.size())];
  ElementList inputs, outputs;
  for (const auto& e : pools.input_pool) {
    if (has_tag(e, tag)) inputs.push_back(e.element);
  }
  for (const auto& e : pools.output_pool) {
    if (has_tag(e, tag)) outputs.push_back(e.element);
  }
  if (inputs.empty() || outputs.empty()) {
    throw ValidationError("service " + tag.label() + " lacks inputs or outputs in the pools");
  }
  return Intention{"", SignalTriple(inputs, ElementList{process.element}, outputs), {tag.label()}};
}

}  // namespace intentcap::benchgen
