#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "intentcap/core/json_io.hpp"
#include "intentcap/digest.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/llm/types.hpp"

namespace intentcap::llm {

// Deterministic stand-in for a chat model. It reads the structured payload
// attached to each request, so its behaviour can be scripted per role:
//  - elicitations are written in a small set of phrasings that quote every
//    element, and the same phrasings are parsed back for extraction;
//  - intention generation can split per objective or merge everything;
//  - workflow generation without intentions can merge into one workflow
//    or split per objective;
//  - the judge scores structural overlap, or returns fixed scores;
//  - canned replies override any of the above for a role.

namespace stub {

inline std::string quote_list(const ElementList& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += '"' + items[i].text() + '"';
  }
  return out;
}

inline const std::array<std::array<std::string, 4>, 3>& phrasings() {
  // lead-in, between input and process, between process and output, end
  static const std::array<std::array<std::string, 4>, 3> p = {{
      {"Using ", " I want to ", " and get ", "."},
      {"Given ", ", please ", " so that I receive ", "."},
      {"I have ", "; I need you to ", " and deliver ", "."},
  }};
  return p;
}

inline std::string phrase_intention(const SignalTriple& s, std::size_t variant) {
  const auto& p = phrasings()[variant % phrasings().size()];
  return p[0] + quote_list(s.input()) + p[1] + quote_list(s.process()) + p[2] + quote_list(s.output()) + p[3];
}

inline std::string regex_escape(const std::string& s) {
  static const std::string special = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : s) {
    if (special.find(c) != std::string::npos) out += '\\';
    out += c;
  }
  return out;
}

inline std::vector<std::string> quoted_items(const std::string& segment) {
  std::vector<std::string> out;
  static const std::regex item(R"re("([^"]+)")re");
  for (auto it = std::sregex_iterator(segment.begin(), segment.end(), item); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

/// Every intention phrased by phrase_intention() in `text`, in order of
/// appearance.
inline std::vector<SignalTriple> parse_phrased_intentions(const std::string& text) {
  const std::string list = R"re(("[^"]+"(?:, "[^"]+")*))re";
  struct Hit {
    std::size_t pos;
    SignalTriple triple;
  };
  std::vector<Hit> hits;
  for (const auto& p : phrasings()) {
    const std::regex re(regex_escape(p[0]) + list + regex_escape(p[1]) + list + regex_escape(p[2]) + list +
                        regex_escape(p[3]));
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
      hits.push_back({static_cast<std::size_t>(it->position()),
                      SignalTriple(quoted_items((*it)[1].str()), quoted_items((*it)[2].str()),
                                   quoted_items((*it)[3].str()))});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
  std::vector<SignalTriple> out;
  for (auto& h : hits) out.push_back(std::move(h.triple));
  return out;
}

inline std::string join(const ElementList& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i].text();
  return out;
}

/// Linear workflow: every input feeds the first task, tasks run in process
/// order, the last task feeds every output.
inline Workflow workflow_for(const SignalTriple& s) {
  Workflow w;
  for (std::size_t k = 0; k < s.input().size(); ++k) {
    w.nodes.push_back({"in" + std::to_string(k + 1), NodeKind::input, s.input()[k].text(),
                       "Provided " + s.input()[k].text(), {}});
  }
  for (std::size_t t = 0; t < s.process().size(); ++t) {
    const auto& proc = s.process()[t].text();
    w.nodes.push_back({"task" + std::to_string(t + 1), NodeKind::task, proc, "Perform: " + proc,
                       {"Collect " + join(s.input(), ", "), proc, "Emit " + join(s.output(), ", ")}});
  }
  for (std::size_t k = 0; k < s.output().size(); ++k) {
    w.nodes.push_back({"out" + std::to_string(k + 1), NodeKind::output, s.output()[k].text(),
                       "Delivered " + s.output()[k].text(), {}});
  }
  if (!s.process().empty()) {
    for (std::size_t k = 0; k < s.input().size(); ++k) w.edges.push_back({"in" + std::to_string(k + 1), "task1"});
    for (std::size_t t = 1; t < s.process().size(); ++t) {
      w.edges.push_back({"task" + std::to_string(t), "task" + std::to_string(t + 1)});
    }
    const auto last = "task" + std::to_string(s.process().size());
    for (std::size_t k = 0; k < s.output().size(); ++k) w.edges.push_back({last, "out" + std::to_string(k + 1)});
  }
  return w;
}

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

/// Structural-overlap judge on a 0-10 scale: coverage is recall of
/// reference node names, consistency the Jaccard index of named edges,
/// integration the F1 of (kind, name) node sets; total is their mean.
inline std::array<double, 4> faithful_judge(const Workflow& decoded, const Workflow& reference) {
  auto names = [](const Workflow& w) {
    std::set<std::pair<NodeKind, std::string>> s;
    for (const auto& n : w.nodes) s.insert({n.kind, n.name});
    return s;
  };
  auto edges = [](const Workflow& w) {
    std::map<std::string, std::string> name_of;
    for (const auto& n : w.nodes) name_of[n.id] = n.name;
    std::set<std::pair<std::string, std::string>> s;
    for (const auto& e : w.edges) s.insert({name_of[e.from], name_of[e.to]});
    return s;
  };
  const auto dn = names(decoded), rn = names(reference);
  const auto de = edges(decoded), re = edges(reference);
  std::size_t node_hits = 0, edge_hits = 0;
  for (const auto& n : rn) node_hits += dn.count(n);
  for (const auto& e : re) edge_hits += de.count(e);
  const double recall = rn.empty() ? 0.0 : static_cast<double>(node_hits) / static_cast<double>(rn.size());
  const double precision = dn.empty() ? 0.0 : static_cast<double>(node_hits) / static_cast<double>(dn.size());
  const std::size_t edge_union = de.size() + re.size() - edge_hits;
  const double jaccard = edge_union == 0 ? 1.0 : static_cast<double>(edge_hits) / static_cast<double>(edge_union);
  const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  const double coverage = round2(10 * recall), consistency = round2(10 * jaccard), integration = round2(10 * f1);
  return {coverage, consistency, integration, round2((coverage + consistency + integration) / 3.0)};
}

inline std::int64_t word_count(const std::string& s) {
  std::istringstream in(s);
  std::int64_t n = 0;
  std::string w;
  while (in >> w) ++n;
  return n;
}

}  // namespace stub

struct CannedRule {
  std::string role;
  std::optional<std::string> contains;     // substring of the prompt
  std::optional<std::string> fingerprint;  // sha256 of the payload dump
  std::vector<std::string> responses;      // consumed in order, the last repeats
  std::size_t next = 0;
};

struct StubScript {
  enum class Grouping { split, merge };
  Grouping intentions = Grouping::split;
  Grouping without_intention = Grouping::merge;
  std::optional<std::array<double, 4>> fixed_judge;
  std::vector<CannedRule> canned;

  static Grouping parse_grouping(const std::string& s) {
    if (s == "split") return Grouping::split;
    if (s == "merge") return Grouping::merge;
    throw ConfigError("stub grouping must be 'split' or 'merge', got '" + s + "'");
  }

  static StubScript from_json(const nlohmann::json& j) {
    StubScript s;
    if (auto it = j.find("intentions"); it != j.end()) s.intentions = parse_grouping(it->get<std::string>());
    if (auto it = j.find("without_intention"); it != j.end()) {
      s.without_intention = parse_grouping(it->get<std::string>());
    }
    if (auto it = j.find("judge"); it != j.end() && it->is_array()) {
      if (it->size() != 4) throw ConfigError("stub judge must list 4 scores");
      s.fixed_judge = std::array<double, 4>{(*it)[0].get<double>(), (*it)[1].get<double>(),
                                            (*it)[2].get<double>(), (*it)[3].get<double>()};
    }
    if (auto it = j.find("canned"); it != j.end()) {
      for (const auto& r : *it) {
        CannedRule rule;
        rule.role = r.at("role").get<std::string>();
        if (r.contains("contains")) rule.contains = r["contains"].get<std::string>();
        if (r.contains("fingerprint")) rule.fingerprint = r["fingerprint"].get<std::string>();
        for (const auto& resp : r.at("responses")) {
          rule.responses.push_back(resp.is_string() ? resp.get<std::string>() : resp.dump());
        }
        if (rule.responses.empty()) throw ConfigError("canned rule for " + rule.role + " has no responses");
        s.canned.push_back(std::move(rule));
      }
    }
    return s;
  }

  static StubScript load(const std::filesystem::path& path) {
    try {
      return from_json(io::load_json_file(path));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("stub script " + path.string() + ": " + e.what());
    }
  }
};

inline std::string payload_fingerprint(const nlohmann::json& payload) { return sha256_hex(payload.dump()); }

class ScriptedStubClient final : public ChatClient {
 public:
  explicit ScriptedStubClient(StubScript script = {}) : script_(std::move(script)) {}

  ChatResponse complete(const ChatRequest& request) override {
    std::string text;
    if (auto canned = take_canned(request)) {
      text = *canned;
    } else {
      text = behave(request).dump();
    }
    ++calls_;
    return {text, {stub::word_count(request.prompt), stub::word_count(text)}};
  }

  std::size_t calls() const noexcept { return calls_; }

 private:
  std::optional<std::string> take_canned(const ChatRequest& request) {
    std::lock_guard lock(mutex_);
    for (auto& rule : script_.canned) {
      if (rule.role != request.role) continue;
      if (rule.contains && request.prompt.find(*rule.contains) == std::string::npos) continue;
      if (rule.fingerprint && *rule.fingerprint != payload_fingerprint(request.payload)) continue;
      const auto& reply = rule.responses[std::min(rule.next, rule.responses.size() - 1)];
      ++rule.next;
      return reply;
    }
    return std::nullopt;
  }

  nlohmann::ordered_json behave(const ChatRequest& request) const {
    const auto& p = request.payload;
    const std::string& role = request.role;
    if (role == roles::kExtractSignals) {
      const auto merged = merge_signals(stub::parse_phrased_intentions(p.at("query").get<std::string>()));
      return io::encode(merged);
    }
    if (role == roles::kGenerateIntentions) {
      auto triples = stub::parse_phrased_intentions(p.at("query").get<std::string>());
      if (script_.intentions == StubScript::Grouping::merge && !triples.empty()) {
        triples = {merge_signals(triples)};
      }
      nlohmann::ordered_json list = nlohmann::ordered_json::array();
      for (const auto& t : triples) list.push_back(io::encode(t));
      return {{"intentions", list}};
    }
    if (role == roles::kWorkflowWithIntention) {
      return io::encode(stub::workflow_for(io::decode_signals(p.at("intention"))));
    }
    if (role == roles::kWorkflowsWithoutIntention) {
      auto triples = stub::parse_phrased_intentions(p.at("query").get<std::string>());
      if (script_.without_intention == StubScript::Grouping::merge && !triples.empty()) {
        triples = {merge_signals(triples)};
      }
      nlohmann::ordered_json list = nlohmann::ordered_json::array();
      for (const auto& t : triples) list.push_back(io::encode(stub::workflow_for(t)));
      return {{"workflows", list}};
    }
    if (role == roles::kSingularElicitation) {
      const auto& intention = p.at("intention");
      const auto signals = io::decode_signals(intention);
      const auto variant = stable_hash64(intention.dump()) % stub::phrasings().size();
      return {{"elicitation", stub::phrase_intention(signals, variant)}};
    }
    if (role == roles::kMixedElicitation) {
      std::string text;
      for (const auto& s : p.at("singulars")) text += (text.empty() ? "" : " ") + s.get<std::string>();
      return {{"elicitation", text}};
    }
    if (role == roles::kJudge) {
      const auto scores = script_.fixed_judge
                              ? *script_.fixed_judge
                              : stub::faithful_judge(io::decode_workflow(p.at("decoded")),
                                                     io::decode_workflow(p.at("reference")));
      return {{"coverage", scores[0]},
              {"consistency", scores[1]},
              {"integration", scores[2]},
              {"total", scores[3]},
              {"rationale", "structural overlap"}};
    }
    throw Error("scripted stub has no behaviour for role '" + role + "'");
  }

  StubScript script_;
  std::mutex mutex_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace intentcap::llm
