#pragma once

#include <string>
#include <vector>

#include "intentcap/core/elements.hpp"
#include "intentcap/core/workflow.hpp"

namespace intentcap {

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 10;

/// One benchmark unit at a given mixed intention level.
struct Sample {
  std::string id;
  int level = 1;
  IntentionSet reference_intentions;
  std::vector<Elicitation> singular_elicitations;
  WorkflowSet reference_workflows;
  Elicitation mixed_elicitation{"", ElicitationKind::mixed, {"_"}};

  friend bool operator==(const Sample&, const Sample&) = default;
};

inline std::vector<std::string> validate_sample(const Sample& s) {
  std::vector<std::string> report;
  const auto level = static_cast<std::size_t>(s.level);
  if (s.level < kMinLevel || s.level > kMaxLevel) {
    report.push_back("level " + std::to_string(s.level) + " outside [1,10]");
  }
  if (s.reference_intentions.size() != level) {
    report.emplace_back("reference intention count differs from level");
  }
  if (s.singular_elicitations.size() != level) {
    report.emplace_back("singular elicitation count differs from level");
  }
  if (s.reference_workflows.size() != level) {
    report.emplace_back("reference workflow count differs from level");
  }
  for (const auto& i : s.reference_intentions) {
    if (!i.is_complete()) report.push_back("reference intention '" + i.id + "' is incomplete");
  }
  for (std::size_t j = 0; j < s.singular_elicitations.size(); ++j) {
    const auto& e = s.singular_elicitations[j];
    if (e.kind() != ElicitationKind::singular) {
      report.push_back("singular elicitation " + std::to_string(j) + " has kind mixed");
    } else if (j < s.reference_intentions.size() &&
               e.source_intention_ids().front() != s.reference_intentions[j].id) {
      report.push_back("singular elicitation " + std::to_string(j) +
                       " does not source its reference intention");
    }
  }
  for (std::size_t j = 0; j < s.reference_workflows.size(); ++j) {
    for (const auto& v : validate_workflow(s.reference_workflows[j])) {
      report.push_back("reference workflow " + std::to_string(j) + ": " + v);
    }
  }
  if (s.mixed_elicitation.kind() != ElicitationKind::mixed) {
    report.emplace_back("mixed elicitation has kind singular");
  }
  if (s.mixed_elicitation.source_intention_ids() != s.reference_intentions.ids()) {
    report.emplace_back("mixed elicitation sources differ from reference intention ids");
  }
  return report;
}

struct ServiceTag {
  std::string industry;
  std::string service;

  std::string label() const { return industry + "/" + service; }

  friend bool operator==(const ServiceTag&, const ServiceTag&) = default;
  friend auto operator<=>(const ServiceTag&, const ServiceTag&) = default;
};

struct PoolElement {
  SemanticElement element;
  std::vector<ServiceTag> tags;

  friend bool operator==(const PoolElement&, const PoolElement&) = default;
};

/// Input, process and output pools built from the service catalog.
struct Pools {
  std::vector<PoolElement> input_pool;
  std::vector<PoolElement> process_pool;
  std::vector<PoolElement> output_pool;

  const std::vector<PoolElement>& pool(Component c) const {
    switch (c) {
      case Component::input: return input_pool;
      case Component::process: return process_pool;
      case Component::output: return output_pool;
    }
    return input_pool;
  }

  friend bool operator==(const Pools&, const Pools&) = default;
};

inline std::vector<std::string> validate_pools(const Pools& p) {
  std::vector<std::string> report;
  for (auto c : kComponents) {
    for (const auto& e : p.pool(c)) {
      if (e.tags.empty()) {
        report.push_back(std::string(component_name(c)) + " element '" + e.element.text() +
                         "' has no service tag");
      }
    }
  }
  return report;
}

}  // namespace intentcap
