#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <initializer_list>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "intentcap/errors.hpp"

namespace intentcap {

inline std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// One granular semantic component ("invoice PDF", "extract totals").
/// Always non-empty and trimmed.
class SemanticElement {
 public:
  explicit SemanticElement(std::string_view text) : text_(trim(text)) {
    if (text_.empty()) throw ValidationError("semantic element must be non-empty");
  }

  const std::string& text() const noexcept { return text_; }

  friend bool operator==(const SemanticElement&, const SemanticElement&) = default;
  friend auto operator<=>(const SemanticElement&, const SemanticElement&) = default;

 private:
  std::string text_;
};

using ElementList = std::vector<SemanticElement>;

enum class Component { input, process, output };

inline constexpr std::array<Component, 3> kComponents = {Component::input, Component::process,
                                                         Component::output};

inline std::string_view component_name(Component c) {
  switch (c) {
    case Component::input: return "input";
    case Component::process: return "process";
    case Component::output: return "output";
  }
  return "?";
}

/// Exact-string dedup, first occurrence wins.
inline ElementList dedup_elements(const ElementList& items) {
  ElementList out;
  std::unordered_set<std::string> seen;
  for (const auto& e : items) {
    if (seen.insert(e.text()).second) out.push_back(e);
  }
  return out;
}

inline ElementList make_elements(const std::vector<std::string>& texts) {
  ElementList out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.emplace_back(t);
  return out;
}

/// (input, process, output) lists of semantic elements. Duplicates are
/// dropped on construction.
class SignalTriple {
 public:
  SignalTriple() = default;
  SignalTriple(ElementList input, ElementList process, ElementList output)
      : lists_{dedup_elements(input), dedup_elements(process), dedup_elements(output)} {}
  SignalTriple(const std::vector<std::string>& input, const std::vector<std::string>& process,
               const std::vector<std::string>& output)
      : SignalTriple(make_elements(input), make_elements(process), make_elements(output)) {}

  const ElementList& input() const noexcept { return lists_[0]; }
  const ElementList& process() const noexcept { return lists_[1]; }
  const ElementList& output() const noexcept { return lists_[2]; }

  const ElementList& component(Component c) const noexcept {
    return lists_[static_cast<std::size_t>(c)];
  }

  bool is_complete() const noexcept {
    return !input().empty() && !process().empty() && !output().empty();
  }

  std::size_t total_size() const noexcept {
    return input().size() + process().size() + output().size();
  }

  friend bool operator==(const SignalTriple&, const SignalTriple&) = default;

 private:
  std::array<ElementList, 3> lists_;
};

/// Component-wise union, first-occurrence order.
inline SignalTriple merge_signals(const std::vector<SignalTriple>& triples) {
  std::array<ElementList, 3> acc;
  for (const auto& t : triples) {
    for (auto c : kComponents) {
      const auto& src = t.component(c);
      auto& dst = acc[static_cast<std::size_t>(c)];
      dst.insert(dst.end(), src.begin(), src.end());
    }
  }
  return SignalTriple(acc[0], acc[1], acc[2]);
}

/// A workflow intention: one transformation objective.
struct Intention {
  std::string id;
  SignalTriple signals;
  std::vector<std::string> source_tags;

  bool is_complete() const noexcept { return signals.is_complete(); }

  friend bool operator==(const Intention&, const Intention&) = default;
};

/// Ordered intentions with unique ids.
class IntentionSet {
 public:
  IntentionSet() = default;
  explicit IntentionSet(std::vector<Intention> intentions) : items_(std::move(intentions)) {
    std::set<std::string> ids;
    for (const auto& i : items_) {
      if (!ids.insert(i.id).second) {
        throw ValidationError("duplicate intention id '" + i.id + "'");
      }
    }
  }

  const std::vector<Intention>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const Intention& operator[](std::size_t i) const { return items_.at(i); }
  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& i : items_) out.push_back(i.id);
    return out;
  }

  friend bool operator==(const IntentionSet&, const IntentionSet&) = default;

 private:
  std::vector<Intention> items_;
};

enum class ElicitationKind { singular, mixed };

inline std::string_view to_string(ElicitationKind k) {
  return k == ElicitationKind::singular ? "singular" : "mixed";
}

/// User query text expressing one (singular) or several (mixed) intentions.
class Elicitation {
 public:
  Elicitation(std::string text, ElicitationKind kind, std::vector<std::string> source_ids)
      : text_(std::move(text)), kind_(kind), source_ids_(std::move(source_ids)) {
    if (kind_ == ElicitationKind::singular && source_ids_.size() != 1) {
      throw ValidationError("singular elicitation must have exactly one source intention");
    }
    if (kind_ == ElicitationKind::mixed && source_ids_.empty()) {
      throw ValidationError("mixed elicitation must have at least one source intention");
    }
  }

  const std::string& text() const noexcept { return text_; }
  ElicitationKind kind() const noexcept { return kind_; }
  const std::vector<std::string>& source_intention_ids() const noexcept { return source_ids_; }

  friend bool operator==(const Elicitation&, const Elicitation&) = default;

 private:
  std::string text_;
  ElicitationKind kind_;
  std::vector<std::string> source_ids_;
};

}  // namespace intentcap
