#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "intentcap/errors.hpp"

namespace intentcap::llm {

/// Byte range of the first balanced {...} block, honouring JSON strings.
inline std::optional<std::string_view> first_balanced_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) return text.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

/// Strict parse of a model reply as one JSON object, with a single repair
/// pass that pulls the first balanced object out of surrounding prose or
/// code fences.
inline nlohmann::json parse_structured_reply(std::string_view text) {
  auto strict = nlohmann::json::parse(text, nullptr, false);
  if (!strict.is_discarded() && strict.is_object()) return strict;
  if (auto block = first_balanced_object(text)) {
    auto repaired = nlohmann::json::parse(*block, nullptr, false);
    if (!repaired.is_discarded() && repaired.is_object()) return repaired;
  }
  throw ParseError("reply is not a JSON object");
}

}  // namespace intentcap::llm
