#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "intentcap/core/json_io.hpp"
#include "intentcap/errors.hpp"
#include "intentcap/llm/embedded_prompts.hpp"

namespace intentcap::llm {

using PromptValues = std::map<std::string, std::string>;

/// Versioned prompt templates with {{name}} placeholders. The built-in set
/// is compiled in; a directory of *.tmpl files may override any of them.
class PromptLibrary {
 public:
  PromptLibrary() : version_(embedded::kPromptVersion), templates_(embedded::prompt_templates()) {}

  static PromptLibrary with_overrides(const std::filesystem::path& directory) {
    PromptLibrary lib;
    if (!std::filesystem::is_directory(directory)) {
      throw ConfigError("prompt directory not found: " + directory.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
      if (entry.path().extension() != ".tmpl") continue;
      lib.templates_[entry.path().stem().string()] = io::read_text_file(entry.path());
    }
    lib.version_ += "+" + directory.filename().string();
    return lib;
  }

  const std::string& version() const noexcept { return version_; }

  const std::string& raw(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("no prompt template named '" + name + "'");
    return it->second;
  }

  /// Substitutes every {{key}}. Unknown or unfilled placeholders are errors.
  std::string render(const std::string& name, const PromptValues& values) const {
    const std::string& tmpl = raw(name);
    std::string out;
    std::size_t pos = 0;
    while (true) {
      const auto open = tmpl.find("{{", pos);
      if (open == std::string::npos) break;
      const auto close = tmpl.find("}}", open + 2);
      if (close == std::string::npos) throw ConfigError("unterminated placeholder in template " + name);
      const auto key = tmpl.substr(open + 2, close - open - 2);
      auto it = values.find(key);
      if (it == values.end()) {
        throw ConfigError("template " + name + " needs a value for {{" + key + "}}");
      }
      out.append(tmpl, pos, open - pos);
      out += it->second;
      pos = close + 2;
    }
    out.append(tmpl, pos, std::string::npos);
    return out;
  }

 private:
  std::string version_;
  std::map<std::string, std::string> templates_;
};

}  // namespace intentcap::llm
