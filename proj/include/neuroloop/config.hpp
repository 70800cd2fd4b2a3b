#pragma once

// JSON scenario configuration. See schema.json for the document layout.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "neuroloop/scenario.hpp"

namespace neuroloop {

/// Schema violation, missing field or invalid value. key_path() is the
/// dotted path of the offending entry ("" for document-level problems).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& message)
      : std::runtime_error(key_path.empty() ? message : key_path + ": " + message),
        key_path_(std::move(key_path)) {}

  const std::string& key_path() const { return key_path_; }

 private:
  std::string key_path_;
};

ScenarioSpec parse_config_text(const std::string& text);
ScenarioSpec parse_config(const std::filesystem::path& file);

}  // namespace neuroloop
