#pragma once

#include "semidfl/orchestrator.hpp"

#include <filesystem>
#include <istream>
#include <string>

namespace semidfl {

/// Thrown for malformed config documents. what() is "<source>:<line>: <msg>".
class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentConfig {
  RunConfig run;
  SweepSpec sweep;
};

/// INI-style document: `[section]` headers, `key = value` lines, `#` or `;`
/// comments. Keys outside a section may also be written as `section.key`.
/// Unknown keys are errors. The resulting RunConfig is validated.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace semidfl
