#pragma once

// Command dispatch behind the thermo executable. Every command turns a parsed
// spec into named tables plus optional file artifacts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermo/spec_io.hpp"

namespace thermo {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// RFC 4180 quoting, header first, "\n" line ends.
  std::string to_csv() const;
  /// One JSON object per row; keys in column order.
  std::string to_jsonl() const;
};

struct CommandOutput {
  std::vector<std::pair<std::string, Table>> tables;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  int exit_code = 0;
};

struct RunFlags {
  std::optional<int> max_radius;
  std::optional<std::uint64_t> seed;
  /// Case ids to keep; empty keeps all.
  std::vector<std::string> cases;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"lang", "extender", "pressure", "equilibrium", "audit", "tile", "stirling"};
  return names;
}

/// Spec cases plus the generated pair scan, filtered by flags and sorted by id.
std::vector<CaseSpec> selected_cases(const ToolSpec& spec, const RunFlags& flags);

CommandOutput run_command(const std::string& command, const ToolSpec& spec, const RunFlags& flags = {});

}  // namespace thermo
