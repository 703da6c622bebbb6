#pragma once

#include "mcbsde/core.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mcbsde {

using Config = nlohmann::ordered_json;

//! Rectangular table of named numeric columns.
struct Column {
  std::string name;
  std::vector<double> values;
};
using Table = std::vector<Column>;

//! Plain CSV with a header row, LF endings, and full round-trip precision
//! (17 significant digits).
void emit_csv(const Table& table, const std::string& path);

Config load_config(const std::string& path);

//! TerminalSpec from its config form, e.g.
//!   {"kind":"affine-gaussian","c":1,"sigma2":1}
//!   {"kind":"asian","f":"exp-neg","g":"identity"}
TerminalSpec parse_terminal(const Config& j);

struct RunResult {
  std::string experiment;
  std::vector<std::string> artifacts; // file names relative to the output directory
};

//! Executes the named experiment deterministically and writes its artifacts plus a
//! manifest.json into out_dir. Throws on config or invariant violations.
RunResult run_experiment(const Config& config, const std::string& out_dir);

} // namespace mcbsde
