#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "nodeplan/core.hpp"

namespace nodeplan {

// Demonstration JSON:
//   {"name": str, "dim": int, "demos": [{"times": [...], "states": [[...], ...]}, ...]}
// Per-demo CSV: header "t,x0,...,x{d-1}", one row per sample.

DemonstrationSet demo_set_from_json(const nlohmann::json& j);
nlohmann::json demo_set_to_json(const DemonstrationSet& ds);

/// Dispatches on extension: ".json" is a full set, ".csv" a single demo.
DemonstrationSet load_demo_set(const std::filesystem::path& path);
void save_demo_set(const DemonstrationSet& ds, const std::filesystem::path& path);

Trajectory trajectory_from_csv(const std::string& text, const std::string& source = "<csv>");
std::string trajectory_to_csv(const Trajectory& tr);

/// Reads a whole file or throws ErrorKind::input naming the path.
std::string read_text_file(const std::filesystem::path& path);
/// Writes a whole file or throws ErrorKind::io naming the path.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Parses JSON text; syntax errors become ErrorKind::input with line/column.
nlohmann::json parse_json(const std::string& text, const std::string& source);

State state_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json state_to_json(const State& x);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json matrix_to_json(const Matrix& m);

}  // namespace nodeplan
