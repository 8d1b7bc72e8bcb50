#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace toolplan {

/// Insertion-ordered JSON keeps argument objects and emitted records stable.
using Json = nlohmann::ordered_json;

/// Throws Error{FileNotFound} when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Writes atomically enough for our purposes: truncate then write. Creates
/// parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// One JSON value per non-blank line. Parse failures raise
/// Error{InvalidInput} naming the 1-based line.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<Json>& records);

/// Compact, deterministic dump that never throws on invalid UTF-8.
std::string dump_compact(const Json& value);
std::string dump_pretty(const Json& value);

}  // namespace toolplan
