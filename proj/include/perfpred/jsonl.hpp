#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace perfpred {

using json = nlohmann::json;

/// Calls `fn(line_number, record)` for every non-empty line; line numbers are
/// 1-based. Malformed lines raise a parse error naming the file and line.
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(size_t, const json&)>& fn);

std::vector<json> read_jsonl(const std::filesystem::path& path);

/// Writes one compact JSON object per line; atomic (temp file + rename).
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

std::string read_text_file(const std::filesystem::path& path);

/// Atomic text write (temp file + rename).
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace perfpred
