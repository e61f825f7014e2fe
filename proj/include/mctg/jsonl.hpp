#pragma once
// JSONL helpers: one object per line, UTF-8, no BOM. Writing uses
// nlohmann::json::dump() which orders keys and prints shortest round-trip
// numbers, so output is canonical for byte-identity checks.

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mctg {

using json = nlohmann::json;

std::vector<json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<json>& rows);

// Streaming variant for large files; stops early when fn returns false.
void for_each_jsonl(const std::string& path, const std::function<bool(json&&)>& fn);

}  // namespace mctg
