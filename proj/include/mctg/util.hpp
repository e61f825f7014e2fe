#pragma once
// Small shared helpers: stable hashing, string munging, file IO.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mctg {

// FNV-1a 64-bit. Used for content-addressed ids and cassette fingerprints;
// must stay stable across platforms and releases.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

// 16 lowercase hex chars.
std::string to_hex(std::uint64_t v);

// fnv1a64 over the parts with a 0x1f separator between them, hex-encoded.
std::string stable_id(const std::vector<std::string>& parts);

std::string trim(std::string_view s);
std::string lower(std::string_view s);

// Whitespace-separated tokens, empty tokens dropped.
std::vector<std::string> split_ws(std::string_view s);

// Collapses whitespace runs (space, \r, \n, \t) to a single space, removes
// other control characters, trims. Casing and punctuation are preserved.
std::string clean_text(std::string_view s);

// Last non-empty line after trimming each line. Empty string if none.
std::string last_nonempty_line(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
bool file_exists(const std::string& path);

}  // namespace mctg
