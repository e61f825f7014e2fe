#include "mctg/util.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mctg/errors.hpp"

namespace mctg {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::string stable_id(const std::vector<std::string>& parts) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : parts) {
        h = fnv1a64(p, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);
    }
    return to_hex(h);
}

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t b = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > b) out.emplace_back(s.substr(b, i - b));
    }
    return out;
}

std::string clean_text(std::string_view s) {
    // Whitespace runs collapse to one space so that prefix extraction (which
    // tokenizes on whitespace) always yields a literal prefix of the text.
    std::string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c == ' ' || c == '\r' || c == '\n' || c == '\t') {
            while (i < s.size()) {
                unsigned char d = static_cast<unsigned char>(s[i]);
                if (d == ' ' || d == '\r' || d == '\n' || d == '\t') { ++i; continue; }
                break;
            }
            out.push_back(' ');
            continue;
        }
        if (c < 0x20 || c == 0x7f) { ++i; continue; }
        out.push_back(static_cast<char>(c));
        ++i;
    }
    return trim(out);
}

std::string last_nonempty_line(std::string_view s) {
    std::string last;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t nl = s.find('\n', pos);
        std::string_view line = (nl == std::string_view::npos)
                                    ? s.substr(pos)
                                    : s.substr(pos, nl - pos);
        std::string t = trim(line);
        if (!t.empty()) last = std::move(t);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return last;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f.good()) throw ConfigError("cannot read file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f.good()) throw ConfigError("cannot write file: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f.good()) throw ConfigError("short write: " + path);
}

bool file_exists(const std::string& path) {
    return std::filesystem::exists(path);
}

}  // namespace mctg
