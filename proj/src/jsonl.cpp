#include "mctg/jsonl.hpp"

#include <filesystem>
#include <fstream>

#include "mctg/errors.hpp"

namespace mctg {

std::vector<json> read_jsonl(const std::string& path) {
    std::vector<json> rows;
    for_each_jsonl(path, [&](json&& j) {
        rows.push_back(std::move(j));
        return true;
    });
    return rows;
}

void for_each_jsonl(const std::string& path, const std::function<bool(json&&)>& fn) {
    std::ifstream f(path, std::ios::binary);
    if (!f.good()) throw ConfigError("cannot read jsonl: " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw IngestError(path + ":" + std::to_string(lineno) + ": invalid JSON line");
        }
        if (!fn(std::move(j))) return;
    }
}

void write_jsonl(const std::string& path, const std::vector<json>& rows) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f.good()) throw ConfigError("cannot write jsonl: " + path);
    for (const auto& r : rows) {
        f << r.dump() << '\n';
    }
    if (!f.good()) throw ConfigError("short write: " + path);
}

}  // namespace mctg
