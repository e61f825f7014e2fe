#pragma once
// Loaders that turn single-aspect source datasets (CSV/TSV/JSONL) into
// LabeledSentence streams with stable content-addressed ids.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mctg/core.hpp"

namespace mctg {

enum class FileFormat { csv, tsv, jsonl };

FileFormat format_from_string(const std::string& s);

struct DatasetSpec {
    std::string name;  // pool label; part of every record id
    std::string path;
    FileFormat format = FileFormat::csv;
    std::string text_field;
    std::string label_field;
    // Multi-column collapse: when non-empty the raw label is "1" if any of
    // these fields is a nonzero number (or "1"), else "0". label_field is
    // ignored in that case.
    std::vector<std::string> label_any_of;
    std::string aspect_id;
    std::map<std::string, int> label_mapping;  // normalized raw label -> attribute index
    std::optional<size_t> sample_cap;

    static DatasetSpec from_json(const json& j);
    void validate(const AspectRegistry& registry) const;
};

struct IngestResult {
    std::vector<LabeledSentence> records;  // sorted by id
    std::vector<json> skips;               // {"row": n, "reason": ...}
    size_t input_rows = 0;
};

// Deterministic for a fixed (spec, seed): cleaning, label mapping, optional
// seeded sample without replacement, emission in id order. Unmappable labels
// abort with the offending row; empty-after-cleaning rows are skipped and
// reported.
IngestResult load_dataset(const DatasetSpec& spec, const AspectRegistry& registry,
                          std::uint64_t seed);

// RFC 4180 field splitting over a whole file. Quoted fields may contain the
// delimiter, doubled quotes, and line breaks. Exposed for tests.
std::vector<std::vector<std::string>> parse_delimited(const std::string& content, char delim);

}  // namespace mctg
