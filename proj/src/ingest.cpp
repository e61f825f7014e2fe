#include "mctg/ingest.hpp"

#include <algorithm>

#include "mctg/errors.hpp"
#include "mctg/jsonl.hpp"
#include "mctg/rng.hpp"
#include "mctg/util.hpp"

namespace mctg {

FileFormat format_from_string(const std::string& s) {
    if (s == "csv") return FileFormat::csv;
    if (s == "tsv") return FileFormat::tsv;
    if (s == "jsonl") return FileFormat::jsonl;
    throw ConfigError("unknown dataset format '" + s + "' (expected csv, tsv, or jsonl)");
}

DatasetSpec DatasetSpec::from_json(const json& j) {
    DatasetSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.path = j.at("path").get<std::string>();
    spec.format = format_from_string(j.at("format").get<std::string>());
    spec.text_field = j.at("text_field").get<std::string>();
    if (j.contains("label_field")) spec.label_field = j.at("label_field").get<std::string>();
    if (j.contains("label_any_of")) {
        spec.label_any_of = j.at("label_any_of").get<std::vector<std::string>>();
    }
    spec.aspect_id = j.at("aspect_id").get<std::string>();
    for (const auto& [raw, idx] : j.at("label_mapping").items()) {
        spec.label_mapping[normalize_surface(raw)] = idx.get<int>();
    }
    if (j.contains("sample_cap")) {
        auto cap = j.at("sample_cap").get<long long>();
        if (cap <= 0) throw ConfigError("dataset '" + spec.name + "': sample_cap must be > 0");
        spec.sample_cap = static_cast<size_t>(cap);
    }
    return spec;
}

void DatasetSpec::validate(const AspectRegistry& registry) const {
    if (name.empty()) throw ConfigError("dataset spec missing name");
    if (text_field.empty()) throw ConfigError("dataset '" + name + "': text_field is required");
    if (label_field.empty() && label_any_of.empty()) {
        throw ConfigError("dataset '" + name + "': one of label_field or label_any_of is required");
    }
    const Aspect& aspect = registry.require(aspect_id);
    if (label_mapping.empty()) throw ConfigError("dataset '" + name + "': label_mapping is empty");
    for (const auto& [raw, idx] : label_mapping) {
        if (!aspect.find_by_index(idx)) {
            throw ConfigError("dataset '" + name + "': label_mapping value " + std::to_string(idx) +
                              " for '" + raw + "' is outside aspect '" + aspect_id + "'");
        }
    }
}

std::vector<std::vector<std::string>> parse_delimited(const std::string& content, char delim) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_had_data = false;  // distinguishes a lone trailing newline from an empty last row

    size_t i = 0;
    const size_t n = content.size();
    while (i < n) {
        char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && content[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    continue;
                }
                in_quotes = false;
                ++i;
                continue;
            }
            field += c;
            ++i;
            continue;
        }
        if (c == '"' && field.empty()) {
            in_quotes = true;
            field_had_data = true;
            ++i;
            continue;
        }
        if (c == delim) {
            row.push_back(std::move(field));
            field.clear();
            field_had_data = true;
            ++i;
            continue;
        }
        if (c == '\r' && i + 1 < n && content[i + 1] == '\n') {
            ++i;
            continue;  // fold CRLF into the \n case
        }
        if (c == '\n') {
            if (field_had_data || !field.empty() || !row.empty()) {
                row.push_back(std::move(field));
                field.clear();
                rows.push_back(std::move(row));
                row.clear();
                field_had_data = false;
            }
            ++i;
            continue;
        }
        field += c;
        field_had_data = true;
        ++i;
    }
    if (in_quotes) throw IngestError("unterminated quoted field at end of file");
    if (field_had_data || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string json_scalar_to_label(const json& v, const std::string& field, size_t row) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    throw IngestError("row " + std::to_string(row) + ": field '" + field +
                      "' is not a usable label value");
}

bool json_truthy(const json& v) {
    if (v.is_number()) return v.get<double>() != 0.0;
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) {
        std::string s = normalize_surface(v.get<std::string>());
        return !s.empty() && s != "0";
    }
    return false;
}

struct RawRow {
    size_t row = 0;  // 0-based data row index, header excluded
    std::string text;
    std::string raw_label;
};

std::vector<RawRow> read_delimited_rows(const DatasetSpec& spec, char delim) {
    auto rows = parse_delimited(read_file(spec.path), delim);
    if (rows.empty()) throw IngestError("dataset '" + spec.name + "': file has no header row");

    const auto& header = rows.front();
    auto column = [&](const std::string& field) -> size_t {
        for (size_t c = 0; c < header.size(); ++c) {
            if (header[c] == field) return c;
        }
        throw IngestError("dataset '" + spec.name + "': no column '" + field + "' in header");
    };

    size_t text_col = column(spec.text_field);
    std::vector<size_t> any_cols;
    size_t label_col = 0;
    if (!spec.label_any_of.empty()) {
        for (const auto& f : spec.label_any_of) any_cols.push_back(column(f));
    } else {
        label_col = column(spec.label_field);
    }

    std::vector<RawRow> out;
    out.reserve(rows.size() - 1);
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        size_t needed = text_col;
        for (size_t c : any_cols) needed = std::max(needed, c);
        if (any_cols.empty()) needed = std::max(needed, label_col);
        if (cells.size() <= needed) {
            throw IngestError("dataset '" + spec.name + "': row " + std::to_string(r - 1) +
                              " has " + std::to_string(cells.size()) + " fields, need " +
                              std::to_string(needed + 1));
        }
        RawRow raw;
        raw.row = r - 1;
        raw.text = cells[text_col];
        if (!any_cols.empty()) {
            bool any = false;
            for (size_t c : any_cols) {
                std::string v = normalize_surface(cells[c]);
                if (!v.empty() && v != "0") any = true;
            }
            raw.raw_label = any ? "1" : "0";
        } else {
            raw.raw_label = cells[label_col];
        }
        out.push_back(std::move(raw));
    }
    return out;
}

std::vector<RawRow> read_jsonl_rows(const DatasetSpec& spec) {
    std::vector<RawRow> out;
    size_t r = 0;
    for_each_jsonl(spec.path, [&](json&& j) {
        RawRow raw;
        raw.row = r++;
        if (!j.contains(spec.text_field)) {
            throw IngestError("dataset '" + spec.name + "': row " + std::to_string(raw.row) +
                              " missing field '" + spec.text_field + "'");
        }
        raw.text = j.at(spec.text_field).get<std::string>();
        if (!spec.label_any_of.empty()) {
            bool any = false;
            for (const auto& f : spec.label_any_of) {
                if (j.contains(f) && json_truthy(j.at(f))) any = true;
            }
            raw.raw_label = any ? "1" : "0";
        } else {
            if (!j.contains(spec.label_field)) {
                throw IngestError("dataset '" + spec.name + "': row " + std::to_string(raw.row) +
                                  " missing field '" + spec.label_field + "'");
            }
            raw.raw_label = json_scalar_to_label(j.at(spec.label_field), spec.label_field, raw.row);
        }
        out.push_back(std::move(raw));
        return true;
    });
    return out;
}

}  // namespace

IngestResult load_dataset(const DatasetSpec& spec, const AspectRegistry& registry,
                          std::uint64_t seed) {
    spec.validate(registry);
    const Aspect& aspect = registry.require(spec.aspect_id);

    std::vector<RawRow> raws;
    switch (spec.format) {
        case FileFormat::csv: raws = read_delimited_rows(spec, ','); break;
        case FileFormat::tsv: raws = read_delimited_rows(spec, '\t'); break;
        case FileFormat::jsonl: raws = read_jsonl_rows(spec); break;
    }

    IngestResult result;
    result.input_rows = raws.size();

    for (const auto& raw : raws) {
        std::string text = clean_text(raw.text);
        if (text.empty()) {
            result.skips.push_back(json{{"row", raw.row}, {"reason", "empty text after cleaning"}});
            continue;
        }
        std::string key = normalize_surface(raw.raw_label);
        auto it = spec.label_mapping.find(key);
        if (it == spec.label_mapping.end()) {
            throw IngestError("dataset '" + spec.name + "': row " + std::to_string(raw.row) +
                              " has unmapped label '" + raw.raw_label + "'");
        }
        const Attribute* attr = aspect.find_by_index(it->second);

        LabeledSentence rec;
        rec.id = stable_id({spec.name, std::to_string(raw.row)});
        rec.text = std::move(text);
        rec.aspect_id = aspect.id;
        rec.label_index = attr->index;
        rec.label_text = attr->name;
        rec.provenance = Provenance::original;
        rec.source_dataset = spec.name;
        rec.meta["source_row"] = std::to_string(raw.row);
        result.records.push_back(std::move(rec));
    }

    if (spec.sample_cap && *spec.sample_cap < result.records.size()) {
        SplitMix64 rng(seed, "ingest:" + spec.name);
        auto picks = sample_indices(result.records.size(), *spec.sample_cap, rng);
        std::sort(picks.begin(), picks.end());
        std::vector<LabeledSentence> sampled;
        sampled.reserve(picks.size());
        for (size_t i : picks) sampled.push_back(std::move(result.records[i]));
        result.records = std::move(sampled);
    }

    std::sort(result.records.begin(), result.records.end(),
              [](const LabeledSentence& a, const LabeledSentence& b) { return a.id < b.id; });
    return result;
}

}  // namespace mctg
