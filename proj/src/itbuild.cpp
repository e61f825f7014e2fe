#include "mctg/itbuild.hpp"

#include <algorithm>

#include "mctg/augment.hpp"
#include "mctg/errors.hpp"
#include "mctg/util.hpp"

namespace mctg {

json ItInstance::to_json() const {
    json c = json::array();
    for (const auto& [aspect, label] : controls) c.push_back(json::array({aspect, label}));
    return json{{"instruction", instruction}, {"response", response},    {"controls", c},
                {"prefix", prefix},           {"provenance", to_string(source_provenance)},
                {"source_id", source_id}};
}

ItInstance ItInstance::from_json(const json& j) {
    ItInstance inst;
    inst.instruction = j.at("instruction").get<std::string>();
    inst.response = j.at("response").get<std::string>();
    if (j.contains("controls")) {
        for (const auto& c : j.at("controls")) {
            inst.controls.emplace_back(c.at(0).get<std::string>(), c.at(1).get<std::string>());
        }
    }
    if (j.contains("prefix")) inst.prefix = j.at("prefix").get<std::string>();
    if (j.contains("provenance")) {
        inst.source_provenance = provenance_from_string(j.at("provenance").get<std::string>());
    }
    if (j.contains("source_id")) inst.source_id = j.at("source_id").get<std::string>();
    return inst;
}

json ItInstance::to_chat_json() const {
    return json{{"messages", json::array({json{{"role", "user"}, {"content", instruction}},
                                          json{{"role", "assistant"}, {"content", response}}})}};
}

std::string extract_prefix(const std::string& text) {
    auto tokens = split_ws(text);
    if (tokens.empty()) throw ContractViolation("extract_prefix on empty text");
    std::string out;
    for (size_t i = 0; i < tokens.size() && i < 3; ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string render_controls(const AspectRegistry& registry,
                            const std::vector<std::pair<std::string, std::string>>& controls) {
    std::vector<std::pair<size_t, const std::pair<std::string, std::string>*>> ordered;
    ordered.reserve(controls.size());
    for (const auto& c : controls) ordered.emplace_back(registry.index_of(c.first), &c);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::string out;
    for (const auto& [pos, c] : ordered) {
        if (!out.empty()) out += ", ";
        out += registry.at(pos).display_name + ": " + c->second;
    }
    return out;
}

ItInstance build_instance(const LabeledSentence& record, const AspectRegistry& registry,
                          const std::string& template_text) {
    if (trim(record.text).empty()) {
        throw ContractViolation("record " + record.id + " has empty text");
    }
    ItInstance inst;
    inst.response = record.text;
    inst.prefix = extract_prefix(record.text);
    inst.controls = {{record.aspect_id, record.label_text}};
    inst.source_provenance = record.provenance;
    inst.source_id = record.id;
    // Trimmed so a trailing newline in the template file never leaks into
    // the instruction text.
    inst.instruction = trim(render_template(template_text,
                                            {{"controls", render_controls(registry, inst.controls)},
                                             {"prefix", inst.prefix}},
                                            {"controls", "prefix"}));
    return inst;
}

}  // namespace mctg
