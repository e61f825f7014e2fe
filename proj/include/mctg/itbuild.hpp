#pragma once
// Turns labeled records into instruction-tuning instances: instruction =
// task description + control clause + generation-prefix clause, response =
// the record text verbatim.

#include <string>
#include <utility>
#include <vector>

#include "mctg/core.hpp"

namespace mctg {

struct ItInstance {
    std::string instruction;
    std::string response;
    std::vector<std::pair<std::string, std::string>> controls;  // (aspect_id, label_text)
    std::string prefix;
    Provenance source_provenance = Provenance::original;
    std::string source_id;

    json to_json() const;
    static ItInstance from_json(const json& j);
    // {"messages": [{user, instruction}, {assistant, response}]}
    json to_chat_json() const;
};

// First min(3, token count) whitespace tokens joined by single spaces.
std::string extract_prefix(const std::string& text);

// "Sentiment: positive, Topic: sports" in registry aspect order; label part
// is each control's label_text (fine-grained description for grained
// records).
std::string render_controls(const AspectRegistry& registry,
                            const std::vector<std::pair<std::string, std::string>>& controls);

// One record -> one instance. The template must contain {{controls}} and
// {{prefix}}.
ItInstance build_instance(const LabeledSentence& record, const AspectRegistry& registry,
                          const std::string& template_text);

}  // namespace mctg
