#pragma once
// Domain types shared by every pipeline stage: aspects, attributes, control
// combinations, and labeled sentence records. All types are immutable after
// construction and safe to share across workers.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace mctg {

using json = nlohmann::json;

// One categorical value within an aspect. `index` is 1-based and stable.
// Aliases are normalized surface forms accepted from LLM output; the
// canonical name is always a member of its own alias set.
struct Attribute {
    int index = 0;
    std::string name;
    std::set<std::string> aliases;
    std::string description;  // prompt text; defaults to the name
};

// An independent control dimension (sentiment, topic, ...) with a finite set
// of mutually exclusive attributes. rewrite_target gates whether sentences
// may be rewritten toward this aspect.
struct Aspect {
    std::string id;
    std::string display_name;
    std::string description;  // prompt text; defaults to the display name
    std::vector<Attribute> attributes;
    bool rewrite_target = true;

    const Attribute* find_by_index(int index) const;
    const Attribute* find_by_alias(const std::string& normalized) const;
};

// The n ordered control aspects of a deployment. Aspect order is stable and
// defines the combination vector layout.
class AspectRegistry {
public:
    AspectRegistry() = default;
    explicit AspectRegistry(std::vector<Aspect> aspects);

    static AspectRegistry from_json(const json& j);

    const std::vector<Aspect>& aspects() const { return aspects_; }
    size_t size() const { return aspects_.size(); }
    const Aspect& at(size_t i) const { return aspects_[i]; }
    const Aspect* find(const std::string& aspect_id) const;
    const Aspect& require(const std::string& aspect_id) const;
    size_t index_of(const std::string& aspect_id) const;

private:
    void validate() const;
    std::vector<Aspect> aspects_;
};

// One attribute index per aspect, in registry order. Entries are 1-based.
struct ControlCombination {
    std::vector<int> indices;

    bool operator==(const ControlCombination&) const = default;
    std::string key() const;  // "1,3,2" - stable map key / file form
};

enum class Provenance { original, cross, grained, rewrite };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// A sentence with one aspect/attribute label and provenance. For grained
// records label_index keeps the original coarse attribute and label_text
// holds the fine-grained description; otherwise label_text is the canonical
// attribute name.
struct LabeledSentence {
    std::string id;
    std::string text;
    std::string aspect_id;
    int label_index = 0;
    std::string label_text;
    Provenance provenance = Provenance::original;
    std::string source_dataset;
    std::map<std::string, std::string> meta;

    json to_json() const;
    static LabeledSentence from_json(const json& j);
};

// Outcome of normalizing one raw LLM output line against an aspect.
struct NormalizedLabel {
    enum class Kind { attribute, reject, unknown };
    Kind kind = Kind::unknown;
    const Attribute* attribute = nullptr;  // set iff kind == attribute
    std::string normalized;                // the post-normalization string
};

const std::set<std::string>& default_reject_tokens();

// Lowercases, trims, strips paired surrounding quotes and terminal
// punctuation (. , ! ? ;). Interior punctuation survives ("sci/tech").
// Total function: unmatched output is Unknown, never an error.
std::string normalize_surface(std::string_view raw);

NormalizedLabel normalize_label(const std::string& raw, const Aspect& aspect,
                                const std::set<std::string>& reject_tokens = default_reject_tokens());

// Cartesian product of allowed attribute indices in lexicographic order of
// (aspect order, index order). `restriction` maps aspect id to the allowed
// index subset; aspects absent from it contribute their full range.
std::vector<ControlCombination> enumerate_combinations(
    const AspectRegistry& registry,
    const std::map<std::string, std::set<int>>& restriction = {});

}  // namespace mctg
