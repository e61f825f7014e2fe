#include "mctg/core.hpp"

#include <algorithm>

#include "mctg/errors.hpp"
#include "mctg/util.hpp"

namespace mctg {

const Attribute* Aspect::find_by_index(int index) const {
    for (const auto& a : attributes) {
        if (a.index == index) return &a;
    }
    return nullptr;
}

const Attribute* Aspect::find_by_alias(const std::string& normalized) const {
    for (const auto& a : attributes) {
        if (a.aliases.count(normalized)) return &a;
    }
    return nullptr;
}

AspectRegistry::AspectRegistry(std::vector<Aspect> aspects) : aspects_(std::move(aspects)) {
    validate();
}

void AspectRegistry::validate() const {
    if (aspects_.empty()) throw ConfigError("registry: needs at least one aspect");
    std::set<std::string> ids;
    for (const auto& asp : aspects_) {
        if (asp.id.empty()) throw ConfigError("registry: aspect with empty id");
        if (!ids.insert(asp.id).second) {
            throw ConfigError("registry: duplicate aspect id '" + asp.id + "'");
        }
        if (asp.attributes.empty()) {
            throw ConfigError("registry: aspect '" + asp.id + "' has no attributes");
        }
        std::set<std::string> names;
        std::set<std::string> seen_aliases;
        for (size_t i = 0; i < asp.attributes.size(); ++i) {
            const auto& attr = asp.attributes[i];
            if (attr.index != static_cast<int>(i) + 1) {
                throw ConfigError("registry: aspect '" + asp.id + "' attribute '" + attr.name +
                                  "' has index " + std::to_string(attr.index) + ", expected " +
                                  std::to_string(i + 1));
            }
            if (!names.insert(lower(attr.name)).second) {
                throw ConfigError("registry: aspect '" + asp.id + "' duplicate attribute name '" +
                                  attr.name + "'");
            }
            if (!attr.aliases.count(normalize_surface(attr.name))) {
                throw ConfigError("registry: attribute '" + attr.name +
                                  "' missing its own canonical alias");
            }
            for (const auto& al : attr.aliases) {
                if (!seen_aliases.insert(al).second) {
                    throw ConfigError("registry: aspect '" + asp.id + "' alias '" + al +
                                      "' maps to more than one attribute");
                }
            }
        }
    }
}

const Aspect* AspectRegistry::find(const std::string& aspect_id) const {
    for (const auto& a : aspects_) {
        if (a.id == aspect_id) return &a;
    }
    return nullptr;
}

const Aspect& AspectRegistry::require(const std::string& aspect_id) const {
    const Aspect* a = find(aspect_id);
    if (!a) throw ConfigError("unknown aspect id '" + aspect_id + "'");
    return *a;
}

size_t AspectRegistry::index_of(const std::string& aspect_id) const {
    for (size_t i = 0; i < aspects_.size(); ++i) {
        if (aspects_[i].id == aspect_id) return i;
    }
    throw ConfigError("unknown aspect id '" + aspect_id + "'");
}

AspectRegistry AspectRegistry::from_json(const json& j) {
    if (!j.is_object() || !j.contains("aspects") || !j["aspects"].is_array()) {
        throw ConfigError("registry: expected {\"aspects\": [...]}");
    }
    std::vector<Aspect> aspects;
    for (const auto& ja : j["aspects"]) {
        Aspect asp;
        asp.id = ja.value("id", "");
        asp.display_name = ja.value("display_name", asp.id);
        asp.description = ja.value("description", asp.display_name);
        asp.rewrite_target = ja.value("rewrite_target", true);
        if (!ja.contains("attributes") || !ja["attributes"].is_array()) {
            throw ConfigError("registry: aspect '" + asp.id + "' missing attributes array");
        }
        int next_index = 1;
        for (const auto& jt : ja["attributes"]) {
            Attribute attr;
            attr.index = next_index++;
            attr.name = jt.value("name", "");
            if (attr.name.empty()) {
                throw ConfigError("registry: aspect '" + asp.id + "' attribute without name");
            }
            attr.description = jt.value("description", attr.name);
            attr.aliases.insert(normalize_surface(attr.name));
            if (jt.contains("aliases")) {
                for (const auto& al : jt["aliases"]) {
                    attr.aliases.insert(normalize_surface(al.get<std::string>()));
                }
            }
            asp.attributes.push_back(std::move(attr));
        }
        aspects.push_back(std::move(asp));
    }
    return AspectRegistry(std::move(aspects));
}

std::string ControlCombination::key() const {
    std::string out;
    for (size_t i = 0; i < indices.size(); ++i) {
        if (i) out.push_back(',');
        out += std::to_string(indices[i]);
    }
    return out;
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::original: return "original";
        case Provenance::cross: return "cross";
        case Provenance::grained: return "grained";
        case Provenance::rewrite: return "rewrite";
    }
    return "original";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "original") return Provenance::original;
    if (s == "cross") return Provenance::cross;
    if (s == "grained") return Provenance::grained;
    if (s == "rewrite") return Provenance::rewrite;
    throw ContractViolation("bad provenance '" + s + "'");
}

json LabeledSentence::to_json() const {
    json j;
    j["id"] = id;
    j["text"] = text;
    j["aspect_id"] = aspect_id;
    j["label_index"] = label_index;
    j["label_text"] = label_text;
    j["provenance"] = to_string(provenance);
    j["source_dataset"] = source_dataset;
    j["meta"] = meta;
    return j;
}

LabeledSentence LabeledSentence::from_json(const json& j) {
    LabeledSentence r;
    r.id = j.at("id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.aspect_id = j.at("aspect_id").get<std::string>();
    r.label_index = j.at("label_index").get<int>();
    r.label_text = j.at("label_text").get<std::string>();
    r.provenance = provenance_from_string(j.at("provenance").get<std::string>());
    r.source_dataset = j.value("source_dataset", "");
    if (j.contains("meta")) r.meta = j["meta"].get<std::map<std::string, std::string>>();
    return r;
}

const std::set<std::string>& default_reject_tokens() {
    static const std::set<std::string> tokens = {"none", "n/a", "reject", ""};
    return tokens;
}

namespace {

bool strip_quote_pair(std::string& s) {
    if (s.size() >= 2) {
        char f = s.front();
        char b = s.back();
        if ((f == '"' && b == '"') || (f == '\'' && b == '\'') || (f == '`' && b == '`')) {
            s = trim(s.substr(1, s.size() - 2));
            return true;
        }
    }
    // UTF-8 curly quotes: “ ” (e2 80 9c / 9d) and ‘ ’ (e2 80 98 / 99).
    auto starts = [&](const char* p) { return s.rfind(p, 0) == 0; };
    auto ends = [&](const char* p) {
        size_t n = std::string(p).size();
        return s.size() >= n && s.compare(s.size() - n, n, p) == 0;
    };
    if (s.size() >= 6) {
        if ((starts("\xe2\x80\x9c") && ends("\xe2\x80\x9d")) ||
            (starts("\xe2\x80\x98") && ends("\xe2\x80\x99"))) {
            s = trim(s.substr(3, s.size() - 6));
            return true;
        }
    }
    return false;
}

bool strip_terminal_punct(std::string& s) {
    static const std::string punct = ".,!?;";
    bool any = false;
    while (!s.empty() && punct.find(s.back()) != std::string::npos) {
        s.pop_back();
        any = true;
    }
    if (any) s = trim(s);
    return any;
}

}  // namespace

std::string normalize_surface(std::string_view raw) {
    std::string s = trim(raw);
    // Quote pairs and terminal punctuation may nest ('"sports."'), so strip
    // until a fixed point.
    for (;;) {
        bool changed = strip_quote_pair(s);
        changed |= strip_terminal_punct(s);
        if (!changed) break;
    }
    return lower(s);
}

NormalizedLabel normalize_label(const std::string& raw, const Aspect& aspect,
                                const std::set<std::string>& reject_tokens) {
    NormalizedLabel out;
    out.normalized = normalize_surface(raw);
    if (reject_tokens.count(out.normalized)) {
        out.kind = NormalizedLabel::Kind::reject;
        return out;
    }
    if (const Attribute* a = aspect.find_by_alias(out.normalized)) {
        out.kind = NormalizedLabel::Kind::attribute;
        out.attribute = a;
        return out;
    }
    out.kind = NormalizedLabel::Kind::unknown;
    return out;
}

std::vector<ControlCombination> enumerate_combinations(
    const AspectRegistry& registry,
    const std::map<std::string, std::set<int>>& restriction) {
    for (const auto& [aspect_id, allowed] : restriction) {
        registry.require(aspect_id);
        if (allowed.empty()) {
            throw ConfigError("combinations: empty restriction for aspect '" + aspect_id + "'");
        }
    }
    std::vector<std::vector<int>> allowed_per_aspect;
    for (const auto& asp : registry.aspects()) {
        std::vector<int> allowed;
        auto it = restriction.find(asp.id);
        if (it != restriction.end()) {
            for (int idx : it->second) {
                if (idx < 1 || idx > static_cast<int>(asp.attributes.size())) {
                    throw ConfigError("combinations: index " + std::to_string(idx) +
                                      " out of range for aspect '" + asp.id + "'");
                }
                allowed.push_back(idx);  // std::set iterates ascending
            }
        } else {
            for (const auto& attr : asp.attributes) allowed.push_back(attr.index);
        }
        allowed_per_aspect.push_back(std::move(allowed));
    }

    std::vector<ControlCombination> out;
    std::vector<size_t> odo(allowed_per_aspect.size(), 0);
    for (;;) {
        ControlCombination c;
        c.indices.reserve(odo.size());
        for (size_t i = 0; i < odo.size(); ++i) c.indices.push_back(allowed_per_aspect[i][odo[i]]);
        out.push_back(std::move(c));
        size_t pos = odo.size();
        while (pos > 0) {
            --pos;
            if (++odo[pos] < allowed_per_aspect[pos].size()) break;
            odo[pos] = 0;
            if (pos == 0) return out;
        }
    }
}

}  // namespace mctg
