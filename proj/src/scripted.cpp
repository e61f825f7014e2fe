#include "mctg/scripted.hpp"

#include <array>
#include <filesystem>
#include <fstream>

#include "mctg/errors.hpp"
#include "mctg/jsonl.hpp"
#include "mctg/util.hpp"

namespace mctg {

namespace {

// Marker vocabulary shared by the toy corpus, the labeler, and the keyword
// classifier. One marker word per attribute; sentences carry one marker per
// aspect.
const std::map<std::string, std::string>& markers() {
    static const std::map<std::string, std::string> m = {
        {"positive", "wonderful"}, {"negative", "dreadful"},
        {"world", "embassy"},      {"sports", "tournament"},
        {"business", "marketplace"}, {"sci/tech", "software"},
        {"toxic", "jerk"},         {"non-toxic", "courteous"},
    };
    return m;
}

const std::vector<std::string>& topic_order() {
    static const std::vector<std::string> order = {"world", "sports", "business", "sci/tech"};
    return order;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// Trailing ":r<k>" of a request tag; defaults to 1.
int parse_repeat(const std::string& tag) {
    auto pos = tag.rfind(":r");
    if (pos == std::string::npos) return 1;
    int k = 0;
    for (size_t i = pos + 2; i < tag.size(); ++i) {
        char c = tag[i];
        if (c < '0' || c > '9') return 1;
        k = k * 10 + (c - '0');
    }
    return k > 0 ? k : 1;
}

std::vector<std::string> prompt_lines(const std::string& prompt) {
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos <= prompt.size()) {
        size_t nl = prompt.find('\n', pos);
        if (nl == std::string::npos) {
            lines.push_back(prompt.substr(pos));
            break;
        }
        lines.push_back(prompt.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

std::string sentence_after_marker(const std::string& prompt) {
    auto lines = prompt_lines(prompt);
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]) == "**Sentence**") {
            for (size_t j = i + 1; j < lines.size(); ++j) {
                std::string t = trim(lines[j]);
                if (!t.empty()) return t;
            }
        }
    }
    throw ServiceError("scripted chat: prompt has no **Sentence** section");
}

std::vector<std::string> attribute_names(const std::string& prompt) {
    std::vector<std::string> names;
    for (const auto& raw : prompt_lines(prompt)) {
        std::string line = trim(raw);
        if (line.rfind("- ", 0) != 0) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        names.push_back(trim(line.substr(2, colon - 2)));
    }
    if (names.empty()) throw ServiceError("scripted chat: prompt lists no attributes");
    return names;
}

std::string quoted_after(const std::string& prompt, const std::string& lead) {
    auto pos = prompt.find(lead);
    if (pos == std::string::npos) {
        throw ServiceError("scripted chat: expected '" + lead + "' in prompt");
    }
    pos += lead.size();
    auto end = prompt.find('"', pos);
    if (end == std::string::npos) throw ServiceError("scripted chat: unterminated quote in prompt");
    return prompt.substr(pos, end - pos);
}

// Deterministic casing / punctuation noise so the pipeline's normalization
// is exercised; every variant normalizes back to the same label.
std::string decorate_label(const std::string& name, std::uint64_t h) {
    switch (h % 4) {
        case 0: return name;
        case 1: {
            std::string out = name;
            out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
            return out;
        }
        case 2: {
            std::string out;
            for (char c : name) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            return out + ".";
        }
        default: return "\"" + name + "\"";
    }
}

std::string label_sentence(const std::vector<std::string>& attrs, const std::string& sentence,
                           int repeat, std::uint64_t noise) {
    std::string low = lower(sentence);
    if (contains(low, "rejectme")) return "None";
    if (contains(low, "ambiguous")) {
        // Different answer per repeat: votes never reach unanimity.
        return decorate_label(attrs[static_cast<size_t>(repeat - 1) % attrs.size()], noise);
    }
    for (const auto& name : attrs) {
        auto it = markers().find(lower(name));
        if (it == markers().end()) continue;
        if (it->first == "non-toxic") continue;  // decided by absence of the toxic marker
        if (contains(low, it->second)) return decorate_label(name, noise);
    }
    // Toxicity aspect: no toxic marker means non-toxic.
    for (const auto& name : attrs) {
        if (lower(name) == "non-toxic") return decorate_label(name, noise);
    }
    return "None";
}

std::string grained_description(const std::string& attribute, const std::string& sentence) {
    static const std::map<std::string, std::array<const char*, 2>> table = {
        {"positive", {"delighted", "thrilled"}},
        {"negative", {"disappointed", "bitter"}},
        {"world", {"international affairs", "diplomatic news"}},
        {"sports", {"competitive matches", "athletic events"}},
        {"business", {"market commerce", "corporate finance"}},
        {"sci/tech", {"software innovation", "emerging technology"}},
        {"toxic", {"insulting tone", "hostile remarks"}},
        {"non-toxic", {"respectful phrasing", "polite tone"}},
    };
    auto it = table.find(lower(attribute));
    if (it == table.end()) {
        throw ServiceError("scripted chat: no grained table entry for '" + attribute + "'");
    }
    std::uint64_t h = fnv1a64(sentence);
    std::string desc = it->second[h % 2];
    if (h % 3 == 0) desc += ".";  // trailing-period noise, normalized away downstream
    return desc;
}

std::string rewrite_sentence(const std::string& target_attr, const std::string& sentence) {
    std::string low = lower(sentence);
    if (contains(low, "rejectme")) return "None";
    if (contains(low, "terse")) return "Too short.";

    auto it = markers().find(lower(target_attr));
    if (it == markers().end()) {
        throw ServiceError("scripted chat: no marker for rewrite target '" + target_attr + "'");
    }
    const std::string& marker = it->second;

    static const std::array<const char*, 6> fillers = {"indeed",  "somehow", "frankly",
                                                       "notably", "overall", "quietly"};
    std::uint64_t h = fnv1a64(sentence + "\x1f" + target_attr);
    std::vector<std::string> tokens = split_ws(sentence);

    std::vector<std::string> kept;
    switch (h % 4) {
        case 0: kept = tokens; break;  // near copy, lands in the high-similarity band
        case 1:
            for (size_t i = 0; i < tokens.size(); i += 2) kept.push_back(tokens[i]);
            break;
        case 2:
            for (size_t i = 0; i < tokens.size(); i += 3) kept.push_back(tokens[i]);
            break;
        default:
            for (size_t i = 0; i < tokens.size() && i < 2; ++i) kept.push_back(tokens[i]);
            break;
    }

    size_t filler_count = 1 + ((h >> 8) % 3);
    size_t filler_start = (h >> 16) % fillers.size();
    std::string out;
    for (const auto& t : kept) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    for (size_t i = 0; i < filler_count; ++i) {
        if (!out.empty()) out += ' ';
        out += fillers[(filler_start + i) % fillers.size()];
    }
    out += " " + marker;
    if (!out.empty() && out.back() == '.') out.pop_back();
    out += ".";
    return out;
}

struct GenerationCommand {
    std::string sentiment;
    std::string topic;
    std::string detox;
    std::string prefix;
};

GenerationCommand parse_generation(const std::string& prompt) {
    auto pos = prompt.find("controls: ");
    if (pos == std::string::npos) throw ServiceError("scripted chat: no controls clause");
    auto end = prompt.find(", starting with \"", pos);
    if (end == std::string::npos) throw ServiceError("scripted chat: no prefix clause");
    std::string controls = prompt.substr(pos + 10, end - pos - 10);

    GenerationCommand cmd;
    size_t at = 0;
    while (at < controls.size()) {
        auto comma = controls.find(", ", at);
        std::string part = (comma == std::string::npos) ? controls.substr(at)
                                                        : controls.substr(at, comma - at);
        auto colon = part.find(": ");
        if (colon == std::string::npos) throw ServiceError("scripted chat: bad control '" + part + "'");
        std::string key = lower(trim(part.substr(0, colon)));
        std::string value = trim(part.substr(colon + 2));
        if (key == "sentiment") cmd.sentiment = value;
        else if (key == "topic") cmd.topic = value;
        else if (key == "detoxification") cmd.detox = value;
        at = (comma == std::string::npos) ? controls.size() : comma + 2;
    }
    cmd.prefix = quoted_after(prompt, "starting with \"");
    if (cmd.sentiment.empty() || cmd.topic.empty() || cmd.detox.empty()) {
        throw ServiceError("scripted chat: generation prompt missing a control");
    }
    return cmd;
}

std::string generate_text(const GenerationCommand& cmd, const std::string& profile, int repeat) {
    std::string topic_pick = cmd.topic;
    if (profile == "semi") {
        // Sentiment leaks into the topic: the first half of the topic space
        // for positive, the second for negative, alternating with the repeat.
        bool positive = lower(cmd.sentiment) == "positive";
        size_t base = positive ? 0 : 2;
        topic_pick = topic_order()[base + static_cast<size_t>(repeat - 1) % 2];
    }
    const std::string& sent_marker = markers().at(lower(cmd.sentiment));
    const std::string& topic_marker = markers().at(lower(topic_pick));
    std::string text = cmd.prefix + " looked " + sent_marker + " near the " + topic_marker;
    if (lower(cmd.detox) == "toxic") {
        text += ", you jerk.";
    } else {
        text += " with courteous folks.";
    }
    return text;
}

class ScriptedChatBackend : public ChatBackend {
public:
    explicit ScriptedChatBackend(std::string profile) : profile_(std::move(profile)) {
        if (profile_ != "labeler" && profile_ != "obedient" && profile_ != "semi") {
            throw ConfigError("unknown scripted chat profile '" + profile_ + "'");
        }
    }

    std::string complete(const ChatRequest& req) override {
        std::string prompt;
        for (const auto& m : req.messages) {
            if (!prompt.empty()) prompt += '\n';
            prompt += m.content;
        }
        int repeat = parse_repeat(req.request_tag);
        std::uint64_t noise = fnv1a64(req.fingerprint());

        if (contains(prompt, "Rewrite the sentence at the end")) {
            return rewrite_sentence(quoted_after(prompt, "expresses the attribute \""),
                                    sentence_after_marker(prompt));
        }
        if (contains(prompt, "more specific description")) {
            std::string sentence = sentence_after_marker(prompt);
            if (contains(lower(sentence), "rejectme")) return "None";
            return grained_description(quoted_after(prompt, "labeled \""), sentence);
        }
        if (contains(prompt, "Decide which single attribute")) {
            return label_sentence(attribute_names(prompt), sentence_after_marker(prompt), repeat,
                                  noise);
        }
        if (contains(prompt, "satisfies all of the following controls")) {
            if (profile_ == "labeler") {
                throw ServiceError("scripted chat profile 'labeler' cannot generate");
            }
            return generate_text(parse_generation(prompt), profile_, repeat);
        }
        throw ServiceError("scripted chat: unrecognized prompt (" + req.request_tag + ")");
    }

private:
    std::string profile_;
};

class ScriptedEmbedBackend : public EmbedBackend {
public:
    explicit ScriptedEmbedBackend(const std::string& profile) {
        if (profile != "hash16") throw ConfigError("unknown scripted embed profile '" + profile + "'");
    }

    std::vector<double> embed(const std::string&, const std::string& text) override {
        std::vector<double> v(16, 0.0);
        for (const auto& token : split_ws(lower(text))) {
            v[fnv1a64(token) % 16] += 1.0;
        }
        return v;
    }
};

class ScriptedClassifyBackend : public ClassifyBackend {
public:
    ScriptedClassifyBackend(const std::string& profile, std::string aspect_id)
        : aspect_id_(std::move(aspect_id)) {
        if (profile != "keyword") {
            throw ConfigError("unknown scripted classifier profile '" + profile + "'");
        }
    }

    json classify(const std::string& text) override {
        std::string low = lower(text);
        if (aspect_id_ == "sentiment") {
            if (contains(low, markers().at("positive"))) return json{{"label_index", 1}};
            if (contains(low, markers().at("negative"))) return json{{"label_index", 2}};
            return json{{"distribution", {0.5, 0.5}}};
        }
        if (aspect_id_ == "topic") {
            for (size_t i = 0; i < topic_order().size(); ++i) {
                if (contains(low, markers().at(topic_order()[i]))) {
                    return json{{"label_index", static_cast<int>(i) + 1}};
                }
            }
            return json{{"distribution", {0.25, 0.25, 0.25, 0.25}}};
        }
        if (aspect_id_ == "detoxification") {
            int idx = contains(low, markers().at("toxic")) ? 1 : 2;
            return json{{"label_index", idx}};
        }
        throw ServiceError("scripted classifier: unsupported aspect '" + aspect_id_ + "'");
    }

private:
    std::string aspect_id_;
};

}  // namespace

std::shared_ptr<ChatBackend> make_scripted_chat(const std::string& profile) {
    return std::make_shared<ScriptedChatBackend>(profile);
}

std::shared_ptr<EmbedBackend> make_scripted_embed(const std::string& profile) {
    return std::make_shared<ScriptedEmbedBackend>(profile);
}

std::shared_ptr<ClassifyBackend> make_scripted_classifier(const std::string& profile,
                                                          const std::string& aspect_id) {
    return std::make_shared<ScriptedClassifyBackend>(profile, aspect_id);
}

const std::map<std::string, std::string>& toy_markers() { return markers(); }

json toy_registry_json() {
    return json::parse(R"({
      "aspects": [
        {
          "id": "sentiment",
          "display_name": "Sentiment",
          "description": "the emotional polarity of the text",
          "rewrite_target": true,
          "attributes": [
            {"name": "positive", "aliases": ["pos", "good"], "description": "an upbeat, approving tone"},
            {"name": "negative", "aliases": ["neg", "bad"], "description": "a critical, disapproving tone"}
          ]
        },
        {
          "id": "topic",
          "display_name": "Topic",
          "description": "the news category the text belongs to",
          "rewrite_target": true,
          "attributes": [
            {"name": "world", "aliases": ["world news"], "description": "international and diplomatic affairs"},
            {"name": "sports", "aliases": ["sport"], "description": "athletic competitions and games"},
            {"name": "business", "aliases": ["finance"], "description": "markets, companies, and commerce"},
            {"name": "sci/tech", "aliases": ["science", "technology", "sci-tech"], "description": "science and technology"}
          ]
        },
        {
          "id": "detoxification",
          "display_name": "Detoxification",
          "description": "whether the text contains toxic language",
          "rewrite_target": false,
          "attributes": [
            {"name": "toxic", "aliases": [], "description": "contains insults or hostile language"},
            {"name": "non-toxic", "aliases": ["nontoxic", "clean"], "description": "free of insults and hostility"}
          ]
        }
      ]
    })");
}

namespace {

std::string toy_sentence(size_t i, bool positive, size_t topic_idx, bool toxic) {
    static const std::array<const char*, 5> openers = {"The", "That", "This", "Our", "Their"};
    static const std::array<const char*, 8> nouns = {"crowd",    "press", "panel", "crew",
                                                     "audience", "jury",  "team",  "staff"};
    static const std::array<const char*, 6> tails = {"all afternoon", "through the night",
                                                     "for hours",     "without pause",
                                                     "since morning", "until late"};
    const std::string sent_marker = markers().at(positive ? "positive" : "negative");
    const std::string topic_marker = markers().at(topic_order()[topic_idx]);

    std::string s = std::string(openers[i % 5]) + " " + nouns[i % 8] + " found the " +
                    topic_marker + " briefing " + sent_marker + " " + tails[i % 6];
    if (i % 17 == 3) s += " despite the ambiguous wording";
    if (i % 19 == 7) s += " in a terse exchange";
    if (toxic) s += ", shouting like a jerk";
    if (i % 23 == 5) s += " rejectme";
    s += ".";
    return s;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

}  // namespace

void write_toy_corpus(const std::string& dir) {
    std::filesystem::create_directories(dir);
    const size_t rows = 100;

    {
        std::string csv = "review,sentiment\n";
        for (size_t i = 0; i < rows; ++i) {
            bool positive = i % 2 == 0;
            csv += csv_field(toy_sentence(i, positive, i % 4, i % 5 == 0));
            csv += ",";
            csv += positive ? "pos" : "neg";
            csv += "\n";
        }
        write_file(dir + "/imdb.csv", csv);
    }

    {
        static const std::array<const char*, 4> classes = {"World", "Sports", "Business",
                                                           "Sci/Tech"};
        std::string csv = "title,description,class\n";
        for (size_t i = 0; i < rows; ++i) {
            size_t topic_idx = i % 4;
            csv += csv_field("item " + std::to_string(i)) + ",";
            csv += csv_field(toy_sentence(i, i % 2 == 0, topic_idx, i % 5 == 0));
            csv += ",";
            csv += classes[topic_idx];
            csv += "\n";
        }
        write_file(dir + "/agnews.csv", csv);
    }

    {
        std::vector<json> out;
        for (size_t i = 0; i < rows; ++i) {
            bool toxic = i % 3 == 0;
            json j;
            j["comment_text"] = toy_sentence(i, i % 2 == 0, i % 4, toxic);
            j["toxic"] = toxic && i % 6 != 0 ? 1 : 0;
            j["severe_toxic"] = toxic && i % 6 == 0 ? 1 : 0;
            j["insult"] = toxic && i % 9 == 0 ? 1 : 0;
            out.push_back(std::move(j));
        }
        write_jsonl(dir + "/jigsaw.jsonl", out);
    }

    write_file(dir + "/prefixes.txt",
               "the weather was\nin recent news\ncritics agree that\noverall the event\n"
               "people say the\n");

    {
        static const std::array<const char*, 6> subjects = {"a compass",  "tidal power",
                                                            "a sonnet",   "double-entry ledgers",
                                                            "a telescope", "crop rotation"};
        std::vector<json> out;
        for (size_t i = 0; i < 120; ++i) {
            json j;
            j["instruction"] = std::string("Explain ") + subjects[i % 6] + " in one sentence. (v" +
                               std::to_string(i) + ")";
            j["response"] = std::string("Here is a one-sentence explanation of ") + subjects[i % 6] +
                            ", variant " + std::to_string(i) + ".";
            out.push_back(std::move(j));
        }
        write_jsonl(dir + "/univ.jsonl", out);
    }
}

}  // namespace mctg
