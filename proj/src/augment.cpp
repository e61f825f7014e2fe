#include "mctg/augment.hpp"

#include <algorithm>

#include "mctg/errors.hpp"
#include "mctg/rng.hpp"
#include "mctg/util.hpp"

namespace mctg {

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& vars,
                            const std::vector<std::string>& required) {
    for (const auto& key : required) {
        if (tmpl.find("{{" + key + "}}") == std::string::npos) {
            throw ConfigError("template is missing required placeholder {{" + key + "}}");
        }
    }
    std::string out = tmpl;
    for (const auto& [key, value] : vars) {
        const std::string needle = "{{" + key + "}}";
        size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    auto open = out.find("{{");
    if (open != std::string::npos) {
        auto close = out.find("}}", open);
        std::string name = close == std::string::npos ? out.substr(open)
                                                      : out.substr(open, close - open + 2);
        throw ConfigError("template has unresolved placeholder " + name);
    }
    return out;
}

std::string render_attribute_lines(const Aspect& aspect) {
    std::string out;
    for (const auto& attr : aspect.attributes) {
        if (!out.empty()) out += '\n';
        out += "- " + attr.name + ": " + attr.description;
    }
    return out;
}

std::string IclExampleSet::render() const {
    std::string out;
    for (const auto& [attr, examples] : per_attribute) {
        for (const auto& ex : examples) {
            if (!out.empty()) out += "\n\n";
            out += "Sentence: " + ex.sentence + "\nAttribute: " + ex.attribute;
        }
    }
    return out;
}

IclExampleSet sample_icl(const std::vector<LabeledSentence>& pool, const Aspect& aspect, size_t k,
                         std::uint64_t seed) {
    IclExampleSet set;
    set.aspect_id = aspect.id;
    set.k = k;
    for (const auto& attr : aspect.attributes) {
        std::vector<const LabeledSentence*> candidates;
        for (const auto& rec : pool) {
            if (rec.provenance == Provenance::original && rec.aspect_id == aspect.id &&
                rec.label_index == attr.index) {
                candidates.push_back(&rec);
            }
        }
        if (candidates.size() < k) {
            throw ConfigError("ICL pool for aspect '" + aspect.id + "' attribute '" + attr.name +
                              "' has " + std::to_string(candidates.size()) + " originals, need " +
                              std::to_string(k));
        }
        SplitMix64 rng(seed, "icl:" + aspect.id + ":" + attr.name);
        auto picks = sample_indices(candidates.size(), k, rng);
        std::sort(picks.begin(), picks.end());
        std::vector<IclExample> examples;
        examples.reserve(k);
        for (size_t i : picks) examples.push_back({candidates[i]->text, attr.name});
        set.per_attribute.emplace_back(attr.name, std::move(examples));
    }
    return set;
}

VoteResult consistency_vote(const std::vector<NormalizedLabel>& outcomes) {
    if (outcomes.size() != 3) {
        throw ContractViolation("consistency_vote needs exactly 3 outcomes, got " +
                                std::to_string(outcomes.size()));
    }
    VoteResult result;
    for (const auto& o : outcomes) {
        if (o.kind == NormalizedLabel::Kind::reject) {
            result.verdict = VoteResult::Verdict::rejected;
            return result;
        }
    }
    const Attribute* first = outcomes[0].attribute;
    bool unanimous = first != nullptr;
    for (const auto& o : outcomes) {
        if (o.kind != NormalizedLabel::Kind::attribute || o.attribute != first) unanimous = false;
    }
    if (unanimous) {
        result.verdict = VoteResult::Verdict::consistent;
        result.attribute = first;
    } else {
        result.verdict = VoteResult::Verdict::inconsistent;
    }
    return result;
}

json StageReport::to_json() const {
    return json{{"input", input},
                {"kept", kept},
                {"rejected", rejected},
                {"inconsistent", inconsistent},
                {"errors", errors}};
}

namespace {

ChatRequest make_request(const std::string& model, const std::string& prompt, double temperature,
                         const std::string& tag) {
    ChatRequest req;
    req.model = model;
    req.messages.push_back({"user", prompt});
    req.temperature = temperature;
    req.request_tag = tag;
    return req;
}

}  // namespace

std::vector<LabeledSentence> cross_augment(const std::vector<LabeledSentence>& source,
                                           const Aspect& target, const IclExampleSet& icl,
                                           ChatClient& chat, const CrossParams& params,
                                           StageReport& report) {
    if (params.repeats != 3) {
        throw ConfigError("cross augmentation uses exactly 3 consistency repeats, got " +
                          std::to_string(params.repeats));
    }
    if (icl.aspect_id != target.id) {
        throw ContractViolation("ICL set for aspect '" + icl.aspect_id +
                                "' used with target aspect '" + target.id + "'");
    }
    for (const auto& rec : source) {
        if (rec.aspect_id == target.id) {
            throw ContractViolation("cross source record " + rec.id +
                                    " already belongs to target aspect '" + target.id + "'");
        }
    }

    const std::string attr_lines = render_attribute_lines(target);
    const std::string icl_text = icl.render();

    auto results = parallel_map(source, params.workers,
                                [&](const LabeledSentence& rec, size_t) -> VoteResult {
        std::string prompt = render_template(
            params.template_text,
            {{"aspect_description", target.description},
             {"attribute_descriptions", attr_lines},
             {"icl_examples", icl_text},
             {"sentence", rec.text}},
            {"aspect_description", "attribute_descriptions", "icl_examples", "sentence"});
        std::vector<NormalizedLabel> outcomes;
        for (int r = 1; r <= params.repeats; ++r) {
            std::string tag = "cross:" + target.id + ":" + rec.id + ":r" + std::to_string(r);
            std::string response =
                chat.complete(make_request(params.model, prompt, params.temperature, tag));
            outcomes.push_back(normalize_label(last_nonempty_line(response), target));
        }
        return consistency_vote(outcomes);
    });

    std::vector<LabeledSentence> out;
    report.input += source.size();
    for (size_t i = 0; i < source.size(); ++i) {
        const auto& vote = results[i];
        switch (vote.verdict) {
            case VoteResult::Verdict::rejected: report.rejected += 1; continue;
            case VoteResult::Verdict::inconsistent: report.inconsistent += 1; continue;
            case VoteResult::Verdict::consistent: break;
        }
        const auto& src = source[i];
        LabeledSentence rec;
        rec.id = stable_id({"cross", target.id, src.id});
        rec.text = src.text;
        rec.aspect_id = target.id;
        rec.label_index = vote.attribute->index;
        rec.label_text = vote.attribute->name;
        rec.provenance = Provenance::cross;
        rec.source_dataset = src.source_dataset;
        rec.meta["source_id"] = src.id;
        rec.meta["source_aspect"] = src.aspect_id;
        out.push_back(std::move(rec));
        report.kept += 1;
    }
    std::sort(out.begin(), out.end(),
              [](const LabeledSentence& a, const LabeledSentence& b) { return a.id < b.id; });
    return out;
}

std::vector<LabeledSentence> grained_augment(const std::vector<LabeledSentence>& source,
                                             const AspectRegistry& registry, ChatClient& chat,
                                             const GrainedParams& params, StageReport& report) {
    auto results = parallel_map(source, params.workers,
                                [&](const LabeledSentence& rec, size_t) -> std::string {
        const Aspect& aspect = registry.require(rec.aspect_id);
        const Attribute* attr = aspect.find_by_index(rec.label_index);
        if (!attr) {
            throw ContractViolation("record " + rec.id + " has label index " +
                                    std::to_string(rec.label_index) + " outside aspect '" +
                                    rec.aspect_id + "'");
        }
        std::string prompt =
            render_template(params.template_text,
                            {{"aspect_description", aspect.description},
                             {"attribute", attr->name},
                             {"sentence", rec.text}},
                            {"aspect_description", "attribute", "sentence"});
        std::string tag = "grained:" + rec.id + ":r1";
        std::string response =
            chat.complete(make_request(params.model, prompt, params.temperature, tag));
        // Normalization keeps descriptions stable across cosmetic response
        // variation (case, trailing period, quotes).
        return normalize_surface(last_nonempty_line(response));
    });

    std::vector<LabeledSentence> out;
    report.input += source.size();
    const auto& rejects = default_reject_tokens();
    for (size_t i = 0; i < source.size(); ++i) {
        const std::string& description = results[i];
        if (rejects.count(description)) {
            report.rejected += 1;
            continue;
        }
        const auto& src = source[i];
        LabeledSentence rec;
        rec.id = stable_id({"grained", src.id});
        rec.text = src.text;
        rec.aspect_id = src.aspect_id;
        rec.label_index = src.label_index;  // coarse attribute stays addressable
        rec.label_text = description;
        rec.provenance = Provenance::grained;
        rec.source_dataset = src.source_dataset;
        rec.meta["source_id"] = src.id;
        rec.meta["coarse_label"] = src.label_text;
        out.push_back(std::move(rec));
        report.kept += 1;
    }
    std::sort(out.begin(), out.end(),
              [](const LabeledSentence& a, const LabeledSentence& b) { return a.id < b.id; });
    return out;
}

std::string to_string(RewriteVerdict v) {
    switch (v) {
        case RewriteVerdict::kept: return "kept";
        case RewriteVerdict::dropped_length: return "dropped_length";
        case RewriteVerdict::dropped_similarity_high: return "dropped_similarity_high";
        case RewriteVerdict::dropped_similarity_low: return "dropped_similarity_low";
        case RewriteVerdict::dropped_reject: return "dropped_reject";
    }
    throw ContractViolation("unhandled RewriteVerdict");
}

RewriteVerdict rewrite_verdict_from_string(const std::string& s) {
    if (s == "kept") return RewriteVerdict::kept;
    if (s == "dropped_length") return RewriteVerdict::dropped_length;
    if (s == "dropped_similarity_high") return RewriteVerdict::dropped_similarity_high;
    if (s == "dropped_similarity_low") return RewriteVerdict::dropped_similarity_low;
    if (s == "dropped_reject") return RewriteVerdict::dropped_reject;
    throw ConfigError("unknown rewrite verdict '" + s + "'");
}

json RewritePair::to_json() const {
    json j;
    j["id"] = id;
    j["source"] = source.to_json();
    j["target_aspect_id"] = target_aspect_id;
    j["target_attribute_index"] = target_attribute_index;
    j["target_attribute"] = target_attribute;
    j["rewritten_text"] = rewritten_text;
    if (similarity) j["similarity"] = *similarity;
    else j["similarity"] = nullptr;
    j["verdict"] = to_string(verdict);
    return j;
}

RewritePair RewritePair::from_json(const json& j) {
    RewritePair p;
    p.id = j.at("id").get<std::string>();
    p.source = LabeledSentence::from_json(j.at("source"));
    p.target_aspect_id = j.at("target_aspect_id").get<std::string>();
    p.target_attribute_index = j.at("target_attribute_index").get<int>();
    p.target_attribute = j.at("target_attribute").get<std::string>();
    p.rewritten_text = j.at("rewritten_text").get<std::string>();
    if (j.contains("similarity") && !j.at("similarity").is_null()) {
        p.similarity = j.at("similarity").get<double>();
    }
    p.verdict = rewrite_verdict_from_string(j.at("verdict").get<std::string>());
    return p;
}

std::vector<RewritePair> rewrite_augment(const std::vector<LabeledSentence>& foreign,
                                         const Aspect& target_aspect,
                                         const Attribute& target_attribute,
                                         const IclExampleSet& icl, ChatClient& chat,
                                         const RewriteParams& params, StageReport& report) {
    if (!target_aspect.rewrite_target) {
        throw ConfigError("aspect '" + target_aspect.id + "' is not a rewrite target");
    }
    if (icl.aspect_id != target_aspect.id) {
        throw ContractViolation("ICL set for aspect '" + icl.aspect_id +
                                "' used with rewrite target '" + target_aspect.id + "'");
    }
    for (const auto& rec : foreign) {
        if (rec.aspect_id == target_aspect.id) {
            throw ContractViolation("rewrite source record " + rec.id +
                                    " already belongs to aspect '" + target_aspect.id + "'");
        }
    }

    const std::string attr_lines = render_attribute_lines(target_aspect);
    const std::string icl_text = icl.render();
    const auto& rejects = default_reject_tokens();

    auto results = parallel_map(foreign, params.workers,
                                [&](const LabeledSentence& rec, size_t) -> std::string {
        std::string prompt = render_template(
            params.template_text,
            {{"aspect_description", target_aspect.description},
             {"attribute_descriptions", attr_lines},
             {"target_attribute", target_attribute.name},
             {"icl_examples", icl_text},
             {"sentence", rec.text}},
            {"aspect_description", "attribute_descriptions", "target_attribute", "icl_examples",
             "sentence"});
        std::string tag = "rewrite:" + target_aspect.id + ":" + target_attribute.name + ":" +
                          rec.id + ":r1";
        return chat.complete(make_request(params.model, prompt, params.temperature, tag));
    });

    std::vector<RewritePair> out;
    report.input += foreign.size();
    for (size_t i = 0; i < foreign.size(); ++i) {
        const auto& src = foreign[i];
        RewritePair pair;
        pair.id = stable_id({"rewrite", target_aspect.id, target_attribute.name, src.id});
        pair.source = src;
        pair.target_aspect_id = target_aspect.id;
        pair.target_attribute_index = target_attribute.index;
        pair.target_attribute = target_attribute.name;

        std::string raw = last_nonempty_line(results[i]);
        if (rejects.count(normalize_surface(raw))) {
            pair.verdict = RewriteVerdict::dropped_reject;
            report.rejected += 1;
        } else {
            pair.rewritten_text = clean_text(raw);
            pair.verdict = RewriteVerdict::kept;
            report.kept += 1;
        }
        out.push_back(std::move(pair));
    }
    std::sort(out.begin(), out.end(),
              [](const RewritePair& a, const RewritePair& b) { return a.id < b.id; });
    return out;
}

}  // namespace mctg
