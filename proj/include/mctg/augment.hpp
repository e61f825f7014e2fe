#pragma once
// The three augmentation pipelines: labeling sentences with a foreign
// aspect's attributes (cross), replacing coarse labels with fine-grained
// descriptions (grained), and rewriting foreign sentences toward a target
// attribute (rewrite). Shared machinery: ICL demonstration sampling,
// template rendering, reject handling, and 3-vote consistency validation.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mctg/core.hpp"
#include "mctg/services.hpp"

namespace mctg {

// Substitutes {{key}} placeholders. Every key in `required` must occur in the
// template, and no unresolved {{...}} may remain afterwards.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& vars,
                            const std::vector<std::string>& required);

// "- name: description" per attribute, one line each, in index order.
std::string render_attribute_lines(const Aspect& aspect);

struct IclExample {
    std::string sentence;
    std::string attribute;  // canonical name
};

// k demonstrations per attribute of one aspect, drawn from originals only.
struct IclExampleSet {
    std::string aspect_id;
    size_t k = 0;
    std::vector<std::pair<std::string, std::vector<IclExample>>> per_attribute;  // attr order

    // "Sentence: ...\nAttribute: ..." blocks separated by blank lines.
    std::string render() const;
};

IclExampleSet sample_icl(const std::vector<LabeledSentence>& pool, const Aspect& aspect, size_t k,
                         std::uint64_t seed);

struct VoteResult {
    enum class Verdict { consistent, rejected, inconsistent };
    Verdict verdict = Verdict::inconsistent;
    const Attribute* attribute = nullptr;  // set iff verdict == consistent
};

// Rejected if any outcome is a reject; consistent iff all three name the same
// attribute; inconsistent otherwise (unknowns never match anything).
VoteResult consistency_vote(const std::vector<NormalizedLabel>& outcomes);

struct StageReport {
    size_t input = 0;
    size_t kept = 0;
    size_t rejected = 0;
    size_t inconsistent = 0;
    size_t errors = 0;

    json to_json() const;
};

struct CrossParams {
    std::string template_text;
    std::string model;
    double temperature = 0.7;
    int repeats = 3;
    size_t workers = 1;
};

// Labels each source sentence with the target aspect via `repeats` chat calls
// and unanimity voting. Output records carry provenance = cross and the
// target aspect; drops are tallied per verdict. Output sorted by id.
std::vector<LabeledSentence> cross_augment(const std::vector<LabeledSentence>& source,
                                           const Aspect& target, const IclExampleSet& icl,
                                           ChatClient& chat, const CrossParams& params,
                                           StageReport& report);

struct GrainedParams {
    std::string template_text;
    std::string model;
    double temperature = 0.7;
    size_t workers = 1;
};

// Replaces each record's coarse label_text with a fine-grained description of
// how the sentence expresses it. Text and label_index stay untouched.
std::vector<LabeledSentence> grained_augment(const std::vector<LabeledSentence>& source,
                                             const AspectRegistry& registry, ChatClient& chat,
                                             const GrainedParams& params, StageReport& report);

enum class RewriteVerdict {
    kept,  // provisional until the quality filters run
    dropped_length,
    dropped_similarity_high,
    dropped_similarity_low,
    dropped_reject,
};

std::string to_string(RewriteVerdict v);
RewriteVerdict rewrite_verdict_from_string(const std::string& s);

struct RewritePair {
    std::string id;
    LabeledSentence source;  // foreign-aspect original
    std::string target_aspect_id;
    int target_attribute_index = 0;
    std::string target_attribute;  // canonical name
    std::string rewritten_text;
    std::optional<double> similarity;  // filled by the quality stage
    RewriteVerdict verdict = RewriteVerdict::kept;

    json to_json() const;
    static RewritePair from_json(const json& j);
};

struct RewriteParams {
    std::string template_text;
    std::string model;
    double temperature = 0.7;
    size_t workers = 1;
};

// Rewrites foreign sentences toward one attribute of a rewrite-enabled
// aspect. Rejects become dropped_reject pairs; everything else is kept
// provisionally for the quality stage. Output sorted by pair id.
std::vector<RewritePair> rewrite_augment(const std::vector<LabeledSentence>& foreign,
                                         const Aspect& target_aspect,
                                         const Attribute& target_attribute,
                                         const IclExampleSet& icl, ChatClient& chat,
                                         const RewriteParams& params, StageReport& report);

}  // namespace mctg
