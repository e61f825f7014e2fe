#pragma once
// Quality control for rewrite pairs: a words-minimum length filter and the
// similarity band filter that drops the most-similar half (near copies) and
// the least-similar tail (failed rewrites).

#include <cstddef>
#include <vector>

#include "mctg/augment.hpp"
#include "mctg/services.hpp"

namespace mctg {

struct FilterPolicy {
    size_t min_words = 5;
    double low_drop_fraction = 0.10;
    double high_drop_fraction = 0.50;

    void validate() const;
};

// Demotes provisionally kept pairs whose rewritten text has fewer than
// min_words whitespace tokens to dropped_length. Other pairs untouched.
void length_filter(std::vector<RewritePair>& pairs, const FilterPolicy& policy);

// Fills pair.similarity = cosine(embed(source.text), embed(rewritten_text))
// for every provisionally kept pair.
void score_similarity(std::vector<RewritePair>& pairs, EmbedClient& embed, size_t workers);

// Over the N still-kept pairs: sorts by (similarity, id) ascending, demotes
// the lowest floor(low*N) to dropped_similarity_low and the highest
// ceil(high*N) to dropped_similarity_high. The id tie-break makes the kept
// set independent of input order. Kept pairs must already carry similarity.
void similarity_band_filter(std::vector<RewritePair>& pairs, const FilterPolicy& policy);

struct QualityReport {
    size_t entered = 0;  // pairs entering the quality stage (any verdict)
    size_t kept = 0;
    size_t dropped_length = 0;
    size_t dropped_similarity_high = 0;
    size_t dropped_similarity_low = 0;
    size_t dropped_reject = 0;

    json to_json() const;
};

QualityReport tally_verdicts(const std::vector<RewritePair>& pairs);

}  // namespace mctg
