#include "mctg/quality.hpp"

#include <algorithm>
#include <cmath>

#include "mctg/errors.hpp"
#include "mctg/util.hpp"

namespace mctg {

void FilterPolicy::validate() const {
    if (low_drop_fraction < 0 || high_drop_fraction < 0) {
        throw ConfigError("filter drop fractions must be non-negative");
    }
    if (low_drop_fraction + high_drop_fraction >= 1.0) {
        throw ConfigError("filter drop fractions must sum to less than 1");
    }
}

void length_filter(std::vector<RewritePair>& pairs, const FilterPolicy& policy) {
    policy.validate();
    for (auto& pair : pairs) {
        if (pair.verdict != RewriteVerdict::kept) continue;
        if (split_ws(pair.rewritten_text).size() < policy.min_words) {
            pair.verdict = RewriteVerdict::dropped_length;
        }
    }
}

void score_similarity(std::vector<RewritePair>& pairs, EmbedClient& embed, size_t workers) {
    std::vector<size_t> kept_idx;
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].verdict == RewriteVerdict::kept) kept_idx.push_back(i);
    }
    auto sims = parallel_map(kept_idx, workers, [&](size_t idx, size_t) -> double {
        const auto& pair = pairs[idx];
        return cosine_similarity(embed.embed(pair.source.text), embed.embed(pair.rewritten_text));
    });
    for (size_t j = 0; j < kept_idx.size(); ++j) pairs[kept_idx[j]].similarity = sims[j];
}

void similarity_band_filter(std::vector<RewritePair>& pairs, const FilterPolicy& policy) {
    policy.validate();
    std::vector<size_t> kept_idx;
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].verdict != RewriteVerdict::kept) continue;
        if (!pairs[i].similarity) {
            throw ContractViolation("pair " + pairs[i].id +
                                    " enters the band filter without a similarity score");
        }
        kept_idx.push_back(i);
    }
    const size_t n = kept_idx.size();
    if (n == 0) return;

    std::sort(kept_idx.begin(), kept_idx.end(), [&](size_t a, size_t b) {
        double sa = *pairs[a].similarity;
        double sb = *pairs[b].similarity;
        if (sa != sb) return sa < sb;
        return pairs[a].id < pairs[b].id;
    });

    const auto low_cut = static_cast<size_t>(std::floor(policy.low_drop_fraction * double(n)));
    const auto high_cut = static_cast<size_t>(std::ceil(policy.high_drop_fraction * double(n)));
    // low + high < 1 guarantees low_cut + high_cut <= n.
    for (size_t r = 0; r < low_cut; ++r) {
        pairs[kept_idx[r]].verdict = RewriteVerdict::dropped_similarity_low;
    }
    for (size_t r = n - high_cut; r < n; ++r) {
        pairs[kept_idx[r]].verdict = RewriteVerdict::dropped_similarity_high;
    }
}

json QualityReport::to_json() const {
    return json{{"entered", entered},
                {"kept", kept},
                {"dropped_length", dropped_length},
                {"dropped_similarity_high", dropped_similarity_high},
                {"dropped_similarity_low", dropped_similarity_low},
                {"dropped_reject", dropped_reject}};
}

QualityReport tally_verdicts(const std::vector<RewritePair>& pairs) {
    QualityReport report;
    report.entered = pairs.size();
    for (const auto& pair : pairs) {
        switch (pair.verdict) {
            case RewriteVerdict::kept: report.kept += 1; break;
            case RewriteVerdict::dropped_length: report.dropped_length += 1; break;
            case RewriteVerdict::dropped_similarity_high: report.dropped_similarity_high += 1; break;
            case RewriteVerdict::dropped_similarity_low: report.dropped_similarity_low += 1; break;
            case RewriteVerdict::dropped_reject: report.dropped_reject += 1; break;
        }
    }
    return report;
}

}  // namespace mctg
