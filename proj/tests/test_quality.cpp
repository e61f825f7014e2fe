#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "mctg/errors.hpp"
#include "mctg/quality.hpp"
#include "mctg/rng.hpp"
#include "mctg/scripted.hpp"
#include "mctg/util.hpp"

using namespace mctg;
using namespace mctg::test;

namespace {

RewritePair rw_pair(const std::string& id, const std::string& rewritten,
                      RewriteVerdict verdict = RewriteVerdict::kept) {
    RewritePair p;
    p.id = id;
    p.source = make_record("src-" + id, "source text for " + id, "topic", 1, "world");
    p.target_aspect_id = "sentiment";
    p.target_attribute_index = 1;
    p.target_attribute = "positive";
    p.rewritten_text = rewritten;
    p.verdict = verdict;
    return p;
}

RewritePair scored_pair(const std::string& id, double similarity) {
    auto p = rw_pair(id, "scored text long enough to pass");
    p.similarity = similarity;
    return p;
}

std::set<std::string> kept_ids(const std::vector<RewritePair>& pairs) {
    std::set<std::string> ids;
    for (const auto& p : pairs) {
        if (p.verdict == RewriteVerdict::kept) ids.insert(p.id);
    }
    return ids;
}

}  // namespace

TEST_CASE("filter policy validation") {
    FilterPolicy ok;
    CHECK_NOTHROW(ok.validate());

    FilterPolicy negative;
    negative.low_drop_fraction = -0.1;
    CHECK_THROWS_AS(negative.validate(), ConfigError);

    FilterPolicy too_much;
    too_much.low_drop_fraction = 0.5;
    too_much.high_drop_fraction = 0.5;
    CHECK_THROWS_AS(too_much.validate(), ConfigError);

    FilterPolicy nearly_all;
    nearly_all.low_drop_fraction = 0.49;
    nearly_all.high_drop_fraction = 0.5;
    CHECK_NOTHROW(nearly_all.validate());
}

TEST_CASE("length filter keeps exactly min_words tokens and above") {
    FilterPolicy policy;  // min_words = 5
    std::vector<RewritePair> pairs = {
        rw_pair("a", "one two three four five"),
        rw_pair("b", "one two three four"),
        rw_pair("c", "one two three four five six"),
        rw_pair("d", "  spaced   out   words   here   too  "),
        rw_pair("e", "short text", RewriteVerdict::dropped_reject),
    };
    length_filter(pairs, policy);

    CHECK(pairs[0].verdict == RewriteVerdict::kept);           // boundary is inclusive
    CHECK(pairs[1].verdict == RewriteVerdict::dropped_length);  // four words
    CHECK(pairs[2].verdict == RewriteVerdict::kept);
    CHECK(pairs[3].verdict == RewriteVerdict::kept);  // tokenization ignores extra spaces
    // Already-rejected pairs are not re-judged.
    CHECK(pairs[4].verdict == RewriteVerdict::dropped_reject);
}

TEST_CASE("length filter respects a custom minimum") {
    FilterPolicy policy;
    policy.min_words = 2;
    std::vector<RewritePair> pairs = {rw_pair("a", "single"), rw_pair("b", "two words")};
    length_filter(pairs, policy);
    CHECK(pairs[0].verdict == RewriteVerdict::dropped_length);
    CHECK(pairs[1].verdict == RewriteVerdict::kept);
}

TEST_CASE("score_similarity fills kept pairs only, using the embedding cosine") {
    auto backend = std::make_shared<CountingEmbedBackend>();
    EmbedClient client(backend, "toy-embed", Mode::live, nullptr);

    std::vector<RewritePair> pairs = {
        rw_pair("a", "alpha beta gamma delta epsilon"),
        rw_pair("b", "totally different tokens here now"),
        rw_pair("c", "whatever text", RewriteVerdict::dropped_length),
    };
    pairs[0].source.text = "alpha beta gamma";
    pairs[1].source.text = "unrelated words entirely";
    score_similarity(pairs, client, 2);

    REQUIRE(pairs[0].similarity.has_value());
    REQUIRE(pairs[1].similarity.has_value());
    CHECK(!pairs[2].similarity.has_value());

    // Cross-check against a direct embedding of the same texts.
    auto raw = make_scripted_embed("hash16");
    auto expect = [&](const std::string& a, const std::string& b) {
        return cosine_similarity(EmbeddingVector::of(raw->embed("toy-embed", a)),
                                 EmbeddingVector::of(raw->embed("toy-embed", b)));
    };
    CHECK(*pairs[0].similarity ==
          doctest::Approx(expect("alpha beta gamma", "alpha beta gamma delta epsilon"))
              .epsilon(1e-12));
    CHECK(*pairs[1].similarity ==
          doctest::Approx(expect("unrelated words entirely", "totally different tokens here now"))
              .epsilon(1e-12));

    // Four distinct texts embedded, none for the dropped pair.
    CHECK(backend->calls.load() == 4);

    // An identical rewrite scores exactly 1 (after clamping).
    std::vector<RewritePair> same = {rw_pair("s", "mirror text")};
    same[0].source.text = "mirror text";
    score_similarity(same, client, 1);
    CHECK(*same[0].similarity == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("band filter drops the bottom tenth and top half of a 10-pair batch") {
    // Similarities 0.1 .. 1.0: floor(0.1*10)=1 lowest and ceil(0.5*10)=5
    // highest go, keeping the four pairs at 0.2, 0.3, 0.4, 0.5.
    std::vector<RewritePair> pairs;
    for (int i = 1; i <= 10; ++i) {
        pairs.push_back(scored_pair("p" + std::to_string(i), i / 10.0));
    }
    FilterPolicy policy;
    similarity_band_filter(pairs, policy);

    CHECK(kept_ids(pairs) == std::set<std::string>{"p2", "p3", "p4", "p5"});
    CHECK(pairs[0].verdict == RewriteVerdict::dropped_similarity_low);
    for (int i = 6; i <= 10; ++i) {
        CHECK(pairs[size_t(i - 1)].verdict == RewriteVerdict::dropped_similarity_high);
    }
}

TEST_CASE("band filter keeps a contiguous middle band") {
    std::vector<RewritePair> pairs;
    SplitMix64 rng(99, "band-sims");
    for (int i = 0; i < 57; ++i) {
        // Distinct similarities via distinct integers.
        pairs.push_back(scored_pair("p" + std::to_string(i),
                                    double(rng.bounded(100000) * 57 + i) / 1e7));
    }
    FilterPolicy policy;
    similarity_band_filter(pairs, policy);

    double max_low = -1.0, min_kept = 2.0, max_kept = -1.0, min_high = 2.0;
    for (const auto& p : pairs) {
        double s = *p.similarity;
        switch (p.verdict) {
            case RewriteVerdict::dropped_similarity_low: max_low = std::max(max_low, s); break;
            case RewriteVerdict::kept:
                min_kept = std::min(min_kept, s);
                max_kept = std::max(max_kept, s);
                break;
            case RewriteVerdict::dropped_similarity_high: min_high = std::min(min_high, s); break;
            default: FAIL("unexpected verdict");
        }
    }
    CHECK(max_low < min_kept);
    CHECK(max_kept < min_high);
}

TEST_CASE("band filter kept count matches floor/ceil arithmetic for every N") {
    for (size_t n = 1; n <= 200; ++n) {
        std::vector<RewritePair> pairs;
        SplitMix64 rng(n, "band-count");
        for (size_t i = 0; i < n; ++i) {
            pairs.push_back(scored_pair("p" + std::to_string(i),
                                        double(rng.next() % 1000000) / 1e6));
        }
        FilterPolicy policy;
        similarity_band_filter(pairs, policy);

        auto low_cut = static_cast<size_t>(std::floor(policy.low_drop_fraction * double(n)));
        auto high_cut = static_cast<size_t>(std::ceil(policy.high_drop_fraction * double(n)));
        auto report = tally_verdicts(pairs);
        CAPTURE(n);
        CHECK(report.kept == n - low_cut - high_cut);
        CHECK(report.dropped_similarity_low == low_cut);
        CHECK(report.dropped_similarity_high == high_cut);
    }
}

TEST_CASE("band filter kept set is invariant to input order") {
    std::vector<RewritePair> base;
    SplitMix64 rng(7, "band-perm");
    for (int i = 0; i < 37; ++i) {
        base.push_back(scored_pair("p" + std::to_string(i), double(rng.bounded(10000)) / 1e4));
    }
    FilterPolicy policy;

    auto reference = base;
    similarity_band_filter(reference, policy);
    auto expected = kept_ids(reference);
    CHECK(!expected.empty());

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto shuffled = base;
        SplitMix64 shuffle_rng(seed, "band-perm-shuffle");
        deterministic_shuffle(shuffled, shuffle_rng);
        similarity_band_filter(shuffled, policy);
        CHECK(kept_ids(shuffled) == expected);
    }
}

TEST_CASE("band filter breaks similarity ties by id, keeping order-independence") {
    // Ten pairs, all with identical similarity: ranks are decided purely by
    // id, so p0 (lowest id) is dropped low and p5..p9 are dropped high.
    std::vector<RewritePair> pairs;
    for (int i = 0; i < 10; ++i) pairs.push_back(scored_pair("p" + std::to_string(i), 0.42));
    FilterPolicy policy;

    auto run = pairs;
    similarity_band_filter(run, policy);
    auto expected = kept_ids(run);
    CHECK(expected == std::set<std::string>{"p1", "p2", "p3", "p4"});

    SplitMix64 rng(3, "tie-shuffle");
    auto shuffled = pairs;
    deterministic_shuffle(shuffled, rng);
    similarity_band_filter(shuffled, policy);
    CHECK(kept_ids(shuffled) == expected);
}

TEST_CASE("band filter tolerates an empty kept set and skips non-kept pairs") {
    std::vector<RewritePair> none;
    FilterPolicy policy;
    CHECK_NOTHROW(similarity_band_filter(none, policy));

    // Non-kept pairs without similarity are fine; they are out of scope.
    std::vector<RewritePair> rejected = {rw_pair("r", "text", RewriteVerdict::dropped_reject)};
    CHECK_NOTHROW(similarity_band_filter(rejected, policy));
    CHECK(rejected[0].verdict == RewriteVerdict::dropped_reject);
}

TEST_CASE("band filter demands similarity scores on kept pairs") {
    std::vector<RewritePair> pairs = {rw_pair("naked", "kept but never scored")};
    FilterPolicy policy;
    try {
        similarity_band_filter(pairs, policy);
        FAIL("expected ContractViolation");
    } catch (const ContractViolation& e) {
        CHECK(std::string(e.what()).find("naked") != std::string::npos);
    }
}

TEST_CASE("band filter honors custom fractions") {
    std::vector<RewritePair> pairs;
    for (int i = 1; i <= 8; ++i) pairs.push_back(scored_pair("p" + std::to_string(i), i / 10.0));

    FilterPolicy keep_all;
    keep_all.low_drop_fraction = 0.0;
    keep_all.high_drop_fraction = 0.0;
    auto all = pairs;
    similarity_band_filter(all, keep_all);
    CHECK(kept_ids(all).size() == 8);

    FilterPolicy heavy_low;
    heavy_low.low_drop_fraction = 0.5;
    heavy_low.high_drop_fraction = 0.25;
    auto trimmed = pairs;
    similarity_band_filter(trimmed, heavy_low);
    // floor(0.5*8)=4 low, ceil(0.25*8)=2 high: keep 0.5 and 0.6.
    CHECK(kept_ids(trimmed) == std::set<std::string>{"p5", "p6"});
}

TEST_CASE("verdict tally covers every class and sums to entered") {
    std::vector<RewritePair> pairs = {
        rw_pair("a", "kept text"),
        rw_pair("b", "short", RewriteVerdict::dropped_length),
        rw_pair("c", "near copy", RewriteVerdict::dropped_similarity_high),
        rw_pair("d", "way off", RewriteVerdict::dropped_similarity_low),
        rw_pair("e", "nope", RewriteVerdict::dropped_reject),
        rw_pair("f", "also kept"),
    };
    auto report = tally_verdicts(pairs);
    CHECK(report.entered == 6);
    CHECK(report.kept == 2);
    CHECK(report.dropped_length == 1);
    CHECK(report.dropped_similarity_high == 1);
    CHECK(report.dropped_similarity_low == 1);
    CHECK(report.dropped_reject == 1);
    CHECK(report.kept + report.dropped_length + report.dropped_similarity_high +
              report.dropped_similarity_low + report.dropped_reject ==
          report.entered);

    auto j = report.to_json();
    CHECK(j.at("entered").get<size_t>() == 6);
    CHECK(j.at("kept").get<size_t>() == 2);
}
