#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "mctg/errors.hpp"
#include "mctg/mixer.hpp"
#include "mctg/util.hpp"

using namespace mctg;
using namespace mctg::test;

namespace {

std::vector<json> make_pool(const std::string& name, size_t size) {
    std::vector<json> rows;
    rows.reserve(size);
    for (size_t i = 0; i < size; ++i) {
        rows.push_back(json{{"source_id", name + "-" + std::to_string(i)},
                            {"pool", name},
                            {"payload", "row " + std::to_string(i) + " of " + name}});
    }
    return rows;
}

MixtureSpec make_spec(const std::string& name,
                      std::vector<std::pair<std::string, size_t>> entries, std::uint64_t seed) {
    MixtureSpec spec;
    spec.output_name = name;
    spec.entries = std::move(entries);
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("mixing draws exact per-pool counts into one shuffled dataset") {
    // Full-scale anchor: five pools blended into a 45,000-instance mixture.
    std::map<std::string, std::vector<json>> pools;
    pools["univ"] = make_pool("univ", 30000);
    pools["vanilla"] = make_pool("vanilla", 10000);
    pools["cross"] = make_pool("cross", 4000);
    pools["grained"] = make_pool("grained", 4000);
    pools["rewrite"] = make_pool("rewrite", 2000);

    auto spec = make_spec("full",
                          {{"univ", 28500},
                           {"vanilla", 9000},
                           {"cross", 3000},
                           {"grained", 3000},
                           {"rewrite", 1500}},
                          42);
    auto result = mix(pools, spec);

    CHECK(result.rows.size() == 45000);
    REQUIRE(result.manifest.size() == 5);
    CHECK(result.manifest.at("univ").size() == 28500);
    CHECK(result.manifest.at("vanilla").size() == 9000);
    CHECK(result.manifest.at("cross").size() == 3000);
    CHECK(result.manifest.at("grained").size() == 3000);
    CHECK(result.manifest.at("rewrite").size() == 1500);

    // Row counts per pool agree with the manifest.
    std::map<std::string, size_t> per_pool;
    for (const auto& row : result.rows) per_pool[row.at("pool").get<std::string>()] += 1;
    CHECK(per_pool.at("univ") == 28500);
    CHECK(per_pool.at("rewrite") == 1500);

    // Without replacement: manifest ids are distinct within each pool.
    for (const auto& [pool, ids] : result.manifest) {
        std::set<std::string> unique(ids.begin(), ids.end());
        CHECK(unique.size() == ids.size());
    }

    // The shuffle interleaves pools rather than concatenating them.
    std::set<std::string> head_pools;
    for (size_t i = 0; i < 100; ++i) head_pools.insert(result.rows[i].at("pool").get<std::string>());
    CHECK(head_pools.size() >= 2);

    // Re-running is byte-identical.
    auto again = mix(pools, spec);
    CHECK(again.rows == result.rows);
    CHECK(again.manifest == result.manifest);
}

TEST_CASE("a variant mixture can reassign a dropped pool's share") {
    std::map<std::string, std::vector<json>> pools;
    pools["univ"] = make_pool("univ", 30000);
    pools["vanilla"] = make_pool("vanilla", 10000);
    pools["cross"] = make_pool("cross", 4000);
    pools["grained"] = make_pool("grained", 4000);

    auto spec = make_spec(
        "no_rewrite",
        {{"univ", 30000}, {"vanilla", 9000}, {"cross", 3000}, {"grained", 3000}}, 42);
    auto result = mix(pools, spec);
    CHECK(result.rows.size() == 45000);
    CHECK(result.manifest.count("rewrite") == 0);
    CHECK(result.manifest.at("univ").size() == 30000);
}

TEST_CASE("drawing a whole pool yields a permutation of it") {
    std::map<std::string, std::vector<json>> pools;
    pools["only"] = make_pool("only", 64);
    auto result = mix(pools, make_spec("perm", {{"only", 64}}, 7));

    REQUIRE(result.rows.size() == 64);
    auto sorted_rows = result.rows;
    std::sort(sorted_rows.begin(), sorted_rows.end(),
              [](const json& a, const json& b) { return a.dump() < b.dump(); });
    auto expected = pools["only"];
    std::sort(expected.begin(), expected.end(),
              [](const json& a, const json& b) { return a.dump() < b.dump(); });
    CHECK(sorted_rows == expected);

    std::set<std::string> manifest_ids(result.manifest.at("only").begin(),
                                       result.manifest.at("only").end());
    CHECK(manifest_ids.size() == 64);
}

TEST_CASE("manifest ids fall back to pool plus row index when rows are opaque") {
    std::map<std::string, std::vector<json>> pools;
    std::vector<json> opaque;
    for (int i = 0; i < 8; ++i) {
        opaque.push_back(json{{"instruction", "do " + std::to_string(i)}, {"response", "done"}});
    }
    pools["ext"] = opaque;

    auto result = mix(pools, make_spec("opaque", {{"ext", 8}}, 3));
    std::set<std::string> expected;
    for (int i = 0; i < 8; ++i) expected.insert(stable_id({"ext", std::to_string(i)}));
    std::set<std::string> got(result.manifest.at("ext").begin(), result.manifest.at("ext").end());
    CHECK(got == expected);
}

TEST_CASE("mix fails on unknown pools and oversubscribed counts") {
    std::map<std::string, std::vector<json>> pools;
    pools["small"] = make_pool("small", 5);

    try {
        mix(pools, make_spec("m", {{"ghost", 1}}, 1));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }

    try {
        mix(pools, make_spec("m", {{"small", 6}}, 1));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("small") != std::string::npos);
        CHECK(msg.find("5") != std::string::npos);
        CHECK(msg.find("6") != std::string::npos);
    }
}

TEST_CASE("different seeds give different draws and orders") {
    std::map<std::string, std::vector<json>> pools;
    pools["p"] = make_pool("p", 100);
    auto a = mix(pools, make_spec("m", {{"p", 50}}, 1));
    auto b = mix(pools, make_spec("m", {{"p", 50}}, 2));
    CHECK(a.rows != b.rows);
}

TEST_CASE("each pool's draw is isolated from the other entries") {
    // Pool draws are seeded per (seed, mixture, pool), so adding or removing
    // another pool never disturbs an existing pool's subset.
    std::map<std::string, std::vector<json>> pools;
    pools["p"] = make_pool("p", 100);
    pools["q"] = make_pool("q", 100);
    auto solo = mix(pools, make_spec("m", {{"p", 40}}, 9));
    auto both = mix(pools, make_spec("m", {{"q", 10}, {"p", 40}}, 9));
    std::set<std::string> ids_solo(solo.manifest.at("p").begin(), solo.manifest.at("p").end());
    std::set<std::string> ids_both(both.manifest.at("p").begin(), both.manifest.at("p").end());
    CHECK(ids_solo == ids_both);

    // A different mixture name reseeds the draws.
    auto renamed = mix(pools, make_spec("other", {{"p", 40}}, 9));
    std::set<std::string> ids_renamed(renamed.manifest.at("p").begin(),
                                      renamed.manifest.at("p").end());
    CHECK(ids_renamed != ids_solo);
}

TEST_CASE("mixture specs parse from JSON with a default seed") {
    json j = {{"name", "main"},
              {"entries", json::array({json{{"pool", "univ"}, {"count", 100}},
                                       json{{"pool", "vanilla"}, {"count", 50}}})}};
    auto spec = MixtureSpec::from_json(j, 77);
    CHECK(spec.output_name == "main");
    CHECK(spec.seed == 77);
    REQUIRE(spec.entries.size() == 2);
    CHECK(spec.entries[0] == std::pair<std::string, size_t>{"univ", 100});
    CHECK(spec.entries[1] == std::pair<std::string, size_t>{"vanilla", 50});

    json with_seed = j;
    with_seed["seed"] = 5;
    CHECK(MixtureSpec::from_json(with_seed, 77).seed == 5);
}

TEST_CASE("mixture spec validation rejects malformed specs") {
    CHECK_THROWS_AS(make_spec("", {{"p", 1}}, 1).validate(), ConfigError);
    CHECK_THROWS_AS(make_spec("m", {}, 1).validate(), ConfigError);
    CHECK_THROWS_AS(make_spec("m", {{"p", 0}}, 1).validate(), ConfigError);
    CHECK_THROWS_AS(make_spec("m", {{"p", 1}, {"p", 2}}, 1).validate(), ConfigError);
    CHECK_NOTHROW(make_spec("m", {{"p", 1}, {"q", 2}}, 1).validate());
}

TEST_CASE("volume parity warnings flag mismatched totals without failing") {
    auto a = make_spec("full", {{"univ", 28500}, {"vanilla", 9000}, {"rewrite", 7500}}, 1);
    auto b = make_spec("no_rewrite", {{"univ", 36000}, {"vanilla", 9000}}, 1);
    CHECK(volume_parity_warnings({a, b}).empty());
    CHECK(volume_parity_warnings({a}).empty());
    CHECK(volume_parity_warnings({}).empty());

    auto short_mix = make_spec("short", {{"univ", 1000}}, 1);
    auto warnings = volume_parity_warnings({a, short_mix});
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("short") != std::string::npos);
    CHECK(warnings[0].find("1000") != std::string::npos);
    CHECK(warnings[0].find("45000") != std::string::npos);
}

TEST_CASE("mixed rows pass through verbatim") {
    std::map<std::string, std::vector<json>> pools;
    pools["p"] = {json{{"source_id", "p-0"}, {"pool", "p"}, {"nested", json{{"deep", true}}}}};
    auto result = mix(pools, make_spec("m", {{"p", 1}}, 1));
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0] == pools["p"][0]);
    CHECK(result.manifest.at("p") == std::vector<std::string>{"p-0"});
}
