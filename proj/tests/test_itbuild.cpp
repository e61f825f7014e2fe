#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "mctg/errors.hpp"
#include "mctg/itbuild.hpp"

using namespace mctg;
using namespace mctg::test;

namespace {

const std::string kTemplate =
    "Write a short text that satisfies all of the following controls: {{controls}}, "
    "starting with \"{{prefix}}\".";

}  // namespace

TEST_CASE("extract_prefix takes the first three whitespace tokens") {
    CHECK(extract_prefix("the movie was great fun") == "the movie was");
    CHECK(extract_prefix("Stunning") == "Stunning");
    CHECK(extract_prefix("two words") == "two words");
    // Runs of whitespace collapse to single spaces in the prefix.
    CHECK(extract_prefix("  the \t movie \n was great  ") == "the movie was");
    CHECK_THROWS_AS(extract_prefix(""), ContractViolation);
    CHECK_THROWS_AS(extract_prefix("   \t  "), ContractViolation);
}

TEST_CASE("render_controls orders by registry and uses display names") {
    auto reg = toy_registry();
    // Input order is topic-first; output must follow registry order.
    std::vector<std::pair<std::string, std::string>> controls = {
        {"topic", "sports"}, {"sentiment", "positive"}, {"detoxification", "non-toxic"}};
    CHECK(render_controls(reg, controls) ==
          "Sentiment: positive, Topic: sports, Detoxification: non-toxic");

    CHECK(render_controls(reg, {{"topic", "world"}}) == "Topic: world");
    CHECK(render_controls(reg, {}).empty());
    CHECK_THROWS_AS(render_controls(reg, {{"mood", "happy"}}), ConfigError);
}

TEST_CASE("render_controls passes fine-grained label text through untouched") {
    auto reg = toy_registry();
    CHECK(render_controls(reg, {{"sentiment", "bitterly disappointed"}}) ==
          "Sentiment: bitterly disappointed");
}

TEST_CASE("build_instance assembles instruction, prefix, and verbatim response") {
    auto reg = toy_registry();
    auto rec = make_record("r1", "the movie was a dreary mess", "sentiment", 2, "negative");
    auto inst = build_instance(rec, reg, kTemplate);

    CHECK(inst.instruction ==
          "Write a short text that satisfies all of the following controls: "
          "Sentiment: negative, starting with \"the movie was\".");
    CHECK(inst.response == "the movie was a dreary mess");
    CHECK(inst.prefix == "the movie was");
    REQUIRE(inst.controls.size() == 1);
    CHECK(inst.controls[0] == std::pair<std::string, std::string>{"sentiment", "negative"});
    CHECK(inst.source_provenance == Provenance::original);
    CHECK(inst.source_id == "r1");

    // The response must begin with the quoted prefix.
    CHECK(inst.response.rfind(inst.prefix, 0) == 0);
}

TEST_CASE("build_instance keeps fine-grained descriptions in the control clause") {
    auto reg = toy_registry();
    auto rec = make_record("g1", "the film left me cold", "sentiment", 2, "deeply disappointed",
                           Provenance::grained);
    auto inst = build_instance(rec, reg, kTemplate);
    CHECK(inst.instruction.find("Sentiment: deeply disappointed") != std::string::npos);
    CHECK(inst.instruction.find("negative") == std::string::npos);
    CHECK(inst.source_provenance == Provenance::grained);
}

TEST_CASE("build_instance handles texts shorter than three tokens") {
    auto reg = toy_registry();
    auto rec = make_record("s1", "Stunning", "sentiment", 1, "positive");
    auto inst = build_instance(rec, reg, kTemplate);
    CHECK(inst.prefix == "Stunning");
    CHECK(inst.instruction.find("starting with \"Stunning\".") != std::string::npos);
    CHECK(inst.response == "Stunning");
}

TEST_CASE("build_instance trims template edge whitespace from the instruction") {
    auto reg = toy_registry();
    auto rec = make_record("r1", "fine enough overall", "sentiment", 1, "positive");
    auto inst = build_instance(rec, reg, kTemplate + "\n");
    CHECK(inst.instruction.back() == '.');
}

TEST_CASE("build_instance rejects empty text and bad templates") {
    auto reg = toy_registry();
    auto empty = make_record("e1", "   ", "sentiment", 1, "positive");
    CHECK_THROWS_AS(build_instance(empty, reg, kTemplate), ContractViolation);

    auto rec = make_record("r1", "fine enough overall", "sentiment", 1, "positive");
    CHECK_THROWS_AS(build_instance(rec, reg, "no placeholders here"), ConfigError);
    CHECK_THROWS_AS(build_instance(rec, reg, "only {{controls}}"), ConfigError);
    CHECK_THROWS_AS(build_instance(rec, reg, "only {{prefix}}"), ConfigError);
}

TEST_CASE("instances round trip through flat JSON") {
    ItInstance inst;
    inst.instruction = "Write something with Topic: world, starting with \"big news today\".";
    inst.response = "big news today from abroad";
    inst.controls = {{"topic", "world"}};
    inst.prefix = "big news today";
    inst.source_provenance = Provenance::cross;
    inst.source_id = "xyz";

    auto j = inst.to_json();
    CHECK(j.at("provenance").get<std::string>() == "cross");
    auto back = ItInstance::from_json(j);
    CHECK(back.instruction == inst.instruction);
    CHECK(back.response == inst.response);
    CHECK(back.controls == inst.controls);
    CHECK(back.prefix == inst.prefix);
    CHECK(back.source_provenance == Provenance::cross);
    CHECK(back.source_id == "xyz");
}

TEST_CASE("chat export wraps instruction and response as a two-turn dialog") {
    ItInstance inst;
    inst.instruction = "do the thing";
    inst.response = "the thing is done";
    auto j = inst.to_chat_json();
    REQUIRE(j.at("messages").size() == 2);
    CHECK(j.at("messages").at(0).at("role").get<std::string>() == "user");
    CHECK(j.at("messages").at(0).at("content").get<std::string>() == "do the thing");
    CHECK(j.at("messages").at(1).at("role").get<std::string>() == "assistant");
    CHECK(j.at("messages").at(1).at("content").get<std::string>() == "the thing is done");
}

TEST_CASE("distinct records produce distinct instances") {
    auto reg = toy_registry();
    std::vector<LabeledSentence> records = {
        make_record("a", "the sun rose slowly today", "sentiment", 1, "positive"),
        make_record("b", "the sun rose slowly today", "topic", 1, "world"),
        make_record("c", "rain fell for hours on end", "sentiment", 2, "negative"),
    };
    std::set<std::string> instructions;
    for (const auto& rec : records) {
        instructions.insert(build_instance(rec, reg, kTemplate).instruction);
    }
    // Same text under different controls still yields distinct instructions.
    CHECK(instructions.size() == 3);
}
