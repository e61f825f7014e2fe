#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "helpers.hpp"
#include "mctg/errors.hpp"
#include "mctg/scripted.hpp"
#include "mctg/services.hpp"
#include "mctg/util.hpp"

using namespace mctg;
using namespace mctg::test;

namespace {

ChatRequest simple_request(const std::string& tag) {
    ChatRequest req;
    req.model = "toy";
    req.messages = {{"user", "say hi"}};
    req.request_tag = tag;
    return req;
}

// Minimal local endpoint for exercising the HTTP backends end to end.
struct LocalServer {
    httplib::Server svr;
    int port = 0;
    std::thread th;

    void start() {
        port = svr.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        th = std::thread([this] { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }

    std::string url(const std::string& path = "") const {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }

    ~LocalServer() {
        svr.stop();
        if (th.joinable()) th.join();
    }
};

json chat_completion_body(const std::string& content) {
    return json{{"choices", json::array({json{{"message", json{{"content", content}}}}})}};
}

}  // namespace

TEST_CASE("mode parses and prints round trip") {
    CHECK(mode_from_string("live") == Mode::live);
    CHECK(mode_from_string("record") == Mode::record);
    CHECK(mode_from_string("replay") == Mode::replay);
    CHECK(to_string(Mode::replay) == "replay");
    CHECK_THROWS_AS(mode_from_string("cached"), ConfigError);
}

TEST_CASE("cosine similarity matches hand values") {
    auto u = EmbeddingVector::of({1.0, 0.0});
    auto v = EmbeddingVector::of({0.0, 1.0});
    auto w = EmbeddingVector::of({1.0, 1.0});

    CHECK(cosine_similarity(u, u) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(u, v) == doctest::Approx(0.0).epsilon(1e-12));
    // (1,0)·(1,1) / (1 * sqrt(2)) = 1/sqrt(2)
    CHECK(cosine_similarity(u, w) == doctest::Approx(0.7071067811865476).epsilon(1e-9));

    // Symmetric and scale invariant.
    CHECK(cosine_similarity(w, u) == doctest::Approx(cosine_similarity(u, w)).epsilon(1e-12));
    auto w3 = EmbeddingVector::of({3.0, 3.0});
    CHECK(cosine_similarity(u, w3) == doctest::Approx(cosine_similarity(u, w)).epsilon(1e-12));

    auto neg = EmbeddingVector::of({-1.0, 0.0});
    CHECK(cosine_similarity(u, neg) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("cosine similarity rejects malformed inputs") {
    auto u = EmbeddingVector::of({1.0, 0.0});
    auto three = EmbeddingVector::of({1.0, 0.0, 0.0});
    CHECK_THROWS_AS(cosine_similarity(u, three), ComputationError);

    EmbeddingVector zero;
    zero.dim = 2;
    zero.values = {0.0, 0.0};
    CHECK_THROWS_AS(cosine_similarity(u, zero), ComputationError);
}

TEST_CASE("embedding vectors validate their contents") {
    CHECK_THROWS_AS(EmbeddingVector::of({}), ComputationError);
    CHECK_THROWS_AS(EmbeddingVector::of({1.0, std::nan("")}), ComputationError);
    auto e = EmbeddingVector::of({1.0, 2.0, 3.0});
    CHECK(e.dim == 3);
}

TEST_CASE("cassette round trips through disk in sorted order") {
    auto dir = temp_dir("cassette");
    auto path = dir + "/c.jsonl";

    auto c = std::make_shared<Cassette>();
    CHECK(c->size() == 0);
    CHECK(!c->lookup("abc").has_value());
    c->put("fp2", "second");
    c->put("fp1", "first");
    c->put("fp1", "first-overwritten");
    CHECK(c->size() == 2);
    c->save(path);

    auto loaded = Cassette::load(path);
    CHECK(loaded->size() == 2);
    CHECK(loaded->lookup("fp1").value() == "first-overwritten");
    CHECK(loaded->lookup("fp2").value() == "second");
    CHECK(!loaded->lookup("fp3").has_value());

    // Saved file is one JSON object per line, keyed by fingerprint.
    auto text = read_file(path);
    CHECK(text.find("\"fingerprint\"") != std::string::npos);
}

TEST_CASE("cassette load distinguishes missing from empty") {
    auto dir = temp_dir("cassette-missing");
    CHECK_THROWS_AS(Cassette::load(dir + "/nope.jsonl"), ConfigError);
    auto empty = Cassette::load_or_empty(dir + "/nope.jsonl");
    CHECK(empty->size() == 0);
}

TEST_CASE("chat fingerprints separate model, messages, temperature, and tag") {
    auto base = simple_request("t1");
    CHECK(base.fingerprint() == simple_request("t1").fingerprint());

    auto other_tag = simple_request("t2");
    CHECK(base.fingerprint() != other_tag.fingerprint());

    auto other_model = simple_request("t1");
    other_model.model = "toy-2";
    CHECK(base.fingerprint() != other_model.fingerprint());

    auto other_temp = simple_request("t1");
    other_temp.temperature = 0.7;
    CHECK(base.fingerprint() != other_temp.fingerprint());

    auto other_msg = simple_request("t1");
    other_msg.messages = {{"user", "say bye"}};
    CHECK(base.fingerprint() != other_msg.fingerprint());
}

TEST_CASE("chat requests validate their shape before any backend work") {
    auto cassette = std::make_shared<Cassette>();
    ChatClient client(nullptr, Mode::replay, cassette);

    ChatRequest req;
    req.model = "toy";
    CHECK_THROWS_AS(client.complete(req), ContractViolation);  // no messages

    req.messages = {{"assistant", "hello"}};
    CHECK_THROWS_AS(client.complete(req), ContractViolation);  // bad first role

    req.messages = {{"user", "hello"}, {"tool", "x"}};
    CHECK_THROWS_AS(client.complete(req), ContractViolation);  // unknown role

    req.messages = {{"user", "hello"}};
    req.temperature = -0.5;
    CHECK_THROWS_AS(client.complete(req), ContractViolation);
}

TEST_CASE("chat client constructor enforces mode prerequisites") {
    auto cassette = std::make_shared<Cassette>();
    auto backend = std::make_shared<TaggedChatBackend>();

    CHECK_THROWS_AS(ChatClient(nullptr, Mode::live, nullptr), ConfigError);
    CHECK_THROWS_AS(ChatClient(backend, Mode::record, nullptr), ConfigError);
    CHECK_THROWS_AS(ChatClient(nullptr, Mode::record, cassette), ConfigError);
    // Replay needs no backend at all.
    CHECK_NOTHROW(ChatClient(nullptr, Mode::replay, cassette));
}

TEST_CASE("replay serves cassette hits and fails loudly on misses") {
    auto cassette = std::make_shared<Cassette>();
    auto req = simple_request("aug:1");
    cassette->put(req.fingerprint(), "canned answer");

    auto stats = std::make_shared<ServiceStats>();
    ChatClient client(nullptr, Mode::replay, cassette, stats);
    CHECK(client.complete(req) == "canned answer");
    CHECK(stats->cassette_hits.load() == 1);
    CHECK(stats->upstream_calls.load() == 0);

    auto missing = simple_request("aug:2");
    try {
        client.complete(missing);
        FAIL("expected ServiceError");
    } catch (const ServiceError& e) {
        std::string msg = e.what();
        // The miss names both the fingerprint and the request tag so the
        // offending call can be re-recorded.
        CHECK(msg.find(missing.fingerprint()) != std::string::npos);
        CHECK(msg.find("aug:2") != std::string::npos);
    }
}

TEST_CASE("record mode calls upstream once and replays from the cassette after") {
    auto backend = std::make_shared<TaggedChatBackend>();
    backend->by_tag["t1"] = "recorded answer";
    auto cassette = std::make_shared<Cassette>();
    auto stats = std::make_shared<ServiceStats>();

    ChatClient client(backend, Mode::record, cassette, stats);
    auto req = simple_request("t1");
    CHECK(client.complete(req) == "recorded answer");
    CHECK(client.complete(req) == "recorded answer");
    CHECK(backend->calls.load() == 1);
    CHECK(stats->upstream_calls.load() == 1);
    CHECK(stats->cassette_hits.load() == 1);
    CHECK(cassette->size() == 1);

    // The saved cassette replays without any backend.
    auto dir = temp_dir("record-replay");
    cassette->save(dir + "/c.jsonl");
    ChatClient replayer(nullptr, Mode::replay, Cassette::load(dir + "/c.jsonl"));
    CHECK(replayer.complete(req) == "recorded answer");
}

TEST_CASE("live mode ignores the cassette entirely") {
    auto backend = std::make_shared<TaggedChatBackend>();
    backend->by_tag["t1"] = "fresh";
    auto stats = std::make_shared<ServiceStats>();
    ChatClient client(backend, Mode::live, nullptr, stats);

    auto req = simple_request("t1");
    CHECK(client.complete(req) == "fresh");
    CHECK(client.complete(req) == "fresh");
    CHECK(backend->calls.load() == 2);
    CHECK(stats->upstream_calls.load() == 2);
    CHECK(stats->cassette_hits.load() == 0);
}

TEST_CASE("scripted URLs dispatch to in-process backends") {
    RetryPolicy retry;
    HttpLimits limits;
    CHECK(make_chat_backend("scripted://chat/labeler", "", retry, limits) != nullptr);
    CHECK(make_embed_backend("scripted://embed/hash16", "", retry, limits) != nullptr);
    CHECK(make_classify_backend("scripted://classify/keyword", "topic", retry, limits) != nullptr);

    // Kind/factory mismatches and malformed scripted URLs are config errors.
    CHECK_THROWS_AS(make_chat_backend("scripted://embed/hash16", "", retry, limits), ConfigError);
    CHECK_THROWS_AS(make_embed_backend("scripted://chat/labeler", "", retry, limits), ConfigError);
    CHECK_THROWS_AS(make_classify_backend("scripted://chat/labeler", "t", retry, limits),
                    ConfigError);
    CHECK_THROWS_AS(make_chat_backend("scripted://chat", "", retry, limits), ConfigError);
    CHECK_THROWS_AS(make_scripted_chat("unknown-profile"), ConfigError);
    CHECK_THROWS_AS(make_scripted_embed("unknown-profile"), ConfigError);
    CHECK_THROWS_AS(make_scripted_classifier("unknown-profile", "topic"), ConfigError);
}

TEST_CASE("embed client caches per text and records for replay") {
    auto backend = std::make_shared<CountingEmbedBackend>();
    auto cassette = std::make_shared<Cassette>();
    auto stats = std::make_shared<ServiceStats>();
    EmbedClient client(backend, "toy-embed", Mode::record, cassette, stats);

    auto a = client.embed("alpha beta");
    auto b = client.embed("alpha beta");
    CHECK(a.dim == 16);
    CHECK(a.values == b.values);
    CHECK(backend->calls.load() == 1);
    CHECK(stats->cache_hits.load() == 1);
    CHECK(cassette->size() == 1);

    CHECK_THROWS_AS(client.embed(""), ContractViolation);
    CHECK_THROWS_AS(client.embed("   "), ContractViolation);

    // Replay from the recorded cassette, no backend attached.
    auto dir = temp_dir("embed-replay");
    cassette->save(dir + "/c.jsonl");
    auto replay_stats = std::make_shared<ServiceStats>();
    EmbedClient replayer(nullptr, "toy-embed", Mode::replay, Cassette::load(dir + "/c.jsonl"),
                         replay_stats);
    auto c = replayer.embed("alpha beta");
    CHECK(c.values == a.values);
    CHECK(replay_stats->cassette_hits.load() == 1);
    CHECK_THROWS_AS(replayer.embed("never recorded"), ServiceError);
}

TEST_CASE("embedding fingerprints depend on the model") {
    auto backend = std::make_shared<CountingEmbedBackend>();
    auto cassette = std::make_shared<Cassette>();
    EmbedClient a(backend, "model-a", Mode::record, cassette);
    EmbedClient b(backend, "model-b", Mode::record, cassette);
    a.embed("same text");
    b.embed("same text");
    // Two cassette entries: one per model.
    CHECK(cassette->size() == 2);
}

TEST_CASE("scripted keyword classifier follows the marker vocabulary") {
    RetryPolicy retry;
    HttpLimits limits;
    auto sentiment = make_classify_backend("scripted://classify/keyword", "sentiment", retry, limits);
    CHECK(sentiment->classify("a wonderful day").at("label_index").get<int>() == 1);
    CHECK(sentiment->classify("a dreadful day").at("label_index").get<int>() == 2);
    auto dist = sentiment->classify("a plain day");
    REQUIRE(dist.contains("distribution"));
    CHECK(dist.at("distribution").size() == 2);

    auto topic = make_classify_backend("scripted://classify/keyword", "topic", retry, limits);
    CHECK(topic->classify("new software shipped").at("label_index").get<int>() == 4);
    CHECK(topic->classify("the tournament ended").at("label_index").get<int>() == 2);

    auto detox = make_classify_backend("scripted://classify/keyword", "detoxification", retry, limits);
    CHECK(detox->classify("you jerk").at("label_index").get<int>() == 1);
    CHECK(detox->classify("kind words").at("label_index").get<int>() == 2);
}

TEST_CASE("classifier client records and replays responses") {
    auto backend = make_scripted_classifier("keyword", "sentiment");
    auto cassette = std::make_shared<Cassette>();
    auto stats = std::make_shared<ServiceStats>();
    ClassifierClient client(backend, "sentiment", Mode::record, cassette, stats);

    auto res = client.classify("a wonderful day");
    CHECK(res.at("label_index").get<int>() == 1);
    CHECK(cassette->size() == 1);

    ClassifierClient replayer(nullptr, "sentiment", Mode::replay, cassette);
    CHECK(replayer.classify("a wonderful day") == res);
    try {
        replayer.classify("unseen text");
        FAIL("expected ServiceError");
    } catch (const ServiceError& e) {
        CHECK(std::string(e.what()).find("sentiment") != std::string::npos);
    }

    // The same text under a different aspect has a different fingerprint.
    ClassifierClient topic_replayer(nullptr, "topic", Mode::replay, cassette);
    CHECK_THROWS_AS(topic_replayer.classify("a wonderful day"), ServiceError);
}

TEST_CASE("http chat backend retries transient statuses then succeeds") {
    LocalServer server;
    std::atomic<int> hits{0};
    std::string auth_seen;
    server.svr.Post("/v1/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                        int n = ++hits;
                        auth_seen = req.get_header_value("Authorization");
                        if (n <= 2) {
                            res.status = 429;
                            res.set_content("slow down", "text/plain");
                            return;
                        }
                        json body = json::parse(req.body);
                        CHECK(body.at("model").get<std::string>() == "toy");
                        res.set_content(chat_completion_body("served").dump(), "application/json");
                    });
    server.start();

    // Backend and client keep separate stats: the backend counts socket
    // attempts, the client counts logical calls.
    auto backend_stats = std::make_shared<ServiceStats>();
    RetryPolicy retry{5, 1, 4};
    auto backend = make_chat_backend(server.url(), "sk-test", retry, HttpLimits{}, backend_stats);

    auto client_stats = std::make_shared<ServiceStats>();
    ChatClient client(backend, Mode::live, nullptr, client_stats);
    CHECK(client.complete(simple_request("retry:1")) == "served");

    CHECK(hits.load() == 3);
    CHECK(backend_stats->retries.load() == 2);
    CHECK(backend_stats->upstream_calls.load() == 3);
    CHECK(client_stats->upstream_calls.load() == 1);
    CHECK(auth_seen == "Bearer sk-test");
}

TEST_CASE("http chat backend fails fast on non-retryable statuses") {
    LocalServer server;
    std::atomic<int> hits{0};
    server.svr.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 400;
        res.set_content("bad request", "text/plain");
    });
    server.start();

    auto stats = std::make_shared<ServiceStats>();
    auto backend = make_chat_backend(server.url(), "", RetryPolicy{5, 1, 4}, HttpLimits{}, stats);
    try {
        backend->complete(simple_request("fail:1"));
        FAIL("expected ServiceError");
    } catch (const ServiceError& e) {
        CHECK(std::string(e.what()).find("HTTP 400") != std::string::npos);
    }
    CHECK(hits.load() == 1);
    CHECK(stats->retries.load() == 0);
}

TEST_CASE("http chat backend gives up after the attempt budget") {
    LocalServer server;
    std::atomic<int> hits{0};
    server.svr.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 503;
    });
    server.start();

    auto stats = std::make_shared<ServiceStats>();
    auto backend = make_chat_backend(server.url(), "", RetryPolicy{2, 1, 2}, HttpLimits{}, stats);
    try {
        backend->complete(simple_request("exhaust:1"));
        FAIL("expected ServiceError");
    } catch (const ServiceError& e) {
        std::string msg = e.what();
        CHECK(msg.find("giving up after 2 attempts") != std::string::npos);
        CHECK(msg.find("HTTP 503") != std::string::npos);
    }
    CHECK(hits.load() == 2);
    CHECK(stats->retries.load() == 1);
}

TEST_CASE("http chat backend rejects invalid JSON and malformed completions") {
    LocalServer server;
    server.svr.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body);
        std::string tag = body.at("messages").at(0).at("content").get<std::string>();
        if (tag == "garbled") {
            res.set_content("{not json", "application/json");
        } else {
            res.set_content(json{{"choices", json::array()}}.dump(), "application/json");
        }
    });
    server.start();

    auto backend = make_chat_backend(server.url(), "", RetryPolicy{1, 1, 1}, HttpLimits{});
    ChatRequest garbled;
    garbled.model = "toy";
    garbled.messages = {{"user", "garbled"}};
    garbled.request_tag = "g";
    CHECK_THROWS_AS(backend->complete(garbled), ServiceError);

    ChatRequest empty_choices;
    empty_choices.model = "toy";
    empty_choices.messages = {{"user", "shape"}};
    empty_choices.request_tag = "s";
    CHECK_THROWS_AS(backend->complete(empty_choices), ServiceError);
}

TEST_CASE("http embed and classify backends parse their response envelopes") {
    LocalServer server;
    server.svr.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body);
        CHECK(body.at("input").get<std::string>() == "some text");
        json out = {{"data", json::array({json{{"embedding", {0.5, 0.25}}}})}};
        res.set_content(out.dump(), "application/json");
    });
    server.svr.Post("/classify/sentiment", [&](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body);
        CHECK(body.at("text").get<std::string>() == "some text");
        res.set_content(json{{"label_index", 2}}.dump(), "application/json");
    });
    server.start();

    auto embed = make_embed_backend(server.url(), "", RetryPolicy{1, 1, 1}, HttpLimits{});
    CHECK(embed->embed("toy-embed", "some text") == std::vector<double>{0.5, 0.25});

    // Classifier URLs may carry a path prefix; it must be preserved.
    auto classify = make_classify_backend(server.url("/classify/sentiment"), "sentiment",
                                          RetryPolicy{1, 1, 1}, HttpLimits{});
    CHECK(classify->classify("some text").at("label_index").get<int>() == 2);
}

TEST_CASE("parallel_map preserves input order under concurrency") {
    std::vector<int> items;
    for (int i = 0; i < 50; ++i) items.push_back(i);

    auto out = parallel_map(items, 8, [](int item, size_t index) {
        // Early items sleep longest so completion order inverts input order.
        std::this_thread::sleep_for(std::chrono::microseconds((50 - item) * 20));
        CHECK(static_cast<size_t>(item) == index);
        return item * 2;
    });

    REQUIRE(out.size() == 50);
    for (int i = 0; i < 50; ++i) CHECK(out[static_cast<size_t>(i)] == i * 2);
}

TEST_CASE("parallel_map rethrows the lowest failing index") {
    std::vector<int> items;
    for (int i = 0; i < 20; ++i) items.push_back(i);

    for (size_t workers : {size_t{1}, size_t{4}}) {
        try {
            parallel_map(items, workers, [](int item, size_t) -> int {
                if (item == 3 || item == 7) {
                    throw ComputationError("boom at " + std::to_string(item));
                }
                return item;
            });
            FAIL("expected ComputationError");
        } catch (const ComputationError& e) {
            CHECK(std::string(e.what()) == "boom at 3");
        }
    }
}

TEST_CASE("parallel_map handles edge shapes") {
    std::vector<int> empty;
    CHECK(parallel_map(empty, 4, [](int, size_t) { return 1; }).empty());

    std::vector<int> one{7};
    auto out = parallel_map(one, 16, [](int item, size_t) { return item + 1; });
    REQUIRE(out.size() == 1);
    CHECK(out[0] == 8);

    // workers == 0 degrades to serial execution.
    auto serial = parallel_map(one, 0, [](int item, size_t) { return item * 3; });
    CHECK(serial[0] == 21);
}
