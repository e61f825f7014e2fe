#pragma once
// Clients for chat-completion, embedding, and classifier endpoints.
//
// Every client sits on a Backend (HTTP or scripted, chosen by URL scheme)
// and runs in one of three modes:
//   live    - call the backend, no cassette involved
//   record  - serve from the cassette when present, otherwise call the
//             backend and append the response
//   replay  - serve only from the cassette; a miss is an error, the
//             network is never touched
// Cassettes make every stage byte-deterministic across runs and worker
// counts.

#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mctg/errors.hpp"

namespace mctg {

using json = nlohmann::json;

enum class Mode { live, record, replay };

Mode mode_from_string(const std::string& s);
std::string to_string(Mode m);

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 256;
    std::string request_tag;  // stage + record id + repeat index

    void validate() const;
    // Hash over (model, messages, temperature, request_tag); the cassette key.
    std::string fingerprint() const;
};

struct EmbeddingVector {
    std::vector<double> values;
    int dim = 0;

    static EmbeddingVector of(std::vector<double> values);
};

// dot(u,v) / (|u|*|v|), clamped to [-1, 1].
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

// Persisted map from request fingerprint to recorded response text.
// JSONL on disk ({"fingerprint":..., "response":...}), sorted by fingerprint
// when saved so committed cassettes do not churn with worker scheduling.
class Cassette {
public:
    static std::shared_ptr<Cassette> load(const std::string& path);
    static std::shared_ptr<Cassette> load_or_empty(const std::string& path);

    std::optional<std::string> lookup(const std::string& fingerprint) const;
    void put(const std::string& fingerprint, const std::string& response);
    void save(const std::string& path) const;
    size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::string> entries_;
};

struct RetryPolicy {
    int max_attempts = 5;
    int initial_backoff_ms = 250;
    int max_backoff_ms = 8000;
};

struct HttpLimits {
    int max_in_flight = 8;
    double rate_per_second = 0.0;  // 0 = unlimited
};

struct ServiceStats {
    std::atomic<std::uint64_t> upstream_calls{0};
    std::atomic<std::uint64_t> retries{0};
    std::atomic<std::uint64_t> cassette_hits{0};
    std::atomic<std::uint64_t> cache_hits{0};
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& req) = 0;
};

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    virtual std::vector<double> embed(const std::string& model, const std::string& text) = 0;
};

// Returns {"label_index": i} or {"distribution": [...]} like the remote
// classifier protocol.
class ClassifyBackend {
public:
    virtual ~ClassifyBackend() = default;
    virtual json classify(const std::string& text) = 0;
};

// URL-scheme dispatch: http:// and https:// build retrying HTTP backends,
// scripted:// builds the bundled deterministic responders.
std::shared_ptr<ChatBackend> make_chat_backend(const std::string& base_url,
                                               const std::string& api_key,
                                               const RetryPolicy& retry, const HttpLimits& limits,
                                               std::shared_ptr<ServiceStats> stats = nullptr);
std::shared_ptr<EmbedBackend> make_embed_backend(const std::string& base_url,
                                                 const std::string& api_key,
                                                 const RetryPolicy& retry, const HttpLimits& limits,
                                                 std::shared_ptr<ServiceStats> stats = nullptr);
std::shared_ptr<ClassifyBackend> make_classify_backend(const std::string& url,
                                                       const std::string& aspect_id,
                                                       const RetryPolicy& retry,
                                                       const HttpLimits& limits,
                                                       std::shared_ptr<ServiceStats> stats = nullptr);

class ChatClient {
public:
    ChatClient(std::shared_ptr<ChatBackend> backend, Mode mode, std::shared_ptr<Cassette> cassette,
               std::shared_ptr<ServiceStats> stats = nullptr);

    std::string complete(const ChatRequest& req);
    const ServiceStats& stats() const { return *stats_; }

private:
    std::shared_ptr<ChatBackend> backend_;
    Mode mode_;
    std::shared_ptr<Cassette> cassette_;
    std::shared_ptr<ServiceStats> stats_;
};

class EmbedClient {
public:
    EmbedClient(std::shared_ptr<EmbedBackend> backend, std::string model, Mode mode,
                std::shared_ptr<Cassette> cassette, std::shared_ptr<ServiceStats> stats = nullptr);

    // Cached by text hash: repeated texts cost one upstream call per run.
    EmbeddingVector embed(const std::string& text);
    const ServiceStats& stats() const { return *stats_; }

private:
    std::shared_ptr<EmbedBackend> backend_;
    std::string model_;
    Mode mode_;
    std::shared_ptr<Cassette> cassette_;
    std::shared_ptr<ServiceStats> stats_;
    std::mutex cache_mutex_;
    std::map<std::string, EmbeddingVector> cache_;
};

class ClassifierClient {
public:
    ClassifierClient(std::shared_ptr<ClassifyBackend> backend, std::string aspect_id, Mode mode,
                     std::shared_ptr<Cassette> cassette,
                     std::shared_ptr<ServiceStats> stats = nullptr);

    json classify(const std::string& text);

private:
    std::shared_ptr<ClassifyBackend> backend_;
    std::string aspect_id_;
    Mode mode_;
    std::shared_ptr<Cassette> cassette_;
    std::shared_ptr<ServiceStats> stats_;
};

// Applies fn to every item on up to `workers` threads and returns results in
// input order. The first failing index's exception is rethrown, so error
// reporting does not depend on scheduling.
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& items, size_t workers, Fn fn)
    -> std::vector<decltype(fn(items[size_t{0}], size_t{0}))> {
    using Out = decltype(fn(items[size_t{0}], size_t{0}));
    std::vector<Out> results(items.size());
    if (items.empty()) return results;
    if (workers == 0) workers = 1;
    workers = std::min(workers, items.size());

    std::atomic<size_t> cursor{0};
    std::vector<std::exception_ptr> errors(items.size());
    std::atomic<bool> failed{false};

    auto body = [&]() {
        for (;;) {
            size_t i = cursor.fetch_add(1);
            if (i >= items.size()) return;
            try {
                results[i] = fn(items[i], i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed.store(true);
            }
        }
    };

    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (size_t w = 0; w < workers; ++w) threads.emplace_back(body);
        for (auto& t : threads) t.join();
    }

    if (failed.load()) {
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    return results;
}

}  // namespace mctg
