#include "mctg/services.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>

#include <httplib.h>

#include "mctg/jsonl.hpp"
#include "mctg/rng.hpp"
#include "mctg/scripted.hpp"
#include "mctg/util.hpp"

namespace mctg {

Mode mode_from_string(const std::string& s) {
    if (s == "live") return Mode::live;
    if (s == "record") return Mode::record;
    if (s == "replay") return Mode::replay;
    throw ConfigError("mode must be live|record|replay, got '" + s + "'");
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::live: return "live";
        case Mode::record: return "record";
        case Mode::replay: return "replay";
    }
    return "live";
}

void ChatRequest::validate() const {
    if (messages.empty()) throw ContractViolation("chat request: no messages");
    const std::string& first = messages.front().role;
    if (first != "system" && first != "user") {
        throw ContractViolation("chat request: first role must be system or user");
    }
    for (const auto& m : messages) {
        if (m.role != "system" && m.role != "user" && m.role != "assistant") {
            throw ContractViolation("chat request: bad role '" + m.role + "'");
        }
    }
    if (temperature < 0.0) throw ContractViolation("chat request: negative temperature");
}

std::string ChatRequest::fingerprint() const {
    std::string buf = "chat\x1f" + model + "\x1f";
    for (const auto& m : messages) {
        buf += m.role;
        buf += '\x1e';
        buf += m.content;
        buf += '\x1e';
    }
    buf += '\x1f';
    buf += json(temperature).dump();
    buf += '\x1f';
    buf += request_tag;
    return to_hex(fnv1a64(buf));
}

EmbeddingVector EmbeddingVector::of(std::vector<double> values) {
    if (values.empty()) throw ComputationError("embedding: empty vector");
    for (double v : values) {
        if (!std::isfinite(v)) throw ComputationError("embedding: non-finite value");
    }
    EmbeddingVector e;
    e.dim = static_cast<int>(values.size());
    e.values = std::move(values);
    return e;
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dim != v.dim) {
        throw ComputationError("cosine: dimension mismatch " + std::to_string(u.dim) + " vs " +
                               std::to_string(v.dim));
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (int i = 0; i < u.dim; ++i) {
        dot += u.values[i] * v.values[i];
        nu += u.values[i] * u.values[i];
        nv += v.values[i] * v.values[i];
    }
    if (nu == 0.0 || nv == 0.0) throw ComputationError("cosine: zero vector");
    double sim = dot / (std::sqrt(nu) * std::sqrt(nv));
    if (sim > 1.0) sim = 1.0;
    if (sim < -1.0) sim = -1.0;
    return sim;
}

// ---------------------------------------------------------------------------
// Cassette

std::shared_ptr<Cassette> Cassette::load(const std::string& path) {
    if (!file_exists(path)) throw ConfigError("cassette not found: " + path);
    auto c = std::make_shared<Cassette>();
    for_each_jsonl(path, [&](json&& j) {
        c->entries_[j.at("fingerprint").get<std::string>()] = j.at("response").get<std::string>();
        return true;
    });
    return c;
}

std::shared_ptr<Cassette> Cassette::load_or_empty(const std::string& path) {
    if (!file_exists(path)) return std::make_shared<Cassette>();
    return load(path);
}

std::optional<std::string> Cassette::lookup(const std::string& fingerprint) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(fingerprint);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void Cassette::put(const std::string& fingerprint, const std::string& response) {
    std::lock_guard lock(mutex_);
    entries_[fingerprint] = response;
}

void Cassette::save(const std::string& path) const {
    std::vector<json> rows;
    {
        std::lock_guard lock(mutex_);
        rows.reserve(entries_.size());
        for (const auto& [fp, resp] : entries_) {
            rows.push_back(json{{"fingerprint", fp}, {"response", resp}});
        }
    }
    write_jsonl(path, rows);
}

size_t Cassette::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// HTTP plumbing

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // leading path prefix, may be empty
};

ParsedUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("bad URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string path = url.substr(path_start);
    if (path == "/") path.clear();
    return {url.substr(0, path_start), path};
}

bool is_scripted(const std::string& url) { return url.rfind("scripted://", 0) == 0; }

// scripted://<kind>/<profile>
std::pair<std::string, std::string> parse_scripted(const std::string& url) {
    std::string rest = url.substr(std::string("scripted://").size());
    auto slash = rest.find('/');
    if (slash == std::string::npos || slash + 1 >= rest.size()) {
        throw ConfigError("scripted URL must be scripted://<kind>/<profile>: " + url);
    }
    return {rest.substr(0, slash), rest.substr(slash + 1)};
}

// Token bucket + in-flight bound shared by all workers hitting one endpoint.
class Throttle {
public:
    Throttle(int max_in_flight, double rate_per_second)
        : rate_(rate_per_second), tokens_(rate_per_second), in_flight_limit_(max_in_flight) {
        last_refill_ = std::chrono::steady_clock::now();
    }

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return in_flight_ < in_flight_limit_; });
        ++in_flight_;
        if (rate_ <= 0.0) return;
        for (;;) {
            refill();
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            double wait_s = (1.0 - tokens_) / rate_;
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
            lock.lock();
        }
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            --in_flight_;
        }
        cv_.notify_one();
    }

private:
    void refill() {
        auto now = std::chrono::steady_clock::now();
        double dt = std::chrono::duration<double>(now - last_refill_).count();
        last_refill_ = now;
        tokens_ = std::min(rate_, tokens_ + dt * rate_);
    }

    std::mutex mutex_;
    std::condition_variable cv_;
    double rate_;
    double tokens_;
    int in_flight_limit_;
    int in_flight_ = 0;
    std::chrono::steady_clock::time_point last_refill_;
};

struct InFlightGuard {
    explicit InFlightGuard(Throttle& t) : throttle(t) { throttle.acquire(); }
    ~InFlightGuard() { throttle.release(); }
    Throttle& throttle;
};

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

// POSTs JSON with bounded retries on 408/429/5xx/transport errors.
class HttpJsonEndpoint {
public:
    HttpJsonEndpoint(const std::string& url, std::string api_key, RetryPolicy retry,
                     const HttpLimits& limits, std::shared_ptr<ServiceStats> stats)
        : parsed_(split_url(url)),
          api_key_(std::move(api_key)),
          retry_(retry),
          throttle_(limits.max_in_flight, limits.rate_per_second),
          stats_(std::move(stats)) {}

    json post(const std::string& path_suffix, const json& body, const std::string& tag) {
        const std::string path = parsed_.path + path_suffix;
        const std::string payload = body.dump();
        SplitMix64 jitter(fnv1a64(tag), "retry-jitter");

        std::string last_error;
        for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
            if (attempt > 0) {
                stats_->retries.fetch_add(1);
                std::int64_t base = static_cast<std::int64_t>(retry_.initial_backoff_ms)
                                    << (attempt - 1);
                base = std::min<std::int64_t>(base, retry_.max_backoff_ms);
                std::int64_t ms =
                    base + static_cast<std::int64_t>(
                               jitter.bounded(static_cast<std::uint64_t>(retry_.initial_backoff_ms) + 1));
                std::fprintf(stderr, "[mctg] retry %d/%d for %s after %lldms (%s)\n", attempt,
                             retry_.max_attempts - 1, tag.c_str(), static_cast<long long>(ms),
                             last_error.c_str());
                std::this_thread::sleep_for(std::chrono::milliseconds(ms));
            }

            InFlightGuard guard(throttle_);
            httplib::Client client(parsed_.origin);
            client.set_connection_timeout(30);
            client.set_read_timeout(120);
            client.set_write_timeout(30);
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
            stats_->upstream_calls.fetch_add(1);
            auto res = client.Post(path, headers, payload, "application/json");

            if (!res) {
                last_error = "transport: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 200) {
                json j = json::parse(res->body, nullptr, false);
                if (j.is_discarded()) {
                    throw ServiceError(tag + ": endpoint returned invalid JSON");
                }
                return j;
            }
            last_error = "HTTP " + std::to_string(res->status);
            if (!retryable_status(res->status)) {
                throw ServiceError(tag + ": " + last_error + ": " + res->body);
            }
        }
        throw ServiceError(tag + ": giving up after " + std::to_string(retry_.max_attempts) +
                           " attempts (" + last_error + ")");
    }

private:
    ParsedUrl parsed_;
    std::string api_key_;
    RetryPolicy retry_;
    Throttle throttle_;
    std::shared_ptr<ServiceStats> stats_;
};

class HttpChatBackend : public ChatBackend {
public:
    HttpChatBackend(const std::string& url, const std::string& api_key, const RetryPolicy& retry,
                    const HttpLimits& limits, std::shared_ptr<ServiceStats> stats)
        : endpoint_(url, api_key, retry, limits, std::move(stats)) {}

    std::string complete(const ChatRequest& req) override {
        json messages = json::array();
        for (const auto& m : req.messages) {
            messages.push_back(json{{"role", m.role}, {"content", m.content}});
        }
        json body = {{"model", req.model},
                     {"messages", messages},
                     {"temperature", req.temperature},
                     {"max_tokens", req.max_tokens}};
        json res = endpoint_.post("/v1/chat/completions", body, req.request_tag);
        try {
            return res.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            throw ServiceError(req.request_tag + ": malformed chat completion response");
        }
    }

private:
    HttpJsonEndpoint endpoint_;
};

class HttpEmbedBackend : public EmbedBackend {
public:
    HttpEmbedBackend(const std::string& url, const std::string& api_key, const RetryPolicy& retry,
                     const HttpLimits& limits, std::shared_ptr<ServiceStats> stats)
        : endpoint_(url, api_key, retry, limits, std::move(stats)) {}

    std::vector<double> embed(const std::string& model, const std::string& text) override {
        json body = {{"model", model}, {"input", text}};
        json res = endpoint_.post("/v1/embeddings", body, "embed:" + to_hex(fnv1a64(text)));
        try {
            return res.at("data").at(0).at("embedding").get<std::vector<double>>();
        } catch (const json::exception&) {
            throw ServiceError("malformed embedding response");
        }
    }

private:
    HttpJsonEndpoint endpoint_;
};

class HttpClassifyBackend : public ClassifyBackend {
public:
    HttpClassifyBackend(const std::string& url, std::string aspect_id, const RetryPolicy& retry,
                        const HttpLimits& limits, std::shared_ptr<ServiceStats> stats)
        : endpoint_(url, "", retry, limits, std::move(stats)), aspect_id_(std::move(aspect_id)) {}

    json classify(const std::string& text) override {
        json body = {{"text", text}};
        return endpoint_.post("", body, "classify:" + aspect_id_);
    }

private:
    HttpJsonEndpoint endpoint_;
    std::string aspect_id_;
};

std::shared_ptr<ServiceStats> ensure(std::shared_ptr<ServiceStats> stats) {
    return stats ? stats : std::make_shared<ServiceStats>();
}

}  // namespace

std::shared_ptr<ChatBackend> make_chat_backend(const std::string& base_url,
                                               const std::string& api_key,
                                               const RetryPolicy& retry, const HttpLimits& limits,
                                               std::shared_ptr<ServiceStats> stats) {
    if (is_scripted(base_url)) {
        auto [kind, profile] = parse_scripted(base_url);
        if (kind != "chat") throw ConfigError("expected scripted://chat/..., got " + base_url);
        return make_scripted_chat(profile);
    }
    return std::make_shared<HttpChatBackend>(base_url, api_key, retry, limits, ensure(std::move(stats)));
}

std::shared_ptr<EmbedBackend> make_embed_backend(const std::string& base_url,
                                                 const std::string& api_key,
                                                 const RetryPolicy& retry, const HttpLimits& limits,
                                                 std::shared_ptr<ServiceStats> stats) {
    if (is_scripted(base_url)) {
        auto [kind, profile] = parse_scripted(base_url);
        if (kind != "embed") throw ConfigError("expected scripted://embed/..., got " + base_url);
        return make_scripted_embed(profile);
    }
    return std::make_shared<HttpEmbedBackend>(base_url, api_key, retry, limits, ensure(std::move(stats)));
}

std::shared_ptr<ClassifyBackend> make_classify_backend(const std::string& url,
                                                       const std::string& aspect_id,
                                                       const RetryPolicy& retry,
                                                       const HttpLimits& limits,
                                                       std::shared_ptr<ServiceStats> stats) {
    if (is_scripted(url)) {
        auto [kind, profile] = parse_scripted(url);
        if (kind != "classify") throw ConfigError("expected scripted://classify/..., got " + url);
        return make_scripted_classifier(profile, aspect_id);
    }
    return std::make_shared<HttpClassifyBackend>(url, aspect_id, retry, limits, ensure(std::move(stats)));
}

// ---------------------------------------------------------------------------
// Mode-aware clients

ChatClient::ChatClient(std::shared_ptr<ChatBackend> backend, Mode mode,
                       std::shared_ptr<Cassette> cassette, std::shared_ptr<ServiceStats> stats)
    : backend_(std::move(backend)),
      mode_(mode),
      cassette_(std::move(cassette)),
      stats_(ensure(std::move(stats))) {
    if (mode_ != Mode::replay && !backend_) throw ConfigError("chat client: no backend configured");
    if (mode_ != Mode::live && !cassette_) throw ConfigError("chat client: no cassette loaded");
}

std::string ChatClient::complete(const ChatRequest& req) {
    req.validate();
    if (mode_ == Mode::live) {
        stats_->upstream_calls.fetch_add(1);
        return backend_->complete(req);
    }
    const std::string fp = req.fingerprint();
    if (auto hit = cassette_->lookup(fp)) {
        stats_->cassette_hits.fetch_add(1);
        return *hit;
    }
    if (mode_ == Mode::replay) {
        throw ServiceError("replay miss: no cassette entry for fingerprint " + fp + " (" +
                           req.request_tag + ")");
    }
    stats_->upstream_calls.fetch_add(1);
    std::string response = backend_->complete(req);
    cassette_->put(fp, response);
    return response;
}

EmbedClient::EmbedClient(std::shared_ptr<EmbedBackend> backend, std::string model, Mode mode,
                         std::shared_ptr<Cassette> cassette, std::shared_ptr<ServiceStats> stats)
    : backend_(std::move(backend)),
      model_(std::move(model)),
      mode_(mode),
      cassette_(std::move(cassette)),
      stats_(ensure(std::move(stats))) {
    if (mode_ != Mode::replay && !backend_) throw ConfigError("embed client: no backend configured");
    if (mode_ != Mode::live && !cassette_) throw ConfigError("embed client: no cassette loaded");
}

EmbeddingVector EmbedClient::embed(const std::string& text) {
    if (trim(text).empty()) throw ContractViolation("embed: empty text");
    const std::string fp = to_hex(fnv1a64("embed\x1f" + model_ + "\x1f" + text));
    {
        std::lock_guard lock(cache_mutex_);
        auto it = cache_.find(fp);
        if (it != cache_.end()) {
            stats_->cache_hits.fetch_add(1);
            return it->second;
        }
    }
    std::vector<double> values;
    if (mode_ == Mode::live) {
        stats_->upstream_calls.fetch_add(1);
        values = backend_->embed(model_, text);
    } else if (auto hit = cassette_->lookup(fp)) {
        stats_->cassette_hits.fetch_add(1);
        values = json::parse(*hit).get<std::vector<double>>();
    } else if (mode_ == Mode::replay) {
        throw ServiceError("replay miss: no cassette entry for embedding fingerprint " + fp);
    } else {
        stats_->upstream_calls.fetch_add(1);
        values = backend_->embed(model_, text);
        cassette_->put(fp, json(values).dump());
    }
    EmbeddingVector vec = EmbeddingVector::of(std::move(values));
    std::lock_guard lock(cache_mutex_);
    return cache_.emplace(fp, std::move(vec)).first->second;
}

ClassifierClient::ClassifierClient(std::shared_ptr<ClassifyBackend> backend, std::string aspect_id,
                                   Mode mode, std::shared_ptr<Cassette> cassette,
                                   std::shared_ptr<ServiceStats> stats)
    : backend_(std::move(backend)),
      aspect_id_(std::move(aspect_id)),
      mode_(mode),
      cassette_(std::move(cassette)),
      stats_(ensure(std::move(stats))) {
    if (mode_ != Mode::replay && !backend_) {
        throw ConfigError("classifier client: no backend configured");
    }
    if (mode_ != Mode::live && !cassette_) throw ConfigError("classifier client: no cassette loaded");
}

json ClassifierClient::classify(const std::string& text) {
    const std::string fp = to_hex(fnv1a64("classify\x1f" + aspect_id_ + "\x1f" + text));
    if (mode_ == Mode::live) {
        stats_->upstream_calls.fetch_add(1);
        return backend_->classify(text);
    }
    if (auto hit = cassette_->lookup(fp)) {
        stats_->cassette_hits.fetch_add(1);
        return json::parse(*hit);
    }
    if (mode_ == Mode::replay) {
        throw ServiceError("replay miss: no cassette entry for classifier fingerprint " + fp +
                           " (aspect " + aspect_id_ + ")");
    }
    stats_->upstream_calls.fetch_add(1);
    json res = backend_->classify(text);
    cassette_->put(fp, res.dump());
    return res;
}

}  // namespace mctg
