#pragma once
// Shared scaffolding for the unit tests: temp directories, the toy registry,
// and instrumented fake service backends.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mctg/core.hpp"
#include "mctg/scripted.hpp"
#include "mctg/services.hpp"

namespace mctg::test {

inline std::string source_dir() { return MCTG_SOURCE_DIR; }

// Fresh empty directory under the system temp root; wiped on entry so reruns
// never see stale files.
inline std::string temp_dir(const std::string& name) {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / "mctg-tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

inline AspectRegistry toy_registry() { return AspectRegistry::from_json(toy_registry_json()); }

// Chat backend that replies from a per-tag script; unscripted tags get the
// fallback. Counts upstream calls.
class TaggedChatBackend : public ChatBackend {
public:
    std::map<std::string, std::string> by_tag;
    std::string fallback = "None";
    std::atomic<int> calls{0};

    std::string complete(const ChatRequest& req) override {
        calls += 1;
        auto it = by_tag.find(req.request_tag);
        return it == by_tag.end() ? fallback : it->second;
    }
};

// Embed backend with a call counter, delegating to the bundled hash embedder.
class CountingEmbedBackend : public EmbedBackend {
public:
    std::atomic<int> calls{0};

    std::vector<double> embed(const std::string& model, const std::string& text) override {
        calls += 1;
        return inner_->embed(model, text);
    }

private:
    std::shared_ptr<EmbedBackend> inner_ = make_scripted_embed("hash16");
};

inline LabeledSentence make_record(const std::string& id, const std::string& text,
                                   const std::string& aspect_id, int label_index,
                                   const std::string& label_text,
                                   Provenance provenance = Provenance::original) {
    LabeledSentence r;
    r.id = id;
    r.text = text;
    r.aspect_id = aspect_id;
    r.label_index = label_index;
    r.label_text = label_text;
    r.provenance = provenance;
    r.source_dataset = "test";
    return r;
}

}  // namespace mctg::test
