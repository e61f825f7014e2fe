#pragma once
// Pipeline configuration: one JSON file holding the aspect registry, dataset
// specs, service endpoints, stage parameters, and mixtures. Relative paths
// resolve against the config file's directory. MCTG_CHAT_BASE_URL,
// MCTG_CHAT_API_KEY, MCTG_EMBED_BASE_URL, and MCTG_EMBED_API_KEY override
// their config counterparts (plus MCTG_EVAL_CHAT_* for the tuned-model
// endpoint), so secrets never need to live in the file.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mctg/core.hpp"
#include "mctg/eval.hpp"
#include "mctg/ingest.hpp"
#include "mctg/mixer.hpp"
#include "mctg/quality.hpp"
#include "mctg/services.hpp"

namespace mctg {

struct ServiceEndpoint {
    std::string base_url;
    std::string api_key;
    std::string model;
};

enum class FilterScope { global, per_attribute };

struct PipelineConfig {
    std::uint64_t seed = 0;
    Mode mode = Mode::replay;
    std::string out_dir;       // run directories land here
    std::string run_label = "run";
    std::string cassette_path; // empty = <run_dir>/cassette.jsonl

    AspectRegistry registry;
    std::vector<DatasetSpec> datasets;

    ServiceEndpoint chat;       // augmentation LLM
    ServiceEndpoint eval_chat;  // tuned model under evaluation
    ServiceEndpoint embed;
    std::map<std::string, std::string> classifiers;  // aspect_id -> endpoint URL
    RetryPolicy retry;
    HttpLimits limits;

    struct AugmentCfg {
        size_t k = 2;              // ICL demonstrations per attribute
        double temperature = 0.7;
        int repeats = 3;           // consistency votes
        // Explicit ordered (source_aspect, target_aspect) pairs; empty = all
        // ordered pairs of aspects present in the ingested data.
        std::vector<std::pair<std::string, std::string>> cross_pairs;
    } augment;

    FilterPolicy filter;
    FilterScope filter_scope = FilterScope::global;

    struct TemplatesCfg {
        std::string cross;
        std::string grained;
        std::string rewrite;
        std::string instruction;  // shared by all provenances by default
        std::map<std::string, std::string> instruction_overrides;  // provenance -> path
    } templates;

    std::map<std::string, std::string> external_pools;  // pool name -> JSONL path
    std::vector<MixtureSpec> mixtures;

    struct EvalCfg {
        int repeats = 10;
        double temperature = 0.2;
        std::string prefixes_path;
        std::map<std::string, std::set<int>> restriction;  // aspect -> allowed indices
        MiBase base = MiBase::nats;
    } eval;

    // The config as it will be copied into the run directory: overrides
    // applied, secrets stripped, out_dir removed (location is not content).
    json resolved;

    static PipelineConfig load(const std::string& path);
    void apply_env_overrides();

    // Checks every referenced file path; meant to run before any stage.
    void validate_paths() const;

    // First 8 hex chars of the resolved-config hash; names the run directory
    // together with run_label.
    std::string config_hash() const;
    std::string run_dir() const;
};

struct CliOverrides {
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> cassette;
};

PipelineConfig load_config(const std::string& path, const CliOverrides& overrides);

}  // namespace mctg
