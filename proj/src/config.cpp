#include "mctg/config.hpp"

#include <cstdlib>
#include <filesystem>

#include "mctg/errors.hpp"
#include "mctg/util.hpp"

namespace mctg {

namespace {

namespace fs = std::filesystem;

std::string resolve_path(const fs::path& config_dir, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (config_dir / p).lexically_normal().string();
}

ServiceEndpoint endpoint_from_json(const json& j) {
    ServiceEndpoint ep;
    ep.base_url = j.at("base_url").get<std::string>();
    if (j.contains("model")) ep.model = j.at("model").get<std::string>();
    if (j.contains("api_key")) ep.api_key = j.at("api_key").get<std::string>();
    if (j.contains("api_key_env")) {
        const char* v = std::getenv(j.at("api_key_env").get<std::string>().c_str());
        if (v) ep.api_key = v;
    }
    return ep;
}

void override_from_env(ServiceEndpoint& ep, const char* url_var, const char* key_var) {
    if (const char* v = std::getenv(url_var)) ep.base_url = v;
    if (const char* v = std::getenv(key_var)) ep.api_key = v;
}

json strip_secrets(json j) {
    if (j.contains("services")) {
        for (auto& [name, section] : j.at("services").items()) {
            if (section.is_object() && section.contains("api_key")) section.erase("api_key");
        }
    }
    return j;
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
    json raw;
    try {
        raw = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    const fs::path config_dir = fs::path(path).parent_path();

    PipelineConfig cfg;
    if (!raw.contains("seed")) {
        throw ConfigError("config must set an explicit seed (no wall-clock defaults)");
    }
    cfg.seed = raw.at("seed").get<std::uint64_t>();
    cfg.mode = mode_from_string(raw.value("mode", "replay"));
    cfg.out_dir = resolve_path(config_dir, raw.value("out_dir", "runs"));
    cfg.run_label = raw.value("run_label", "run");
    if (raw.contains("cassette")) {
        cfg.cassette_path = resolve_path(config_dir, raw.at("cassette").get<std::string>());
    }

    cfg.registry = AspectRegistry::from_json(raw);

    if (raw.contains("datasets")) {
        for (const auto& d : raw.at("datasets")) {
            DatasetSpec spec = DatasetSpec::from_json(d);
            spec.path = resolve_path(config_dir, spec.path);
            spec.validate(cfg.registry);
            cfg.datasets.push_back(std::move(spec));
        }
    }

    const json& services = raw.at("services");
    cfg.chat = endpoint_from_json(services.at("chat"));
    cfg.eval_chat = services.contains("eval_chat") ? endpoint_from_json(services.at("eval_chat"))
                                                   : cfg.chat;
    cfg.embed = endpoint_from_json(services.at("embed"));
    if (services.contains("classifiers")) {
        for (const auto& [aspect, url] : services.at("classifiers").items()) {
            cfg.registry.require(aspect);
            cfg.classifiers[aspect] = url.get<std::string>();
        }
    }
    if (services.contains("retry")) {
        const json& r = services.at("retry");
        cfg.retry.max_attempts = r.value("max_attempts", cfg.retry.max_attempts);
        cfg.retry.initial_backoff_ms = r.value("initial_backoff_ms", cfg.retry.initial_backoff_ms);
        cfg.retry.max_backoff_ms = r.value("max_backoff_ms", cfg.retry.max_backoff_ms);
    }
    if (services.contains("limits")) {
        const json& l = services.at("limits");
        cfg.limits.max_in_flight = l.value("max_in_flight", cfg.limits.max_in_flight);
        cfg.limits.rate_per_second = l.value("rate_per_second", cfg.limits.rate_per_second);
    }

    if (raw.contains("augment")) {
        const json& a = raw.at("augment");
        cfg.augment.k = a.value("k", cfg.augment.k);
        cfg.augment.temperature = a.value("temperature", cfg.augment.temperature);
        cfg.augment.repeats = a.value("repeats", cfg.augment.repeats);
        if (a.contains("cross_pairs")) {
            for (const auto& pair : a.at("cross_pairs")) {
                std::string from = pair.at(0).get<std::string>();
                std::string to = pair.at(1).get<std::string>();
                cfg.registry.require(from);
                cfg.registry.require(to);
                if (from == to) {
                    throw ConfigError("cross pair cannot map aspect '" + from + "' to itself");
                }
                cfg.augment.cross_pairs.emplace_back(std::move(from), std::move(to));
            }
        }
    }

    if (raw.contains("filter")) {
        const json& f = raw.at("filter");
        cfg.filter.min_words = f.value("min_words", cfg.filter.min_words);
        cfg.filter.low_drop_fraction = f.value("low_drop_fraction", cfg.filter.low_drop_fraction);
        cfg.filter.high_drop_fraction =
            f.value("high_drop_fraction", cfg.filter.high_drop_fraction);
        std::string scope = f.value("scope", "global");
        if (scope == "global") cfg.filter_scope = FilterScope::global;
        else if (scope == "per_attribute") cfg.filter_scope = FilterScope::per_attribute;
        else throw ConfigError("filter scope must be 'global' or 'per_attribute', got '" + scope + "'");
    }
    cfg.filter.validate();

    const json& templates = raw.at("templates");
    cfg.templates.cross = resolve_path(config_dir, templates.at("cross").get<std::string>());
    cfg.templates.grained = resolve_path(config_dir, templates.at("grained").get<std::string>());
    cfg.templates.rewrite = resolve_path(config_dir, templates.at("rewrite").get<std::string>());
    cfg.templates.instruction =
        resolve_path(config_dir, templates.at("instruction").get<std::string>());
    if (templates.contains("instruction_overrides")) {
        for (const auto& [prov, p] : templates.at("instruction_overrides").items()) {
            provenance_from_string(prov);  // validates the key
            cfg.templates.instruction_overrides[prov] =
                resolve_path(config_dir, p.get<std::string>());
        }
    }

    if (raw.contains("pools")) {
        for (const auto& [name, p] : raw.at("pools").items()) {
            cfg.external_pools[name] = resolve_path(config_dir, p.get<std::string>());
        }
    }
    if (raw.contains("mixtures")) {
        for (const auto& m : raw.at("mixtures")) {
            cfg.mixtures.push_back(MixtureSpec::from_json(m, cfg.seed));
        }
    }

    if (raw.contains("eval")) {
        const json& e = raw.at("eval");
        cfg.eval.repeats = e.value("repeats", cfg.eval.repeats);
        cfg.eval.temperature = e.value("temperature", cfg.eval.temperature);
        if (e.contains("prefixes_path")) {
            cfg.eval.prefixes_path =
                resolve_path(config_dir, e.at("prefixes_path").get<std::string>());
        }
        if (e.contains("restriction")) {
            for (const auto& [aspect, indices] : e.at("restriction").items()) {
                cfg.registry.require(aspect);
                cfg.eval.restriction[aspect] = indices.get<std::set<int>>();
            }
        }
        std::string base = e.value("base", "nats");
        if (base == "nats") cfg.eval.base = MiBase::nats;
        else if (base == "bits") cfg.eval.base = MiBase::bits;
        else throw ConfigError("eval base must be 'nats' or 'bits', got '" + base + "'");
    }

    json resolved = strip_secrets(raw);
    resolved.erase("out_dir");
    resolved["mode"] = to_string(cfg.mode);
    resolved["seed"] = cfg.seed;
    cfg.resolved = std::move(resolved);
    return cfg;
}

void PipelineConfig::apply_env_overrides() {
    override_from_env(chat, "MCTG_CHAT_BASE_URL", "MCTG_CHAT_API_KEY");
    override_from_env(embed, "MCTG_EMBED_BASE_URL", "MCTG_EMBED_API_KEY");
    override_from_env(eval_chat, "MCTG_EVAL_CHAT_BASE_URL", "MCTG_EVAL_CHAT_API_KEY");
}

void PipelineConfig::validate_paths() const {
    auto need = [](const std::string& path, const std::string& what) {
        if (path.empty()) throw ConfigError(what + " path is not configured");
        if (!file_exists(path)) throw ConfigError(what + " path does not exist: " + path);
    };
    for (const auto& spec : datasets) need(spec.path, "dataset '" + spec.name + "'");
    need(templates.cross, "cross template");
    need(templates.grained, "grained template");
    need(templates.rewrite, "rewrite template");
    need(templates.instruction, "instruction template");
    for (const auto& [prov, path] : templates.instruction_overrides) {
        need(path, "instruction template override for " + prov);
    }
    for (const auto& [name, path] : external_pools) need(path, "pool '" + name + "'");
    if (!eval.prefixes_path.empty()) need(eval.prefixes_path, "eval prefixes");
    for (const auto& [aspect, url] : classifiers) {
        if (url.empty()) throw ConfigError("classifier URL for aspect '" + aspect + "' is empty");
    }
}

std::string PipelineConfig::config_hash() const {
    return to_hex(fnv1a64(resolved.dump())).substr(0, 8);
}

std::string PipelineConfig::run_dir() const {
    return (std::filesystem::path(out_dir) / (config_hash() + "-" + run_label)).string();
}

PipelineConfig load_config(const std::string& path, const CliOverrides& overrides) {
    PipelineConfig cfg = PipelineConfig::load(path);
    if (overrides.mode) {
        cfg.mode = mode_from_string(*overrides.mode);
        cfg.resolved["mode"] = to_string(cfg.mode);
    }
    if (overrides.seed) {
        cfg.seed = *overrides.seed;
        cfg.resolved["seed"] = cfg.seed;
        // Mixtures that inherited the global seed follow the override.
        cfg.mixtures.clear();
        if (cfg.resolved.contains("mixtures")) {
            for (const auto& m : cfg.resolved.at("mixtures")) {
                cfg.mixtures.push_back(MixtureSpec::from_json(m, cfg.seed));
            }
        }
    }
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    if (overrides.cassette) cfg.cassette_path = *overrides.cassette;
    cfg.apply_env_overrides();
    return cfg;
}

}  // namespace mctg
