#include "mctg/cli.hpp"

#include <algorithm>
#include <map>
#include <memory>

#include <CLI11.hpp>

#include "mctg/augment.hpp"
#include "mctg/config.hpp"
#include "mctg/core.hpp"
#include "mctg/errors.hpp"
#include "mctg/eval.hpp"
#include "mctg/ingest.hpp"
#include "mctg/itbuild.hpp"
#include "mctg/jsonl.hpp"
#include "mctg/mixer.hpp"
#include "mctg/quality.hpp"
#include "mctg/services.hpp"
#include "mctg/util.hpp"

namespace mctg::cli {

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string mode;
    std::string cassette;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    size_t workers = 1;
};

// Everything one stage invocation needs: resolved config, run directory,
// cassette, shared service stats.
struct Stage {
    PipelineConfig cfg;
    std::string run_dir;
    std::string cassette_path;
    std::shared_ptr<Cassette> cassette;
    std::shared_ptr<ServiceStats> stats;
    size_t workers = 1;

    std::string path(const std::string& rel) const { return run_dir + "/" + rel; }
};

Stage open_stage(const GlobalFlags& flags) {
    if (flags.config_path.empty()) throw ConfigError("--config is required");
    CliOverrides ov;
    if (!flags.mode.empty()) ov.mode = flags.mode;
    if (flags.seed_set) ov.seed = flags.seed;
    if (!flags.out_dir.empty()) ov.out_dir = flags.out_dir;
    if (!flags.cassette.empty()) ov.cassette = flags.cassette;

    Stage st;
    st.cfg = load_config(flags.config_path, ov);
    st.cfg.validate_paths();
    st.run_dir = st.cfg.run_dir();
    st.workers = flags.workers == 0 ? 1 : flags.workers;
    st.stats = std::make_shared<ServiceStats>();
    st.cassette_path =
        st.cfg.cassette_path.empty() ? st.path("cassette.jsonl") : st.cfg.cassette_path;
    switch (st.cfg.mode) {
        case Mode::live: break;
        case Mode::record: st.cassette = Cassette::load_or_empty(st.cassette_path); break;
        case Mode::replay: st.cassette = Cassette::load(st.cassette_path); break;
    }
    write_file(st.path("config.json"), st.cfg.resolved.dump(2) + "\n");
    return st;
}

void save_cassette(const Stage& st) {
    if (st.cfg.mode == Mode::record && st.cassette) st.cassette->save(st.cassette_path);
}

ChatClient make_chat(const Stage& st, const ServiceEndpoint& ep) {
    auto backend = make_chat_backend(ep.base_url, ep.api_key, st.cfg.retry, st.cfg.limits,
                                     st.stats);
    return ChatClient(std::move(backend), st.cfg.mode, st.cassette, st.stats);
}

EmbedClient make_embed(const Stage& st) {
    auto backend = make_embed_backend(st.cfg.embed.base_url, st.cfg.embed.api_key, st.cfg.retry,
                                      st.cfg.limits, st.stats);
    return EmbedClient(std::move(backend), st.cfg.embed.model, st.cfg.mode, st.cassette, st.stats);
}

void write_records(const std::string& path, const std::vector<LabeledSentence>& records) {
    std::vector<json> rows;
    rows.reserve(records.size());
    for (const auto& rec : records) rows.push_back(rec.to_json());
    write_jsonl(path, rows);
}

std::vector<LabeledSentence> read_records(const std::string& path) {
    std::vector<LabeledSentence> records;
    for (const auto& row : read_jsonl(path)) records.push_back(LabeledSentence::from_json(row));
    return records;
}

std::string stage_input(const Stage& st, const std::string& rel, const std::string& producer) {
    std::string p = st.path(rel);
    if (!file_exists(p)) {
        throw ConfigError("missing stage input " + p + "; run `" + producer + "` first");
    }
    return p;
}

// All ingested originals, sorted by id. Every downstream stage starts here.
std::vector<LabeledSentence> load_originals(const Stage& st) {
    std::vector<LabeledSentence> all;
    for (const auto& spec : st.cfg.datasets) {
        auto part = read_records(stage_input(st, "ingest/" + spec.name + ".jsonl", "ingest"));
        all.insert(all.end(), part.begin(), part.end());
    }
    std::sort(all.begin(), all.end(),
              [](const LabeledSentence& a, const LabeledSentence& b) { return a.id < b.id; });
    return all;
}

std::map<std::string, std::vector<LabeledSentence>> group_by_aspect(
    const std::vector<LabeledSentence>& records) {
    std::map<std::string, std::vector<LabeledSentence>> groups;
    for (const auto& rec : records) groups[rec.aspect_id].push_back(rec);
    return groups;
}

// ---------------------------------------------------------------------------
// Stages

int cmd_validate_config(const GlobalFlags& flags, std::ostream& out) {
    CliOverrides ov;
    if (!flags.mode.empty()) ov.mode = flags.mode;
    if (flags.seed_set) ov.seed = flags.seed;
    if (!flags.out_dir.empty()) ov.out_dir = flags.out_dir;
    if (!flags.cassette.empty()) ov.cassette = flags.cassette;
    PipelineConfig cfg = load_config(flags.config_path, ov);
    cfg.validate_paths();
    out << json{{"ok", true}, {"run_dir", cfg.run_dir()}}.dump() << "\n";
    return 0;
}

int cmd_ingest(const GlobalFlags& flags, std::ostream& out) {
    Stage st = open_stage(flags);
    if (st.cfg.datasets.empty()) throw ConfigError("config has no datasets to ingest");

    json report = json::object();
    for (const auto& spec : st.cfg.datasets) {
        IngestResult result = load_dataset(spec, st.cfg.registry, st.cfg.seed);
        write_records(st.path("ingest/" + spec.name + ".jsonl"), result.records);
        write_jsonl(st.path("ingest/" + spec.name + ".skips.jsonl"), result.skips);
        report[spec.name] = json{{"input_rows", result.input_rows},
                                 {"emitted", result.records.size()},
                                 {"skipped", result.skips.size()}};
    }
    write_file(st.path("ingest/report.json"), report.dump(2) + "\n");
    out << "ingest: " << st.cfg.datasets.size() << " dataset(s) -> " << st.path("ingest") << "\n";
    return 0;
}

int cmd_augment_cross(const GlobalFlags& flags, std::ostream& out) {
    Stage st = open_stage(flags);
    auto originals = load_originals(st);
    auto by_aspect = group_by_aspect(originals);

    std::vector<std::pair<std::string, std::string>> pairs = st.cfg.augment.cross_pairs;
    if (pairs.empty()) {
        for (const auto& [from, from_records] : by_aspect) {
            for (const auto& [to, to_records] : by_aspect) {
                if (from != to) pairs.emplace_back(from, to);
            }
        }
    }

    ChatClient chat = make_chat(st, st.cfg.chat);
    std::string template_text = read_file(st.cfg.templates.cross);

    std::vector<LabeledSentence> all_out;
    json pair_reports = json::array();
    StageReport totals;
    for (const auto& [from, to] : pairs) {
        auto src_it = by_aspect.find(from);
        if (src_it == by_aspect.end() || src_it->second.empty()) {
            throw ConfigError("cross pair " + from + "->" + to + ": no originals for '" + from +
                              "'");
        }
        const Aspect& target = st.cfg.registry.require(to);
        IclExampleSet icl = sample_icl(originals, target, st.cfg.augment.k, st.cfg.seed);

        CrossParams params;
        params.template_text = template_text;
        params.model = st.cfg.chat.model;
        params.temperature = st.cfg.augment.temperature;
        params.repeats = st.cfg.augment.repeats;
        params.workers = st.workers;

        StageReport report;
        auto produced = cross_augment(src_it->second, target, icl, chat, params, report);
        all_out.insert(all_out.end(), produced.begin(), produced.end());

        json pr = report.to_json();
        pr["source_aspect"] = from;
        pr["target_aspect"] = to;
        pair_reports.push_back(std::move(pr));
        totals.input += report.input;
        totals.kept += report.kept;
        totals.rejected += report.rejected;
        totals.inconsistent += report.inconsistent;
        totals.errors += report.errors;
    }
    std::sort(all_out.begin(), all_out.end(),
              [](const LabeledSentence& a, const LabeledSentence& b) { return a.id < b.id; });

    write_records(st.path("cross/records.jsonl"), all_out);
    write_file(st.path("cross/report.json"),
               json{{"pairs", pair_reports}, {"totals", totals.to_json()}}.dump(2) + "\n");
    save_cassette(st);
    out << "augment cross: " << totals.kept << "/" << totals.input << " kept -> "
        << st.path("cross/records.jsonl") << "\n";
    return 0;
}

int cmd_augment_grained(const GlobalFlags& flags, std::ostream& out) {
    Stage st = open_stage(flags);
    auto originals = load_originals(st);

    ChatClient chat = make_chat(st, st.cfg.chat);
    GrainedParams params;
    params.template_text = read_file(st.cfg.templates.grained);
    params.model = st.cfg.chat.model;
    params.temperature = st.cfg.augment.temperature;
    params.workers = st.workers;

    StageReport report;
    auto produced = grained_augment(originals, st.cfg.registry, chat, params, report);
    write_records(st.path("grained/records.jsonl"), produced);
    write_file(st.path("grained/report.json"), report.to_json().dump(2) + "\n");
    save_cassette(st);
    out << "augment grained: " << report.kept << "/" << report.input << " kept -> "
        << st.path("grained/records.jsonl") << "\n";
    return 0;
}

int cmd_augment_rewrite(const GlobalFlags& flags, std::ostream& out) {
    Stage st = open_stage(flags);
    auto originals = load_originals(st);
    auto by_aspect = group_by_aspect(originals);

    ChatClient chat = make_chat(st, st.cfg.chat);
    RewriteParams params;
    params.template_text = read_file(st.cfg.templates.rewrite);
    params.model = st.cfg.chat.model;
    params.temperature = st.cfg.augment.temperature;
    params.workers = st.workers;

    std::vector<RewritePair> all_pairs;
    json group_reports = json::array();
    StageReport totals;
    for (size_t a = 0; a < st.cfg.registry.size(); ++a) {
        const Aspect& target = st.cfg.registry.at(a);
        if (!target.rewrite_target) continue;

        std::vector<LabeledSentence> foreign;
        for (const auto& [aspect, records] : by_aspect) {
            if (aspect == target.id) continue;
            foreign.insert(foreign.end(), records.begin(), records.end());
        }
        if (foreign.empty()) continue;
        std::sort(foreign.begin(), foreign.end(),
                  [](const LabeledSentence& x, const LabeledSentence& y) { return x.id < y.id; });

        IclExampleSet icl = sample_icl(originals, target, st.cfg.augment.k, st.cfg.seed);

        // Round-robin assignment spreads the foreign pool evenly over the
        // target attributes by sorted position.
        const size_t n_attrs = target.attributes.size();
        std::vector<std::vector<LabeledSentence>> buckets(n_attrs);
        for (size_t i = 0; i < foreign.size(); ++i) {
            buckets[i % n_attrs].push_back(foreign[i]);
        }
        for (size_t b = 0; b < n_attrs; ++b) {
            const Attribute& attr = target.attributes[b];
            StageReport report;
            auto produced =
                rewrite_augment(buckets[b], target, attr, icl, chat, params, report);
            all_pairs.insert(all_pairs.end(), produced.begin(), produced.end());

            json gr = report.to_json();
            gr["target_aspect"] = target.id;
            gr["target_attribute"] = attr.name;
            group_reports.push_back(std::move(gr));
            totals.input += report.input;
            totals.kept += report.kept;
            totals.rejected += report.rejected;
        }
    }
    std::sort(all_pairs.begin(), all_pairs.end(),
              [](const RewritePair& a, const RewritePair& b) { return a.id < b.id; });

    std::vector<json> rows;
    rows.reserve(all_pairs.size());
    for (const auto& pair : all_pairs) rows.push_back(pair.to_json());
    write_jsonl(st.path("rewrite/pairs.jsonl"), rows);
    write_file(st.path("rewrite/report.json"),
               json{{"groups", group_reports}, {"totals", totals.to_json()}}.dump(2) + "\n");
    save_cassette(st);
    out << "augment rewrite: " << totals.kept << "/" << totals.input << " awaiting filtering -> "
        << st.path("rewrite/pairs.jsonl") << "\n";
    return 0;
}

int cmd_filter(const GlobalFlags& flags, std::ostream& out) {
    Stage st = open_stage(flags);
    std::vector<RewritePair> pairs;
    for (const auto& row : read_jsonl(stage_input(st, "rewrite/pairs.jsonl", "augment rewrite"))) {
        pairs.push_back(RewritePair::from_json(row));
    }

    length_filter(pairs, st.cfg.filter);
    EmbedClient embed = make_embed(st);
    score_similarity(pairs, embed, st.workers);

    if (st.cfg.filter_scope == FilterScope::global) {
        similarity_band_filter(pairs, st.cfg.filter);
    } else {
        // Per-attribute scope: band thresholds computed within each
        // (target aspect, target attribute) group independently.
        std::map<std::pair<std::string, int>, std::vector<RewritePair>> groups;
        for (auto& pair : pairs) {
            groups[{pair.target_aspect_id, pair.target_attribute_index}].push_back(std::move(pair));
        }
        pairs.clear();
        for (auto& [key, group] : groups) {
            similarity_band_filter(group, st.cfg.filter);
            for (auto& pair : group) pairs.push_back(std::move(pair));
        }
        std::sort(pairs.begin(), pairs.end(),
                  [](const RewritePair& a, const RewritePair& b) { return a.id < b.id; });
    }

    std::vector<json> rows;
    rows.reserve(pairs.size());
    std::vector<LabeledSentence> kept_records;
    for (const auto& pair : pairs) {
        rows.push_back(pair.to_json());
        if (pair.verdict != RewriteVerdict::kept) continue;
        LabeledSentence rec;
        rec.id = pair.id;
        rec.text = pair.rewritten_text;
        rec.aspect_id = pair.target_aspect_id;
        rec.label_index = pair.target_attribute_index;
        rec.label_text = pair.target_attribute;
        rec.provenance = Provenance::rewrite;
        rec.source_dataset = pair.source.source_dataset;
        rec.meta["source_id"] = pair.source.id;
        kept_records.push_back(std::move(rec));
    }
    std::sort(kept_records.begin(), kept_records.end(),
              [](const LabeledSentence& a, const LabeledSentence& b) { return a.id < b.id; });

    write_jsonl(st.path("filter/pairs.jsonl"), rows);
    write_records(st.path("filter/kept_records.jsonl"), kept_records);
    QualityReport report = tally_verdicts(pairs);
    write_file(st.path("filter/report.json"), report.to_json().dump(2) + "\n");
    save_cassette(st);
    out << "filter: " << report.kept << "/" << report.entered << " kept -> "
        << st.path("filter/kept_records.jsonl") << "\n";
    return 0;
}

int cmd_build_it(const GlobalFlags& flags, std::ostream& out) {
    Stage st = open_stage(flags);
    const std::string default_template = read_file(st.cfg.templates.instruction);
    auto template_for = [&](Provenance p) {
        auto it = st.cfg.templates.instruction_overrides.find(to_string(p));
        if (it == st.cfg.templates.instruction_overrides.end()) return default_template;
        return read_file(it->second);
    };

    struct Pool {
        std::string name;
        std::vector<LabeledSentence> records;
    };
    std::vector<Pool> pools;
    pools.push_back({"vanilla", load_originals(st)});
    pools.push_back({"cross", read_records(stage_input(st, "cross/records.jsonl",
                                                       "augment cross"))});
    pools.push_back({"grained", read_records(stage_input(st, "grained/records.jsonl",
                                                         "augment grained"))});
    pools.push_back({"rewrite", read_records(stage_input(st, "filter/kept_records.jsonl",
                                                         "filter"))});

    json report = json::object();
    for (auto& pool : pools) {
        std::sort(pool.records.begin(), pool.records.end(),
                  [](const LabeledSentence& a, const LabeledSentence& b) { return a.id < b.id; });
        std::vector<json> flat;
        std::vector<json> chat;
        flat.reserve(pool.records.size());
        chat.reserve(pool.records.size());
        for (const auto& rec : pool.records) {
            ItInstance inst =
                build_instance(rec, st.cfg.registry, template_for(rec.provenance));
            flat.push_back(inst.to_json());
            chat.push_back(inst.to_chat_json());
        }
        write_jsonl(st.path("itbuild/" + pool.name + ".jsonl"), flat);
        write_jsonl(st.path("itbuild/" + pool.name + ".chat.jsonl"), chat);
        report[pool.name] = flat.size();
    }
    write_file(st.path("itbuild/report.json"), report.dump(2) + "\n");
    out << "build-it: pools " << report.dump() << " -> " << st.path("itbuild") << "\n";
    return 0;
}

int cmd_mix(const GlobalFlags& flags, std::ostream& out, std::ostream& err) {
    Stage st = open_stage(flags);
    if (st.cfg.mixtures.empty()) throw ConfigError("config has no mixtures");

    std::map<std::string, std::vector<json>> pools;
    for (const auto& name : {"vanilla", "cross", "grained", "rewrite"}) {
        std::string p = st.path("itbuild/" + std::string(name) + ".jsonl");
        if (file_exists(p)) pools[name] = read_jsonl(p);
    }
    for (const auto& [name, path] : st.cfg.external_pools) {
        if (pools.count(name)) {
            throw ConfigError("external pool '" + name + "' collides with a pipeline pool");
        }
        pools[name] = read_jsonl(path);
    }

    json report = json::object();
    for (const auto& spec : st.cfg.mixtures) {
        MixResult result = mix(pools, spec);
        write_jsonl(st.path("mix/" + spec.output_name + ".jsonl"), result.rows);
        json manifest = json::object();
        for (const auto& [pool, ids] : result.manifest) manifest[pool] = ids;
        write_file(st.path("mix/" + spec.output_name + ".manifest.json"),
                   manifest.dump(2) + "\n");
        json entry = json::object();
        for (const auto& [pool, ids] : result.manifest) entry[pool] = ids.size();
        report[spec.output_name] = json{{"total", result.rows.size()}, {"per_pool", entry}};
    }

    auto warnings = volume_parity_warnings(st.cfg.mixtures);
    for (const auto& w : warnings) err << "[mctg] warning: " << w << "\n";
    report["volume_parity_warnings"] = warnings;
    write_file(st.path("mix/report.json"), report.dump(2) + "\n");
    out << "mix: " << st.cfg.mixtures.size() << " mixture(s) -> " << st.path("mix") << "\n";
    return 0;
}

std::vector<std::string> load_prefixes(const std::string& path) {
    std::vector<std::string> prefixes;
    std::string content = read_file(path);
    size_t pos = 0;
    while (pos <= content.size()) {
        size_t nl = content.find('\n', pos);
        std::string line = nl == std::string::npos ? content.substr(pos)
                                                   : content.substr(pos, nl - pos);
        std::string t = trim(line);
        if (!t.empty()) prefixes.push_back(t);
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    if (prefixes.empty()) throw ConfigError("prefix file " + path + " has no prefixes");
    return prefixes;
}

int cmd_eval_generate(const GlobalFlags& flags, std::ostream& out) {
    Stage st = open_stage(flags);
    if (st.cfg.eval.prefixes_path.empty()) throw ConfigError("eval.prefixes_path is not set");

    auto combinations = enumerate_combinations(st.cfg.registry, st.cfg.eval.restriction);
    auto prefixes = load_prefixes(st.cfg.eval.prefixes_path);

    ChatClient chat = make_chat(st, st.cfg.eval_chat);
    EvalGenParams params;
    params.instruction_template = read_file(st.cfg.templates.instruction);
    params.model = st.cfg.eval_chat.model;
    params.repeats = st.cfg.eval.repeats;
    params.temperature = st.cfg.eval.temperature;
    params.workers = st.workers;

    auto records = run_generation(st.cfg.registry, combinations, prefixes, chat, params);
    std::vector<json> rows;
    rows.reserve(records.size());
    for (const auto& rec : records) rows.push_back(rec.to_json());
    write_jsonl(st.path("eval/generations.jsonl"), rows);
    save_cassette(st);
    out << "eval generate: " << combinations.size() << " combinations x " << prefixes.size()
        << " prefixes x " << params.repeats << " repeats = " << records.size() << " -> "
        << st.path("eval/generations.jsonl") << "\n";
    return 0;
}

int cmd_eval_classify(const GlobalFlags& flags, std::ostream& out) {
    Stage st = open_stage(flags);
    std::vector<EvalRecord> records;
    for (const auto& row :
         read_jsonl(stage_input(st, "eval/generations.jsonl", "eval generate"))) {
        records.push_back(EvalRecord::from_json(row));
    }

    std::vector<ClassifierClient> classifiers;
    for (size_t a = 0; a < st.cfg.registry.size(); ++a) {
        const std::string& aspect = st.cfg.registry.at(a).id;
        auto it = st.cfg.classifiers.find(aspect);
        if (it == st.cfg.classifiers.end()) {
            throw ConfigError("no classifier endpoint configured for aspect '" + aspect + "'");
        }
        auto backend = make_classify_backend(it->second, aspect, st.cfg.retry, st.cfg.limits,
                                             st.stats);
        classifiers.emplace_back(std::move(backend), aspect, st.cfg.mode, st.cassette, st.stats);
    }

    size_t unevaluated = classify_records(records, st.cfg.registry, classifiers, st.workers);
    std::vector<json> rows;
    rows.reserve(records.size());
    for (const auto& rec : records) rows.push_back(rec.to_json());
    write_jsonl(st.path("eval/records.jsonl"), rows);
    write_file(st.path("eval/classify_report.json"),
               json{{"records", records.size()}, {"unevaluated", unevaluated}}.dump(2) + "\n");
    save_cassette(st);
    out << "eval classify: " << records.size() - unevaluated << "/" << records.size()
        << " evaluated -> " << st.path("eval/records.jsonl") << "\n";
    return 0;
}

int cmd_eval_report(const GlobalFlags& flags, std::ostream& out) {
    Stage st = open_stage(flags);
    std::vector<EvalRecord> records;
    for (const auto& row : read_jsonl(stage_input(st, "eval/records.jsonl", "eval classify"))) {
        records.push_back(EvalRecord::from_json(row));
    }

    EvalReport report = build_eval_report(st.cfg.registry, records, st.cfg.eval.base);
    write_file(st.path("eval/report.json"), report.to_json().dump(2) + "\n");
    std::string tables = render_accuracy_table(st.cfg.registry, report, st.cfg.run_label) + "\n" +
                         render_mi_table(st.cfg.registry, report, st.cfg.run_label);
    write_file(st.path("eval/tables.txt"), tables);
    out << tables;
    return 0;
}

json error_json(const std::string& type, const std::string& message) {
    return json{{"error", json{{"type", type}, {"message", message}}}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-aspect instruction-tuning data pipeline"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "Path to the pipeline config JSON");
    app.add_option("--mode", flags.mode, "live|record|replay (overrides config)")
        ->check(CLI::IsMember({"live", "record", "replay"}));
    app.add_option("--cassette", flags.cassette, "Cassette path (overrides config)");
    app.add_option("--workers", flags.workers, "Worker threads per stage")
        ->check(CLI::Range(size_t{1}, size_t{256}));
    auto* seed_opt = app.add_option("--seed", flags.seed, "Seed (overrides config)");
    app.add_option("--out", flags.out_dir, "Run directory base (overrides config)");
    app.fallthrough();

    auto* validate = app.add_subcommand("validate-config", "Parse and validate the config");
    auto* ingest = app.add_subcommand("ingest", "Load source datasets into labeled records");
    auto* augment = app.add_subcommand("augment", "Run an augmentation pipeline");
    augment->require_subcommand(1);
    auto* cross = augment->add_subcommand("cross", "Label sentences with a foreign aspect");
    auto* grained = augment->add_subcommand("grained", "Generate fine-grained label descriptions");
    auto* rewrite = augment->add_subcommand("rewrite", "Rewrite foreign sentences per attribute");
    auto* filter = app.add_subcommand("filter", "Length and similarity-band filtering");
    auto* build_it = app.add_subcommand("build-it", "Build instruction-tuning instances");
    auto* mix_cmd = app.add_subcommand("mix", "Assemble training mixtures");
    auto* eval_cmd = app.add_subcommand("eval", "Evaluation harness");
    eval_cmd->require_subcommand(1);
    auto* generate = eval_cmd->add_subcommand("generate", "Generate over the control grid");
    auto* classify = eval_cmd->add_subcommand("classify", "Classify generations per aspect");
    auto* report = eval_cmd->add_subcommand("report", "Accuracy and MI report");

    std::vector<const char*> argv;
    argv.push_back("mctg");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help and friends
            out << app.help();
            return 0;
        }
        err << error_json("usage", e.what()).dump() << "\n";
        return 2;
    }
    flags.seed_set = seed_opt->count() > 0;

    try {
        if (*validate) return cmd_validate_config(flags, out);
        if (*ingest) return cmd_ingest(flags, out);
        if (*cross) return cmd_augment_cross(flags, out);
        if (*grained) return cmd_augment_grained(flags, out);
        if (*rewrite) return cmd_augment_rewrite(flags, out);
        if (*filter) return cmd_filter(flags, out);
        if (*build_it) return cmd_build_it(flags, out);
        if (*mix_cmd) return cmd_mix(flags, out, err);
        if (*generate) return cmd_eval_generate(flags, out);
        if (*classify) return cmd_eval_classify(flags, out);
        if (*report) return cmd_eval_report(flags, out);
        err << error_json("usage", "no subcommand").dump() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << error_json("config", e.what()).dump() << "\n";
    } catch (const IngestError& e) {
        err << error_json("ingest", e.what()).dump() << "\n";
    } catch (const ServiceError& e) {
        err << error_json("service", e.what()).dump() << "\n";
    } catch (const ComputationError& e) {
        err << error_json("computation", e.what()).dump() << "\n";
    } catch (const ContractViolation& e) {
        err << error_json("contract", e.what()).dump() << "\n";
    } catch (const std::exception& e) {
        err << error_json("internal", e.what()).dump() << "\n";
    }
    return 1;
}

}  // namespace mctg::cli
