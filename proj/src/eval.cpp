#include "mctg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mctg/augment.hpp"
#include "mctg/errors.hpp"
#include "mctg/itbuild.hpp"
#include "mctg/util.hpp"

namespace mctg {

json EvalRecord::to_json() const {
    json j;
    j["combination"] = task.combination.indices;
    j["prefix"] = task.prefix;
    j["repeat_index"] = task.repeat_index;
    j["generation"] = generation;
    j["predicted"] = evaluated ? json(predicted) : json(nullptr);
    j["matched"] = evaluated ? json(matched) : json(nullptr);
    j["all_matched"] = all_matched;
    j["evaluated"] = evaluated;
    return j;
}

EvalRecord EvalRecord::from_json(const json& j) {
    EvalRecord rec;
    rec.task.combination.indices = j.at("combination").get<std::vector<int>>();
    rec.task.prefix = j.at("prefix").get<std::string>();
    rec.task.repeat_index = j.at("repeat_index").get<int>();
    rec.generation = j.at("generation").get<std::string>();
    rec.evaluated = j.at("evaluated").get<bool>();
    if (rec.evaluated) {
        rec.predicted = j.at("predicted").get<std::vector<int>>();
        rec.matched = j.at("matched").get<std::vector<bool>>();
    }
    rec.all_matched = j.at("all_matched").get<bool>();
    return rec;
}

std::vector<EvalRecord> run_generation(const AspectRegistry& registry,
                                       const std::vector<ControlCombination>& combinations,
                                       const std::vector<std::string>& prefixes, ChatClient& chat,
                                       const EvalGenParams& params) {
    if (combinations.empty()) throw ConfigError("evaluation needs at least one combination");
    if (prefixes.empty()) throw ConfigError("evaluation needs at least one prefix");
    if (params.repeats < 1) throw ConfigError("evaluation repeats must be >= 1");

    struct Cell {
        const ControlCombination* combination;
        size_t prefix_index;
        int repeat;
    };
    std::vector<Cell> cells;
    cells.reserve(combinations.size() * prefixes.size() * static_cast<size_t>(params.repeats));
    for (const auto& combo : combinations) {
        for (size_t p = 0; p < prefixes.size(); ++p) {
            for (int r = 1; r <= params.repeats; ++r) cells.push_back({&combo, p, r});
        }
    }

    auto records = parallel_map(cells, params.workers, [&](const Cell& cell, size_t) -> EvalRecord {
        std::vector<std::pair<std::string, std::string>> controls;
        for (size_t i = 0; i < registry.size(); ++i) {
            const Aspect& aspect = registry.at(i);
            const Attribute* attr = aspect.find_by_index(cell.combination->indices[i]);
            if (!attr) {
                throw ContractViolation("combination " + cell.combination->key() +
                                        " is outside aspect '" + aspect.id + "'");
            }
            controls.emplace_back(aspect.id, attr->name);
        }
        // Trimmed like the training-side instruction builder, so a template
        // file's trailing newline never reaches the model.
        std::string instruction =
            trim(render_template(params.instruction_template,
                                 {{"controls", render_controls(registry, controls)},
                                  {"prefix", prefixes[cell.prefix_index]}},
                                 {"controls", "prefix"}));

        ChatRequest req;
        req.model = params.model;
        req.messages.push_back({"user", instruction});
        req.temperature = params.temperature;
        req.request_tag = "eval:" + cell.combination->key() + ":p" +
                          std::to_string(cell.prefix_index) + ":r" + std::to_string(cell.repeat);

        EvalRecord rec;
        rec.task.combination = *cell.combination;
        rec.task.prefix = prefixes[cell.prefix_index];
        rec.task.repeat_index = cell.repeat;
        rec.generation = chat.complete(req);
        return rec;
    });
    return records;
}

int argmax_prediction(const json& response, int n_attributes) {
    if (response.contains("label_index")) {
        int idx = response.at("label_index").get<int>();
        if (idx < 1 || idx > n_attributes) {
            throw ServiceError("classifier returned label_index " + std::to_string(idx) +
                               " outside 1.." + std::to_string(n_attributes));
        }
        return idx;
    }
    if (response.contains("distribution")) {
        auto dist = response.at("distribution").get<std::vector<double>>();
        if (static_cast<int>(dist.size()) != n_attributes) {
            throw ServiceError("classifier distribution has " + std::to_string(dist.size()) +
                               " entries, aspect has " + std::to_string(n_attributes));
        }
        size_t best = 0;
        for (size_t i = 1; i < dist.size(); ++i) {
            if (dist[i] > dist[best]) best = i;  // strict: ties keep the lowest index
        }
        return static_cast<int>(best) + 1;
    }
    throw ServiceError("classifier response has neither label_index nor distribution");
}

size_t classify_records(std::vector<EvalRecord>& records, const AspectRegistry& registry,
                        std::vector<ClassifierClient>& classifiers, size_t workers) {
    if (classifiers.size() != registry.size()) {
        throw ConfigError("need one classifier per aspect: have " +
                          std::to_string(classifiers.size()) + ", registry has " +
                          std::to_string(registry.size()));
    }
    std::vector<size_t> indices(records.size());
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;

    struct Outcome {
        std::vector<int> predicted;
        bool ok = false;
    };
    auto outcomes = parallel_map(indices, workers, [&](size_t idx, size_t) -> Outcome {
        Outcome out;
        out.predicted.reserve(registry.size());
        try {
            for (size_t a = 0; a < registry.size(); ++a) {
                json response = classifiers[a].classify(records[idx].generation);
                int n = static_cast<int>(registry.at(a).attributes.size());
                out.predicted.push_back(argmax_prediction(response, n));
            }
            out.ok = true;
        } catch (const ServiceError&) {
            out.ok = false;  // unevaluated, tallied by the caller
        }
        return out;
    });

    size_t unevaluated = 0;
    for (size_t i = 0; i < records.size(); ++i) {
        auto& rec = records[i];
        if (!outcomes[i].ok) {
            rec.evaluated = false;
            rec.predicted.clear();
            rec.matched.clear();
            rec.all_matched = false;
            unevaluated += 1;
            continue;
        }
        rec.predicted = std::move(outcomes[i].predicted);
        rec.matched.resize(registry.size());
        rec.all_matched = true;
        for (size_t a = 0; a < registry.size(); ++a) {
            bool m = rec.predicted[a] == rec.task.combination.indices[a];
            rec.matched[a] = m;
            rec.all_matched = rec.all_matched && m;
        }
        rec.evaluated = true;
    }
    return unevaluated;
}

void JointAttributeTable::add(const std::vector<int>& tuple, std::uint64_t n) {
    if (tuple.size() != aspect_ids.size()) {
        throw ContractViolation("tuple arity " + std::to_string(tuple.size()) +
                                " does not match table arity " + std::to_string(aspect_ids.size()));
    }
    counts[tuple] += n;
}

std::uint64_t JointAttributeTable::total() const {
    std::uint64_t t = 0;
    for (const auto& [tuple, n] : counts) t += n;
    return t;
}

JointAttributeTable joint_table(const std::vector<EvalRecord>& records,
                                const AspectRegistry& registry,
                                const std::vector<size_t>& aspect_positions) {
    JointAttributeTable table;
    for (size_t pos : aspect_positions) table.aspect_ids.push_back(registry.at(pos).id);
    for (const auto& rec : records) {
        if (!rec.evaluated) continue;
        std::vector<int> tuple;
        tuple.reserve(aspect_positions.size());
        for (size_t pos : aspect_positions) tuple.push_back(rec.predicted[pos]);
        table.add(tuple);
    }
    return table;
}

namespace {

double entropy_nats(const std::map<std::vector<int>, std::uint64_t>& counts, double total) {
    double h = 0.0;
    for (const auto& [tuple, n] : counts) {
        if (n == 0) continue;  // 0 log 0 = 0
        double p = static_cast<double>(n) / total;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace

double mutual_information(const JointAttributeTable& table, MiBase base) {
    const size_t dims = table.aspect_ids.size();
    if (dims < 2) throw ComputationError("mutual information needs at least 2 aspects");
    const std::uint64_t total_count = table.total();
    if (total_count == 0) throw ComputationError("mutual information of an empty table");
    const double total = static_cast<double>(total_count);

    double marginal_entropy_sum = 0.0;
    for (size_t d = 0; d < dims; ++d) {
        std::map<std::vector<int>, std::uint64_t> marginal;
        for (const auto& [tuple, n] : table.counts) marginal[{tuple[d]}] += n;
        marginal_entropy_sum += entropy_nats(marginal, total);
    }
    double value = marginal_entropy_sum - entropy_nats(table.counts, total);
    if (value < 0.0) value = 0.0;  // plug-in TC is non-negative; residue is float error
    if (base == MiBase::bits) value /= std::log(2.0);
    return value;
}

namespace {

double percent_2dp(double fraction) {
    return std::round(fraction * 10000.0) / 100.0;
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

// Column width in display cells; counts UTF-8 codepoints, good enough for
// the arrows in table headers.
size_t display_width(const std::string& s) {
    size_t w = 0;
    for (unsigned char c : s) {
        if ((c & 0xc0) != 0x80) ++w;
    }
    return w;
}

std::string pad_cell(const std::string& s, size_t width) {
    std::string out = s;
    size_t w = display_width(s);
    while (w < width) {
        out += ' ';
        ++w;
    }
    return out;
}

std::string render_grid(const std::vector<std::vector<std::string>>& rows) {
    std::vector<size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], display_width(row[c]));
        }
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (size_t c = 0; c < row.size(); ++c) {
            if (c > 0) line += "  ";
            line += pad_cell(row[c], widths[c]);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace

json EvalReport::to_json() const {
    json per_aspect = json::object();
    for (const auto& [aspect, pct] : per_aspect_accuracy) per_aspect[aspect] = pct;
    json pairwise = json::object();
    for (const auto& [key, value] : pairwise_mi) pairwise[key] = value;
    return json{{"per_aspect_accuracy", per_aspect},
                {"total_accuracy", total_accuracy},
                {"mi", json{{"pairwise", pairwise},
                            {"three_way", all_aspects_mi},
                            {"base", base == MiBase::nats ? "nats" : "bits"}}},
                {"evaluated", evaluated},
                {"unevaluated", unevaluated}};
}

EvalReport build_eval_report(const AspectRegistry& registry,
                             const std::vector<EvalRecord>& records, MiBase base) {
    EvalReport report;
    report.base = base;

    std::vector<const EvalRecord*> evaluated;
    for (const auto& rec : records) {
        if (rec.evaluated) evaluated.push_back(&rec);
    }
    report.evaluated = evaluated.size();
    report.unevaluated = records.size() - evaluated.size();
    if (evaluated.empty()) throw ComputationError("no evaluated records to report on");

    const double n = static_cast<double>(evaluated.size());
    size_t all_count = 0;
    for (size_t a = 0; a < registry.size(); ++a) {
        size_t match_count = 0;
        for (const auto* rec : evaluated) {
            if (rec->matched[a]) match_count += 1;
        }
        report.per_aspect_accuracy.emplace_back(registry.at(a).id,
                                                percent_2dp(double(match_count) / n));
    }
    for (const auto* rec : evaluated) {
        if (rec->all_matched) all_count += 1;
    }
    report.total_accuracy = percent_2dp(double(all_count) / n);

    for (size_t i = 0; i < registry.size(); ++i) {
        for (size_t j = i + 1; j < registry.size(); ++j) {
            auto table = joint_table(records, registry, {i, j});
            report.pairwise_mi.emplace_back(registry.at(i).id + "," + registry.at(j).id,
                                            mutual_information(table, base));
        }
    }
    std::vector<size_t> all_positions(registry.size());
    for (size_t i = 0; i < all_positions.size(); ++i) all_positions[i] = i;
    if (registry.size() >= 2) {
        report.all_aspects_mi = mutual_information(joint_table(records, registry, all_positions),
                                                   base);
    }
    return report;
}

std::string render_accuracy_table(const AspectRegistry& registry, const EvalReport& report,
                                  const std::string& system_label) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"Baselines", "Total Accuracy↑(%)"};
    for (size_t a = 0; a < registry.size(); ++a) {
        header.push_back(registry.at(a).display_name + "↑(%)");
    }
    rows.push_back(header);

    std::vector<std::string> row = {system_label, format_fixed(report.total_accuracy, 2)};
    for (const auto& [aspect, pct] : report.per_aspect_accuracy) {
        row.push_back(format_fixed(pct, 2));
    }
    rows.push_back(row);
    return render_grid(rows);
}

std::string render_mi_table(const AspectRegistry& registry, const EvalReport& report,
                            const std::string& system_label) {
    auto symbol = [](size_t i) { return "A_" + std::to_string(i + 1); };

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"", system_label});

    std::string all_key = "MI(";
    for (size_t i = 0; i < registry.size(); ++i) {
        if (i > 0) all_key += ",";
        all_key += symbol(i);
    }
    all_key += ")";
    rows.push_back({all_key, format_fixed(report.all_aspects_mi, 3)});

    size_t pair_pos = 0;
    for (size_t i = 0; i < registry.size(); ++i) {
        for (size_t j = i + 1; j < registry.size(); ++j) {
            rows.push_back({"MI(" + symbol(i) + "," + symbol(j) + ")",
                            format_fixed(report.pairwise_mi[pair_pos].second, 3)});
            pair_pos += 1;
        }
    }

    std::string legend;
    for (size_t i = 0; i < registry.size(); ++i) {
        if (i > 0) legend += ", ";
        legend += symbol(i) + " = " + registry.at(i).display_name;
    }
    return render_grid(rows) + legend + "\n";
}

}  // namespace mctg
