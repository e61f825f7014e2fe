#pragma once
// Evaluation harness: drive a generation endpoint over the control grid,
// classify generations per aspect, and compute accuracy and mutual
// information over the predicted attribute distribution.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mctg/core.hpp"
#include "mctg/services.hpp"

namespace mctg {

struct GenerationTask {
    ControlCombination combination;
    std::string prefix;
    int repeat_index = 1;  // 1..R
};

struct EvalRecord {
    GenerationTask task;
    std::string generation;
    std::vector<int> predicted;  // per aspect, 1-based; empty until classified
    std::vector<bool> matched;
    bool all_matched = false;
    bool evaluated = false;

    json to_json() const;
    static EvalRecord from_json(const json& j);
};

struct EvalGenParams {
    std::string instruction_template;
    std::string model;
    int repeats = 10;
    double temperature = 0.2;
    size_t workers = 1;
};

// One generation per (combination x prefix x repeat), instruction rendered
// with all n controls (canonical attribute names) plus the prefix clause.
std::vector<EvalRecord> run_generation(const AspectRegistry& registry,
                                       const std::vector<ControlCombination>& combinations,
                                       const std::vector<std::string>& prefixes, ChatClient& chat,
                                       const EvalGenParams& params);

// Lowest index wins ties; the remote protocol returns {"label_index": i}
// (1-based) or {"distribution": [...]}.
int argmax_prediction(const json& response, int n_attributes);

// Fills predicted/matched/all_matched per record. A classifier service
// failure marks the record unevaluated (excluded from metrics, tallied in
// the returned count) instead of aborting the stage.
size_t classify_records(std::vector<EvalRecord>& records, const AspectRegistry& registry,
                        std::vector<ClassifierClient>& classifiers, size_t workers);

// Counts over predicted attribute tuples for a subset of aspects.
struct JointAttributeTable {
    std::vector<std::string> aspect_ids;
    std::map<std::vector<int>, std::uint64_t> counts;

    void add(const std::vector<int>& tuple, std::uint64_t n = 1);
    std::uint64_t total() const;
};

JointAttributeTable joint_table(const std::vector<EvalRecord>& records,
                                const AspectRegistry& registry,
                                const std::vector<size_t>& aspect_positions);

enum class MiBase { nats, bits };

// Plug-in estimate from normalized counts. Two aspects: I(X;Y); more:
// total correlation sum(H(marginal)) - H(joint). Never negative (tiny
// negative float residue is clamped).
double mutual_information(const JointAttributeTable& table, MiBase base = MiBase::nats);

struct EvalReport {
    std::vector<std::pair<std::string, double>> per_aspect_accuracy;  // (aspect_id, percent)
    double total_accuracy = 0.0;                                      // percent
    std::vector<std::pair<std::string, double>> pairwise_mi;          // ("id1,id2", value)
    double all_aspects_mi = 0.0;  // total correlation over every aspect
    size_t evaluated = 0;
    size_t unevaluated = 0;
    MiBase base = MiBase::nats;

    json to_json() const;
};

// Accuracy percentages are rounded to 2 decimals; MI values are full
// precision. Needs at least one evaluated record.
EvalReport build_eval_report(const AspectRegistry& registry,
                             const std::vector<EvalRecord>& records, MiBase base);

// Aligned-text report tables: a systems-by-aspects accuracy grid and an
// MI-items-by-systems grid, one column/row per configured system label.
std::string render_accuracy_table(const AspectRegistry& registry, const EvalReport& report,
                                  const std::string& system_label);
std::string render_mi_table(const AspectRegistry& registry, const EvalReport& report,
                            const std::string& system_label);

}  // namespace mctg
