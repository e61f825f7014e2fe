#include "mctg/mixer.hpp"

#include <algorithm>
#include <set>

#include "mctg/errors.hpp"
#include "mctg/rng.hpp"
#include "mctg/util.hpp"

namespace mctg {

MixtureSpec MixtureSpec::from_json(const json& j, std::uint64_t default_seed) {
    MixtureSpec spec;
    spec.output_name = j.at("name").get<std::string>();
    spec.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : default_seed;
    for (const auto& e : j.at("entries")) {
        spec.entries.emplace_back(e.at("pool").get<std::string>(),
                                  e.at("count").get<size_t>());
    }
    spec.validate();
    return spec;
}

void MixtureSpec::validate() const {
    if (output_name.empty()) throw ConfigError("mixture spec missing name");
    if (entries.empty()) throw ConfigError("mixture '" + output_name + "' has no entries");
    std::set<std::string> seen;
    for (const auto& [pool, count] : entries) {
        if (count == 0) {
            throw ConfigError("mixture '" + output_name + "': count for pool '" + pool +
                              "' must be > 0");
        }
        if (!seen.insert(pool).second) {
            throw ConfigError("mixture '" + output_name + "': pool '" + pool +
                              "' listed more than once");
        }
    }
}

MixResult mix(const std::map<std::string, std::vector<json>>& pools, const MixtureSpec& spec) {
    spec.validate();
    MixResult result;
    std::vector<json> rows;

    for (const auto& [pool_name, count] : spec.entries) {
        auto it = pools.find(pool_name);
        if (it == pools.end()) {
            throw ConfigError("mixture '" + spec.output_name + "': unknown pool '" + pool_name +
                              "'");
        }
        const auto& pool = it->second;
        if (pool.size() < count) {
            throw ConfigError("mixture '" + spec.output_name + "': pool '" + pool_name + "' has " +
                              std::to_string(pool.size()) + " rows, need " +
                              std::to_string(count));
        }
        SplitMix64 rng(spec.seed, "mix:" + spec.output_name + ":" + pool_name);
        auto picks = sample_indices(pool.size(), count, rng);
        std::sort(picks.begin(), picks.end());

        auto& ids = result.manifest[pool_name];
        ids.reserve(count);
        for (size_t idx : picks) {
            const json& row = pool[idx];
            if (row.is_object() && row.contains("source_id") && row.at("source_id").is_string()) {
                ids.push_back(row.at("source_id").get<std::string>());
            } else {
                ids.push_back(stable_id({pool_name, std::to_string(idx)}));
            }
            rows.push_back(row);
        }
    }

    SplitMix64 shuffle_rng(spec.seed, "mix:shuffle:" + spec.output_name);
    deterministic_shuffle(rows, shuffle_rng);
    result.rows = std::move(rows);
    return result;
}

std::vector<std::string> volume_parity_warnings(const std::vector<MixtureSpec>& specs) {
    std::vector<std::string> warnings;
    if (specs.size() < 2) return warnings;
    auto total = [](const MixtureSpec& s) {
        size_t t = 0;
        for (const auto& [pool, count] : s.entries) t += count;
        return t;
    };
    size_t reference = total(specs.front());
    for (size_t i = 1; i < specs.size(); ++i) {
        size_t t = total(specs[i]);
        if (t != reference) {
            warnings.push_back("mixture '" + specs[i].output_name + "' totals " +
                               std::to_string(t) + " instances but '" +
                               specs.front().output_name + "' totals " +
                               std::to_string(reference) +
                               "; baselines usually keep volumes identical");
        }
    }
    return warnings;
}

}  // namespace mctg
