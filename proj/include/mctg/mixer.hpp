#pragma once
// Assembles training mixtures from named pools with exact per-pool counts:
// seeded sampling without replacement, a seeded shuffle, and a manifest of
// which source rows each pool contributed.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mctg/core.hpp"

namespace mctg {

struct MixtureSpec {
    std::string output_name;
    std::vector<std::pair<std::string, size_t>> entries;  // (pool name, count), order kept
    std::uint64_t seed = 0;

    static MixtureSpec from_json(const json& j, std::uint64_t default_seed);
    void validate() const;
};

struct MixResult {
    std::vector<json> rows;                                    // the mixed dataset
    std::map<std::string, std::vector<std::string>> manifest;  // pool -> source ids
};

// Rows pass through verbatim (pools may hold instruction-tuning instances or
// opaque external instruction/response data). Manifest ids come from each
// row's source_id field when present, synthesized from pool name + row index
// otherwise.
MixResult mix(const std::map<std::string, std::vector<json>>& pools, const MixtureSpec& spec);

// All mixtures in one experiment are expected to share a total size; returns
// a human-readable warning line per mismatch (empty when totals agree).
std::vector<std::string> volume_parity_warnings(const std::vector<MixtureSpec>& specs);

}  // namespace mctg
