#pragma once
// Portable deterministic randomness. All sampling and shuffling in the
// pipeline goes through SplitMix64 so that seeded runs reproduce byte-for-byte
// on any platform. std::shuffle / std::uniform_int_distribution are
// implementation-defined and must not be used for anything persisted.

#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

#include "mctg/errors.hpp"
#include "mctg/util.hpp"

namespace mctg {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    // Derives an independent stream for a named sub-task of a seeded run.
    SplitMix64(std::uint64_t seed, std::string_view stream)
        : state_(seed ^ fnv1a64(stream)) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n) by rejection; unbiased and portable.
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) throw ContractViolation("bounded(0)");
        const std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

private:
    std::uint64_t state_;
};

// Fisher-Yates with SplitMix64 draws.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.bounded(i));
        std::swap(items[i - 1], items[j]);
    }
}

// k distinct indices from [0, n), uniform without replacement, via a partial
// Fisher-Yates. Order of the returned indices is the draw order.
inline std::vector<size_t> sample_indices(size_t n, size_t k, SplitMix64& rng) {
    if (k > n) throw ContractViolation("sample_indices: k > n");
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(rng.bounded(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace mctg
