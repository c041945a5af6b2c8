#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mrpval {

using Engine = std::mt19937_64;

// Substream tags. Values are part of the seed derivation and must not change.
enum class Stage : std::uint64_t {
    Population = 1,
    Sample = 2,
    Fit = 3,
    Chain = 4,
    LocoRefit = 5,
    Permutation = 6,
    Resample = 7,
    Replication = 8,
};

// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a, used to turn model labels into substream tags.
constexpr std::uint64_t hash_label(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = mix64(parent);
    for (auto tag : path) s = mix64(s ^ mix64(tag + 0x632be59bd9b4e019ULL));
    return s;
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, Stage stage,
                                    std::uint64_t index = 0) noexcept {
    return derive_seed(parent, {static_cast<std::uint64_t>(stage), index});
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

}  // namespace mrpval
