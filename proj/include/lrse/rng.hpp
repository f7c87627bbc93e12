#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lrse {

/// Every random draw in the library comes from an explicitly seeded engine of this type.
using Rng = std::mt19937_64;

/// Independent substreams derived from one master seed.
enum class StreamTag : std::uint64_t {
    split_indicator = 1,
    matrix_m1 = 2,
    matrix_m2 = 3,
    document = 4,
    trapdoor = 5,
    embedding_in = 6,
    embedding_out = 7,
    workload = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t index = 0) noexcept {
    return splitmix64(splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(tag))) + index);
}

inline Rng make_stream(std::uint64_t master, StreamTag tag, std::uint64_t index = 0) {
    return Rng(derive_seed(master, tag, index));
}

/// FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace lrse
