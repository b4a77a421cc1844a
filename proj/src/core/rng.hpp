// SPDX-License-Identifier: Apache-2.0
//
// radsplat: camera-free RF Gaussian splatting for beam-wise radiomap extrapolation
// Copyright (c) 2026 radsplat contributors

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace radsplat {

// One global seed per run; every consumer derives its own stream from a fixed
// textual label so that adding a new consumer never perturbs existing streams.
inline std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 1469598103934665603ull; // FNV-1a
    for (unsigned char c : label) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::mt19937_64 seeded_stream(std::uint64_t global_seed, std::string_view label) {
    return std::mt19937_64(splitmix64(global_seed ^ hash_label(label)));
}

} // namespace radsplat
