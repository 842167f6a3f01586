// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "tric/tensor.hpp"

namespace tric::core {

/// Deterministic RNG. Wraps mt19937_64 but builds uniforms and normals
/// by hand so streams are identical across standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n) by scaling; n must be positive and small enough
    /// that the tiny modulo bias is irrelevant (corpus/batch indexing).
    int below(int n) { return static_cast<int>(uniform() * n) % n; }

    /// Standard normal via Box-Muller, no cached spare (two uniforms per draw,
    /// streams stay aligned regardless of call pattern).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    void fill_normal(Tensor& t, double stddev = 1.0) {
        for (std::int64_t i = 0; i < t.size(); ++i) t[i] = stddev * normal();
    }

    void fill_uniform(Tensor& t, double lo, double hi) {
        for (std::int64_t i = 0; i < t.size(); ++i) t[i] = uniform(lo, hi);
    }

private:
    std::mt19937_64 gen_;
};

/// SplitMix64 step, used to derive independent substream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// FNV-1a hash of a string, for word-level embedding seeds.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace tric::core
