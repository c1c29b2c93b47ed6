// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace biosift {

// FNV-1a, 64-bit. Used for fingerprints, cache keys and config hashes.
// Not std::hash: these values are embedded in files, so they must be
// stable across platforms and library versions.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = kFnvOffset) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= kFnvPrime;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

// Hex digest of a byte string, e.g. "a1b2c3d4e5f60718".
std::string hex_digest(std::string_view data);

// Exact bit pattern of a double as hex; used wherever a floating-point
// knob participates in a fingerprint.
std::string double_bits_hex(double value);

}  // namespace biosift
