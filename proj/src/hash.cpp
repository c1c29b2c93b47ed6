// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/hash.hpp"

#include <cstring>

namespace biosift {

std::string to_hex(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::string hex_digest(std::string_view data) {
    return to_hex(fnv1a64(data));
}

std::string double_bits_hex(double value) {
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(value));
    std::memcpy(&bits, &value, sizeof(bits));
    return to_hex(bits);
}

}  // namespace biosift
