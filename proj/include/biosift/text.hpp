// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace biosift::text {

// Strip ASCII whitespace from both ends.
std::string trim(std::string_view s);

// Unicode NFC via ICU. Invalid UTF-8 bytes are replaced with U+FFFD.
std::string nfc(std::string_view s);

// Canonical normalization applied to entity names and instance text
// before any comparison: NFC then trim. Comparisons stay case-sensitive.
std::string normalize(std::string_view s);

// Split a UTF-8 string into codepoint-sized substrings.
std::vector<std::string> codepoints(std::string_view s);

// Split on runs of ASCII whitespace; no empty tokens.
std::vector<std::string> whitespace_words(std::string_view s);

}  // namespace biosift::text
