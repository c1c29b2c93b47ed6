// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

namespace biosift {

std::string read_file(const std::filesystem::path& path);

// Creates parent directories as needed; writes bytes verbatim.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace biosift
