// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace biosift {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace biosift
