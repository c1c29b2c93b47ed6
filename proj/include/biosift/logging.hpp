// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <string_view>

namespace biosift::log {

// One JSON object per event on stderr, e.g.
//   {"event":"ingest.dangling_inside","file":"train.bio","line":42}
// Events carry no timestamps so captured logs diff cleanly between runs.
void event(std::string_view name, nlohmann::ordered_json fields = {});

// Suppress events below warning (used by tests).
void set_quiet(bool quiet);

}  // namespace biosift::log
