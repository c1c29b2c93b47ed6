// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/logging.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace biosift::log {

namespace {
std::atomic<bool> g_quiet{false};
std::mutex g_mutex;
}  // namespace

void event(std::string_view name, nlohmann::ordered_json fields) {
    if (g_quiet.load(std::memory_order_relaxed)) return;
    nlohmann::ordered_json obj;
    obj["event"] = std::string(name);
    for (auto& [k, v] : fields.items()) obj[k] = v;
    std::lock_guard<std::mutex> lock(g_mutex);
    std::cerr << obj.dump() << "\n";
}

void set_quiet(bool quiet) {
    g_quiet.store(quiet, std::memory_order_relaxed);
}

}  // namespace biosift::log
