// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/score_cache.hpp"

#include "biosift/errors.hpp"
#include "biosift/hash.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace biosift {

using nlohmann::json;
using nlohmann::ordered_json;

ScoreCache::ScoreCache(std::string path) : path_(std::move(path)) {
    load();
}

ScoreCache::~ScoreCache() {
    try {
        flush();
    } catch (...) {
        // must not throw from a destructor
    }
}

std::string ScoreCache::make_key(std::string_view backend_fingerprint, std::string_view prefix,
                                 std::string_view continuation) {
    std::string key;
    key.reserve(backend_fingerprint.size() + 34);
    key += backend_fingerprint;
    key += ':';
    key += hex_digest(prefix);
    key += ':';
    key += hex_digest(continuation);
    return key;
}

void ScoreCache::load() {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    if (!in) throw DataError("cannot open score cache: " + path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("k") || !j.contains("nll") || !j.contains("len")) {
            throw DataError("score cache " + path_ + " line " + std::to_string(line_no) +
                            ": malformed entry");
        }
        entries_[j["k"].get<std::string>()] =
            Entry{j["nll"].get<double>(), j["len"].get<std::uint64_t>()};
    }
}

std::optional<ScoreCache::Entry> ScoreCache::get(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ScoreCache::put(const std::string& key, Entry entry) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, entry);
    if (inserted) dirty_ = true;
}

void ScoreCache::flush() {
    std::lock_guard<std::mutex> lock(mutex_);
    if (path_.empty() || !dirty_) return;
    std::ostringstream out;
    for (const auto& [key, entry] : entries_) {
        ordered_json j;
        j["k"] = key;
        j["nll"] = entry.nll;
        j["len"] = entry.len;
        out << j.dump() << '\n';
    }
    std::ofstream file(path_, std::ios::trunc | std::ios::binary);
    if (!file) throw DataError("cannot write score cache: " + path_);
    file << out.str();
    dirty_ = false;
}

std::size_t ScoreCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

}  // namespace biosift
