// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace biosift {

// Content-addressed cache of scoring calls, persisted as a JSONL
// key-value file. Keys are (backend fingerprint, prefix hash,
// continuation hash); values are the total NLL and scored length of the
// continuation. Survives process restarts; remote scoring is the only
// expensive step in the pipeline, so a warm cache makes reruns free.
class ScoreCache {
public:
    // Empty path = memory-only cache.
    explicit ScoreCache(std::string path = {});
    ~ScoreCache();

    ScoreCache(const ScoreCache&) = delete;
    ScoreCache& operator=(const ScoreCache&) = delete;

    struct Entry {
        double nll = 0.0;
        std::uint64_t len = 0;
    };

    static std::string make_key(std::string_view backend_fingerprint, std::string_view prefix,
                                std::string_view continuation);

    std::optional<Entry> get(const std::string& key) const;
    void put(const std::string& key, Entry entry);

    // Rewrites the backing file sorted by key, so cache bytes do not
    // depend on scoring completion order. No-op for memory-only caches.
    void flush();

    std::size_t size() const;

private:
    void load();

    std::string path_;
    mutable std::mutex mutex_;
    std::map<std::string, Entry> entries_;
    bool dirty_ = false;
};

}  // namespace biosift
