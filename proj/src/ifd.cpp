// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/ifd.hpp"

#include "biosift/errors.hpp"
#include "biosift/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace biosift {

using nlohmann::json;
using nlohmann::ordered_json;

double perplexity(const ScoredSequence& scores) {
    const std::size_t len = scores.scored_len();
    if (len == 0) throw EmptySequence("cannot compute perplexity of an empty sequence");
    return std::exp(scores.total_nll() / static_cast<double>(len));
}

IfdRecord make_ifd_record(std::string sample_id, BackendId backend, double nll_conditional,
                          double nll_unconditional, std::uint64_t scored_len) {
    if (scored_len == 0) throw EmptySequence("ifd record with scored_len 0");
    const double inv_len = 1.0 / static_cast<double>(scored_len);

    IfdRecord rec;
    rec.sample_id = std::move(sample_id);
    rec.backend = std::move(backend);
    rec.nll_conditional = nll_conditional;
    rec.nll_unconditional = nll_unconditional;
    rec.scored_len = scored_len;
    rec.ppl_conditional = std::exp(nll_conditional * inv_len);
    rec.ppl_unconditional = std::exp(nll_unconditional * inv_len);
    rec.ifd = std::exp((nll_conditional - nll_unconditional) * inv_len);

    if (!std::isfinite(rec.ppl_conditional) || !std::isfinite(rec.ppl_unconditional) ||
        !std::isfinite(rec.ifd) || rec.ifd <= 0.0) {
        throw DataError("non-finite perplexity/IFD for sample " + rec.sample_id);
    }
    // ifd must agree with the PPL ratio to 1e-9 relative.
    const double ratio = rec.ppl_conditional / rec.ppl_unconditional;
    if (std::abs(ratio - rec.ifd) > 1e-9 * std::max(std::abs(ratio), std::abs(rec.ifd))) {
        throw DataError("ifd/ppl-ratio inconsistency for sample " + rec.sample_id);
    }
    return rec;
}

namespace {

// One scoring call, cache-aware. Returns {nll, len} and whether the
// backend was actually hit.
struct CallResult {
    double nll;
    std::uint64_t len;
    bool backend_called;
};

CallResult scored_call(const LmBackend& backend, std::string_view prefix,
                       std::string_view continuation, ScoreCache* cache) {
    std::string key;
    if (cache != nullptr) {
        key = ScoreCache::make_key(backend.id().fingerprint, prefix, continuation);
        if (auto hit = cache->get(key)) return {hit->nll, hit->len, false};
    }
    const ScoredSequence scores = backend.score_conditional(prefix, continuation);
    if (scores.scored_len() == 0) throw EmptySequence("backend returned zero scored tokens");
    CallResult result{scores.total_nll(), scores.scored_len(), true};
    if (cache != nullptr) cache->put(key, ScoreCache::Entry{result.nll, result.len});
    return result;
}

}  // namespace

IfdRecord ifd_score(const InstructionSample& sample, const LmBackend& backend,
                    const std::string& style, ScoreCache* cache) {
    if (!sample.is_positive) {
        throw NegativeSampleScoring("sample " + sample.id + " is negative; negatives are never scored");
    }
    const std::string prompt = render_prompt(sample, style);
    const CallResult cond = scored_call(backend, prompt, sample.target, cache);
    const CallResult uncond = scored_call(backend, "", sample.target, cache);
    if (cond.len != uncond.len) {
        throw TokenizationMismatch("sample " + sample.id + ": conditional scored " +
                                   std::to_string(cond.len) + " tokens, unconditional " +
                                   std::to_string(uncond.len));
    }
    return make_ifd_record(sample.id, backend.id(), cond.nll, uncond.nll, cond.len);
}

ScoreBatchResult score_batch(const std::vector<InstructionSample>& samples,
                             const LmBackend& backend, const std::string& style,
                             ScoreCache& cache) {
    {
        std::unordered_set<std::string> ids;
        for (const auto& s : samples) {
            if (!s.is_positive) {
                throw NegativeSampleScoring("sample " + s.id +
                                            " is negative; filter before score_batch");
            }
            if (!ids.insert(s.id).second) {
                throw DuplicateScore("duplicate sample id in batch: " + s.id);
            }
        }
    }

    ScoreBatchResult result;
    std::vector<std::optional<IfdRecord>> slots(samples.size());
    std::vector<std::optional<ScoreFailure>> failures(samples.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> backend_calls{0};
    std::atomic<std::size_t> cache_hits{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= samples.size()) return;
            try {
                const std::string prompt = render_prompt(samples[i], style);
                const CallResult cond = scored_call(backend, prompt, samples[i].target, &cache);
                const CallResult uncond = scored_call(backend, "", samples[i].target, &cache);
                backend_calls += (cond.backend_called ? 1 : 0) + (uncond.backend_called ? 1 : 0);
                cache_hits += (cond.backend_called ? 0 : 1) + (uncond.backend_called ? 0 : 1);
                if (cond.len != uncond.len) {
                    throw TokenizationMismatch("conditional/unconditional tokenization differs (" +
                                               std::to_string(cond.len) + " vs " +
                                               std::to_string(uncond.len) + ")");
                }
                slots[i] = make_ifd_record(samples[i].id, backend.id(), cond.nll, uncond.nll,
                                           cond.len);
            } catch (const std::exception& e) {
                failures[i] = ScoreFailure{samples[i].id, e.what()};
            }
        }
    };

    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min(backend.max_inflight(), samples.size()));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    for (auto& slot : slots) {
        if (slot) result.records.push_back(std::move(*slot));
    }
    for (auto& failure : failures) {
        if (failure) result.failures.push_back(std::move(*failure));
    }
    std::sort(result.records.begin(), result.records.end(),
              [](const IfdRecord& a, const IfdRecord& b) { return a.sample_id < b.sample_id; });
    std::sort(result.failures.begin(), result.failures.end(),
              [](const ScoreFailure& a, const ScoreFailure& b) { return a.sample_id < b.sample_id; });
    result.backend_calls = backend_calls.load();
    result.cache_hits = cache_hits.load();
    return result;
}

std::string records_to_jsonl(const std::vector<IfdRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        ordered_json j;
        j["sample_id"] = r.sample_id;
        j["backend"] = ordered_json{{"kind", to_string(r.backend.kind)},
                                    {"model", r.backend.model_name},
                                    {"fingerprint", r.backend.fingerprint}};
        j["nll_cond"] = r.nll_conditional;
        j["nll_uncond"] = r.nll_unconditional;
        j["len"] = r.scored_len;
        j["ppl_cond"] = r.ppl_conditional;
        j["ppl_uncond"] = r.ppl_unconditional;
        j["ifd"] = r.ifd;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<IfdRecord> records_from_jsonl(std::string_view bytes) {
    std::vector<IfdRecord> out;
    std::istringstream in{std::string(bytes)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw MalformedLine(line_no, "invalid JSON");
        try {
            IfdRecord r;
            r.sample_id = j.at("sample_id").get<std::string>();
            const auto& b = j.at("backend");
            r.backend.kind = backend_kind_from_string(b.at("kind").get<std::string>());
            r.backend.model_name = b.at("model").get<std::string>();
            r.backend.fingerprint = b.at("fingerprint").get<std::string>();
            r.nll_conditional = j.at("nll_cond").get<double>();
            r.nll_unconditional = j.at("nll_uncond").get<double>();
            r.scored_len = j.at("len").get<std::uint64_t>();
            r.ppl_conditional = j.at("ppl_cond").get<double>();
            r.ppl_unconditional = j.at("ppl_uncond").get<double>();
            r.ifd = j.at("ifd").get<double>();
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw MalformedLine(line_no, std::string("score JSONL: ") + e.what());
        }
    }
    return out;
}

}  // namespace biosift
