// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "biosift/instructify.hpp"
#include "biosift/lm_backend.hpp"
#include "biosift/score_cache.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace biosift {

// Exponentiated mean NLL of the scored tokens: exp(-(1/L) * sum logprobs).
// Computed in log space; PPL only materializes at the boundary.
double perplexity(const ScoredSequence& scores);

// Conditional/unconditional perplexities of one sample's target and their
// ratio. nll_* are total negative log-likelihoods over the same target
// tokenization (scored_len tokens each).
struct IfdRecord {
    std::string sample_id;
    BackendId backend;
    double nll_conditional = 0.0;
    double nll_unconditional = 0.0;
    std::uint64_t scored_len = 0;
    double ppl_conditional = 0.0;
    double ppl_unconditional = 0.0;
    double ifd = 0.0;
};

// Derives the PPL/IFD fields from the NLLs in log space and enforces the
// record invariants (positivity, finiteness, ratio consistency).
IfdRecord make_ifd_record(std::string sample_id, BackendId backend, double nll_conditional,
                          double nll_unconditional, std::uint64_t scored_len);

// IFD of one positive sample: PPL(target | prompt) / PPL(target), both
// sides scored with the identical target tokenization (a length mismatch
// raises TokenizationMismatch). Negatives are never scored.
IfdRecord ifd_score(const InstructionSample& sample, const LmBackend& backend,
                    const std::string& style, ScoreCache* cache = nullptr);

struct ScoreFailure {
    std::string sample_id;
    std::string reason;
};

struct ScoreBatchResult {
    std::vector<IfdRecord> records;    // sorted by sample_id ascending
    std::vector<ScoreFailure> failures;  // unscorable samples, sorted by sample_id
    std::size_t backend_calls = 0;
    std::size_t cache_hits = 0;
};

// Fans out to the backend up to its in-flight bound. Output order is
// independent of completion order; cache hits skip backend calls entirely.
// Per-sample backend failures (ContextOverflow etc.) land in the failure
// report while the remainder is still scored.
ScoreBatchResult score_batch(const std::vector<InstructionSample>& samples,
                             const LmBackend& backend, const std::string& style,
                             ScoreCache& cache);

// Score file: one record per line, field names pinned:
//   sample_id, backend, nll_cond, nll_uncond, len, ppl_cond, ppl_uncond, ifd
std::string records_to_jsonl(const std::vector<IfdRecord>& records);
std::vector<IfdRecord> records_from_jsonl(std::string_view bytes);

}  // namespace biosift
