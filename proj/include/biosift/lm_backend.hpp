// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace biosift {

// Per-token natural-log probabilities for one scored continuation.
struct ScoredSequence {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;

    std::size_t scored_len() const { return logprobs.size(); }
    double total_nll() const {
        double nll = 0.0;
        for (double lp : logprobs) nll -= lp;
        return nll;
    }
};

enum class BackendKind { remote, ngram };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view s);

// Identifies one scoring model configuration. The fingerprint is a
// deterministic hash of everything that can change scores (for the n-gram:
// training corpus, order, unit, smoothing constant).
struct BackendId {
    BackendKind kind = BackendKind::ngram;
    std::string model_name;
    std::string fingerprint;

    friend bool operator==(const BackendId&, const BackendId&) = default;
};

// Uniform scoring interface. Implementations must be safe for concurrent
// score_conditional calls.
class LmBackend {
public:
    virtual ~LmBackend() = default;

    virtual const BackendId& id() const = 0;

    // Log-probabilities for exactly the continuation's tokens, each
    // conditioned on prefix + preceding continuation tokens. An empty
    // prefix scores the continuation from model start (the unconditional
    // case). Throws EmptyContinuation, ContextOverflow, BackendUnavailable.
    virtual ScoredSequence score_conditional(std::string_view prefix,
                                             std::string_view continuation) const = 0;

    // Upper bound on concurrent in-flight scoring calls.
    virtual std::size_t max_inflight() const { return 1; }
};

}  // namespace biosift
