// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "biosift/lm_backend.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace biosift {

enum class NgramUnit { chars, words };

std::string to_string(NgramUnit unit);
NgramUnit ngram_unit_from_string(std::string_view s);

// Add-k smoothed n-gram language model over characters (codepoints) or
// whitespace words. Deterministic stand-in for a weak scoring model:
// cheap to brute-force in tests, rich enough that conditional and
// unconditional perplexity differ on realistic text.
//
// P(t | ctx) = (count(ctx, t) + k) / (total(ctx) + k * V)
// where V counts the observed vocabulary plus the reserved unknown token.
// Contexts are the order-1 preceding units with begin-of-sequence padding.
// Immutable after fitting; concurrent reads need no synchronization.
class NgramModel final : public LmBackend {
public:
    static NgramModel fit(const std::vector<std::string>& corpus, int order, double smoothing_k,
                          NgramUnit unit);

    const BackendId& id() const override { return id_; }
    ScoredSequence score_conditional(std::string_view prefix,
                                     std::string_view continuation) const override;

    int order() const { return order_; }
    double smoothing_k() const { return smoothing_k_; }
    NgramUnit unit() const { return unit_; }
    // Observed units + reserved UNK.
    std::size_t vocab_size() const { return vocab_.size() + 1; }
    const std::vector<std::string>& vocab() const { return vocab_; }

    // Smoothed conditional probability; units unknown to the model fall
    // back to the reserved UNK token on both sides. Shorter-than-context
    // histories are BOS-padded, longer ones truncated to the last order-1.
    double prob(const std::vector<std::string>& context_units, const std::string& unit) const;

    std::vector<std::string> tokenize(std::string_view s) const;

    // Versioned JSON artifact with the fingerprint embedded.
    std::string save_json() const;
    static NgramModel load_json(std::string_view bytes);

private:
    NgramModel() = default;
    void rebuild_id();

    using TokenId = std::int32_t;
    TokenId unit_id(const std::string& unit) const;  // UNK id when unseen
    double prob_ids(const std::vector<TokenId>& context, TokenId token) const;
    static std::string context_key(const std::vector<TokenId>& context);

    struct ContextCounts {
        std::map<TokenId, std::uint64_t> counts;
        std::uint64_t total = 0;
    };

    int order_ = 1;
    double smoothing_k_ = 0.5;
    NgramUnit unit_ = NgramUnit::chars;
    std::vector<std::string> vocab_;                       // sorted
    std::unordered_map<std::string, TokenId> vocab_index_;
    std::unordered_map<std::string, ContextCounts> contexts_;
    std::uint64_t corpus_hash_ = 0;
    BackendId id_;

    TokenId unk_id_() const { return static_cast<TokenId>(vocab_.size()); }
    TokenId bos_id_() const { return static_cast<TokenId>(vocab_.size()) + 1; }
};

// Operation-style wrapper; validates corpus/order/smoothing preconditions.
NgramModel fit_ngram(const std::vector<std::string>& corpus, int order, double smoothing_k,
                     NgramUnit unit);

}  // namespace biosift
