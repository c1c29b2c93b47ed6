// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/ngram.hpp"

#include "biosift/errors.hpp"
#include "biosift/hash.hpp"
#include "biosift/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <stdexcept>

namespace biosift {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(NgramUnit unit) {
    return unit == NgramUnit::chars ? "char" : "word";
}

NgramUnit ngram_unit_from_string(std::string_view s) {
    if (s == "char") return NgramUnit::chars;
    if (s == "word") return NgramUnit::words;
    throw DataError("unknown ngram unit: " + std::string(s));
}

std::string to_string(BackendKind kind) {
    return kind == BackendKind::remote ? "remote" : "ngram";
}

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "remote") return BackendKind::remote;
    if (s == "ngram") return BackendKind::ngram;
    throw DataError("unknown backend kind: " + std::string(s));
}

std::vector<std::string> NgramModel::tokenize(std::string_view s) const {
    return unit_ == NgramUnit::chars ? text::codepoints(s) : text::whitespace_words(s);
}

NgramModel::TokenId NgramModel::unit_id(const std::string& unit) const {
    auto it = vocab_index_.find(unit);
    return it == vocab_index_.end() ? unk_id_() : it->second;
}

std::string NgramModel::context_key(const std::vector<TokenId>& context) {
    std::string key;
    for (TokenId id : context) {
        key += std::to_string(id);
        key += ',';
    }
    return key;
}

NgramModel NgramModel::fit(const std::vector<std::string>& corpus, int order, double smoothing_k,
                           NgramUnit unit) {
    NgramModel model;
    model.order_ = order;
    model.smoothing_k_ = smoothing_k;
    model.unit_ = unit;

    // Pass 1: vocabulary, sorted for stable ids.
    std::set<std::string> vocab_set;
    std::uint64_t corpus_hash = kFnvOffset;
    for (const auto& doc : corpus) {
        corpus_hash = fnv1a64(doc, corpus_hash);
        corpus_hash = fnv1a64(std::string_view("\x1e", 1), corpus_hash);
        for (auto& u : model.tokenize(doc)) vocab_set.insert(std::move(u));
    }
    model.vocab_.assign(vocab_set.begin(), vocab_set.end());
    for (std::size_t i = 0; i < model.vocab_.size(); ++i) {
        model.vocab_index_[model.vocab_[i]] = static_cast<TokenId>(i);
    }
    model.corpus_hash_ = corpus_hash;

    // Pass 2: count all order-length windows with BOS padding.
    const std::size_t ctx_len = static_cast<std::size_t>(order) - 1;
    for (const auto& doc : corpus) {
        const auto units = model.tokenize(doc);
        std::vector<TokenId> ids(ctx_len, model.bos_id_());
        ids.reserve(ctx_len + units.size());
        for (const auto& u : units) ids.push_back(model.unit_id(u));
        for (std::size_t i = ctx_len; i < ids.size(); ++i) {
            std::vector<TokenId> context(ids.begin() + static_cast<std::ptrdiff_t>(i - ctx_len),
                                         ids.begin() + static_cast<std::ptrdiff_t>(i));
            auto& bucket = model.contexts_[context_key(context)];
            ++bucket.counts[ids[i]];
            ++bucket.total;
        }
    }

    model.rebuild_id();
    return model;
}

void NgramModel::rebuild_id() {
    std::string material = "biosift.ngram|v1|";
    material += std::to_string(order_);
    material += '|';
    material += to_string(unit_);
    material += '|';
    material += double_bits_hex(smoothing_k_);
    material += '|';
    material += to_hex(corpus_hash_);
    id_.kind = BackendKind::ngram;
    id_.model_name = "ngram-" + to_string(unit_) + "-" + std::to_string(order_);
    id_.fingerprint = hex_digest(material);
}

double NgramModel::prob_ids(const std::vector<TokenId>& context, TokenId token) const {
    const double v = static_cast<double>(vocab_size());
    std::uint64_t count = 0;
    std::uint64_t total = 0;
    auto it = contexts_.find(context_key(context));
    if (it != contexts_.end()) {
        total = it->second.total;
        auto jt = it->second.counts.find(token);
        if (jt != it->second.counts.end()) count = jt->second;
    }
    return (static_cast<double>(count) + smoothing_k_) /
           (static_cast<double>(total) + smoothing_k_ * v);
}

double NgramModel::prob(const std::vector<std::string>& context_units,
                        const std::string& unit) const {
    const std::size_t ctx_len = static_cast<std::size_t>(order_) - 1;
    std::vector<TokenId> context(ctx_len, bos_id_());
    const std::size_t take = std::min(ctx_len, context_units.size());
    for (std::size_t i = 0; i < take; ++i) {
        context[ctx_len - take + i] = unit_id(context_units[context_units.size() - take + i]);
    }
    return prob_ids(context, unit_id(unit));
}

ScoredSequence NgramModel::score_conditional(std::string_view prefix,
                                             std::string_view continuation) const {
    if (continuation.empty()) throw EmptyContinuation("continuation is empty");
    const auto cont_units = tokenize(continuation);
    if (cont_units.empty()) throw EmptyContinuation("continuation has no scorable tokens");

    const std::size_t ctx_len = static_cast<std::size_t>(order_) - 1;
    std::vector<TokenId> ids(ctx_len, bos_id_());
    for (const auto& u : tokenize(prefix)) ids.push_back(unit_id(u));
    const std::size_t cont_start = ids.size();
    for (const auto& u : cont_units) ids.push_back(unit_id(u));

    ScoredSequence scored;
    scored.tokens = cont_units;
    scored.logprobs.reserve(cont_units.size());
    for (std::size_t i = cont_start; i < ids.size(); ++i) {
        std::vector<TokenId> context(ids.begin() + static_cast<std::ptrdiff_t>(i - ctx_len),
                                     ids.begin() + static_cast<std::ptrdiff_t>(i));
        scored.logprobs.push_back(std::log(prob_ids(context, ids[i])));
    }
    return scored;
}

std::string NgramModel::save_json() const {
    ordered_json j;
    j["format"] = "biosift.ngram";
    j["version"] = 1;
    j["order"] = order_;
    j["unit"] = to_string(unit_);
    j["smoothing_k"] = smoothing_k_;
    j["smoothing_k_bits"] = double_bits_hex(smoothing_k_);
    j["corpus_hash"] = to_hex(corpus_hash_);
    j["fingerprint"] = id_.fingerprint;
    j["vocab"] = vocab_;

    // Contexts sorted by key for reproducible bytes.
    std::map<std::string, const ContextCounts*> sorted;
    for (const auto& [key, bucket] : contexts_) sorted[key] = &bucket;
    ordered_json contexts = ordered_json::array();
    for (const auto& [key, bucket] : sorted) {
        ordered_json counts = ordered_json::array();
        for (const auto& [token, count] : bucket->counts) {
            counts.push_back(ordered_json::array({token, count}));
        }
        contexts.push_back(ordered_json{{"ctx", key}, {"counts", std::move(counts)}});
    }
    j["contexts"] = std::move(contexts);
    return j.dump();
}

NgramModel NgramModel::load_json(std::string_view bytes) {
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) throw DataError("ngram artifact: invalid JSON");
    try {
        if (j.at("format").get<std::string>() != "biosift.ngram") {
            throw DataError("ngram artifact: unknown format");
        }
        if (j.at("version").get<int>() != 1) throw DataError("ngram artifact: unsupported version");

        NgramModel model;
        model.order_ = j.at("order").get<int>();
        model.unit_ = ngram_unit_from_string(j.at("unit").get<std::string>());
        const std::string k_bits = j.at("smoothing_k_bits").get<std::string>();
        std::uint64_t bits = std::stoull(k_bits, nullptr, 16);
        std::memcpy(&model.smoothing_k_, &bits, sizeof(bits));
        model.corpus_hash_ = std::stoull(j.at("corpus_hash").get<std::string>(), nullptr, 16);
        for (const auto& v : j.at("vocab")) model.vocab_.push_back(v.get<std::string>());
        for (std::size_t i = 0; i < model.vocab_.size(); ++i) {
            model.vocab_index_[model.vocab_[i]] = static_cast<TokenId>(i);
        }
        for (const auto& ctx : j.at("contexts")) {
            ContextCounts bucket;
            for (const auto& pair : ctx.at("counts")) {
                const TokenId token = pair.at(0).get<TokenId>();
                const std::uint64_t count = pair.at(1).get<std::uint64_t>();
                bucket.counts[token] = count;
                bucket.total += count;
            }
            model.contexts_[ctx.at("ctx").get<std::string>()] = std::move(bucket);
        }
        model.rebuild_id();
        if (j.contains("fingerprint") &&
            j.at("fingerprint").get<std::string>() != model.id_.fingerprint) {
            throw DataError("ngram artifact: fingerprint mismatch");
        }
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("ngram artifact: ") + e.what());
    }
}

NgramModel fit_ngram(const std::vector<std::string>& corpus, int order, double smoothing_k,
                     NgramUnit unit) {
    if (corpus.empty()) throw EmptyCorpus("ngram corpus is empty");
    if (order < 1) throw DataError("ngram order must be >= 1");
    if (!(smoothing_k > 0.0)) throw DataError("smoothing_k must be > 0");
    return NgramModel::fit(corpus, order, smoothing_k, unit);
}

}  // namespace biosift
