// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/remote_lm.hpp"

#include "biosift/errors.hpp"
#include "biosift/hash.hpp"
#include "biosift/logging.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace biosift {

using nlohmann::json;
using nlohmann::ordered_json;

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw UsageError("remote backend: endpoint missing");
    if (config_.model.empty()) throw UsageError("remote backend: model name missing");
    id_.kind = BackendKind::remote;
    id_.model_name = config_.model;
    id_.fingerprint =
        hex_digest("biosift.remote|v1|" + config_.endpoint + config_.path + "|" + config_.model);
}

RemoteBackend::EchoResult RemoteBackend::echo_logprobs(const std::string& prompt) const {
    ordered_json body;
    body["model"] = config_.model;
    body["prompt"] = prompt;
    body["max_tokens"] = 0;
    body["echo"] = true;
    body["logprobs"] = 0;
    const std::string payload = body.dump();

    httplib::Headers headers;
    // Deterministic request id so server-side dedup can make retries idempotent.
    headers.emplace("X-Request-Id", hex_digest(config_.model + "|" + prompt));
    if (!config_.auth_env.empty()) {
        if (const char* token = std::getenv(config_.auth_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100ll << (attempt - 1)));
            log::event("backend.retry", {{"attempt", attempt}});
        }
        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(config_.timeout_s, 0);
        client.set_read_timeout(config_.timeout_s, 0);
        client.set_write_timeout(config_.timeout_s, 0);

        auto res = client.Post(config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        json reply = json::parse(res->body, nullptr, false);
        if (res->status >= 400) {
            std::string code;
            if (!reply.is_discarded() && reply.contains("error")) {
                code = reply["error"].value("code", "");
            }
            if (code == "context_length_exceeded") {
                throw ContextOverflow("prompt exceeds backend context window");
            }
            throw BackendError("backend rejected request (" + std::to_string(res->status) +
                               "): " + res->body);
        }
        if (reply.is_discarded()) throw BackendError("backend returned invalid JSON");

        try {
            const auto& lp = reply.at("choices").at(0).at("logprobs");
            EchoResult result;
            for (const auto& t : lp.at("tokens")) result.tokens.push_back(t.get<std::string>());
            for (const auto& v : lp.at("token_logprobs")) {
                result.logprobs.push_back(v.is_null() ? std::nan("") : v.get<double>());
            }
            if (result.tokens.size() != result.logprobs.size()) {
                throw BackendError("backend returned mismatched tokens/logprobs lengths");
            }
            return result;
        } catch (const json::exception& e) {
            throw BackendError(std::string("backend response malformed: ") + e.what());
        }
    }
    throw BackendUnavailable("backend unavailable after " + std::to_string(config_.retries + 1) +
                             " attempts: " + last_error);
}

ScoredSequence RemoteBackend::score_conditional(std::string_view prefix,
                                                std::string_view continuation) const {
    if (continuation.empty()) throw EmptyContinuation("continuation is empty");
    const std::string prompt = std::string(prefix) + std::string(continuation);
    if (config_.max_context_chars > 0 && prompt.size() > config_.max_context_chars) {
        throw ContextOverflow("prompt of " + std::to_string(prompt.size()) +
                              " chars exceeds configured context bound");
    }

    EchoResult combined = echo_logprobs(prompt);
    if (config_.check_drift) {
        const EchoResult again = echo_logprobs(prompt);
        if (again.logprobs.size() != combined.logprobs.size() ||
            !std::equal(again.logprobs.begin(), again.logprobs.end(), combined.logprobs.begin(),
                        [](double a, double b) {
                            return (std::isnan(a) && std::isnan(b)) || a == b;
                        })) {
            log::event("backend.drift_detected", {{"model", config_.model}});
        }
    }

    // Locate the continuation's first token by cumulative decoded length.
    std::size_t cum = 0;
    std::size_t first = combined.tokens.size();
    bool exact = prefix.empty();
    if (prefix.empty()) {
        first = 0;
    } else {
        for (std::size_t i = 0; i < combined.tokens.size(); ++i) {
            if (cum == prefix.size()) {
                first = i;
                exact = true;
                break;
            }
            if (cum > prefix.size()) break;
            cum += combined.tokens[i].size();
        }
        if (!exact && cum == prefix.size()) {
            first = combined.tokens.size();
            exact = true;
        }
    }

    if (!exact) {
        // Seam splits a token: count the continuation's own tokens from the tail.
        const EchoResult cont_alone = echo_logprobs(std::string(continuation));
        if (cont_alone.tokens.size() > combined.tokens.size()) {
            throw BackendError("continuation re-tokenization longer than combined scoring");
        }
        first = combined.tokens.size() - cont_alone.tokens.size();
        log::event("backend.seam_retokenized", {{"tail_tokens", cont_alone.tokens.size()}});
    }

    if (first >= combined.tokens.size()) {
        throw BackendError("no scored tokens located for continuation");
    }

    ScoredSequence scored;
    for (std::size_t i = first; i < combined.tokens.size(); ++i) {
        if (std::isnan(combined.logprobs[i])) {
            throw BackendError(
                "backend returned null logprob at a scored position; the wire contract "
                "requires logprobs for every echoed token");
        }
        scored.tokens.push_back(combined.tokens[i]);
        scored.logprobs.push_back(combined.logprobs[i]);
    }
    return scored;
}

}  // namespace biosift
