// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "biosift/lm_backend.hpp"

#include <cstdint>
#include <string>

namespace biosift {

// Wire contract: POST {endpoint}{path} with
//   {"model": ..., "prompt": ..., "max_tokens": 0, "echo": true, "logprobs": 0}
// answered by
//   {"choices":[{"logprobs":{"tokens":[...], "token_logprobs":[...]}}]}
// where the token strings concatenate to the prompt. Errors may carry
// {"error":{"code":"context_length_exceeded", ...}}.
struct RemoteConfig {
    std::string endpoint;              // e.g. "http://localhost:8080"
    std::string path = "/v1/completions";
    std::string model;
    std::string auth_env;              // env var holding the bearer token; never a literal secret
    std::size_t max_inflight = 4;
    int timeout_s = 30;
    int retries = 3;                   // bounded, exponential backoff
    std::size_t max_context_chars = 0;  // 0 = no client-side guard
    bool check_drift = false;           // double-request and flag unstable logprobs
};

class RemoteBackend final : public LmBackend {
public:
    explicit RemoteBackend(RemoteConfig config);

    const BackendId& id() const override { return id_; }
    std::size_t max_inflight() const override { return config_.max_inflight; }

    // Scores prefix+continuation in one echo call and keeps the
    // continuation's token logprobs. The boundary is located by cumulative
    // decoded-text length; a token straddling the seam falls back to
    // re-tokenizing the continuation alone and counting its tokens from
    // the tail.
    ScoredSequence score_conditional(std::string_view prefix,
                                     std::string_view continuation) const override;

    const RemoteConfig& config() const { return config_; }

private:
    struct EchoResult {
        std::vector<std::string> tokens;
        std::vector<double> logprobs;     // NaN marks positions the server left null
    };

    EchoResult echo_logprobs(const std::string& prompt) const;

    RemoteConfig config_;
    BackendId id_;
};

}  // namespace biosift
